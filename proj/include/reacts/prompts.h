#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace reacts {

enum class PromptKind { kSummary, kSelfReflect, kSimilarity, kBaseline };

std::string_view prompt_name(PromptKind kind);
std::optional<PromptKind> prompt_kind_from_name(std::string_view name);

using Slots = std::map<std::string, std::string>;

// One of the four prompts used by the pipeline. Placeholders are written
// {slot_name}; everything else is emitted verbatim.
class PromptTemplate {
 public:
  static const PromptTemplate &get(PromptKind kind);

  PromptKind kind() const { return kind_; }
  std::string_view name() const { return prompt_name(kind_); }
  std::string_view text() const { return text_; }
  const std::vector<std::string> &slots() const { return slots_; }

  // Throws TemplateError when a slot is missing or an unknown slot is given.
  std::string render(const Slots &values) const;

 private:
  PromptTemplate(PromptKind kind, std::string text);

  PromptKind kind_;
  std::string text_;
  std::vector<std::string> slots_;
};

// Few-shot blocks substituted into the summary, self-reflection and
// similarity prompts. The built-in set is our own; alternatives are loaded
// from JSON:
//   {"summary_example_article": str,
//    "self_reflect": {"positive": str, "negative": str},
//    "similarity": [str, str, str]}
struct FewShotExamples {
  std::string summary_example_article;
  std::string positive_example;
  std::string negative_example;
  std::array<std::string, 3> similarity_examples;

  static FewShotExamples defaults();
  static FewShotExamples load(const std::filesystem::path &path);
};

}  // namespace reacts
