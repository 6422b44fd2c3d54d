#include "reacts/prompts.h"

#include <fstream>

#include "json.hpp"
#include "reacts/error.h"

namespace reacts {
namespace {

constexpr std::string_view kSummaryText =
    R"(### Instruction
Review the news article associated with the provided keyword and constraint. If the article's content does not relate to the keyword and specified constraint, output 'None'. Otherwise, summarize the most significant event related to the keyword while adhering to the constraint.

### Format
YYYY-MM-DD: One-sentence Summary

#################
### Keyword
Stephen King

### Constraint
Focus on Stephen King's book releases.

### Content
{example_article}

### Related Event Summary
None.

#################
### Keyword
Stephen King

### Constraint
Focus on Stephen King's involvement in television and streaming projects.

### Content
{example_article}

### Related Event Summary
2021-06-04: The miniseries “Lisey’s Story,” adapted by King and based on his 2006 novel of the same name, premieres on Apple TV+.

#################
### Keyword
{keyword}

### Constraint
{constraint}

### Content
{content}

### Related Event Summary
)";

constexpr std::string_view kSelfReflectText =
    R"(Review the timestamped event description related to {keyword}, accompanied by a constraint. Please determine whether the event description complies with or corresponds to the constraint. Respond with 'Yes' if the event description aligns with the constraint, or with 'No' if it does not.
#################
{positive_example}

#################
{negative_example}

#################
### Event
{event}

### Constraint
{constraint}
### Answer
)";

constexpr std::string_view kSimilarityText =
    R"(Taking the timestamps into account, evaluate whether two prior news events are referring to the same event related to the keyword. If the two events occur on the same date, and they are about the same topic related to the keyword, then they should be considered as referring to the same event. If so, please respond directly with 'yes'. If not, respond with 'no'. Then explain your answer.
----
{example_1}
----
{example_2}
----
{example_3}
----
# Keyword
{keyword}
# Event 1
{event1}
# Event 2
{event2}
# Answer
)";

// {articles} expands to every sampled article followed by a separator line.
constexpr std::string_view kBaselineText =
    R"({articles}### Instruction
Using the articles about {keyword} above, please create a concise timeline with {l} events following the constraint below. Using only the information from the articles, provide the date and a {k}-sentence summary for each important event.

### Constraint
{constraint}

### Format
YYYY-MM-DD: One-sentence Summary
YYYY-MM-DD: One-sentence Summary

### Answer
)";

bool slot_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

// Calls fn(literal_or_slot, is_slot) for each piece of the template.
template <typename Fn>
void walk(std::string_view text, Fn &&fn) {
  std::size_t i = 0;
  std::size_t literal_begin = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      std::size_t j = i + 1;
      while (j < text.size() && slot_char(text[j])) ++j;
      if (j < text.size() && text[j] == '}' && j > i + 1) {
        fn(text.substr(literal_begin, i - literal_begin), false);
        fn(text.substr(i + 1, j - i - 1), true);
        i = j + 1;
        literal_begin = i;
        continue;
      }
    }
    ++i;
  }
  fn(text.substr(literal_begin), false);
}

}  // namespace

std::string_view prompt_name(PromptKind kind) {
  switch (kind) {
    case PromptKind::kSummary:
      return "summary";
    case PromptKind::kSelfReflect:
      return "self_reflect";
    case PromptKind::kSimilarity:
      return "similarity";
    case PromptKind::kBaseline:
      return "baseline";
  }
  return "unknown";
}

std::optional<PromptKind> prompt_kind_from_name(std::string_view name) {
  for (PromptKind k : {PromptKind::kSummary, PromptKind::kSelfReflect,
                       PromptKind::kSimilarity, PromptKind::kBaseline}) {
    if (prompt_name(k) == name) return k;
  }
  return std::nullopt;
}

PromptTemplate::PromptTemplate(PromptKind kind, std::string text)
    : kind_(kind), text_(std::move(text)) {
  walk(text_, [this](std::string_view piece, bool is_slot) {
    if (!is_slot) return;
    std::string name(piece);
    for (const auto &s : slots_) {
      if (s == name) return;
    }
    slots_.push_back(std::move(name));
  });
}

const PromptTemplate &PromptTemplate::get(PromptKind kind) {
  static const PromptTemplate summary(PromptKind::kSummary,
                                      std::string(kSummaryText));
  static const PromptTemplate reflect(PromptKind::kSelfReflect,
                                      std::string(kSelfReflectText));
  static const PromptTemplate similarity(PromptKind::kSimilarity,
                                         std::string(kSimilarityText));
  static const PromptTemplate baseline(PromptKind::kBaseline,
                                       std::string(kBaselineText));
  switch (kind) {
    case PromptKind::kSummary:
      return summary;
    case PromptKind::kSelfReflect:
      return reflect;
    case PromptKind::kSimilarity:
      return similarity;
    case PromptKind::kBaseline:
      return baseline;
  }
  throw TemplateError("unknown prompt kind");
}

std::string PromptTemplate::render(const Slots &values) const {
  for (const auto &[key, value] : values) {
    bool known = false;
    for (const auto &s : slots_) known = known || s == key;
    if (!known) {
      throw TemplateError(std::string(name()) + " prompt has no slot \"" +
                          key + "\"");
    }
  }
  std::string out;
  out.reserve(text_.size() + 1024);
  walk(text_, [&](std::string_view piece, bool is_slot) {
    if (!is_slot) {
      out.append(piece);
      return;
    }
    auto it = values.find(std::string(piece));
    if (it == values.end()) {
      throw TemplateError(std::string(name()) + " prompt slot \"" +
                          std::string(piece) + "\" is unfilled");
    }
    out.append(it->second);
  });
  return out;
}

FewShotExamples FewShotExamples::defaults() {
  FewShotExamples ex;
  ex.summary_example_article =
      "Published: 2021-06-04\n"
      "Lisey's Story review: Stephen King adapts his own novel for Apple TV+\n"
      "The eight-part miniseries Lisey's Story, which Stephen King adapted "
      "from his 2006 novel of the same name, premieres on Apple TV+ today. "
      "Julianne Moore stars as the widow of a celebrated novelist who is "
      "haunted by memories of her late husband. King wrote every episode "
      "himself, a first for one of his streaming projects.";
  ex.positive_example =
      "### Event\n"
      "2022-09-06: King's novel \"Fairy Tale\" is published.\n"
      "\n"
      "### Constraint\n"
      "Focus on Stephen King's book releases.\n"
      "### Answer\n"
      "Yes";
  ex.negative_example =
      "### Event\n"
      "2015-09-10: King is awarded the National Medal of Arts by US "
      "President Barack Obama.\n"
      "\n"
      "### Constraint\n"
      "Focus on Stephen King's book releases.\n"
      "### Answer\n"
      "No";
  ex.similarity_examples = {
      "# Keyword\n"
      "Stephen King\n"
      "# Event 1\n"
      "2020-04-21: King's latest book, \"If It Bleeds,\" is published.\n"
      "# Event 2\n"
      "2020-04-21: \"If It Bleeds,\" a collection of four novellas by "
      "Stephen King, goes on sale.\n"
      "# Answer\n"
      "yes",
      "# Keyword\n"
      "Stephen King\n"
      "# Event 1\n"
      "2018-07-25: Hulu premieres \"Castle Rock,\" produced by Stephen King.\n"
      "# Event 2\n"
      "2018-08-01: The second episode of Hulu's \"Castle Rock\" airs.\n"
      "# Answer\n"
      "no",
      "# Keyword\n"
      "Stephen King\n"
      "# Event 1\n"
      "2015-11-03: King releases the story collection \"The Bazaar of Bad "
      "Dreams.\"\n"
      "# Event 2\n"
      "2015-11-03: Stephen King appears at a fundraiser in Maine.\n"
      "# Answer\n"
      "no"};
  return ex;
}

FewShotExamples FewShotExamples::load(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open few-shot file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
    FewShotExamples ex;
    ex.summary_example_article =
        doc.at("summary_example_article").get<std::string>();
    ex.positive_example = doc.at("self_reflect").at("positive").get<std::string>();
    ex.negative_example = doc.at("self_reflect").at("negative").get<std::string>();
    const auto &sim = doc.at("similarity");
    if (!sim.is_array() || sim.size() != 3) {
      throw DataError(path.string() + ": \"similarity\" needs 3 examples");
    }
    for (std::size_t i = 0; i < 3; ++i) {
      ex.similarity_examples[i] = sim[i].get<std::string>();
    }
    return ex;
  } catch (const nlohmann::json::exception &e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace reacts
