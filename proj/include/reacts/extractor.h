#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "reacts/gateway.h"
#include "reacts/prompts.h"
#include "reacts/types.h"

namespace reacts {

// One dated, one-sentence event extracted from one article for one
// (topic, constraint). arrival_index is the article's position in the
// chronological stream and doubles as the summary id.
struct EventSummary {
  Date event_date;
  std::string description;
  std::string source_article_id;
  std::string topic;
  std::string constraint;
  std::size_t arrival_index = 0;

  // "YYYY-MM-DD: description"
  std::string line() const;

  friend bool operator==(const EventSummary &, const EventSummary &) = default;
};

nlohmann::json to_json(const EventSummary &summary);
EventSummary event_summary_from_json(const nlohmann::json &j);

enum class ExtractionDecision { kNull, kRejectedParse, kRejectedReflection, kAccepted };
std::string_view decision_name(ExtractionDecision decision);

// One line of the per-run audit log.
struct AuditEntry {
  std::string article_id;
  std::size_t arrival_index = 0;
  ExtractionDecision decision = ExtractionDecision::kNull;
  std::string detail;
};

nlohmann::json to_json(const AuditEntry &entry);
AuditEntry audit_entry_from_json(const nlohmann::json &j);

// Result of reading a summary-prompt response. Every string maps to exactly
// one kind.
struct SummaryParse {
  enum class Kind { kEvent, kNull, kRejected };
  Kind kind = Kind::kRejected;
  Date date;
  std::string description;
  std::string detail;  // why it was rejected, or notes such as ignored lines
};

// Null markers: NULL / None, any case, optional trailing period. Otherwise
// the first "YYYY-MM-DD: sentence" line wins; later date lines are ignored.
SummaryParse parse_summary_output(std::string_view output);

// True iff the answer, trimmed and lowercased, begins with "yes".
bool parse_yes(std::string_view answer);

// Article with its body run through resolve_time_refs().
Article preprocess_article(const Article &article);

// Content slot for prompts: "Published: YYYY-MM-DD", the title, then the
// body.
std::string article_content(const Article &article);

class EventExtractor {
 public:
  EventExtractor(const Gateway &gateway, FewShotExamples few_shot,
                 GenerationConfig summary_config =
                     GenerationConfig::defaults_for(PromptKind::kSummary),
                 GenerationConfig reflect_config =
                     GenerationConfig::defaults_for(PromptKind::kSelfReflect));

  struct Result {
    std::optional<EventSummary> summary;
    ExtractionDecision decision = ExtractionDecision::kNull;
    std::string detail;
  };

  // article must already be preprocessed. decision is kAccepted whenever a
  // summary is returned (reflection has not run yet).
  Result constrained_topic_sum(const Article &article, const TopicQuery &query,
                               std::size_t arrival_index) const;

  bool adhere_to_constraint(const EventSummary &summary,
                            const TopicQuery &query) const;

 private:
  const Gateway &gateway_;
  FewShotExamples few_shot_;
  GenerationConfig summary_config_;
  GenerationConfig reflect_config_;
};

}  // namespace reacts
