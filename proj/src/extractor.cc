#include "reacts/extractor.h"

#include <vector>

#include "reacts/error.h"
#include "reacts/temporal.h"
#include "reacts/text.h"

namespace reacts {
namespace {

bool is_null_marker(std::string_view line) {
  std::string s = to_lower_ascii(trim(line));
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s == "null" || s == "none";
}

bool iso_shape(std::string_view s) {
  if (s.size() < 10) return false;
  for (std::size_t i = 0; i < 10; ++i) {
    bool digit = s[i] >= '0' && s[i] <= '9';
    if ((i == 4 || i == 7) ? s[i] != '-' : !digit) return false;
  }
  return true;
}

// "YYYY-MM-DD:" at the start of s (after leading blanks); returns the
// position after the colon, or npos.
std::size_t date_label_end(std::string_view s) {
  std::size_t b = 0;
  while (b < s.size() && (s[b] == ' ' || s[b] == '\t')) ++b;
  if (!iso_shape(s.substr(b))) return std::string_view::npos;
  std::size_t c = b + 10;
  while (c < s.size() && (s[c] == ' ' || s[c] == '\t')) ++c;
  if (c >= s.size() || s[c] != ':') return std::string_view::npos;
  return c + 1;
}

// Drops repeated "YYYY-MM-DD:" labels and "(YYYY-MM-DD) " markers copied
// from the prompt.
std::string_view strip_residue(std::string_view s) {
  for (;;) {
    s = trim(s);
    if (auto end = date_label_end(s); end != std::string_view::npos) {
      s = s.substr(end);
      continue;
    }
    if (s.size() >= 12 && s[0] == '(' && iso_shape(s.substr(1)) && s[11] == ')') {
      s = s.substr(12);
      continue;
    }
    return s;
  }
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

}  // namespace

std::string EventSummary::line() const {
  return event_date.iso() + ": " + description;
}

nlohmann::json to_json(const EventSummary &s) {
  return {{"date", s.event_date.iso()},
          {"description", s.description},
          {"article_id", s.source_article_id},
          {"topic", s.topic},
          {"constraint", s.constraint},
          {"arrival_index", s.arrival_index}};
}

EventSummary event_summary_from_json(const nlohmann::json &j) {
  EventSummary s;
  auto date = Date::parse_iso(j.at("date").get<std::string>());
  if (!date) throw DataError("event summary with invalid date");
  s.event_date = *date;
  s.description = j.at("description").get<std::string>();
  s.source_article_id = j.at("article_id").get<std::string>();
  s.topic = j.at("topic").get<std::string>();
  s.constraint = j.at("constraint").get<std::string>();
  s.arrival_index = j.at("arrival_index").get<std::size_t>();
  return s;
}

std::string_view decision_name(ExtractionDecision decision) {
  switch (decision) {
    case ExtractionDecision::kNull:
      return "null";
    case ExtractionDecision::kRejectedParse:
      return "rejected_parse";
    case ExtractionDecision::kRejectedReflection:
      return "rejected_reflection";
    case ExtractionDecision::kAccepted:
      return "accepted";
  }
  return "unknown";
}

nlohmann::json to_json(const AuditEntry &e) {
  nlohmann::json j = {{"article_id", e.article_id},
                      {"arrival_index", e.arrival_index},
                      {"decision", decision_name(e.decision)}};
  if (!e.detail.empty()) j["detail"] = e.detail;
  return j;
}

AuditEntry audit_entry_from_json(const nlohmann::json &j) {
  AuditEntry e;
  e.article_id = j.at("article_id").get<std::string>();
  e.arrival_index = j.at("arrival_index").get<std::size_t>();
  const std::string name = j.at("decision").get<std::string>();
  bool found = false;
  for (auto d : {ExtractionDecision::kNull, ExtractionDecision::kRejectedParse,
                 ExtractionDecision::kRejectedReflection,
                 ExtractionDecision::kAccepted}) {
    if (decision_name(d) == name) {
      e.decision = d;
      found = true;
    }
  }
  if (!found) throw DataError("unknown audit decision \"" + name + "\"");
  e.detail = j.value("detail", "");
  return e;
}

SummaryParse parse_summary_output(std::string_view output) {
  SummaryParse result;
  std::vector<std::string_view> lines = lines_of(output);
  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first == lines.size()) {
    result.detail = "empty output";
    return result;
  }
  if (is_null_marker(lines[first])) {
    result.kind = SummaryParse::Kind::kNull;
    return result;
  }
  std::size_t extra = 0;
  bool found = false;
  for (std::size_t i = first; i < lines.size(); ++i) {
    std::string_view line = trim(lines[i]);
    std::size_t end = date_label_end(line);
    if (end == std::string_view::npos) continue;
    if (found) {
      ++extra;
      continue;
    }
    found = true;
    auto date = Date::parse_iso(line.substr(0, 10));
    if (!date) {
      result.detail = "invalid date \"" + std::string(line.substr(0, 10)) + "\"";
      return result;
    }
    std::string_view description = strip_residue(line.substr(end));
    if (description.empty()) {
      result.detail = "empty description";
      return result;
    }
    result.kind = SummaryParse::Kind::kEvent;
    result.date = *date;
    result.description = std::string(description);
  }
  if (!found) {
    result.detail = "no null marker or date line";
    return result;
  }
  if (extra > 0) {
    result.detail = "ignored " + std::to_string(extra) + " extra date line(s)";
  }
  return result;
}

bool parse_yes(std::string_view answer) {
  return starts_with_icase(trim(answer), "yes");
}

Article preprocess_article(const Article &article) {
  Article out = article;
  out.body = resolve_time_refs(article.body, article.publication_date);
  return out;
}

std::string article_content(const Article &article) {
  std::string content = "Published: " + article.publication_date.iso() + "\n";
  if (!article.title.empty()) content += article.title + "\n";
  content += article.body;
  return content;
}

EventExtractor::EventExtractor(const Gateway &gateway, FewShotExamples few_shot,
                               GenerationConfig summary_config,
                               GenerationConfig reflect_config)
    : gateway_(gateway),
      few_shot_(std::move(few_shot)),
      summary_config_(std::move(summary_config)),
      reflect_config_(std::move(reflect_config)) {}

EventExtractor::Result EventExtractor::constrained_topic_sum(
    const Article &article, const TopicQuery &query,
    std::size_t arrival_index) const {
  Slots slots = {{"example_article", few_shot_.summary_example_article},
                 {"keyword", query.keyword},
                 {"constraint", query.constraint},
                 {"content", article_content(article)}};
  const std::string output =
      gateway_.chat(PromptKind::kSummary, slots, summary_config_);
  SummaryParse parsed = parse_summary_output(output);
  Result result;
  result.detail = parsed.detail;
  switch (parsed.kind) {
    case SummaryParse::Kind::kNull:
      result.decision = ExtractionDecision::kNull;
      break;
    case SummaryParse::Kind::kRejected:
      result.decision = ExtractionDecision::kRejectedParse;
      break;
    case SummaryParse::Kind::kEvent:
      result.decision = ExtractionDecision::kAccepted;
      result.summary = EventSummary{parsed.date,        parsed.description,
                                    article.id,         query.keyword,
                                    query.constraint,   arrival_index};
      break;
  }
  return result;
}

bool EventExtractor::adhere_to_constraint(const EventSummary &summary,
                                          const TopicQuery &query) const {
  Slots slots = {{"keyword", query.keyword},
                 {"positive_example", few_shot_.positive_example},
                 {"negative_example", few_shot_.negative_example},
                 {"event", summary.line()},
                 {"constraint", query.constraint}};
  return parse_yes(gateway_.chat(PromptKind::kSelfReflect, slots, reflect_config_));
}

}  // namespace reacts
