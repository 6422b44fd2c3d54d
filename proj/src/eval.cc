#include "reacts/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <tuple>

#include "reacts/error.h"
#include "reacts/porter.h"
#include "reacts/text.h"

namespace reacts {
namespace {

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

Prf macro(const std::vector<TimelineScores> &rows, Prf TimelineScores::*field) {
  if (rows.empty()) return {};
  double p = 0.0;
  double r = 0.0;
  for (const auto &row : rows) {
    p += (row.*field).precision;
    r += (row.*field).recall;
  }
  const double n = static_cast<double>(rows.size());
  return Prf::from(p / n, r / n);
}

nlohmann::json prf_json(const Prf &s) {
  return {{"p", s.precision}, {"r", s.recall}, {"f1", s.f1}};
}

Prf prf_from_json(const nlohmann::json &j) {
  Prf s;
  s.precision = j.at("p").get<double>();
  s.recall = j.at("r").get<double>();
  s.f1 = j.at("f1").get<double>();
  return s;
}

void require_gold(const Timeline &gold) {
  if (gold.events.empty()) {
    throw DataError("reference timeline for \"" + gold.topic + "\" / \"" +
                    gold.constraint + "\" has no events");
  }
}

std::optional<std::size_t> best_match(const TokenizedEvent &event,
                                      const std::vector<TokenizedEvent> &candidates) {
  std::optional<std::size_t> best;
  double best_score = 0.0;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    const double sim = rouge_n(event, candidates[j], 1).f1;
    const double gap = std::abs(event.date.days_until(candidates[j].date));
    const double score = sim / (1.0 + gap);
    if (score > best_score) {
      best_score = score;
      best = j;
    }
  }
  return best;
}

}  // namespace

std::vector<std::string> normalize(std::string_view text) {
  std::vector<std::string> out;
  for (std::string &token : alnum_tokens(text)) {
    if (is_stopword(token)) continue;
    std::string stem = porter_stem(token);
    if (!stem.empty()) out.push_back(std::move(stem));
  }
  return out;
}

TokenizedEvent TokenizedEvent::from(const TimelineEvent &event) {
  TokenizedEvent t;
  t.date = event.date;
  t.tokens = normalize(event.text);
  for (const auto &tok : t.tokens) ++t.unigrams[tok];
  for (std::size_t i = 1; i < t.tokens.size(); ++i) {
    ++t.bigrams[t.tokens[i - 1] + " " + t.tokens[i]];
  }
  t.unigram_total = static_cast<int>(t.tokens.size());
  t.bigram_total = t.tokens.empty() ? 0 : static_cast<int>(t.tokens.size()) - 1;
  return t;
}

const std::map<std::string, int> &TokenizedEvent::grams(int order) const {
  if (order == 1) return unigrams;
  if (order == 2) return bigrams;
  throw std::invalid_argument("ROUGE order must be 1 or 2");
}

int TokenizedEvent::total(int order) const {
  if (order == 1) return unigram_total;
  if (order == 2) return bigram_total;
  throw std::invalid_argument("ROUGE order must be 1 or 2");
}

std::vector<TokenizedEvent> tokenize(const Timeline &timeline) {
  std::vector<TokenizedEvent> out;
  out.reserve(timeline.events.size());
  for (const auto &e : timeline.events) out.push_back(TokenizedEvent::from(e));
  return out;
}

Prf Prf::from(double p, double r) {
  Prf s;
  s.precision = p;
  s.recall = r;
  s.f1 = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  return s;
}

Prf rouge_n(const TokenizedEvent &predicted, const TokenizedEvent &gold, int order) {
  const auto &pg = predicted.grams(order);
  const auto &gg = gold.grams(order);
  int overlap = 0;
  for (const auto &[gram, count] : pg) {
    if (auto it = gg.find(gram); it != gg.end()) overlap += std::min(count, it->second);
  }
  return Prf::from(safe_ratio(overlap, predicted.total(order)),
                   safe_ratio(overlap, gold.total(order)));
}

Prf date_f1(const Timeline &predicted, const Timeline &gold) {
  require_gold(gold);
  std::set<Date> p;
  std::set<Date> g;
  for (const auto &e : predicted.events) p.insert(e.date);
  for (const auto &e : gold.events) g.insert(e.date);
  std::size_t hits = 0;
  for (const Date &d : p) hits += g.count(d);
  return Prf::from(safe_ratio(hits, p.size()), safe_ratio(hits, g.size()));
}

std::vector<std::optional<std::size_t>> align_many_to_one(
    const std::vector<TokenizedEvent> &predicted,
    const std::vector<TokenizedEvent> &gold) {
  std::vector<std::optional<std::size_t>> out;
  out.reserve(predicted.size());
  for (const auto &p : predicted) out.push_back(best_match(p, gold));
  return out;
}

Prf alignment_rouge(const Timeline &predicted, const Timeline &gold, int order) {
  require_gold(gold);
  if (order != 1 && order != 2) throw std::invalid_argument("ROUGE order must be 1 or 2");
  if (predicted.events.empty()) return {};
  const auto pred = tokenize(predicted);
  const auto ref = tokenize(gold);

  double p_sum = 0.0;
  const auto forward = align_many_to_one(pred, ref);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (forward[i]) p_sum += rouge_n(pred[i], ref[*forward[i]], order).precision;
  }
  double r_sum = 0.0;
  const auto backward = align_many_to_one(ref, pred);
  for (std::size_t j = 0; j < ref.size(); ++j) {
    if (backward[j]) r_sum += rouge_n(pred[*backward[j]], ref[j], order).recall;
  }
  return Prf::from(p_sum / static_cast<double>(pred.size()),
                   r_sum / static_cast<double>(ref.size()));
}

TimelineScores score_timeline(const Timeline &predicted, const Timeline &gold) {
  TimelineScores s;
  s.topic = gold.topic;
  s.constraint = gold.constraint;
  s.ar1 = alignment_rouge(predicted, gold, 1);
  s.ar2 = alignment_rouge(predicted, gold, 2);
  s.date = date_f1(predicted, gold);
  return s;
}

const std::vector<std::string> &metric_names() {
  static const std::vector<std::string> names = {
      "ar1_p", "ar1_r", "ar1_f1", "ar2_p", "ar2_r", "ar2_f1",
      "date_p", "date_r", "date_f1"};
  return names;
}

double metric_value(const TimelineScores &row, std::string_view metric) {
  auto split = metric.rfind('_');
  if (split == std::string_view::npos) {
    throw ConfigError("unknown metric \"" + std::string(metric) + "\"");
  }
  std::string_view family = metric.substr(0, split);
  std::string_view part = metric.substr(split + 1);
  const Prf *s = nullptr;
  if (family == "ar1") s = &row.ar1;
  if (family == "ar2") s = &row.ar2;
  if (family == "date") s = &row.date;
  if (s) {
    if (part == "p") return s->precision;
    if (part == "r") return s->recall;
    if (part == "f1") return s->f1;
  }
  throw ConfigError("unknown metric \"" + std::string(metric) +
                    "\" (expected ar1|ar2|date followed by _p, _r or _f1)");
}

EvalReport EvalReport::from_rows(std::vector<TimelineScores> rows) {
  std::sort(rows.begin(), rows.end(), [](const auto &a, const auto &b) {
    return std::tie(a.topic, a.constraint) < std::tie(b.topic, b.constraint);
  });
  EvalReport report;
  report.ar1 = macro(rows, &TimelineScores::ar1);
  report.ar2 = macro(rows, &TimelineScores::ar2);
  report.date = macro(rows, &TimelineScores::date);
  report.timelines = rows.size();
  std::set<std::string> topics;
  for (const auto &r : rows) topics.insert(r.topic);
  report.topics = topics.size();
  report.rows = std::move(rows);
  return report;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto &r : rows) {
    rows_json.push_back({{"topic", r.topic},
                         {"constraint", r.constraint},
                         {"ar1", prf_json(r.ar1)},
                         {"ar2", prf_json(r.ar2)},
                         {"date", prf_json(r.date)}});
  }
  return {{"timelines", timelines},
          {"topics", topics},
          {"unscored_references", unscored_references},
          {"aggregate",
           {{"ar1", prf_json(ar1)}, {"ar2", prf_json(ar2)}, {"date", prf_json(date)}}},
          {"rows", rows_json}};
}

EvalReport EvalReport::from_json(const nlohmann::json &j) {
  try {
    std::vector<TimelineScores> rows;
    for (const auto &r : j.at("rows")) {
      TimelineScores s;
      s.topic = r.at("topic").get<std::string>();
      s.constraint = r.at("constraint").get<std::string>();
      s.ar1 = prf_from_json(r.at("ar1"));
      s.ar2 = prf_from_json(r.at("ar2"));
      s.date = prf_from_json(r.at("date"));
      rows.push_back(std::move(s));
    }
    EvalReport report = from_rows(std::move(rows));
    report.unscored_references = j.value("unscored_references", std::size_t{0});
    return report;
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("malformed evaluation report: ") + e.what());
  }
}

std::string EvalReport::table() const {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-8s %8s %8s %8s\n", "metric", "P", "R", "F1");
  out << line;
  auto row = [&](const char *name, const Prf &s) {
    std::snprintf(line, sizeof(line), "%-8s %8.4f %8.4f %8.4f\n", name, s.precision,
                  s.recall, s.f1);
    out << line;
  };
  row("AR-1", ar1);
  row("AR-2", ar2);
  row("Date F1", date);
  out << timelines << " timelines over " << topics << " topics\n";
  return out.str();
}

EvalReport evaluate_timelines(const std::vector<Timeline> &predictions,
                              const std::vector<Timeline> &gold) {
  using Key = std::pair<std::string, std::string>;
  std::map<Key, const Timeline *> by_key;
  for (const auto &g : gold) {
    if (!by_key.emplace(Key{g.topic, g.constraint}, &g).second) {
      throw DataError("duplicate reference timeline for \"" + g.topic + "\" / \"" +
                      g.constraint + "\"");
    }
  }
  std::map<Key, const Timeline *> predicted;
  std::vector<std::string> offenders;
  for (const auto &p : predictions) {
    Key key{p.topic, p.constraint};
    if (!by_key.count(key)) {
      offenders.push_back("\"" + p.topic + "\" / \"" + p.constraint + "\"");
    } else if (!predicted.emplace(key, &p).second) {
      offenders.push_back("\"" + p.topic + "\" / \"" + p.constraint + "\" (duplicate)");
    }
  }
  if (!offenders.empty()) {
    std::string msg = "predictions without a matching reference timeline:";
    for (const auto &o : offenders) msg += "\n  " + o;
    throw EvaluationMismatch(msg);
  }
  std::vector<TimelineScores> rows;
  for (const auto &[key, p] : predicted) {
    rows.push_back(score_timeline(*p, *by_key.at(key)));
  }
  EvalReport report = EvalReport::from_rows(std::move(rows));
  report.unscored_references = by_key.size() - predicted.size();
  return report;
}

}  // namespace reacts
