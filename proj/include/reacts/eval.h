#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "reacts/types.h"

namespace reacts {

// Membership in the embedded SMART common-word list.
bool is_stopword(std::string_view token);
std::size_t stopword_count();

// Lowercase, split on anything but [a-z0-9], drop stopwords, Porter-stem.
std::vector<std::string> normalize(std::string_view text);

struct TokenizedEvent {
  Date date;
  std::vector<std::string> tokens;
  std::map<std::string, int> unigrams;
  std::map<std::string, int> bigrams;  // "a b" over adjacent post-filter tokens
  int unigram_total = 0;
  int bigram_total = 0;

  static TokenizedEvent from(const TimelineEvent &event);
  const std::map<std::string, int> &grams(int order) const;
  int total(int order) const;
};

std::vector<TokenizedEvent> tokenize(const Timeline &timeline);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static Prf from(double p, double r);
  friend bool operator==(const Prf &, const Prf &) = default;
};

// Clipped n-gram overlap; P over the predicted count, R over the gold count.
Prf rouge_n(const TokenizedEvent &predicted, const TokenizedEvent &gold, int order);

// Throws DataError when gold has no events.
Prf date_f1(const Timeline &predicted, const Timeline &gold);

// For every predicted event, the gold index maximizing
// rouge1_f1 / (1 + |day difference|), or nullopt when that maximum is 0.
// Ties go to the lower gold index.
std::vector<std::optional<std::size_t>> align_many_to_one(
    const std::vector<TokenizedEvent> &predicted,
    const std::vector<TokenizedEvent> &gold);

// Precision averages over predicted events against their aligned gold event;
// recall averages over gold events against the predicted event that the
// reverse alignment picks for them. Throws DataError when gold is empty.
Prf alignment_rouge(const Timeline &predicted, const Timeline &gold, int order);

struct TimelineScores {
  std::string topic;
  std::string constraint;
  Prf ar1;
  Prf ar2;
  Prf date;
};

TimelineScores score_timeline(const Timeline &predicted, const Timeline &gold);

// Metric keys: ar1_p, ar1_r, ar1_f1, ar2_*, date_*.
double metric_value(const TimelineScores &row, std::string_view metric);
const std::vector<std::string> &metric_names();

struct EvalReport {
  std::vector<TimelineScores> rows;  // sorted by (topic, constraint)
  Prf ar1;                           // macro averages
  Prf ar2;
  Prf date;
  std::size_t timelines = 0;
  std::size_t topics = 0;
  std::size_t unscored_references = 0;  // gold timelines with no prediction

  // Macro-averages rows; precision, recall and F1 are averaged separately.
  static EvalReport from_rows(std::vector<TimelineScores> rows);
  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json &j);
  std::string table() const;
};

// Pairs each prediction with the gold timeline of the same (topic,
// constraint) and scores those pairs. Gold timelines without a prediction are
// only counted. Throws EvaluationMismatch listing predictions with no gold.
EvalReport evaluate_timelines(const std::vector<Timeline> &predictions,
                              const std::vector<Timeline> &gold);

struct SignificanceResult {
  std::string metric;
  double diff = 0.0;  // mean(a) - mean(b)
  double p_value = 1.0;
  std::uint64_t trials = 0;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  bool exhaustive = false;

  bool significant() const { return p_value < alpha; }
  nlohmann::json to_json() const;
};

struct RandomizationOptions {
  std::uint64_t trials = 100;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  // When 2^n - 1 <= trials, every non-identity swap pattern is visited once
  // instead of sampling, and trials is reported as 2^n - 1.
  bool exhaustive_when_small = true;
};

// Paired approximate randomization over per-unit scores:
//   p = (#{|permuted diff| >= |observed diff|} + 1) / (trials + 1)
// Throws std::invalid_argument on empty or unequal inputs, or trials < 1.
SignificanceResult approximate_randomization(const std::vector<double> &a,
                                             const std::vector<double> &b,
                                             const RandomizationOptions &options,
                                             std::string metric = "");

// Per-timeline metric values of both reports, paired by (topic, constraint).
// Throws EvaluationMismatch when the timeline sets differ.
SignificanceResult compare_reports(const EvalReport &a, const EvalReport &b,
                                   const std::string &metric,
                                   const RandomizationOptions &options);

}  // namespace reacts
