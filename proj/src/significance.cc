#include <cmath>
#include <random>
#include <stdexcept>

#include "reacts/error.h"
#include "reacts/eval.h"

namespace reacts {
namespace {

// Sum of sign-flipped differences; bit i of pattern set means unit i swaps.
double flipped_sum(const std::vector<double> &d, std::uint64_t pattern) {
  double s = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    s += ((pattern >> i) & 1u) ? -d[i] : d[i];
  }
  return s;
}

}  // namespace

nlohmann::json SignificanceResult::to_json() const {
  return {{"metric", metric},  {"diff", diff},   {"p_value", p_value},
          {"trials", trials},  {"alpha", alpha}, {"seed", seed},
          {"exhaustive", exhaustive}, {"significant", significant()}};
}

SignificanceResult approximate_randomization(const std::vector<double> &a,
                                             const std::vector<double> &b,
                                             const RandomizationOptions &options,
                                             std::string metric) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("paired score lists differ in length (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw std::invalid_argument("no paired scores to compare");
  if (options.trials < 1) throw std::invalid_argument("trials must be >= 1");

  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];

  const double observed = flipped_sum(d, 0);
  // Absorbs summation-order rounding between mathematically equal sums.
  const double threshold = std::abs(observed) - 1e-12 * (1.0 + std::abs(observed));

  SignificanceResult result;
  result.metric = std::move(metric);
  result.diff = observed / static_cast<double>(n);
  result.alpha = options.alpha;
  result.seed = options.seed;

  std::uint64_t at_least = 0;
  const bool small = n < 63 && ((std::uint64_t{1} << n) - 1) <= options.trials;
  if (options.exhaustive_when_small && small) {
    const std::uint64_t patterns = std::uint64_t{1} << n;
    for (std::uint64_t pattern = 1; pattern < patterns; ++pattern) {
      at_least += std::abs(flipped_sum(d, pattern)) >= threshold;
    }
    result.trials = patterns - 1;
    result.exhaustive = true;
  } else {
    std::mt19937_64 rng(options.seed);
    for (std::uint64_t t = 0; t < options.trials; ++t) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += (rng() >> 63) ? -d[i] : d[i];
      at_least += std::abs(s) >= threshold;
    }
    result.trials = options.trials;
  }
  result.p_value = static_cast<double>(at_least + 1) /
                   static_cast<double>(result.trials + 1);
  return result;
}

SignificanceResult compare_reports(const EvalReport &a, const EvalReport &b,
                                   const std::string &metric,
                                   const RandomizationOptions &options) {
  metric_value(TimelineScores{}, metric);
  std::map<std::pair<std::string, std::string>, const TimelineScores *> right;
  for (const auto &row : b.rows) right[{row.topic, row.constraint}] = &row;
  bool same = a.rows.size() == b.rows.size() && right.size() == b.rows.size();
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto &row : a.rows) {
    auto it = right.find({row.topic, row.constraint});
    if (it == right.end()) {
      same = false;
      break;
    }
    xs.push_back(metric_value(row, metric));
    ys.push_back(metric_value(*it->second, metric));
  }
  if (!same) {
    throw EvaluationMismatch("the two reports cover different timeline sets");
  }
  if (xs.empty()) throw EvaluationMismatch("the reports contain no timelines");
  return approximate_randomization(xs, ys, options, metric);
}

}  // namespace reacts
