#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "reacts/cluster.h"
#include "reacts/eval.h"
#include "reacts/extractor.h"
#include "reacts/gateway.h"
#include "reacts/types.h"

namespace reacts {

enum class RunMode { kReacts, kReactsNoSr, kBaseline };
std::string_view mode_name(RunMode mode);
std::optional<RunMode> mode_from_name(std::string_view name);

struct RunConfig {
  RunMode mode = RunMode::kReacts;

  // A JSONL pool shared by every selected timeline, or a directory holding
  // <topic-slug>.jsonl per topic.
  std::filesystem::path pool;
  // Reference timelines; optional when topic, constraint, l and k are given.
  std::filesystem::path gold;
  std::optional<std::string> topic;       // exact topic name
  std::optional<std::string> constraint;  // index within the topic, or exact text
  std::optional<int> l;                   // default: distinct gold dates
  std::optional<int> k;                   // default: mean gold sentences per date
  std::optional<double> sample_fraction;  // seeded subset of the timelines

  GenerationConfig summary = GenerationConfig::defaults_for(PromptKind::kSummary);
  GenerationConfig reflect = GenerationConfig::defaults_for(PromptKind::kSelfReflect);
  GenerationConfig similarity = GenerationConfig::defaults_for(PromptKind::kSimilarity);
  GenerationConfig baseline = GenerationConfig::defaults_for(PromptKind::kBaseline);
  RetrievalLimit retrieval{20};
  std::filesystem::path few_shot;  // empty: built-in examples
  std::optional<std::uint64_t> seed;
  std::filesystem::path out;
  std::string backend = "http";  // provenance label for the manifest

  int jobs = 1;     // timelines processed concurrently
  int window = 8;   // articles summarized ahead of clustering
  std::size_t snapshot_every = 100;
  bool resume = false;
  int context_limit = 8192;  // baseline prompt budget, in estimated tokens

  // Throws ConfigError on the first invalid setting.
  void validate() const;
  // Settings that shape the output; paths to the output directory and
  // endpoints are left out so reruns elsewhere compare equal.
  nlohmann::json to_json() const;
};

// One selected (topic, constraint) with its resolved l and k.
struct Job {
  TopicQuery query;
  std::size_t constraint_index = 0;
  std::string file_stem;  // <topic-slug>__<constraint-index>
  std::filesystem::path pool;
};

// l = number of distinct dates; k = mean sentences per dated entry, rounded,
// at least 1.
int default_l(const GroundTruthTimeline &gold);
int default_k(const GroundTruthTimeline &gold);

std::vector<Job> plan_jobs(const RunConfig &cfg);

struct JobStats {
  std::size_t articles = 0;
  std::size_t accepted = 0;
  std::size_t null_outputs = 0;
  std::size_t rejected_parse = 0;
  std::size_t rejected_reflection = 0;
  std::size_t clusters = 0;
  std::size_t similarity_calls = 0;
  std::size_t baseline_articles = 0;
  std::vector<std::string> warnings;
  nlohmann::json to_json() const;
};

struct JobResult {
  Timeline timeline;
  JobStats stats;
  std::vector<AuditEntry> audit;
};

// Algorithm 1 over one pool. Snapshots go to snapshot_path every
// cfg.snapshot_every articles and before a GatewayError propagates; with
// cfg.resume an existing snapshot is picked up. The snapshot is removed on
// success.
JobResult run_reacts_job(const Job &job, const std::vector<Article> &pool,
                         const Gateway &gateway, const FewShotExamples &few_shot,
                         const RunConfig &cfg,
                         const std::filesystem::path &snapshot_path);

// Estimated tokens: ceil(code points / 4).
std::size_t estimate_tokens(std::string_view text);

struct BaselinePrompt {
  Slots slots;
  std::vector<std::string> article_ids;  // in prompt order
};

// Articles are taken in seeded random order until the next one would exceed
// (context_limit - instruction - max_tokens) * 0.9 estimated tokens.
// Throws ConfigError when not even one fits.
BaselinePrompt build_baseline_prompt(const std::vector<Article> &pool,
                                     const TopicQuery &query, std::uint64_t seed,
                                     int context_limit, int max_output_tokens);

// Keeps "YYYY-MM-DD: text" lines (leading list markers allowed), truncates to
// l and sorts by date.
std::vector<TimelineEvent> parse_baseline_output(std::string_view output, int l);

JobResult run_baseline_job(const Job &job, const std::vector<Article> &pool,
                           const Gateway &gateway, const RunConfig &cfg);

struct RunSummary {
  std::vector<Job> jobs;
  std::vector<JobResult> results;
};

// Plans jobs, runs them, and writes <stem>.txt, <stem>.json,
// <stem>.audit.jsonl and manifest.json under cfg.out.
RunSummary run_pipeline(const RunConfig &cfg, const Gateway &gateway,
                        std::function<void(const std::string &)> log = nullptr);

// Reads every prediction JSON under dir (manifest and audit files excluded).
std::vector<Timeline> load_predictions(const std::filesystem::path &dir);

EvalReport evaluate_directory(const std::filesystem::path &predictions,
                              const std::filesystem::path &gold);

EvalReport load_report(const std::filesystem::path &path);

}  // namespace reacts
