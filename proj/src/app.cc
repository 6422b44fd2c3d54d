#include "reacts/app.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "reacts/corpus.h"
#include "reacts/error.h"
#include "reacts/text.h"
#include "reacts/timeline.h"

namespace reacts {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kArticleSeparator = "\n#################\n";

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 14695981039346656037ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string pool_fingerprint(const std::vector<Article> &pool) {
  std::uint64_t h = fnv1a("pool");
  for (const auto &a : pool) {
    h = fnv1a(a.id, h);
    h = fnv1a("\x1f", h);
  }
  return std::to_string(pool.size()) + ":" + std::to_string(h);
}

json generation_json(const GenerationConfig &g) {
  return {{"temperature", g.temperature},
          {"top_p", g.top_p},
          {"max_tokens", g.max_tokens},
          {"model", g.model_name}};
}

void write_file(const fs::path &path, const std::string &content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << content;
    if (!out) throw ConfigError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

json read_json(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception &e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

bool all_digits(std::string_view s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string topic_slug(std::string_view topic) {
  std::string slug = slugify(topic);
  return slug.empty() ? "topic" : slug;
}

std::mt19937_64 job_rng(std::uint64_t seed, std::string_view stem) {
  const std::uint64_t h = fnv1a(stem);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

void count_decision(JobStats &stats, ExtractionDecision d) {
  switch (d) {
    case ExtractionDecision::kNull:
      ++stats.null_outputs;
      break;
    case ExtractionDecision::kRejectedParse:
      ++stats.rejected_parse;
      break;
    case ExtractionDecision::kRejectedReflection:
      ++stats.rejected_reflection;
      break;
    case ExtractionDecision::kAccepted:
      ++stats.accepted;
      break;
  }
}

// Strips "- ", "* ", "• " and "1. " style list markers.
std::string_view strip_list_marker(std::string_view s) {
  s = trim(s);
  if (s.rfind("\xE2\x80\xA2", 0) == 0) return trim(s.substr(3));
  if (!s.empty() && (s[0] == '-' || s[0] == '*')) return trim(s.substr(1));
  std::size_t i = 0;
  while (i < s.size() && i < 3 && s[i] >= '0' && s[i] <= '9') ++i;
  if (i > 0 && i < s.size() && (s[i] == '.' || s[i] == ')') && i + 1 < s.size() &&
      s[i + 1] == ' ') {
    return trim(s.substr(i + 1));
  }
  return s;
}

}  // namespace

std::string_view mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::kReacts:
      return "reacts";
    case RunMode::kReactsNoSr:
      return "reacts_no_sr";
    case RunMode::kBaseline:
      return "baseline";
  }
  return "unknown";
}

std::optional<RunMode> mode_from_name(std::string_view name) {
  for (RunMode m : {RunMode::kReacts, RunMode::kReactsNoSr, RunMode::kBaseline}) {
    if (mode_name(m) == name) return m;
  }
  return std::nullopt;
}

void RunConfig::validate() const {
  if (pool.empty()) throw ConfigError("an article pool is required (--pool)");
  if (out.empty()) throw ConfigError("an output directory is required (--out)");
  if (gold.empty() && !(topic && constraint && l && k)) {
    throw ConfigError(
        "without --gold, --topic, --constraint, --l and --k must all be given");
  }
  if (l && *l < 1) throw ConfigError("l must be >= 1");
  if (k && *k < 1) throw ConfigError("k must be >= 1");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (window < 1) throw ConfigError("window must be >= 1");
  if (snapshot_every < 1) throw ConfigError("snapshot interval must be >= 1");
  if (context_limit < 1) throw ConfigError("context limit must be positive");
  if (sample_fraction && !(*sample_fraction > 0.0 && *sample_fraction <= 1.0)) {
    throw ConfigError("sample fraction must be in (0, 1]");
  }
  if (mode == RunMode::kBaseline && !seed) {
    throw ConfigError("baseline mode samples articles and needs --seed");
  }
  if (sample_fraction && !seed) throw ConfigError("--sample-fraction needs --seed");
  for (const GenerationConfig *g : {&summary, &reflect, &similarity, &baseline}) {
    g->validate();
  }
}

json RunConfig::to_json() const {
  json j = {{"mode", mode_name(mode)},
            {"backend", backend},
            {"pool", pool.string()},
            {"gold", gold.string()},
            {"few_shot", few_shot.string()},
            {"retrieval_n", retrieval.n},
            {"window", window},
            {"snapshot_every", snapshot_every},
            {"context_limit", context_limit},
            {"generation",
             {{"summary", generation_json(summary)},
              {"self_reflect", generation_json(reflect)},
              {"similarity", generation_json(similarity)},
              {"baseline", generation_json(baseline)}}}};
  j["topic"] = topic ? json(*topic) : json(nullptr);
  j["constraint"] = constraint ? json(*constraint) : json(nullptr);
  j["l"] = l ? json(*l) : json(nullptr);
  j["k"] = k ? json(*k) : json(nullptr);
  j["seed"] = seed ? json(*seed) : json(nullptr);
  j["sample_fraction"] = sample_fraction ? json(*sample_fraction) : json(nullptr);
  return j;
}

int default_l(const GroundTruthTimeline &gold) {
  std::set<Date> dates;
  for (const auto &e : gold.events) dates.insert(e.date);
  return std::max<int>(1, static_cast<int>(dates.size()));
}

int default_k(const GroundTruthTimeline &gold) {
  std::map<Date, std::size_t> per_date;
  for (const auto &e : gold.events) per_date[e.date] += split_sentences(e.text).size();
  if (per_date.empty()) return 1;
  std::size_t total = 0;
  for (const auto &[_, n] : per_date) total += n;
  const double mean = static_cast<double>(total) / static_cast<double>(per_date.size());
  return std::max(1, static_cast<int>(std::lround(mean)));
}

std::vector<Job> plan_jobs(const RunConfig &cfg) {
  cfg.validate();
  std::vector<Job> jobs;
  auto pool_for = [&](const std::string &topic) {
    if (fs::is_directory(cfg.pool)) {
      fs::path p = cfg.pool / (topic_slug(topic) + ".jsonl");
      if (!fs::exists(p)) {
        throw ConfigError("no pool for topic \"" + topic + "\" (expected " +
                          p.string() + ")");
      }
      return p;
    }
    if (!fs::exists(cfg.pool)) throw ConfigError("pool not found: " + cfg.pool.string());
    return cfg.pool;
  };

  if (cfg.gold.empty()) {
    Job job;
    job.query = {*cfg.topic, *cfg.constraint, *cfg.l, *cfg.k};
    job.query.validate();
    job.constraint_index = 0;
    job.file_stem = topic_slug(*cfg.topic) + "__0";
    job.pool = pool_for(*cfg.topic);
    jobs.push_back(std::move(job));
    return jobs;
  }

  if (!fs::exists(cfg.gold)) throw ConfigError("ground truth not found: " + cfg.gold.string());
  std::vector<GroundTruthTimeline> gold = load_ground_truth(cfg.gold);
  std::map<std::string, std::size_t> next_index;
  bool topic_seen = false;
  for (const auto &g : gold) {
    const std::size_t index = next_index[g.topic]++;
    if (cfg.topic && g.topic != *cfg.topic) continue;
    topic_seen = true;
    if (cfg.constraint) {
      bool hit = all_digits(*cfg.constraint) ? std::to_string(index) == *cfg.constraint
                                             : g.constraint == *cfg.constraint;
      if (!hit) continue;
    }
    if (g.events.empty()) {
      throw DataError("reference timeline for \"" + g.topic + "\" / \"" + g.constraint +
                      "\" has no events");
    }
    Job job;
    job.query = {g.topic, g.constraint, cfg.l.value_or(default_l(g)),
                 cfg.k.value_or(default_k(g))};
    job.query.validate();
    job.constraint_index = index;
    job.file_stem = topic_slug(g.topic) + "__" + std::to_string(index);
    jobs.push_back(std::move(job));
  }
  if (cfg.topic && !topic_seen) {
    throw ConfigError("topic \"" + *cfg.topic + "\" is not in the ground truth");
  }
  if (jobs.empty()) throw ConfigError("no timeline matches the topic/constraint filters");

  std::set<std::string> stems;
  for (const auto &j : jobs) {
    if (!stems.insert(j.file_stem).second) {
      throw ConfigError("two topics map to the output name " + j.file_stem);
    }
  }

  if (cfg.sample_fraction && *cfg.sample_fraction < 1.0) {
    std::vector<std::size_t> order(jobs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(*cfg.seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t keep = static_cast<std::size_t>(
        std::lround(*cfg.sample_fraction * static_cast<double>(jobs.size())));
    keep = std::clamp<std::size_t>(keep, 1, jobs.size());
    order.resize(keep);
    std::sort(order.begin(), order.end());
    std::vector<Job> sampled;
    for (std::size_t i : order) sampled.push_back(std::move(jobs[i]));
    jobs = std::move(sampled);
  }
  for (auto &j : jobs) j.pool = pool_for(j.query.keyword);
  return jobs;
}

json JobStats::to_json() const {
  return {{"articles", articles},
          {"accepted", accepted},
          {"null", null_outputs},
          {"rejected_parse", rejected_parse},
          {"rejected_reflection", rejected_reflection},
          {"clusters", clusters},
          {"similarity_calls", similarity_calls},
          {"baseline_articles", baseline_articles},
          {"warnings", warnings}};
}

JobResult run_reacts_job(const Job &job, const std::vector<Article> &pool,
                         const Gateway &gateway, const FewShotExamples &few_shot,
                         const RunConfig &cfg, const fs::path &snapshot_path) {
  const TopicQuery &query = job.query;
  const bool reflect = cfg.mode == RunMode::kReacts;
  EventExtractor extractor(gateway, few_shot, cfg.summary, cfg.reflect);
  ClusterEngine engine(gateway, few_shot, cfg.similarity, cfg.retrieval);

  JobResult result;
  std::size_t next = 0;
  std::size_t earlier_similarity_calls = 0;
  const std::string fingerprint = pool_fingerprint(pool);

  if (cfg.resume && fs::exists(snapshot_path)) {
    json snap = read_json(snapshot_path);
    try {
      if (snap.at("pool").get<std::string>() != fingerprint ||
          snap.at("mode").get<std::string>() != mode_name(cfg.mode) ||
          snap.at("file_stem").get<std::string>() != job.file_stem) {
        throw ConfigError("snapshot " + snapshot_path.string() +
                          " was taken with a different pool or mode");
      }
      engine.restore(snap.at("engine"));
      for (const auto &a : snap.at("audit")) {
        result.audit.push_back(audit_entry_from_json(a));
      }
      next = snap.at("next_article").get<std::size_t>();
      earlier_similarity_calls = snap.at("similarity_calls").get<std::size_t>();
    } catch (const json::exception &e) {
      throw DataError("malformed snapshot " + snapshot_path.string() + ": " + e.what());
    }
    if (next > pool.size() || result.audit.size() != next) {
      throw DataError("snapshot " + snapshot_path.string() + " is inconsistent");
    }
  }

  auto save = [&] {
    json snap = {{"file_stem", job.file_stem},
                 {"mode", mode_name(cfg.mode)},
                 {"pool", fingerprint},
                 {"next_article", next},
                 {"similarity_calls", earlier_similarity_calls + engine.llm_calls()},
                 {"engine", engine.snapshot()}};
    json audit = json::array();
    for (const auto &a : result.audit) audit.push_back(to_json(a));
    snap["audit"] = std::move(audit);
    fs::create_directories(snapshot_path.parent_path());
    write_file(snapshot_path, snap.dump());
  };

  const std::size_t window = static_cast<std::size_t>(cfg.window);
  try {
    while (next < pool.size()) {
      const std::size_t boundary = (next / cfg.snapshot_every + 1) * cfg.snapshot_every;
      const std::size_t end = std::min({pool.size(), next + window, boundary});

      std::vector<std::future<EventExtractor::Result>> pending;
      for (std::size_t i = next; i < end; ++i) {
        pending.push_back(std::async(std::launch::async, [&, i] {
          Article article = preprocess_article(pool[i]);
          auto r = extractor.constrained_topic_sum(article, query, i);
          if (reflect && r.summary && !extractor.adhere_to_constraint(*r.summary, query)) {
            r.decision = ExtractionDecision::kRejectedReflection;
            r.detail = r.summary->line();
            r.summary.reset();
          }
          return r;
        }));
      }
      const std::size_t first = next;
      for (std::size_t i = first; i < end; ++i) {
        EventExtractor::Result r = pending[i - first].get();
        if (r.summary) {
          Embedding vector = gateway.embed({r.summary->line()}).front();
          engine.assign(*r.summary, vector, query);
          if (r.detail.empty()) r.detail = r.summary->line();
        }
        result.audit.push_back({pool[i].id, i, r.decision, r.detail});
        next = i + 1;
      }
      if (next % cfg.snapshot_every == 0 && next < pool.size()) save();
    }
  } catch (const GatewayError &) {
    save();
    throw;
  }

  result.timeline = build_timeline(engine.clusters(), engine.summaries(), query);
  result.stats.articles = pool.size();
  for (const auto &a : result.audit) count_decision(result.stats, a.decision);
  result.stats.clusters = engine.clusters().cluster_count();
  result.stats.similarity_calls = earlier_similarity_calls + engine.llm_calls();
  if (result.timeline.events.empty()) {
    result.stats.warnings.push_back("no accepted event summaries; timeline is empty");
  }
  std::error_code ignored;
  fs::remove(snapshot_path, ignored);
  return result;
}

std::size_t estimate_tokens(std::string_view text) {
  return (utf8_length(text) + 3) / 4;
}

BaselinePrompt build_baseline_prompt(const std::vector<Article> &pool,
                                     const TopicQuery &query, std::uint64_t seed,
                                     int context_limit, int max_output_tokens) {
  BaselinePrompt prompt;
  prompt.slots = {{"articles", ""},
                  {"keyword", query.keyword},
                  {"constraint", query.constraint},
                  {"l", std::to_string(query.l)},
                  {"k", std::to_string(query.k)}};
  const auto instruction = static_cast<long long>(
      estimate_tokens(PromptTemplate::get(PromptKind::kBaseline).render(prompt.slots)));
  const long long room = context_limit - instruction - max_output_tokens;
  const auto budget = static_cast<long long>(std::floor(static_cast<double>(room) * 0.9));

  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::string articles;
  long long used = 0;
  for (std::size_t i : order) {
    std::string block = article_content(pool[i]);
    block += kArticleSeparator;
    const auto cost = static_cast<long long>(estimate_tokens(block));
    if (used + cost > budget) break;
    used += cost;
    articles += block;
    prompt.article_ids.push_back(pool[i].id);
  }
  if (prompt.article_ids.empty() && !pool.empty()) {
    throw ConfigError("no article fits the baseline context budget of " +
                      std::to_string(std::max(0LL, budget)) + " estimated tokens");
  }
  prompt.slots["articles"] = std::move(articles);
  return prompt;
}

std::vector<TimelineEvent> parse_baseline_output(std::string_view output, int l) {
  std::vector<TimelineEvent> events;
  std::size_t start = 0;
  while (start <= output.size()) {
    std::size_t nl = output.find('\n', start);
    if (nl == std::string_view::npos) nl = output.size();
    std::string_view line = strip_list_marker(output.substr(start, nl - start));
    start = nl + 1;
    if (line.size() < 11) continue;
    auto date = Date::parse_iso(line.substr(0, 10));
    if (!date) continue;
    std::string_view rest = trim(line.substr(10));
    if (rest.empty() || rest[0] != ':') continue;
    rest = trim(rest.substr(1));
    if (rest.empty()) continue;
    events.push_back({*date, std::string(rest)});
  }
  if (l >= 0 && events.size() > static_cast<std::size_t>(l)) events.resize(l);
  std::stable_sort(events.begin(), events.end(),
                   [](const auto &a, const auto &b) { return a.date < b.date; });
  return events;
}

JobResult run_baseline_job(const Job &job, const std::vector<Article> &pool,
                           const Gateway &gateway, const RunConfig &cfg) {
  JobResult result;
  result.timeline = {job.query.keyword, job.query.constraint, {}};
  result.stats.articles = pool.size();
  if (pool.empty()) {
    result.stats.warnings.push_back("empty pool; timeline is empty");
    return result;
  }
  std::mt19937_64 rng = job_rng(*cfg.seed, job.file_stem);
  BaselinePrompt prompt = build_baseline_prompt(pool, job.query, rng(), cfg.context_limit,
                                                cfg.baseline.max_tokens);
  result.stats.baseline_articles = prompt.article_ids.size();
  for (std::size_t i = 0; i < prompt.article_ids.size(); ++i) {
    result.audit.push_back({prompt.article_ids[i], i, ExtractionDecision::kAccepted,
                            "included in baseline prompt"});
  }
  std::string response = gateway.chat(PromptKind::kBaseline, prompt.slots, cfg.baseline);
  result.timeline.events = parse_baseline_output(response, job.query.l);
  if (result.timeline.events.empty()) {
    result.stats.warnings.push_back("baseline response had no date lines");
  }
  return result;
}

RunSummary run_pipeline(const RunConfig &cfg, const Gateway &gateway,
                        std::function<void(const std::string &)> log) {
  RunSummary summary;
  summary.jobs = plan_jobs(cfg);
  const FewShotExamples few_shot =
      cfg.few_shot.empty() ? FewShotExamples::defaults() : FewShotExamples::load(cfg.few_shot);

  std::map<fs::path, std::vector<Article>> pools;
  for (const auto &job : summary.jobs) {
    if (!pools.count(job.pool)) pools.emplace(job.pool, load_article_pool(job.pool));
  }
  fs::create_directories(cfg.out);

  std::mutex log_mu;
  auto say = [&](const std::string &msg) {
    if (!log) return;
    std::lock_guard<std::mutex> lock(log_mu);
    log(msg);
  };

  const std::size_t n = summary.jobs.size();
  summary.results.resize(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (std::size_t i = cursor++; i < n; i = cursor++) {
      const Job &job = summary.jobs[i];
      try {
        const auto &pool = pools.at(job.pool);
        const fs::path snapshot = cfg.out / ".snapshots" / (job.file_stem + ".json");
        JobResult r = cfg.mode == RunMode::kBaseline
                          ? run_baseline_job(job, pool, gateway, cfg)
                          : run_reacts_job(job, pool, gateway, few_shot, cfg, snapshot);
        write_file(cfg.out / (job.file_stem + ".txt"), timeline_to_text(r.timeline));
        write_file(cfg.out / (job.file_stem + ".json"),
                   timelines_to_json({r.timeline}).dump(2) + "\n");
        std::string audit;
        for (const auto &a : r.audit) audit += to_json(a).dump() + "\n";
        write_file(cfg.out / (job.file_stem + ".audit.jsonl"), audit);
        for (const auto &w : r.stats.warnings) say(job.file_stem + ": warning: " + w);
        say(job.file_stem + ": " + std::to_string(r.timeline.events.size()) +
            " entries from " + std::to_string(r.stats.articles) + " articles");
        summary.results[i] = std::move(r);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool_threads;
    for (std::size_t t = 0; t < threads; ++t) pool_threads.emplace_back(worker);
    for (auto &t : pool_threads) t.join();
  }
  for (const auto &e : errors) {
    if (e) std::rethrow_exception(e);
  }

  json jobs_json = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const Job &job = summary.jobs[i];
    jobs_json.push_back({{"topic", job.query.keyword},
                         {"constraint", job.query.constraint},
                         {"constraint_index", job.constraint_index},
                         {"l", job.query.l},
                         {"k", job.query.k},
                         {"pool", job.pool.string()},
                         {"files",
                          {job.file_stem + ".txt", job.file_stem + ".json",
                           job.file_stem + ".audit.jsonl"}},
                         {"stats", summary.results[i].stats.to_json()}});
  }
  json manifest = {{"config", cfg.to_json()}, {"jobs", std::move(jobs_json)}};
  write_file(cfg.out / "manifest.json", manifest.dump(2) + "\n");
  std::error_code ignored;
  fs::remove(cfg.out / ".snapshots", ignored);
  return summary;
}

std::vector<Timeline> load_predictions(const fs::path &dir) {
  if (!fs::is_directory(dir)) throw ConfigError("prediction directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto &entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const fs::path &p = entry.path();
    if (p.extension() != ".json" || p.filename() == "manifest.json") continue;
    files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  std::vector<Timeline> out;
  for (const auto &p : files) {
    for (auto &t : parse_ground_truth(read_json(p), p.string())) out.push_back(std::move(t));
  }
  return out;
}

EvalReport evaluate_directory(const fs::path &predictions, const fs::path &gold) {
  std::vector<Timeline> pred = load_predictions(predictions);
  if (!fs::exists(gold)) throw ConfigError("ground truth not found: " + gold.string());
  return evaluate_timelines(pred, load_ground_truth(gold));
}

EvalReport load_report(const fs::path &path) {
  if (!fs::exists(path)) throw ConfigError("report not found: " + path.string());
  return EvalReport::from_json(read_json(path));
}

}  // namespace reacts
