#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <thread>

#include "CLI11.hpp"
#include "reacts/app.h"
#include "reacts/error.h"
#include "reacts/gateway.h"
#include "reacts/mock_server.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBackend = 3;
constexpr int kExitMismatch = 4;

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

std::string env_or(const char *name, const std::string &fallback = "") {
  const char *v = std::getenv(name);
  return v ? std::string(v) : fallback;
}

struct RunArgs {
  std::string mode = "reacts";
  std::string pool, gold, topic, constraint, few_shot, out;
  int l = 0, k = 0, n = 20;
  std::uint64_t seed = 0;
  std::string endpoint, embed_endpoint, model = "default", embed_model = "default";
  std::string mock;
  double temperature = 0.0, top_p = 1.0;
  int jobs = 1, window = 8, context_limit = 8192, max_retries = 3;
  int timeout_ms = 120000;
  double sample_fraction = 0.0;
  bool resume = false;
};

int do_run(const RunArgs &a, const CLI::App &cmd) {
  reacts::RunConfig cfg;
  auto mode = reacts::mode_from_name(a.mode);
  if (!mode) throw reacts::ConfigError("unknown mode \"" + a.mode + "\"");
  cfg.mode = *mode;
  cfg.pool = a.pool;
  cfg.gold = a.gold;
  if (cmd.count("--topic")) cfg.topic = a.topic;
  if (cmd.count("--constraint")) cfg.constraint = a.constraint;
  if (cmd.count("--l")) cfg.l = a.l;
  if (cmd.count("--k")) cfg.k = a.k;
  if (cmd.count("--seed")) cfg.seed = a.seed;
  if (cmd.count("--sample-fraction")) cfg.sample_fraction = a.sample_fraction;
  if (a.n < 1) throw reacts::ConfigError("--n must be >= 1");
  cfg.retrieval = reacts::RetrievalLimit(static_cast<std::size_t>(a.n));
  cfg.few_shot = a.few_shot;
  cfg.out = a.out;
  cfg.jobs = a.jobs;
  cfg.window = a.window;
  cfg.context_limit = a.context_limit;
  cfg.resume = a.resume;
  for (reacts::GenerationConfig *g : {&cfg.summary, &cfg.reflect, &cfg.similarity, &cfg.baseline}) {
    g->temperature = a.temperature;
    g->top_p = a.top_p;
    g->model_name = a.model;
    g->max_retries = a.max_retries;
    g->timeout = std::chrono::milliseconds(a.timeout_ms);
  }

  std::shared_ptr<reacts::Backend> chat;
  std::shared_ptr<reacts::Backend> embedder;
  if (!a.mock.empty()) {
    if (!a.endpoint.empty()) throw reacts::ConfigError("--mock and --endpoint are exclusive");
    chat = std::make_shared<reacts::MockBackend>(reacts::MockScript::load(a.mock));
    embedder = chat;
    cfg.backend = "mock";
  } else {
    std::string base = a.endpoint.empty() ? env_or("OPENAI_BASE_URL") : a.endpoint;
    if (base.empty()) {
      throw reacts::ConfigError("no backend: pass --endpoint, --mock or set OPENAI_BASE_URL");
    }
    reacts::HttpBackendOptions opts;
    opts.base_url = base;
    opts.api_key = env_or("REACTS_API_KEY", env_or("OPENAI_API_KEY"));
    opts.embedding_model = a.embed_model;
    opts.max_retries = a.max_retries;
    opts.timeout = std::chrono::milliseconds(a.timeout_ms);
    chat = std::make_shared<reacts::HttpBackend>(opts);
    cfg.backend = "http";
    if (a.embed_endpoint.empty()) {
      embedder = chat;
    } else if (a.embed_endpoint != "hashed") {
      opts.base_url = a.embed_endpoint;
      embedder = std::make_shared<reacts::HttpBackend>(opts);
    }
  }
  if (a.embed_endpoint == "hashed") {
    embedder = std::make_shared<reacts::HashedEmbeddingBackend>();
    cfg.backend += "+hashed-embeddings";
  }
  reacts::Gateway gateway(chat, embedder);
  auto summary = reacts::run_pipeline(cfg, gateway, [](const std::string &msg) {
    std::cerr << msg << "\n";
  });
  std::cout << "wrote " << summary.results.size() << " timeline(s) to " << a.out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Constrained timeline summarization over an LLM backend"};
  app.require_subcommand(1);

  RunArgs run;
  auto *run_cmd = app.add_subcommand("run", "summarize article pools into timelines");
  run_cmd->add_option("--mode", run.mode, "reacts, reacts_no_sr or baseline")
      ->check(CLI::IsMember({"reacts", "reacts_no_sr", "baseline"}));
  run_cmd->add_option("--pool", run.pool, "JSONL pool, or a directory of <topic-slug>.jsonl")
      ->required();
  run_cmd->add_option("--gold", run.gold, "reference timelines (file or directory)");
  run_cmd->add_option("--topic", run.topic, "only this topic");
  run_cmd->add_option("--constraint", run.constraint, "constraint index or exact text");
  run_cmd->add_option("--l", run.l, "timeline length (default: from the reference)");
  run_cmd->add_option("--k", run.k, "sentences per date (default: from the reference)");
  run_cmd->add_option("--n", run.n, "neighbours retrieved per summary")->capture_default_str();
  run_cmd->add_option("--few-shot", run.few_shot, "few-shot example file");
  run_cmd->add_option("--seed", run.seed, "seed for sampling");
  run_cmd->add_option("--endpoint", run.endpoint, "OpenAI-compatible base URL, e.g. http://host:8000/v1");
  run_cmd->add_option("--embed-endpoint", run.embed_endpoint,
                      "base URL for embeddings, or \"hashed\" for the built-in embedder");
  run_cmd->add_option("--model", run.model, "chat model name")->capture_default_str();
  run_cmd->add_option("--embed-model", run.embed_model, "embedding model name")
      ->capture_default_str();
  run_cmd->add_option("--mock", run.mock, "serve responses from a mock script in-process");
  run_cmd->add_option("--temperature", run.temperature)->capture_default_str();
  run_cmd->add_option("--top-p", run.top_p)->capture_default_str();
  run_cmd->add_option("--max-retries", run.max_retries)->capture_default_str();
  run_cmd->add_option("--timeout-ms", run.timeout_ms)->capture_default_str();
  run_cmd->add_option("--jobs", run.jobs, "timelines run concurrently")->capture_default_str();
  run_cmd->add_option("--window", run.window, "articles summarized ahead of clustering")
      ->capture_default_str();
  run_cmd->add_option("--context-limit", run.context_limit, "baseline context size in tokens")
      ->capture_default_str();
  run_cmd->add_option("--sample-fraction", run.sample_fraction,
                      "run a seeded fraction of the selected timelines");
  run_cmd->add_flag("--resume", run.resume, "continue from snapshots in --out");
  run_cmd->add_option("--out", run.out, "output directory")->required();

  std::string pred, gold_path, report_out;
  auto *eval_cmd = app.add_subcommand("evaluate", "score predictions against references");
  eval_cmd->add_option("--pred", pred, "prediction directory")->required();
  eval_cmd->add_option("--gold", gold_path, "reference timelines")->required();
  eval_cmd->add_option("--out", report_out, "write the JSON report here");

  std::string report_a, report_b, metric = "ar1_f1", sig_out;
  std::uint64_t trials = 100, sig_seed = 0;
  double alpha = 0.05;
  auto *sig_cmd = app.add_subcommand("significance", "approximate randomization test");
  sig_cmd->add_option("--a", report_a, "report of system A")->required();
  sig_cmd->add_option("--b", report_b, "report of system B")->required();
  sig_cmd->add_option("--metric", metric, "ar1|ar2|date with _p, _r or _f1")
      ->capture_default_str();
  sig_cmd->add_option("--trials", trials)->capture_default_str();
  sig_cmd->add_option("--alpha", alpha)->capture_default_str();
  sig_cmd->add_option("--seed", sig_seed)->required();
  sig_cmd->add_option("--out", sig_out, "also write the JSON result here");

  std::string script, host = "127.0.0.1", port_file;
  int port = 8080;
  auto *mock_cmd = app.add_subcommand("mock-serve", "serve a mock script over HTTP");
  mock_cmd->add_option("--script", script, "mock script JSON")->required();
  mock_cmd->add_option("--host", host)->capture_default_str();
  mock_cmd->add_option("--port", port, "0 picks a free port")->capture_default_str();
  mock_cmd->add_option("--port-file", port_file, "write the bound port here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) return do_run(run, *run_cmd);
    if (*eval_cmd) {
      reacts::EvalReport report = reacts::evaluate_directory(pred, gold_path);
      if (!report_out.empty()) {
        std::ofstream out(report_out);
        if (!out) throw reacts::ConfigError("cannot write " + report_out);
        out << report.to_json().dump(2) << "\n";
      }
      std::cout << report.table();
      return kExitOk;
    }
    if (*sig_cmd) {
      reacts::RandomizationOptions opts;
      opts.trials = trials;
      opts.alpha = alpha;
      opts.seed = sig_seed;
      if (trials < 1) throw reacts::ConfigError("--trials must be >= 1");
      auto result = reacts::compare_reports(reacts::load_report(report_a),
                                            reacts::load_report(report_b), metric, opts);
      const std::string text = result.to_json().dump(2) + "\n";
      if (!sig_out.empty()) {
        std::ofstream out(sig_out);
        if (!out) throw reacts::ConfigError("cannot write " + sig_out);
        out << text;
      }
      std::cout << text;
      return kExitOk;
    }
    if (*mock_cmd) {
      auto backend = std::make_shared<reacts::MockBackend>(reacts::MockScript::load(script));
      reacts::MockServer server(backend);
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      int bound = server.start(host, port);
      if (!port_file.empty()) {
        std::ofstream(port_file) << bound << "\n";
      }
      std::cout << "listening on http://" << host << ":" << bound << "/v1" << std::endl;
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
      server.stop();
      return kExitOk;
    }
  } catch (const reacts::GatewayError &e) {
    std::cerr << "backend failure: " << e.what() << "\n";
    return kExitBackend;
  } catch (const reacts::EvaluationMismatch &e) {
    std::cerr << "evaluation mismatch: " << e.what() << "\n";
    return kExitMismatch;
  } catch (const reacts::Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
