#include <chrono>
#include <cmath>
#include <set>

#include "doctest.h"
#include "reacts/error.h"
#include "reacts/gateway.h"
#include "reacts/mock_server.h"
#include "reacts/prompts.h"
#include "reacts/text.h"
#include "test_util.h"

using namespace reacts;

namespace {

Slots placeholder_slots(PromptKind kind) {
  Slots slots;
  for (const auto &name : PromptTemplate::get(kind).slots()) {
    slots[name] = "[[" + name + "]]";
  }
  return slots;
}

double cosine(const Embedding &a, const Embedding &b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::sqrt(na * nb);
}

}  // namespace

TEST_SUITE("prompts") {
  TEST_CASE("rendered templates match the golden files") {
    for (PromptKind kind : {PromptKind::kSummary, PromptKind::kSelfReflect,
                            PromptKind::kSimilarity, PromptKind::kBaseline}) {
      CAPTURE(prompt_name(kind));
      const std::string golden = testing::read_file(
          testing::data_dir() / "prompts" / (std::string(prompt_name(kind)) + ".txt"));
      CHECK(PromptTemplate::get(kind).render(placeholder_slots(kind)) == golden);
    }
  }

  TEST_CASE("slot inventory") {
    using V = std::vector<std::string>;
    CHECK(PromptTemplate::get(PromptKind::kSummary).slots() ==
          V{"example_article", "keyword", "constraint", "content"});
    CHECK(PromptTemplate::get(PromptKind::kSelfReflect).slots() ==
          V{"keyword", "positive_example", "negative_example", "event", "constraint"});
    CHECK(PromptTemplate::get(PromptKind::kSimilarity).slots() ==
          V{"example_1", "example_2", "example_3", "keyword", "event1", "event2"});
    CHECK(PromptTemplate::get(PromptKind::kBaseline).slots() ==
          V{"articles", "keyword", "l", "k", "constraint"});
  }

  TEST_CASE("missing and unknown slots are template errors") {
    Slots slots = placeholder_slots(PromptKind::kSimilarity);
    slots.erase("event2");
    CHECK_THROWS_AS(PromptTemplate::get(PromptKind::kSimilarity).render(slots), TemplateError);
    slots = placeholder_slots(PromptKind::kSimilarity);
    slots["evnt2"] = "typo";
    CHECK_THROWS_AS(PromptTemplate::get(PromptKind::kSimilarity).render(slots), TemplateError);
  }

  TEST_CASE("slot values are inserted verbatim") {
    Slots slots = placeholder_slots(PromptKind::kSelfReflect);
    slots["event"] = "2022-09-06: {keyword} stays literal";
    const std::string out = PromptTemplate::get(PromptKind::kSelfReflect).render(slots);
    CHECK(out.find("2022-09-06: {keyword} stays literal\n") != std::string::npos);
  }

  TEST_CASE("prompt names round-trip") {
    for (PromptKind kind : {PromptKind::kSummary, PromptKind::kSelfReflect,
                            PromptKind::kSimilarity, PromptKind::kBaseline}) {
      CHECK(prompt_kind_from_name(prompt_name(kind)) == kind);
    }
    CHECK_FALSE(prompt_kind_from_name("summaries"));
  }

  TEST_CASE("few-shot files") {
    testing::TempDir dir("fewshot");
    testing::write_text(dir / "ok.json", R"({
      "summary_example_article": "ARTICLE",
      "self_reflect": {"positive": "POS", "negative": "NEG"},
      "similarity": ["S1", "S2", "S3"]})");
    auto ex = FewShotExamples::load(dir / "ok.json");
    CHECK(ex.summary_example_article == "ARTICLE");
    CHECK(ex.negative_example == "NEG");
    CHECK(ex.similarity_examples[2] == "S3");
    testing::write_text(dir / "short.json", R"({
      "summary_example_article": "A", "self_reflect": {"positive": "P", "negative": "N"},
      "similarity": ["S1"]})");
    CHECK_THROWS_AS(FewShotExamples::load(dir / "short.json"), DataError);
    CHECK_THROWS_AS(FewShotExamples::load(dir / "absent.json"), DataError);
    auto defaults = FewShotExamples::defaults();
    CHECK_FALSE(defaults.summary_example_article.empty());
    for (const auto &s : defaults.similarity_examples) CHECK_FALSE(s.empty());
  }
}

TEST_SUITE("gateway") {
  TEST_CASE("generation defaults") {
    CHECK(GenerationConfig::defaults_for(PromptKind::kSummary).max_tokens == 256);
    CHECK(GenerationConfig::defaults_for(PromptKind::kSelfReflect).max_tokens == 256);
    CHECK(GenerationConfig::defaults_for(PromptKind::kSimilarity).max_tokens == 2);
    GenerationConfig cfg;
    CHECK(cfg.temperature == 0.0);
    CHECK(cfg.top_p == 1.0);
    CHECK_NOTHROW(cfg.validate());
    cfg.top_p = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.temperature = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.max_tokens = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  TEST_CASE("fingerprints depend on template and every slot") {
    Slots a = {{"keyword", "Stephen King"}, {"event", "x"}};
    Slots b = a;
    b["event"] = "y";
    const std::string fa = request_fingerprint(PromptKind::kSelfReflect, a);
    CHECK(fa.rfind("self_reflect:", 0) == 0);
    CHECK(fa.size() == std::string("self_reflect:").size() + 16);
    CHECK(fa == request_fingerprint(PromptKind::kSelfReflect, a));
    CHECK(fa != request_fingerprint(PromptKind::kSelfReflect, b));
    CHECK(fa != request_fingerprint(PromptKind::kSimilarity, a));
    // Boundaries between key and value matter.
    CHECK(request_fingerprint(PromptKind::kSummary, {{"ab", "c"}}) !=
          request_fingerprint(PromptKind::kSummary, {{"a", "bc"}}));
  }

  TEST_CASE("mock lookup order: responder, fingerprint, template default, fallback") {
    FewShotExamples ex = FewShotExamples::defaults();
    Slots slots = {{"example_article", ex.summary_example_article},
                   {"keyword", "Stephen King"},
                   {"constraint", "Focus on Stephen King's book releases."},
                   {"content", ex.summary_example_article}};
    MockScript script;
    script.responses[request_fingerprint(PromptKind::kSummary, slots)] = "None.  \n";
    script.template_defaults["similarity"] = "no";
    auto backend = std::make_shared<MockBackend>(script);
    Gateway gateway(backend);
    GenerationConfig cfg = GenerationConfig::defaults_for(PromptKind::kSummary);
    CHECK(gateway.chat(PromptKind::kSummary, slots, cfg) == "None.");

    Slots sim = {{"example_1", "a"}, {"example_2", "b"}, {"example_3", "c"},
                 {"keyword", "k"}, {"event1", "e1"}, {"event2", "e2"}};
    CHECK(gateway.chat(PromptKind::kSimilarity, sim,
                       GenerationConfig::defaults_for(PromptKind::kSimilarity)) == "no");
    slots["constraint"] = "something else";
    CHECK_THROWS_AS(gateway.chat(PromptKind::kSummary, slots, cfg), GatewayError);

    auto with_responder = std::make_shared<MockBackend>(
        script, [](const ChatRequest &r) -> std::optional<std::string> {
          if (r.kind == PromptKind::kSimilarity) return "yes, same";
          return std::nullopt;
        });
    Gateway g2(with_responder);
    CHECK(g2.chat(PromptKind::kSimilarity, sim,
                  GenerationConfig::defaults_for(PromptKind::kSimilarity)) == "yes, same");
    CHECK(with_responder->call_count(PromptKind::kSimilarity) == 1);
    CHECK(with_responder->calls().at(0).max_tokens == 2);

    MockScript echo;
    echo.fallback = MockScript::Fallback::kEcho;
    Gateway g3(std::make_shared<MockBackend>(echo));
    CHECK(g3.chat(PromptKind::kSimilarity, sim, cfg) ==
          std::string(trim_right(PromptTemplate::get(PromptKind::kSimilarity).render(sim))));
  }

  TEST_CASE("mock scripts round-trip through JSON") {
    MockScript script;
    script.responses["summary:0123456789abcdef"] = "2021-06-04: Something.";
    script.template_defaults["self_reflect"] = "Yes";
    script.fallback = MockScript::Fallback::kEcho;
    MockScript back = MockScript::from_json(script.to_json());
    CHECK(back.responses == script.responses);
    CHECK(back.template_defaults == script.template_defaults);
    CHECK(back.fallback == MockScript::Fallback::kEcho);
    CHECK_THROWS_AS(MockScript::from_json(R"({"fallback": "guess"})"), DataError);
    CHECK_THROWS_AS(MockScript::from_json(R"({"template_defaults": {"summry": "x"}})"), DataError);
    CHECK_THROWS_AS(MockScript::from_json("not json"), DataError);
  }

  TEST_CASE("hashed embeddings") {
    Gateway gateway(std::make_shared<MockBackend>());
    auto v = gateway.embed({"a", "a"});
    REQUIRE(v.size() == 2);
    CHECK(v[0] == v[1]);
    CHECK(v[0].size() == kMockEmbeddingDimension);
    CHECK_THROWS_AS(gateway.embed({}), GatewayError);

    // Disjoint vocabularies land in disjoint buckets for this fixture.
    auto w = gateway.embed({"novel published fairy", "television streaming premiere"});
    std::set<std::size_t> b0, b1;
    for (std::size_t i = 0; i < w[0].size(); ++i) {
      if (w[0][i] != 0) b0.insert(i);
      if (w[1][i] != 0) b1.insert(i);
    }
    CHECK(b0.size() == 3);
    CHECK(b1.size() == 3);
    bool overlap = false;
    for (auto i : b0) overlap = overlap || b1.count(i);
    CHECK_FALSE(overlap);
    CHECK(cosine(w[0], w[1]) == doctest::Approx(0.0));
    double norm = 0;
    for (float x : w[0]) norm += x * x;
    CHECK(norm == doctest::Approx(1.0));
    auto empty = hashed_bow_embedding("!!!", 8);
    CHECK(empty == Embedding(8, 0.0f));
  }

  TEST_CASE("embedding shape checks") {
    class Broken : public Backend {
     public:
      std::string complete(const ChatRequest &) override { return ""; }
      std::vector<Embedding> embed(const std::vector<std::string> &texts) override {
        std::vector<Embedding> out;
        for (std::size_t i = 0; i < texts.size(); ++i) out.push_back(Embedding(i + 1, 1.0f));
        return out;
      }
    };
    Gateway gateway(std::make_shared<Broken>());
    CHECK_NOTHROW(gateway.embed({"one"}));
    CHECK_THROWS_AS(gateway.embed({"one", "two"}), GatewayError);
  }

  TEST_CASE("hashed embedding backend refuses chat") {
    Gateway gateway(std::make_shared<MockBackend>(), std::make_shared<HashedEmbeddingBackend>());
    CHECK(gateway.embed({"x"}).front().size() == kMockEmbeddingDimension);
    HashedEmbeddingBackend only;
    CHECK_THROWS_AS(only.complete({}), GatewayError);
  }
}

TEST_SUITE("http") {
  TEST_CASE("chat and embeddings over the wire") {
    MockScript script;
    script.template_defaults["similarity"] = "yes";
    script.template_defaults["summary"] = "2021-06-04: Premiere.";
    auto backend = std::make_shared<MockBackend>(script);
    MockServer server(backend);
    const int port = server.start();
    HttpBackendOptions opts;
    opts.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    opts.api_key = "secret";
    auto http = std::make_shared<HttpBackend>(opts);
    Gateway gateway(http);

    Slots sim = {{"example_1", "a"}, {"example_2", "b"}, {"example_3", "c"},
                 {"keyword", "k"}, {"event1", "e1"}, {"event2", "e2"}};
    GenerationConfig cfg = GenerationConfig::defaults_for(PromptKind::kSimilarity);
    CHECK(gateway.chat(PromptKind::kSimilarity, sim, cfg) == "yes");

    auto bodies = server.received();
    REQUIRE(bodies.size() == 1);
    CHECK(bodies[0]["max_tokens"] == 2);
    CHECK(bodies[0]["temperature"] == 0.0);
    CHECK(bodies[0]["top_p"] == 1.0);
    CHECK(bodies[0]["model"] == "default");
    CHECK(bodies[0]["messages"][0]["role"] == "user");
    CHECK(bodies[0]["messages"][0]["content"] ==
          PromptTemplate::get(PromptKind::kSimilarity).render(sim));
    CHECK(backend->calls().back().fingerprint == request_fingerprint(PromptKind::kSimilarity, sim));

    auto vectors = gateway.embed({"alpha beta", "gamma", "alpha beta"});
    REQUIRE(vectors.size() == 3);
    CHECK(vectors[0] == vectors[2]);
    CHECK(vectors[0] == hashed_bow_embedding("alpha beta", kMockEmbeddingDimension));
    server.stop();
  }

  TEST_CASE("non-2xx responses carry the status and are not retried") {
    auto backend = std::make_shared<MockBackend>(MockScript{{}, {{"summary", "None."}}, {}});
    MockServer server(backend);
    const int port = server.start();
    HttpBackendOptions opts;
    opts.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    Gateway gateway(std::make_shared<HttpBackend>(opts));
    Slots slots = {{"example_article", "x"}, {"keyword", "k"}, {"constraint", "c"}, {"content", "y"}};
    GenerationConfig cfg;
    cfg.max_retries = 3;
    server.fail_next(1, 503);
    try {
      gateway.chat(PromptKind::kSummary, slots, cfg);
      FAIL("expected GatewayError");
    } catch (const GatewayError &e) {
      CHECK(e.status() == 503);
    }
    CHECK(server.received().size() == 1);
    CHECK(gateway.chat(PromptKind::kSummary, slots, cfg) == "None.");

    Slots sim = {{"example_1", "a"}, {"example_2", "b"}, {"example_3", "c"},
                 {"keyword", "k"}, {"event1", "e1"}, {"event2", "e2"}};
    try {
      gateway.chat(PromptKind::kSimilarity, sim, cfg);
      FAIL("expected GatewayError");
    } catch (const GatewayError &e) {
      CHECK(e.status() == 404);
    }
  }

  TEST_CASE("transport failures are retried with backoff") {
    int port = 0;
    {
      MockServer probe(std::make_shared<MockBackend>());
      port = probe.start();
      probe.stop();
    }
    HttpBackendOptions opts;
    opts.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    Gateway gateway(std::make_shared<HttpBackend>(opts));
    GenerationConfig cfg;
    cfg.max_retries = 2;
    cfg.backoff = std::chrono::milliseconds(20);
    cfg.timeout = std::chrono::milliseconds(500);
    Slots slots = {{"example_article", "x"}, {"keyword", "k"}, {"constraint", "c"}, {"content", "y"}};
    const auto start = std::chrono::steady_clock::now();
    try {
      gateway.chat(PromptKind::kSummary, slots, cfg);
      FAIL("expected GatewayError");
    } catch (const GatewayError &e) {
      CHECK(e.status() == 0);
      CHECK(std::string(e.what()).find("3 attempt") != std::string::npos);
    }
    // 20 ms + 40 ms of backoff between the three attempts.
    CHECK(std::chrono::steady_clock::now() - start >= std::chrono::milliseconds(60));
  }

  TEST_CASE("bad base URLs are configuration errors") {
    HttpBackendOptions opts;
    CHECK_THROWS_AS(HttpBackend{opts}, ConfigError);
    opts.base_url = "localhost:8000";
    CHECK_THROWS_AS(HttpBackend{opts}, ConfigError);
  }
}
