#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "reacts/cluster.h"
#include "reacts/error.h"
#include "reacts/extractor.h"
#include "reacts/gateway.h"
#include "reacts/timeline.h"
#include "test_util.h"

using namespace reacts;

namespace {

const TopicQuery kQuery{"Stephen King", "Focus on Stephen King's book releases.", 3, 1};

EventSummary summary(std::size_t index, const std::string &date, const std::string &text) {
  return EventSummary{testing::day(date), text, "a" + std::to_string(index),
                      kQuery.keyword,     kQuery.constraint, index};
}

// Answers the similarity prompt "yes" when the unordered pair of
// descriptions is listed.
MockBackend::Responder pair_oracle(std::set<std::pair<std::string, std::string>> pairs) {
  return [pairs](const ChatRequest &r) -> std::optional<std::string> {
    if (r.kind != PromptKind::kSimilarity) return std::nullopt;
    auto text = [](const std::string &line) { return line.substr(12); };
    std::string a = text(r.slots.at("event1")), b = text(r.slots.at("event2"));
    if (a == b || pairs.count({a, b}) || pairs.count({b, a})) return "Yes";
    return "No";
  };
}

Embedding vec(std::initializer_list<float> v) { return Embedding(v); }

// Independent TextRank fixed point: solves (I - d P^T) s = (1 - d) 1 by
// Gaussian elimination, with P the row-normalized weight matrix.
std::vector<double> textrank_fixed_point(const std::vector<std::vector<double>> &w, double d) {
  const std::size_t n = w.size();
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    a[i][i] = 1.0;
    a[i][n] = 1.0 - d;
    for (std::size_t j = 0; j < n; ++j) {
      double out = 0;
      for (double x : w[j]) out += x;
      if (out > 0) a[i][j] -= d * w[j][i] / out;
    }
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    }
    std::swap(a[c], a[p]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k <= n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = a[i][n] / a[i][i];
  return s;
}

}  // namespace

TEST_SUITE("extractor") {
  TEST_CASE("null markers") {
    for (const char *s : {"NULL", "None", "None.", "  none  ", "null.", "\n\nNone.\n"}) {
      CAPTURE(s);
      CHECK(parse_summary_output(s).kind == SummaryParse::Kind::kNull);
    }
    CHECK(parse_summary_output("Nones").kind == SummaryParse::Kind::kRejected);
  }

  TEST_CASE("date lines") {
    auto p = parse_summary_output("2021-06-04: The miniseries premieres on Apple TV+.");
    REQUIRE(p.kind == SummaryParse::Kind::kEvent);
    CHECK(p.date == testing::day("2021-06-04"));
    CHECK(p.description == "The miniseries premieres on Apple TV+.");

    p = parse_summary_output("Related Event Summary:\n2020-01-02 : (2020-01-02) First.\n2020-01-03: Second.");
    REQUIRE(p.kind == SummaryParse::Kind::kEvent);
    CHECK(p.date == testing::day("2020-01-02"));
    CHECK(p.description == "First.");
    CHECK(p.detail.find("1 extra") != std::string::npos);

    p = parse_summary_output("2020-01-02: 2020-01-02: Doubled label.");
    CHECK(p.description == "Doubled label.");
  }

  TEST_CASE("rejections") {
    CHECK(parse_summary_output("banana").kind == SummaryParse::Kind::kRejected);
    CHECK(parse_summary_output("").kind == SummaryParse::Kind::kRejected);
    CHECK(parse_summary_output("2021-02-30: Impossible day.").kind == SummaryParse::Kind::kRejected);
    CHECK(parse_summary_output("2021-02-03:   ").kind == SummaryParse::Kind::kRejected);
    CHECK(parse_summary_output("2021-2-3: Short date.").kind == SummaryParse::Kind::kRejected);
  }

  TEST_CASE("yes answers") {
    CHECK(parse_yes("Yes"));
    CHECK(parse_yes("  yes, it does"));
    CHECK(parse_yes("YES."));
    CHECK_FALSE(parse_yes("No, because the event is unrelated."));
    CHECK_FALSE(parse_yes("Possibly"));
    CHECK_FALSE(parse_yes(""));
    CHECK_FALSE(parse_yes("The answer is yes"));
  }

  TEST_CASE("article preprocessing and content") {
    Article a{"x", testing::day("2024-08-14"), "Title", "The show aired last Friday. Nothing else."};
    Article p = preprocess_article(a);
    CHECK(p.body == "(2024-08-09) The show aired last Friday. Nothing else.");
    CHECK(p.title == a.title);
    CHECK(article_content(p) ==
          "Published: 2024-08-14\nTitle\n(2024-08-09) The show aired last Friday. Nothing else.");
    a.title.clear();
    CHECK(article_content(a) == "Published: 2024-08-14\nThe show aired last Friday. Nothing else.");
  }

  TEST_CASE("summary decisions follow the scripted output") {
    FewShotExamples ex = FewShotExamples::defaults();
    Article article{"lisey", testing::day("2021-06-04"), "Lisey's Story",
                    "Apple TV+ premieres the miniseries today."};
    Article pre = preprocess_article(article);
    TopicQuery tv{"Stephen King",
                  "Focus on Stephen King's involvement in television and streaming projects.", 1, 1};
    const std::string line =
        "2021-06-04: The miniseries \xE2\x80\x9CLisey\xE2\x80\x99s Story,\xE2\x80\x9D adapted by King "
        "and based on his 2006 novel of the same name, premieres on Apple TV+.";
    auto responder = [&](const ChatRequest &r) -> std::optional<std::string> {
      if (r.kind == PromptKind::kSummary) {
        if (r.slots.at("constraint") == kQuery.constraint) return "None.";
        if (r.slots.at("constraint") == tv.constraint) return line;
        return "banana";
      }
      if (r.kind == PromptKind::kSelfReflect) return "Possibly";
      return std::nullopt;
    };
    auto backend = std::make_shared<MockBackend>(MockScript{}, responder);
    Gateway gateway(backend);
    EventExtractor extractor(gateway, ex);

    auto none = extractor.constrained_topic_sum(pre, kQuery, 0);
    CHECK_FALSE(none.summary);
    CHECK(none.decision == ExtractionDecision::kNull);

    auto hit = extractor.constrained_topic_sum(pre, tv, 4);
    REQUIRE(hit.summary);
    CHECK(hit.decision == ExtractionDecision::kAccepted);
    CHECK(hit.summary->line() == line);
    CHECK(hit.summary->arrival_index == 4);
    CHECK(hit.summary->source_article_id == "lisey");
    CHECK_FALSE(extractor.adhere_to_constraint(*hit.summary, tv));

    TopicQuery other{"Stephen King", "Focus on something else.", 1, 1};
    auto bad = extractor.constrained_topic_sum(pre, other, 1);
    CHECK_FALSE(bad.summary);
    CHECK(bad.decision == ExtractionDecision::kRejectedParse);
    CHECK_FALSE(bad.detail.empty());
  }

  TEST_CASE("summaries and audit entries round-trip") {
    EventSummary s = summary(3, "2022-09-06", "Fairy Tale is published.");
    CHECK(event_summary_from_json(to_json(s)) == s);
    AuditEntry e{"a3", 3, ExtractionDecision::kRejectedReflection, "off constraint"};
    AuditEntry back = audit_entry_from_json(to_json(e));
    CHECK(back.decision == e.decision);
    CHECK(back.detail == e.detail);
    CHECK_THROWS_AS(audit_entry_from_json({{"article_id", "x"}, {"arrival_index", 0},
                                           {"decision", "maybe"}}),
                    DataError);
  }
}

TEST_SUITE("cluster") {
  TEST_CASE("retrieval") {
    VectorStore store;
    CHECK(store.retrieve(std::vector<float>{1, 0}, RetrievalLimit(2)).empty());
    store.insert(1, vec({1, 0}));
    store.insert(2, vec({0, 1}));
    auto r = store.retrieve(std::vector<float>{1, 0}, RetrievalLimit(2));
    REQUIRE(r.size() == 2);
    CHECK(r[0].id == 1);
    CHECK(r[0].similarity == doctest::Approx(1.0));
    CHECK(r[1].id == 2);
    CHECK(r[1].similarity == doctest::Approx(0.0));
    CHECK_THROWS_AS(store.retrieve(std::vector<float>{1, 0, 0}, RetrievalLimit(2)),
                    std::invalid_argument);
    CHECK_THROWS_AS(store.insert(3, vec({1, 0, 0})), std::invalid_argument);
    CHECK_THROWS_AS(store.insert(1, vec({1, 1})), std::invalid_argument);
    CHECK_THROWS_AS(RetrievalLimit(0), std::invalid_argument);
  }

  TEST_CASE("retrieval caps at n and breaks ties by id") {
    VectorStore store;
    for (SummaryId id = 0; id < 25; ++id) store.insert(24 - id, vec({1, 1}));
    auto r = store.retrieve(std::vector<float>{2, 2}, RetrievalLimit{});
    REQUIRE(r.size() == 20);
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(r[i].id == i);
  }

  TEST_CASE("date gate skips the model") {
    auto backend = std::make_shared<MockBackend>(MockScript{}, pair_oracle({}));
    Gateway gateway(backend);
    ClusterEngine engine(gateway, FewShotExamples::defaults());
    EventSummary a = summary(0, "2020-01-01", "Same text.");
    EventSummary b = summary(1, "2020-01-02", "Same text.");
    CHECK_FALSE(engine.same_event(a, b, kQuery));
    CHECK(backend->call_count(PromptKind::kSimilarity) == 0);
    CHECK(engine.same_event(a, a, kQuery));
    CHECK_FALSE(engine.same_event(a, summary(2, "2020-01-01", "Other."), kQuery));
    CHECK(backend->call_count(PromptKind::kSimilarity) == 2);
    CHECK(engine.llm_calls() == 2);
  }

  TEST_CASE("first summary forms a singleton") {
    Gateway gateway(std::make_shared<MockBackend>());
    ClusterEngine engine(gateway, FewShotExamples::defaults());
    SummaryId root = engine.assign(summary(0, "2020-01-01", "A."), vec({1, 0}), kQuery);
    CHECK(root == 0);
    CHECK(engine.clusters().size(root) == 1);
    CHECK(engine.llm_calls() == 0);
  }

  TEST_CASE("matches are transitive") {
    Gateway gateway(std::make_shared<MockBackend>(MockScript{}, pair_oracle({{"E1", "E2"}, {"E2", "E3"}})));
    ClusterEngine engine(gateway, FewShotExamples::defaults());
    // E3 is closest to E1, which it does not match, then to E2, which it does.
    engine.assign(summary(1, "2020-01-01", "E1"), vec({1, 0}), kQuery);
    engine.assign(summary(2, "2020-01-01", "E2"), vec({0, 1}), kQuery);
    SummaryId root = engine.assign(summary(3, "2020-01-01", "E3"), vec({1, 0.2f}), kQuery);
    CHECK(engine.clusters().cluster_count() == 1);
    CHECK(engine.clusters().size(root) == 3);
    CHECK(engine.clusters().members(root) == std::vector<SummaryId>{1, 2, 3});
    CHECK(engine.clusters().creation_index(root) == 1);
  }

  TEST_CASE("first match in similarity order wins") {
    std::set<std::pair<std::string, std::string>> pairs = {{"Q", "C"}, {"Q", "D"}};
    auto backend = std::make_shared<MockBackend>(MockScript{}, pair_oracle(pairs));
    Gateway gateway(backend);
    ClusterEngine engine(gateway, FewShotExamples::defaults());
    engine.assign(summary(0, "2020-01-01", "A"), vec({1, 0, 0, 0}), kQuery);
    engine.assign(summary(1, "2020-01-01", "B"), vec({0, 1, 0, 0}), kQuery);
    engine.assign(summary(2, "2020-01-01", "C"), vec({0, 0, 1, 0}), kQuery);
    engine.assign(summary(3, "2020-01-01", "D"), vec({0, 0, 0, 1}), kQuery);
    CHECK(engine.clusters().cluster_count() == 4);
    backend->clear_calls();
    // Ranks: A, B, C, D.
    SummaryId root = engine.assign(summary(4, "2020-01-01", "Q"), vec({0.8f, 0.6f, 0.4f, 0.2f}), kQuery);
    CHECK(root == engine.clusters().find(2));
    CHECK(engine.clusters().find(3) == 3);
    CHECK(backend->call_count(PromptKind::kSimilarity) == 3);
  }

  TEST_CASE("gateway failures leave the engine untouched") {
    MockScript script;  // no similarity answers: every check fails
    Gateway gateway(std::make_shared<MockBackend>(script));
    ClusterEngine engine(gateway, FewShotExamples::defaults());
    engine.assign(summary(0, "2020-01-01", "A"), vec({1, 0}), kQuery);
    const auto before = engine.snapshot();
    CHECK_THROWS_AS(engine.assign(summary(1, "2020-01-01", "B"), vec({1, 0}), kQuery), GatewayError);
    CHECK(engine.snapshot() == before);
    CHECK(engine.store().size() == 1);
    // A different date never reaches the model.
    CHECK_NOTHROW(engine.assign(summary(1, "2020-01-02", "B"), vec({1, 0}), kQuery));
    CHECK_THROWS_AS(engine.assign(summary(1, "2020-01-03", "C"), vec({1, 0}), kQuery),
                    std::invalid_argument);
  }

  TEST_CASE("snapshots restore the full state") {
    Gateway gateway(std::make_shared<MockBackend>(MockScript{}, pair_oracle({{"A", "B"}})));
    ClusterEngine a(gateway, FewShotExamples::defaults());
    a.assign(summary(0, "2020-01-01", "A"), vec({1, 0}), kQuery);
    a.assign(summary(1, "2020-01-01", "B"), vec({1, 1}), kQuery);
    a.assign(summary(2, "2020-01-05", "C"), vec({0, 1}), kQuery);
    ClusterEngine b(gateway, FewShotExamples::defaults());
    b.restore(nlohmann::json::parse(a.snapshot().dump()));
    CHECK(b.snapshot() == a.snapshot());
    CHECK(b.summaries() == a.summaries());
    SummaryId ra = a.assign(summary(3, "2020-01-01", "B"), vec({1, 1}), kQuery);
    SummaryId rb = b.assign(summary(3, "2020-01-01", "B"), vec({1, 1}), kQuery);
    CHECK(ra == rb);
    CHECK(a.snapshot() == b.snapshot());

    auto broken = a.snapshot();
    broken["summaries"][0]["date"] = "2021-01-01";
    ClusterEngine c(gateway, FewShotExamples::defaults());
    CHECK_THROWS_AS(c.restore(broken), DataError);
    CHECK_THROWS_AS(c.restore(nlohmann::json::object()), DataError);
  }

  TEST_CASE("cluster set invariants") {
    ClusterSet set;
    std::map<SummaryId, Date> dates;
    for (SummaryId id = 0; id < 6; ++id) {
      dates[id] = testing::day(id < 4 ? "2020-01-01" : "2020-02-01");
      set.add(id, dates[id]);
    }
    set.unite(3, 1);
    set.unite(0, 3);
    set.unite(5, 4);
    CHECK_THROWS_AS(set.unite(0, 4), std::logic_error);
    CHECK_NOTHROW(set.check_invariants(dates));
    CHECK(set.roots().size() == 3);
    CHECK(set.members(set.find(3)) == std::vector<SummaryId>{0, 1, 3});
    CHECK(set.creation_index(set.find(5)) == 4);
    CHECK(ClusterSet::from_json(set.to_json()).to_json() == set.to_json());
    dates[5] = testing::day("2020-03-01");
    CHECK_THROWS_AS(set.check_invariants(dates), std::logic_error);
  }

  TEST_CASE("random streams keep the partition") {
    std::mt19937 rng(7);
    for (int round = 0; round < 20; ++round) {
      std::uniform_int_distribution<int> day(1, 3), word(0, 4);
      std::vector<EventSummary> stream;
      for (std::size_t i = 0; i < 30; ++i) {
        stream.push_back(summary(i, "2020-01-0" + std::to_string(day(rng)),
                                 "w" + std::to_string(word(rng))));
      }
      auto same_word = [](const ChatRequest &r) -> std::optional<std::string> {
        auto w = [](const std::string &s) { return s.substr(12); };
        return w(r.slots.at("event1")) == w(r.slots.at("event2")) ? "yes" : "no";
      };
      Gateway gateway(std::make_shared<MockBackend>(MockScript{}, same_word));
      ClusterEngine engine(gateway, FewShotExamples::defaults(),
                           GenerationConfig::defaults_for(PromptKind::kSimilarity), RetrievalLimit(5));
      std::map<SummaryId, Date> dates;
      for (const auto &s : stream) {
        engine.assign(s, gateway.embed({s.description}).front(), kQuery);
        dates[s.arrival_index] = s.event_date;
        engine.clusters().check_invariants(dates);
      }
      std::size_t total = 0;
      for (SummaryId r : engine.clusters().roots()) total += engine.clusters().size(r);
      CHECK(total == stream.size());
    }
  }
}

TEST_SUITE("timeline") {
  TEST_CASE("ranking prefers size then founding order") {
    ClusterSet set;
    const Date d = testing::day("2020-01-01");
    for (SummaryId id = 0; id < 12; ++id) set.add(id, d);
    for (SummaryId id : {1, 3, 4, 5}) set.unite(0, id);
    set.unite(2, 6);
    set.unite(2, 8);
    set.unite(7, 9);
    set.unite(7, 10);
    REQUIRE(set.cluster_count() == 4);
    auto top = rank_clusters(set, 2);
    REQUIRE(top.size() == 2);
    CHECK(set.size(top[0]) == 5);
    CHECK(set.creation_index(top[1]) == 2);
    CHECK(rank_clusters(set, 10).size() == 4);
    CHECK(rank_clusters(ClusterSet{}, 3).empty());
  }

  TEST_CASE("time order with founding-order ties") {
    ClusterSet set;
    set.add(0, testing::day("2020-05-01"));
    set.add(1, testing::day("2019-01-01"));
    CHECK(sort_by_time(set, {0, 1}) == std::vector<SummaryId>{1, 0});
    set.add(4, testing::day("2021-01-01"));
    set.add(9, testing::day("2021-01-01"));
    CHECK(sort_by_time(set, {9, 4}) == std::vector<SummaryId>{4, 9});
    CHECK(sort_by_time(set, {9}) == std::vector<SummaryId>{9});
  }

  TEST_CASE("textrank selection basics") {
    CHECK(textrank_select({"Only one."}, 1) == std::vector<std::string>{"Only one."});
    CHECK(textrank_select({"Same here.", "Same here.", "Different one."}, 2) ==
          std::vector<std::string>{"Same here.", "Different one."});
    CHECK_THROWS_AS(textrank_select({}, 1), std::invalid_argument);
    CHECK_THROWS_AS(textrank_select({"x"}, 0), std::invalid_argument);
  }

  TEST_CASE("hub sentence ranks first and matches the fixed point") {
    const std::vector<std::string> sentences = {
        "Rain fell across valley overnight.",
        "King releases novel fairy tale rain valley harbor market.",
        "Boats returned to harbor early.",
        "Market opened late on Monday.",
        "Fairy lights decorated every street.",
    };
    SentenceGraph g = build_sentence_graph(sentences);
    run_textrank(g);
    auto expected = textrank_fixed_point(g.weights, 0.85);
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      CHECK(g.scores[i] == doctest::Approx(expected[i]).epsilon(1e-3));
    }
    CHECK(std::max_element(g.scores.begin(), g.scores.end()) - g.scores.begin() == 1);
    CHECK(textrank_select(sentences, 1) == std::vector<std::string>{sentences[1]});
    CHECK(g.iterations < 100);
  }

  TEST_CASE("edge weights") {
    SentenceGraph g = build_sentence_graph({"a b b", "b c", "x", "d e"});
    CHECK(g.weights[0][1] == doctest::Approx(1.0 / (std::log(3.0) + std::log(2.0))));
    CHECK(g.weights[1][0] == g.weights[0][1]);
    CHECK(g.weights[0][2] == 0.0);
    CHECK(g.weights[0][3] == 0.0);
    CHECK(g.weights[0][0] == 0.0);
  }

  TEST_CASE("single cluster timeline") {
    ClusterSet set;
    set.add(0, testing::day("2022-09-06"));
    const std::string text = "King\xE2\x80\x99s novel \xE2\x80\x9C" "Fairy Tale\xE2\x80\x9D is published.";
    std::map<SummaryId, EventSummary> summaries = {{0, summary(0, "2022-09-06", text)}};
    TopicQuery q = kQuery;
    q.l = 1;
    q.k = 1;
    Timeline t = build_timeline(set, summaries, q);
    REQUIRE(t.events.size() == 1);
    CHECK(t.events[0].date == testing::day("2022-09-06"));
    CHECK(t.events[0].text == text);
    CHECK(timeline_to_text(t) == "2022-09-06: " + text + "\n");
    CHECK(build_timeline(ClusterSet{}, {}, q).events.empty());
  }

  TEST_CASE("only the largest clusters are kept, in date order") {
    ClusterSet set;
    std::map<SummaryId, EventSummary> summaries;
    auto add = [&](SummaryId id, const std::string &date, const std::string &text) {
      set.add(id, testing::day(date));
      summaries.emplace(id, summary(id, date, text));
    };
    add(0, "2021-03-01", "Big event happens.");
    add(1, "2020-01-01", "Medium event happens.");
    add(2, "2019-01-01", "Small event happens.");
    add(3, "2021-03-01", "Big event happens again.");
    add(4, "2021-03-01", "Big event happens.");
    add(5, "2020-01-01", "Medium event repeats.");
    add(6, "2021-03-01", "Big event wraps up.");
    for (SummaryId id : {3, 4, 6}) set.unite(0, id);
    set.unite(1, 5);
    TopicQuery q = kQuery;
    q.l = 2;
    q.k = 1;
    Timeline t = build_timeline(set, summaries, q);
    REQUIRE(t.events.size() == 2);
    CHECK(t.events[0].date == testing::day("2020-01-01"));
    CHECK(t.events[1].date == testing::day("2021-03-01"));
    q.k = 5;
    t = build_timeline(set, summaries, q);
    CHECK(t.events[1].text == "Big event happens. Big event happens again. Big event wraps up.");
  }
}
