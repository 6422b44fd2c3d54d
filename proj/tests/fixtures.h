#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "reacts/corpus.h"
#include "reacts/extractor.h"
#include "reacts/gateway.h"
#include "reacts/prompts.h"
#include "test_util.h"

// Seven-article Stephen King pool with a scripted mock. Under the book
// constraint the model returns:
//   0 2020-04-21 If It Bleeds        reflection yes
//   1 None.
//   2 2022-09-06 Fairy Tale          reflection yes
//   3 2022-09-06 Fairy Tale again    reflection yes, same event as 2
//   4 2022-09-30 premiere            reflection no
//   5 banana                         parse rejection
//   6 2023-09-05 Holly               reflection yes
// Under the television constraint only article 1 yields an event.
namespace fixture {

inline const std::string kTopic = "Stephen King";
inline const std::string kBooks = "Focus on Stephen King's book releases.";
inline const std::string kTv =
    "Focus on Stephen King's involvement in television and streaming projects.";
inline const std::string kStem = "stephen-king__0";
inline const std::string kTvStem = "stephen-king__1";

inline std::vector<reacts::Article> articles() {
  using testing::day;
  return {
      {"bleeds", day("2020-04-20"), "If It Bleeds arrives",
       "Scribner will release four new novellas by Stephen King tomorrow."},
      {"lisey", day("2021-06-04"), "Lisey's Story",
       "The Apple TV+ miniseries premieres today, adapted by King himself."},
      {"fairy1", day("2022-09-05"), "A new fantasy from King",
       "Fairy Tale goes on sale tomorrow, the publisher said."},
      {"fairy2", day("2022-09-06"), "Fairy Tale hits shelves",
       "Readers lined up today for Fairy Tale, King's latest novel."},
      {"premiere", day("2022-10-01"), "Red carpet",
       "King attended a film premiere yesterday in Los Angeles."},
      {"noise", day("2023-01-10"), "Weather",
       "Heavy snow fell across Maine last week."},
      {"holly", day("2023-09-05"), "Holly returns",
       "King publishes Holly today, a novel about the detective Holly Gibney."},
  };
}

inline const std::vector<std::string> kBookOutputs = {
    "2020-04-21: King releases the novella collection If It Bleeds.",
    "None.",
    "2022-09-06: King's novel Fairy Tale is published.",
    "2022-09-06: Fairy Tale by Stephen King reaches bookstores.",
    "2022-09-30: King attends a film premiere.",
    "banana",
    "2023-09-05: King publishes the novel Holly.",
};
inline const std::vector<std::string> kBookReflections = {"Yes", "", "Yes", "Yes",
                                                         "No",  "", "Yes"};
inline const std::string kTvOutput =
    "2021-06-04: The miniseries Lisey's Story, adapted by King, premieres on Apple TV+.";

// Hand trace of the full pipeline, l = 3 and k = 1. The Fairy Tale cluster
// has two tied sentences, so the earlier one is kept.
inline const std::string kReactsText =
    "2020-04-21: King releases the novella collection If It Bleeds.\n"
    "2022-09-06: King's novel Fairy Tale is published.\n"
    "2023-09-05: King publishes the novel Holly.\n";
// Without reflection the premiere forms a fourth singleton. Ranking keeps
// the pair and the two singletons founded first (0 and 4).
inline const std::string kNoSrText =
    "2020-04-21: King releases the novella collection If It Bleeds.\n"
    "2022-09-06: King's novel Fairy Tale is published.\n"
    "2022-09-30: King attends a film premiere.\n";
inline const std::string kTvText = kTvOutput + "\n";
inline const std::vector<std::string> kReactsDecisions = {
    "accepted", "null", "accepted", "accepted", "rejected_reflection", "rejected_parse",
    "accepted"};

inline std::string pool_jsonl() {
  std::ostringstream out;
  reacts::write_article_pool(out, articles());
  return out.str();
}

inline std::string gold_json() {
  nlohmann::json doc = {
      {"topic", kTopic},
      {"timelines",
       {{{"constraint", kBooks},
         {"events",
          {{{"date", "2020-04-21"}, {"text", "King publishes the novella collection If It Bleeds."}},
           {{"date", "2022-09-06"}, {"text", "King's novel Fairy Tale is published."}},
           {{"date", "2023-09-05"}, {"text", "King publishes Holly."}}}}},
        {{"constraint", kTv},
         {"events",
          {{{"date", "2021-06-04"},
            {"text", "The miniseries Lisey's Story premieres on Apple TV+."}}}}}}}};
  return doc.dump(2) + "\n";
}

inline reacts::Slots summary_slots(const reacts::Article &raw, const std::string &constraint) {
  const auto ex = reacts::FewShotExamples::defaults();
  return {{"example_article", ex.summary_example_article},
          {"keyword", kTopic},
          {"constraint", constraint},
          {"content", reacts::article_content(reacts::preprocess_article(raw))}};
}

inline reacts::Slots reflect_slots(const std::string &line, const std::string &constraint) {
  const auto ex = reacts::FewShotExamples::defaults();
  return {{"keyword", kTopic},
          {"positive_example", ex.positive_example},
          {"negative_example", ex.negative_example},
          {"event", line},
          {"constraint", constraint}};
}

inline reacts::Slots similarity_slots(const std::string &a, const std::string &b) {
  const auto ex = reacts::FewShotExamples::defaults();
  return {{"example_1", ex.similarity_examples[0]},
          {"example_2", ex.similarity_examples[1]},
          {"example_3", ex.similarity_examples[2]},
          {"keyword", kTopic},
          {"event1", a},
          {"event2", b}};
}

// Every prompt the pipeline should send is keyed by fingerprint; anything
// else falls through to the template defaults. Without the summary default
// an unexpected summary request is a gateway error.
inline reacts::MockScript script(bool summary_default = true) {
  using reacts::PromptKind;
  using reacts::request_fingerprint;
  reacts::MockScript s;
  const auto pool = articles();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    s.responses[request_fingerprint(PromptKind::kSummary, summary_slots(pool[i], kBooks))] =
        kBookOutputs[i];
    if (!kBookReflections[i].empty()) {
      s.responses[request_fingerprint(PromptKind::kSelfReflect,
                                      reflect_slots(kBookOutputs[i], kBooks))] =
          kBookReflections[i];
    }
  }
  s.responses[request_fingerprint(PromptKind::kSummary, summary_slots(pool[1], kTv))] = kTvOutput;
  s.responses[request_fingerprint(PromptKind::kSelfReflect, reflect_slots(kTvOutput, kTv))] =
      "Yes";
  s.responses[request_fingerprint(PromptKind::kSimilarity,
                                  similarity_slots(kBookOutputs[3], kBookOutputs[2]))] = "Yes";
  s.template_defaults["similarity"] = "No";
  if (summary_default) s.template_defaults["summary"] = "None.";
  s.template_defaults["baseline"] =
      "- 2022-09-06: King's novel Fairy Tale is published.\n"
      "- 2020-04-21: King releases If It Bleeds.\n"
      "- 2021-06-04: Lisey's Story premieres.\n"
      "- 2023-09-05: King publishes Holly.\n";
  return s;
}

}  // namespace fixture
