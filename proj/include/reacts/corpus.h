#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "reacts/types.h"

namespace reacts {

// Article pools are JSONL, one {"id", "date", "title", "text"} object per
// line. The result is sorted by (publication_date, id); duplicate ids, bad
// JSON and invalid dates raise DataError.
std::vector<Article> load_article_pool(const std::filesystem::path &path);
std::vector<Article> parse_article_pool(std::istream &in,
                                        const std::string &source = "<stream>");
void write_article_pool(std::ostream &out, const std::vector<Article> &pool);

// Ground-truth files hold one topic:
//   {"topic": str, "timelines": [{"constraint": str,
//                                 "events": [{"date": str, "text": str}]}]}
// A directory is read file by file (*.json, sorted by name). Events come back
// sorted by date.
std::vector<GroundTruthTimeline> load_ground_truth(
    const std::filesystem::path &path);
std::vector<GroundTruthTimeline> parse_ground_truth(
    const nlohmann::json &doc, const std::string &source = "<json>");

// Same schema as the ground truth. All timelines must share one topic.
nlohmann::json timelines_to_json(const std::vector<Timeline> &timelines);

struct DatasetStats {
  std::size_t topics = 0;
  std::size_t timelines = 0;
  std::size_t events = 0;
  double timelines_per_topic() const;
  double events_per_timeline() const;
};

DatasetStats dataset_stats(const std::vector<GroundTruthTimeline> &timelines);

}  // namespace reacts
