#include "reacts/corpus.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "reacts/error.h"
#include "reacts/text.h"

namespace reacts {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string required_string(const json &obj, const char *key,
                            const std::string &where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw DataError(where + ": missing string field \"" + key + "\"");
  }
  return it->get<std::string>();
}

std::ifstream open_or_throw(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

}  // namespace

void TopicQuery::validate() const {
  if (keyword.empty()) throw ConfigError("topic keyword is empty");
  if (constraint.empty()) throw ConfigError("constraint is empty");
  if (l < 1 || k < 1) {
    throw ConfigError("l and k must be positive (got l=" + std::to_string(l) +
                      ", k=" + std::to_string(k) + ")");
  }
}

std::vector<Article> parse_article_pool(std::istream &in,
                                        const std::string &source) {
  std::vector<Article> pool;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = source + " line " + std::to_string(line_no);
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error &e) {
      throw DataError(where + ": malformed JSON line: " + e.what());
    }
    if (!record.is_object()) throw DataError(where + ": expected an object");

    Article article;
    article.id = required_string(record, "id", where);
    if (article.id.empty()) throw DataError(where + ": empty article id");
    const std::string date = required_string(record, "date", where);
    auto parsed = Date::parse_iso(date);
    if (!parsed) {
      throw DataError("article \"" + article.id + "\" has invalid date \"" +
                      date + "\" (" + where + ")");
    }
    article.publication_date = *parsed;
    article.title = required_string(record, "title", where);
    article.body = required_string(record, "text", where);
    if (!seen.insert(article.id).second) {
      throw DataError(where + ": duplicate article id \"" + article.id + "\"");
    }
    pool.push_back(std::move(article));
  }
  std::sort(pool.begin(), pool.end(), [](const Article &a, const Article &b) {
    if (a.publication_date != b.publication_date) {
      return a.publication_date < b.publication_date;
    }
    return a.id < b.id;
  });
  return pool;
}

std::vector<Article> load_article_pool(const fs::path &path) {
  auto in = open_or_throw(path);
  return parse_article_pool(in, path.string());
}

void write_article_pool(std::ostream &out, const std::vector<Article> &pool) {
  for (const Article &a : pool) {
    json record = {{"id", a.id},
                   {"date", a.publication_date.iso()},
                   {"title", a.title},
                   {"text", a.body}};
    out << record.dump() << '\n';
  }
}

std::vector<GroundTruthTimeline> parse_ground_truth(const json &doc,
                                                    const std::string &source) {
  if (!doc.is_object()) throw DataError(source + ": expected a JSON object");
  const std::string topic = required_string(doc, "topic", source);
  auto timelines = doc.find("timelines");
  if (timelines == doc.end() || !timelines->is_array()) {
    throw DataError(source + ": missing \"timelines\" array");
  }
  std::vector<GroundTruthTimeline> out;
  std::size_t index = 0;
  for (const json &t : *timelines) {
    const std::string where =
        source + ": timeline " + std::to_string(index++);
    if (!t.is_object()) throw DataError(where + ": expected an object");
    GroundTruthTimeline timeline;
    timeline.topic = topic;
    timeline.constraint = required_string(t, "constraint", where);
    auto events = t.find("events");
    if (events == t.end() || !events->is_array()) {
      throw DataError(where + ": missing \"events\" array");
    }
    for (const json &e : *events) {
      if (!e.is_object()) throw DataError(where + ": event is not an object");
      const std::string date = required_string(e, "date", where);
      auto parsed = Date::parse_iso(date);
      if (!parsed) {
        throw DataError(where + ": invalid event date \"" + date + "\"");
      }
      timeline.events.push_back({*parsed, required_string(e, "text", where)});
    }
    std::stable_sort(
        timeline.events.begin(), timeline.events.end(),
        [](const TimelineEvent &a, const TimelineEvent &b) {
          return a.date < b.date;
        });
    out.push_back(std::move(timeline));
  }
  return out;
}

std::vector<GroundTruthTimeline> load_ground_truth(const fs::path &path) {
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto &entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    std::vector<GroundTruthTimeline> all;
    for (const auto &file : files) {
      auto part = load_ground_truth(file);
      all.insert(all.end(), std::make_move_iterator(part.begin()),
                 std::make_move_iterator(part.end()));
    }
    return all;
  }
  auto in = open_or_throw(path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error &e) {
    throw DataError(path.string() + ": malformed JSON: " + e.what());
  }
  return parse_ground_truth(doc, path.string());
}

json timelines_to_json(const std::vector<Timeline> &timelines) {
  json doc = {{"topic", timelines.empty() ? "" : timelines.front().topic},
              {"timelines", json::array()}};
  for (const Timeline &t : timelines) {
    if (t.topic != timelines.front().topic) {
      throw DataError("timelines_to_json: mixed topics \"" + t.topic +
                      "\" and \"" + timelines.front().topic + "\"");
    }
    json events = json::array();
    for (const TimelineEvent &e : t.events) {
      events.push_back({{"date", e.date.iso()}, {"text", e.text}});
    }
    doc["timelines"].push_back(
        {{"constraint", t.constraint}, {"events", std::move(events)}});
  }
  return doc;
}

double DatasetStats::timelines_per_topic() const {
  return topics == 0 ? 0.0 : static_cast<double>(timelines) / topics;
}

double DatasetStats::events_per_timeline() const {
  return timelines == 0 ? 0.0 : static_cast<double>(events) / timelines;
}

DatasetStats dataset_stats(const std::vector<GroundTruthTimeline> &timelines) {
  DatasetStats stats;
  std::set<std::string> topics;
  for (const auto &t : timelines) {
    topics.insert(t.topic);
    stats.events += t.events.size();
  }
  stats.topics = topics.size();
  stats.timelines = timelines.size();
  return stats;
}

}  // namespace reacts
