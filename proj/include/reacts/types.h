#pragma once

#include <string>
#include <vector>

#include "reacts/date.h"

namespace reacts {

// A dated news document from a topic's article pool.
struct Article {
  std::string id;
  Date publication_date;
  std::string title;
  std::string body;

  friend bool operator==(const Article &, const Article &) = default;
};

// What to summarize: topic keyword, constraint, and the requested timeline
// shape (l dates, k sentences per date).
struct TopicQuery {
  std::string keyword;
  std::string constraint;
  int l = 1;
  int k = 1;

  // Throws ConfigError when keyword/constraint are empty or l, k < 1.
  void validate() const;
};

struct TimelineEvent {
  Date date;
  std::string text;

  friend bool operator==(const TimelineEvent &, const TimelineEvent &) =
      default;
};

// Dated event descriptions for one (topic, constraint). Used both for system
// output and for reference timelines.
struct Timeline {
  std::string topic;
  std::string constraint;
  std::vector<TimelineEvent> events;

  friend bool operator==(const Timeline &, const Timeline &) = default;
};

using GroundTruthTimeline = Timeline;

}  // namespace reacts
