#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reacts/date.h"
#include "reacts/text.h"

namespace reacts {

enum class WeekdayDirection { kLast, kThis, kNext };

// kLast: greatest date strictly before reference with the weekday.
// kNext: least date strictly after reference with the weekday.
// kThis: the date with that weekday inside reference's Monday-start week.
Date resolve_weekday(Date reference, std::chrono::weekday weekday,
                     WeekdayDirection direction);

// A recognized time expression. span is relative to the start of its
// sentence. resolved is empty for expressions coarser than a day
// ("last year", "in June", "three weeks ago").
struct TimeExpressionMatch {
  std::size_t sentence_index = 0;
  Span span;
  std::string surface;
  std::optional<Date> resolved;
};

// All expressions in one sentence, left to right, non-overlapping (the
// longest candidate wins at each position).
std::vector<TimeExpressionMatch> find_time_expressions_in_sentence(
    std::string_view sentence, Date publication_date,
    std::size_t sentence_index = 0);

std::vector<TimeExpressionMatch> find_time_expressions(
    std::string_view body, Date publication_date);

// Prefixes every sentence that contains a day-resolvable expression with
// "(YYYY-MM-DD) ", using the leftmost such expression. Nothing else in the
// text changes.
std::string resolve_time_refs(std::string_view body, Date publication_date);

// Removes every "(YYYY-MM-DD) " marker; inverse of resolve_time_refs.
std::string strip_date_prefixes(std::string_view text);

}  // namespace reacts
