#include "reacts/temporal.h"

#include <algorithm>
#include <array>
#include <cctype>

namespace reacts {
namespace {

using std::chrono::weekday;

enum class TokenKind { kWord, kNumber, kPunct };

struct Token {
  TokenKind kind;
  std::string text;  // lowercased
  std::size_t begin;
  std::size_t end;
};

std::vector<Token> scan(std::string_view s) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    TokenKind kind = TokenKind::kPunct;
    if (std::isalpha(c)) {
      kind = TokenKind::kWord;
      while (j < s.size() && std::isalpha(static_cast<unsigned char>(s[j]))) ++j;
    } else if (std::isdigit(c)) {
      kind = TokenKind::kNumber;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    }
    tokens.push_back({kind, to_lower_ascii(s.substr(i, j - i)), i, j});
    i = j;
  }
  return tokens;
}

struct Candidate {
  std::size_t end_token;  // one past the last token of the expression
  std::optional<Date> resolved;
};

class Matcher {
 public:
  Matcher(const std::vector<Token> &tokens, Date publication)
      : t_(tokens), pub_(publication) {}

  std::optional<Candidate> longest_at(std::size_t i) const {
    std::optional<Candidate> best;
    auto consider = [&](std::optional<Candidate> c) {
      if (c && (!best || c->end_token > best->end_token)) best = c;
    };
    consider(iso(i));
    consider(month_day_year(i));
    consider(day_month_year(i));
    consider(deictic(i));
    consider(relative_unit(i));
    consider(units_ago(i));
    consider(bare_month(i));
    return best;
  }

 private:
  bool is(std::size_t i, TokenKind kind) const {
    return i < t_.size() && t_[i].kind == kind;
  }
  bool punct(std::size_t i, char c) const {
    return is(i, TokenKind::kPunct) && t_[i].text.size() == 1 &&
           t_[i].text[0] == c;
  }
  bool adjacent(std::size_t i) const {
    return i > 0 && i < t_.size() && t_[i - 1].end == t_[i].begin;
  }
  int number(std::size_t i) const { return std::stoi(t_[i].text); }

  // 1-12, or 0 when the word is not a month name.
  static unsigned month_of(const std::string &w, bool allow_may) {
    static constexpr std::array<std::string_view, 12> kFull = {
        "january", "february", "march",     "april",   "may",      "june",
        "july",    "august",   "september", "october", "november", "december"};
    static constexpr std::array<std::string_view, 12> kShort = {
        "jan", "feb", "mar", "apr", "", "jun",
        "jul", "aug", "sep", "oct", "nov", "dec"};
    for (unsigned m = 0; m < 12; ++m) {
      if (m == 4 && !allow_may) continue;
      if (w == kFull[m] || (!kShort[m].empty() && w == kShort[m])) return m + 1;
    }
    if (w == "sept") return 9;
    return 0;
  }

  static std::optional<weekday> weekday_of(const std::string &w) {
    static constexpr std::array<std::string_view, 7> kNames = {
        "sunday",   "monday", "tuesday", "wednesday",
        "thursday", "friday", "saturday"};
    for (unsigned d = 0; d < 7; ++d) {
      if (w == kNames[d]) return weekday{d};
    }
    return std::nullopt;
  }

  static bool ordinal_suffix(const std::string &w) {
    return w == "st" || w == "nd" || w == "rd" || w == "th";
  }

  // Small counts written as words ("two days ago").
  static int count_word(const std::string &w) {
    static constexpr std::array<std::string_view, 13> kWords = {
        "zero", "one", "two",   "three",  "four",  "five",  "six",
        "seven", "eight", "nine", "ten", "eleven", "twelve"};
    if (w == "a" || w == "an") return 1;
    for (int n = 0; n < static_cast<int>(kWords.size()); ++n) {
      if (w == kWords[n]) return n;
    }
    return -1;
  }

  // 2024-08-09
  std::optional<Candidate> iso(std::size_t i) const {
    if (!is(i, TokenKind::kNumber) || t_[i].text.size() != 4) return {};
    if (!punct(i + 1, '-') || !is(i + 2, TokenKind::kNumber) ||
        !punct(i + 3, '-') || !is(i + 4, TokenKind::kNumber)) {
      return {};
    }
    for (std::size_t k = i + 1; k <= i + 4; ++k) {
      if (!adjacent(k)) return {};
    }
    if (t_[i + 2].text.size() != 2 || t_[i + 4].text.size() != 2) return {};
    auto date = Date::from_ymd(number(i), number(i + 2), number(i + 4));
    if (!date) return {};
    return Candidate{i + 5, date};
  }

  // Optional ordinal suffix glued to a day number ("9th"); returns the index
  // after it.
  std::size_t skip_suffix(std::size_t i) const {
    if (is(i, TokenKind::kWord) && adjacent(i) && ordinal_suffix(t_[i].text)) {
      return i + 1;
    }
    return i;
  }

  std::size_t skip_dot(std::size_t i) const {
    return (punct(i, '.') && adjacent(i)) ? i + 1 : i;
  }

  bool day_number(std::size_t i) const {
    return is(i, TokenKind::kNumber) && t_[i].text.size() <= 2 &&
           number(i) >= 1 && number(i) <= 31;
  }

  bool year_number(std::size_t i) const {
    return is(i, TokenKind::kNumber) && t_[i].text.size() == 4;
  }

  // August 9, 2024 / Aug. 9th 2024. "August 9" without a year is recognized
  // but left unresolved.
  std::optional<Candidate> month_day_year(std::size_t i) const {
    if (!is(i, TokenKind::kWord)) return {};
    unsigned month = month_of(t_[i].text, true);
    if (month == 0) return {};
    std::size_t j = skip_dot(i + 1);
    if (!day_number(j)) return {};
    int day = number(j);
    std::size_t after_day = skip_suffix(j + 1);
    std::size_t k = punct(after_day, ',') ? after_day + 1 : after_day;
    if (!year_number(k)) {
      if (t_[i].text == "may") return {};
      return Candidate{after_day, std::nullopt};
    }
    auto date = Date::from_ymd(number(k), month, day);
    if (!date) return {};
    return Candidate{k + 1, date};
  }

  // 9 August 2024 / 9th Aug, 2024
  std::optional<Candidate> day_month_year(std::size_t i) const {
    if (!day_number(i)) return {};
    int day = number(i);
    std::size_t j = skip_suffix(i + 1);
    if (is(j, TokenKind::kWord) && t_[j].text == "of") ++j;
    if (!is(j, TokenKind::kWord)) return {};
    unsigned month = month_of(t_[j].text, true);
    if (month == 0) return {};
    std::size_t k = skip_dot(j + 1);
    if (punct(k, ',')) ++k;
    if (!year_number(k)) return {};
    auto date = Date::from_ymd(number(k), month, day);
    if (!date) return {};
    return Candidate{k + 1, date};
  }

  std::optional<Candidate> deictic(std::size_t i) const {
    if (!is(i, TokenKind::kWord)) return {};
    const std::string &w = t_[i].text;
    if (w == "today" || w == "tonight") return Candidate{i + 1, pub_};
    if (w == "yesterday") return Candidate{i + 1, pub_.plus_days(-1)};
    if (w == "tomorrow") return Candidate{i + 1, pub_.plus_days(1)};
    return {};
  }

  // last/this/next + weekday, or + week/month/year (unresolved).
  std::optional<Candidate> relative_unit(std::size_t i) const {
    if (!is(i, TokenKind::kWord) || !is(i + 1, TokenKind::kWord)) return {};
    const std::string &w = t_[i].text;
    WeekdayDirection direction;
    if (w == "last") {
      direction = WeekdayDirection::kLast;
    } else if (w == "this") {
      direction = WeekdayDirection::kThis;
    } else if (w == "next") {
      direction = WeekdayDirection::kNext;
    } else {
      return {};
    }
    const std::string &unit = t_[i + 1].text;
    if (auto wd = weekday_of(unit)) {
      return Candidate{i + 2, resolve_weekday(pub_, *wd, direction)};
    }
    if (unit == "week" || unit == "weekend" || unit == "month" ||
        unit == "year" || unit == "decade" || unit == "century") {
      return Candidate{i + 2, std::nullopt};
    }
    return {};
  }

  // "3 days ago", "two days ago"; weeks/months/years ago stay unresolved.
  std::optional<Candidate> units_ago(std::size_t i) const {
    int count = -1;
    if (is(i, TokenKind::kNumber) && t_[i].text.size() <= 3) {
      count = number(i);
    } else if (is(i, TokenKind::kWord)) {
      count = count_word(t_[i].text);
    }
    if (count < 0) return {};
    if (!is(i + 1, TokenKind::kWord) || !is(i + 2, TokenKind::kWord) ||
        t_[i + 2].text != "ago") {
      return {};
    }
    const std::string &unit = t_[i + 1].text;
    if (unit == "day" || unit == "days") {
      return Candidate{i + 3, pub_.plus_days(-count)};
    }
    if (unit == "week" || unit == "weeks" || unit == "month" ||
        unit == "months" || unit == "year" || unit == "years") {
      return Candidate{i + 3, std::nullopt};
    }
    return {};
  }

  // "in June": month names on their own are month-granular.
  std::optional<Candidate> bare_month(std::size_t i) const {
    if (!is(i, TokenKind::kWord) || t_[i].text.size() < 4) return {};
    if (month_of(t_[i].text, false) == 0) return {};
    return Candidate{i + 1, std::nullopt};
  }

  const std::vector<Token> &t_;
  Date pub_;
};

}  // namespace

Date resolve_weekday(Date reference, weekday target,
                     WeekdayDirection direction) {
  const weekday current = reference.weekday();
  switch (direction) {
    case WeekdayDirection::kLast: {
      int back = static_cast<int>((current - target).count());
      return reference.plus_days(back == 0 ? -7 : -back);
    }
    case WeekdayDirection::kNext: {
      int ahead = static_cast<int>((target - current).count());
      return reference.plus_days(ahead == 0 ? 7 : ahead);
    }
    case WeekdayDirection::kThis: {
      // iso_encoding: Monday = 1 ... Sunday = 7.
      int offset = static_cast<int>(target.iso_encoding()) -
                   static_cast<int>(current.iso_encoding());
      return reference.plus_days(offset);
    }
  }
  return reference;
}

std::vector<TimeExpressionMatch> find_time_expressions_in_sentence(
    std::string_view sentence, Date publication_date,
    std::size_t sentence_index) {
  std::vector<Token> tokens = scan(sentence);
  Matcher matcher(tokens, publication_date);
  std::vector<TimeExpressionMatch> matches;
  std::size_t i = 0;
  while (i < tokens.size()) {
    // Expressions start on a token boundary that is not glued to a previous
    // alphanumeric token.
    bool glued = i > 0 && tokens[i - 1].end == tokens[i].begin &&
                 tokens[i - 1].kind != TokenKind::kPunct &&
                 tokens[i].kind != TokenKind::kPunct;
    std::optional<Candidate> c;
    if (!glued) c = matcher.longest_at(i);
    if (!c) {
      ++i;
      continue;
    }
    Span span{tokens[i].begin, tokens[c->end_token - 1].end};
    matches.push_back({sentence_index, span,
                       std::string(sentence.substr(span.begin, span.size())),
                       c->resolved});
    i = c->end_token;
  }
  return matches;
}

std::vector<TimeExpressionMatch> find_time_expressions(
    std::string_view body, Date publication_date) {
  std::vector<TimeExpressionMatch> all;
  std::vector<Span> sentences = split_sentences(body);
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    auto part = find_time_expressions_in_sentence(
        body.substr(sentences[s].begin, sentences[s].size()), publication_date,
        s);
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

std::string resolve_time_refs(std::string_view body, Date publication_date) {
  std::string out;
  out.reserve(body.size() + 64);
  std::size_t copied = 0;
  for (const Span &sentence : split_sentences(body)) {
    auto matches = find_time_expressions_in_sentence(
        body.substr(sentence.begin, sentence.size()), publication_date);
    auto first = std::find_if(matches.begin(), matches.end(),
                              [](const auto &m) { return m.resolved.has_value(); });
    if (first == matches.end()) continue;
    out.append(body.substr(copied, sentence.begin - copied));
    out.append("(" + first->resolved->iso() + ") ");
    copied = sentence.begin;
  }
  out.append(body.substr(copied));
  return out;
}

std::string strip_date_prefixes(std::string_view text) {
  // "(YYYY-MM-DD) " is 13 bytes.
  auto marker_at = [&](std::size_t i) {
    if (i + 13 > text.size()) return false;
    static constexpr std::string_view kShape = "(dddd-dd-dd) ";
    for (std::size_t k = 0; k < kShape.size(); ++k) {
      char c = text[i + k];
      if (kShape[k] == 'd') {
        if (c < '0' || c > '9') return false;
      } else if (c != kShape[k]) {
        return false;
      }
    }
    return true;
  };
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '(' && marker_at(i)) {
      i += 13;
      continue;
    }
    out.push_back(text[i++]);
  }
  return out;
}

}  // namespace reacts
