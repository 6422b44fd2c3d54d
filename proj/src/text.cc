#include "reacts/text.h"

#include <algorithm>
#include <array>
#include <cctype>

namespace reacts {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9');
}

char lower(char c) { return (c >= 'A' && c <= 'Z') ? c - 'A' + 'a' : c; }

constexpr std::array<std::string_view, 36> kAbbreviations = {
    "mr",   "mrs",  "ms",   "dr",  "st",  "jr",  "sr",   "prof", "gen",
    "sen",  "rep",  "gov",  "lt",  "col", "capt", "sgt", "vs",   "etc",
    "inc",  "co",   "corp", "ltd", "ft",  "jan", "feb",  "mar",  "apr",
    "jun",  "jul",  "aug",  "sep", "sept", "oct", "nov", "dec",  "mt"};

// Length in bytes of a closing quote/bracket starting at pos, or 0.
std::size_t closer_length(std::string_view text, std::size_t pos) {
  char c = text[pos];
  if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
  // U+201D and U+2019 (right double/single quotation marks).
  if (text.substr(pos, 3) == "\xE2\x80\x9D" ||
      text.substr(pos, 3) == "\xE2\x80\x99") {
    return 3;
  }
  return 0;
}

// True when the '.' at pos terminates an abbreviation or an initial.
bool is_abbreviation_dot(std::string_view text, std::size_t pos) {
  std::size_t begin = pos;
  while (begin > 0 && std::isalpha(static_cast<unsigned char>(text[begin - 1]))) {
    --begin;
  }
  std::string_view word = text.substr(begin, pos - begin);
  if (word.empty()) return false;
  // Initials and dotted acronyms: "J. K.", "U.S."
  if (word.size() == 1 && std::isupper(static_cast<unsigned char>(word[0]))) {
    return true;
  }
  std::string lowered = to_lower_ascii(word);
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), lowered) !=
         kAbbreviations.end();
}

}  // namespace

std::string_view trim(std::string_view text) {
  std::size_t b = 0;
  while (b < text.size() && is_space(text[b])) ++b;
  std::size_t e = text.size();
  while (e > b && is_space(text[e - 1])) --e;
  return text.substr(b, e - b);
}

std::string_view trim_right(std::string_view text) {
  std::size_t e = text.size();
  while (e > 0 && is_space(text[e - 1])) --e;
  return text.substr(0, e);
}

std::string to_lower_ascii(std::string_view text) {
  std::string out(text);
  for (char &c : out) c = lower(c);
  return out;
}

bool starts_with_icase(std::string_view text, std::string_view prefix) {
  if (text.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (lower(text[i]) != lower(prefix[i])) return false;
  }
  return true;
}

std::vector<Span> split_sentences(std::string_view text) {
  std::vector<Span> spans;
  std::size_t pos = 0;
  const std::size_t n = text.size();
  while (pos < n) {
    while (pos < n && is_space(text[pos])) ++pos;
    if (pos >= n) break;
    std::size_t begin = pos;
    std::size_t end = n;
    while (pos < n) {
      char c = text[pos];
      if (c == '\n' || c == '\r') {
        end = pos;
        break;
      }
      if (c == '.' || c == '!' || c == '?') {
        std::size_t after = pos + 1;
        while (after < n && (text[after] == '.' || text[after] == '!' ||
                             text[after] == '?')) {
          ++after;
        }
        while (after < n) {
          std::size_t len = closer_length(text, after);
          if (len == 0) break;
          after += len;
        }
        bool boundary = after >= n || is_space(text[after]);
        if (boundary && c == '.' && after == pos + 1 &&
            is_abbreviation_dot(text, pos)) {
          boundary = false;
        }
        if (boundary) {
          end = after;
          pos = after;
          break;
        }
        pos = after;
        continue;
      }
      ++pos;
    }
    if (pos >= n) end = std::min(end, n);
    // Trailing whitespace is never part of a sentence.
    std::size_t e = end;
    while (e > begin && is_space(text[e - 1])) --e;
    if (e > begin) spans.push_back({begin, e});
    if (end == n) break;
    pos = std::max(pos, end);
  }
  return spans;
}

std::vector<std::string> alnum_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (is_alnum(c)) {
      current.push_back(lower(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::size_t utf8_length(std::string_view text) {
  std::size_t count = 0;
  for (unsigned char c : text) {
    if ((c & 0xC0) != 0x80) ++count;
  }
  return count;
}

std::string slugify(std::string_view text) {
  std::string out;
  bool pending_dash = false;
  for (char c : text) {
    if (is_alnum(c)) {
      if (pending_dash && !out.empty()) out.push_back('-');
      pending_dash = false;
      out.push_back(lower(c));
    } else {
      pending_dash = true;
    }
  }
  return out;
}

}  // namespace reacts
