#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace reacts {

// Half-open byte range [begin, end) into some text.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  friend bool operator==(const Span &, const Span &) = default;
};

std::string_view trim(std::string_view text);
std::string_view trim_right(std::string_view text);
std::string to_lower_ascii(std::string_view text);
bool starts_with_icase(std::string_view text, std::string_view prefix);

// Sentence boundaries. Sentences end at '.', '!' or '?' (plus any closing
// quotes or brackets) followed by whitespace, and at line breaks. Common
// abbreviations and single-letter initials do not end a sentence. Spans
// never include surrounding whitespace; the gaps between spans are exactly
// the whitespace of the input.
std::vector<Span> split_sentences(std::string_view text);

// Lowercased maximal runs of ASCII letters and digits.
std::vector<std::string> alnum_tokens(std::string_view text);

// Number of UTF-8 code points (invalid lead bytes count as one each).
std::size_t utf8_length(std::string_view text);

// Lowercase ASCII alphanumerics joined by single dashes, e.g.
// "Stephen King" -> "stephen-king".
std::string slugify(std::string_view text);

}  // namespace reacts
