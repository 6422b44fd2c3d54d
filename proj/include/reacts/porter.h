#pragma once

#include <string>
#include <string_view>

namespace reacts {

// Porter (1980) suffix stripping, as published. Expects a lowercase word.
// There is no minimum length: "as" stems to "a" and "s" to "".
std::string porter_stem(std::string_view word);

}  // namespace reacts
