#pragma once

#include <string>
#include <string_view>

namespace laydef {

/// Porter (1980) suffix-stripping stemmer. Expects a lowercase ASCII word;
/// words of length <= 2 and words with non-letter bytes are returned as-is.
std::string porter_stem(std::string_view word);

}  // namespace laydef
