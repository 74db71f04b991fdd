#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace clignet {

/// Lowercased tokens split on whitespace (ASCII and the common Unicode
/// space code points), with leading/trailing ASCII punctuation stripped.
/// Tokens that become empty are dropped.
std::vector<std::string> tokenize(std::string_view text);

/// Whitespace-delimited word count, no punctuation handling.
std::size_t word_count(std::string_view text);

std::string trim(std::string_view text);

}  // namespace clignet
