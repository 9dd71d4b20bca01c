#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gusnet {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool ends_with_question_mark(std::string_view s);

// Whitespace split with every ASCII punctuation character detached as its own
// word. Used identically for corpus sentences and few-shot examples.
std::vector<std::string> split_words(std::string_view text);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Current UTC time as ISO-8601 with second precision.
std::string utc_timestamp();

}  // namespace gusnet
