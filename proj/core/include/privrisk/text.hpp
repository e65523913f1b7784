#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace privrisk {

// Trim, lowercase (ASCII), collapse internal whitespace runs to one space.
std::string normalize_attribute(std::string_view raw);

std::vector<std::string> split_whitespace(std::string_view text);

std::size_t levenshtein(std::string_view a, std::string_view b);

// Up to `limit` candidates closest to `query`: substring matches first, then
// by edit distance, ties by name.
std::vector<std::string> nearest_names(std::string_view query,
                                       std::span<const std::string> candidates,
                                       std::size_t limit = 3);

std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t value);

}  // namespace privrisk
