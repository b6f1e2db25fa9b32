#ifndef SYNGUIDE_UTIL_HPP
#define SYNGUIDE_UTIL_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace synguide {

// Independent 64-bit seed for a named sub-stream of a run seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

// Shortest decimal representation that parses back to the identical double.
std::string format_double(double v);

// Strict full-string parse; throws std::invalid_argument naming `what` on failure.
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

// Writes to a sibling temp file then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::uint64_t fnv1a64(std::string_view text);

}  // namespace synguide

#endif  // SYNGUIDE_UTIL_HPP
