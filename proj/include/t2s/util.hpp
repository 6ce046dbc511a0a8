#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace t2s {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool istarts_with(std::string_view s, std::string_view prefix);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string read_file(const fs::path& path);
/// Writes via a sibling temp file and rename, so readers never see a torn file.
void write_file_atomic(const fs::path& path, std::string_view content);
json read_json_file(const fs::path& path);

std::string sha256_hex(std::string_view data);
std::string sha256_file_hex(const fs::path& path);

/// Mixes a seed with a stream index into a well-distributed 64-bit value.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Uniform integer in [0, bound) from a 64-bit generator, by rejection.
template <typename Rng>
std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

/// Rounds the rational num/den to `places` decimals, ties away from zero,
/// and formats it ("0.626", "-0.100").
std::string format_rational(std::int64_t num, std::int64_t den, int places = 3);
/// Shortest text that parses back to the same double.
std::string format_double_exact(double v);

}  // namespace t2s
