#include "t2s/util.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "t2s/errors.hpp"

namespace t2s {

ValidationError::ValidationError(std::vector<std::string> issues)
    : std::runtime_error(issues.empty() ? std::string("validation failed") : join(issues, "; ")),
      issues_(std::move(issues)) {}

BudgetExceeded::BudgetExceeded(std::size_t overflow, std::size_t limit)
    : std::runtime_error("prompt exceeds token budget of " + std::to_string(limit) + " by " +
                         std::to_string(overflow) + " tokens"),
      overflow_(overflow) {}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(std::string_view s) {
    auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return std::string(s);
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

bool istarts_with(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw IoError("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

json read_json_file(const fs::path& path) {
    const std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw IoError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

namespace {

std::string digest_hex(const unsigned char* md, unsigned len) {
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned len = 0;
    EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr);
    return digest_hex(md.data(), len);
}

std::string sha256_file_hex(const fs::path& path) { return sha256_hex(read_file(path)); }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 over the pair
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string format_rational(std::int64_t num, std::int64_t den, int places) {
    if (den == 0) return "n/a";
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const bool negative = num < 0;
    const unsigned __int128 abs_num = static_cast<unsigned __int128>(negative ? -static_cast<__int128>(num) : num);
    unsigned __int128 scale = 1;
    for (int i = 0; i < places; ++i) scale *= 10;
    const unsigned __int128 scaled = (abs_num * scale * 2 + static_cast<unsigned __int128>(den)) /
                                     (2 * static_cast<unsigned __int128>(den));
    const auto whole = static_cast<unsigned long long>(scaled / scale);
    const auto frac = static_cast<unsigned long long>(scaled % scale);
    std::string out = (negative && scaled != 0) ? "-" : "";
    out += std::to_string(whole);
    if (places > 0) {
        std::string f = std::to_string(frac);
        out += '.';
        out += std::string(static_cast<std::size_t>(places) - f.size(), '0') + f;
    }
    return out;
}

std::string format_double_exact(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    (void)ec;
    return std::string(buf.data(), ptr);
}

}  // namespace t2s
