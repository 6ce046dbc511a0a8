#include <cctype>
#include <regex>

#include "t2s/inference.hpp"

namespace t2s {

namespace {

bool word_boundary(std::string_view s, std::size_t pos, std::size_t len) {
    auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
    if (pos > 0 && is_word(s[pos - 1])) return false;
    if (pos + len < s.size() && is_word(s[pos + len])) return false;
    return true;
}

std::size_t find_sql_start(const std::string& text) {
    static const std::regex cte(R"(^with\s+(recursive\s+)?[^\s(]+\s*(\([^)]*\)\s*)?as\s*\()", std::regex::icase);
    static const std::regex insert(R"(^insert\s+into\b)", std::regex::icase);
    const std::string lower = to_lower(text);
    for (std::size_t i = 0; i < lower.size(); ++i) {
        if (i > 0 && (std::isalnum(static_cast<unsigned char>(lower[i - 1])) || lower[i - 1] == '_')) continue;
        if (lower.compare(i, 6, "select") == 0 && word_boundary(lower, i, 6)) return i;
        if (lower.compare(i, 4, "with") == 0 && word_boundary(lower, i, 4) &&
            std::regex_search(text.begin() + static_cast<std::ptrdiff_t>(i), text.end(), cte))
            return i;
        if (lower.compare(i, 6, "insert") == 0 && word_boundary(lower, i, 6) &&
            std::regex_search(text.begin() + static_cast<std::ptrdiff_t>(i), text.end(), insert))
            return i;
    }
    return std::string::npos;
}

std::string strip_fences(std::string_view raw) {
    std::string out;
    std::size_t i = 0;
    while (i < raw.size()) {
        if (raw.compare(i, 3, "```") == 0) {
            i += 3;
            // Drop a language tag directly after an opening fence.
            while (i < raw.size() && (std::isalnum(static_cast<unsigned char>(raw[i])) || raw[i] == '_')) ++i;
            out += ' ';
            continue;
        }
        out += raw[i++];
    }
    return out;
}

}  // namespace

std::string extract_sql(std::string_view raw) {
    const std::string unfenced = strip_fences(raw);
    const std::size_t start = find_sql_start(unfenced);
    if (start == std::string::npos) return trim(raw);

    std::string sql;
    char quote = 0;
    for (std::size_t i = start; i < unfenced.size(); ++i) {
        const char c = unfenced[i];
        if (quote) {
            if (c == quote) quote = 0;
        } else if (c == '\'' || c == '"' || c == '`') {
            quote = c;
        } else if (c == ';') {
            break;
        }
        sql += c;
    }

    // Whitespace runs that contain a line break become one space.
    std::string out;
    for (std::size_t i = 0; i < sql.size();) {
        if (std::isspace(static_cast<unsigned char>(sql[i]))) {
            std::size_t j = i;
            bool newline = false;
            while (j < sql.size() && std::isspace(static_cast<unsigned char>(sql[j]))) {
                newline = newline || sql[j] == '\n' || sql[j] == '\r';
                ++j;
            }
            out += newline ? std::string(" ") : sql.substr(i, j - i);
            i = j;
        } else {
            out += sql[i++];
        }
    }
    return trim(out);
}

}  // namespace t2s
