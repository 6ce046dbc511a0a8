#include <array>
#include <cctype>

#include "sql_internal.hpp"
#include "t2s/sqlkit.hpp"

namespace t2s::sql {

namespace detail {

bool is_reserved(std::string_view w) {
    static constexpr std::array<std::string_view, 47> words = {
        "select", "from",  "where",     "group",   "by",      "having", "order",  "limit",   "offset", "union",
        "intersect", "except", "join",  "inner",   "left",    "right",  "outer",  "cross",   "full",   "natural",
        "on",     "using", "as",        "and",     "or",      "not",    "in",     "like",    "glob",   "between",
        "is",     "null",  "exists",    "case",    "when",    "then",   "else",   "end",     "distinct", "all",
        "asc",    "desc",  "with",      "over",    "window",  "values", "cast"};
    for (auto x : words)
        if (x == w) return true;
    return false;
}

std::string quote_ident(const std::string& lower) {
    bool plain = !lower.empty() && (std::isalpha(static_cast<unsigned char>(lower[0])) || lower[0] == '_');
    for (unsigned char c : lower)
        if (!(std::islower(c) || std::isdigit(c) || c == '_')) plain = false;
    if (plain && !is_reserved(lower)) return lower;
    std::string out = "`";
    for (char c : lower) {
        if (c == '`') out += '`';
        out += c;
    }
    return out + "`";
}

bool is_aggregate(std::string_view w) {
    return w == "count" || w == "sum" || w == "avg" || w == "min" || w == "max";
}

}  // namespace detail

namespace {

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }

}  // namespace

std::variant<std::vector<Token>, ParseError> tokenize(std::string_view sql) {
    std::vector<Token> out;
    std::size_t i = 0;
    const std::size_t n = sql.size();
    auto push = [&](TokenKind kind, std::string text, std::size_t pos) {
        Token t;
        t.kind = kind;
        t.lower = to_lower(text);
        t.text = std::move(text);
        t.pos = pos;
        out.push_back(std::move(t));
    };
    while (i < n) {
        const auto c = static_cast<unsigned char>(sql[i]);
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        if (c == '-' && i + 1 < n && sql[i + 1] == '-') {
            while (i < n && sql[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && sql[i + 1] == '*') {
            const auto close = sql.find("*/", i + 2);
            if (close == std::string_view::npos) return ParseError{i, "unterminated comment"};
            i = close + 2;
            continue;
        }
        const std::size_t start = i;
        if (c == '\'' || c == '"' || c == '`' || c == '[') {
            const char close = c == '[' ? ']' : static_cast<char>(c);
            std::string text;
            ++i;
            bool closed = false;
            while (i < n) {
                if (sql[i] == close) {
                    if (close != ']' && i + 1 < n && sql[i + 1] == close) {
                        text += close;
                        i += 2;
                        continue;
                    }
                    ++i;
                    closed = true;
                    break;
                }
                text += sql[i++];
            }
            if (!closed) return ParseError{start, "unterminated quoted token"};
            const bool is_string = c == '\'' || c == '"';
            push(is_string ? TokenKind::string : TokenKind::quoted_identifier, std::move(text), start);
            continue;
        }
        if (std::isdigit(c) || (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(sql[i + 1])))) {
            while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
            if (i < n && sql[i] == '.') {
                ++i;
                while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
            }
            if (i < n && (sql[i] == 'e' || sql[i] == 'E')) {
                std::size_t j = i + 1;
                if (j < n && (sql[j] == '+' || sql[j] == '-')) ++j;
                if (j < n && std::isdigit(static_cast<unsigned char>(sql[j]))) {
                    i = j;
                    while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
                }
            }
            if (i < n && ident_start(static_cast<unsigned char>(sql[i])))
                return ParseError{i, "malformed number"};
            push(TokenKind::number, std::string(sql.substr(start, i - start)), start);
            continue;
        }
        if (ident_start(c)) {
            while (i < n && ident_char(static_cast<unsigned char>(sql[i]))) ++i;
            push(TokenKind::identifier, std::string(sql.substr(start, i - start)), start);
            continue;
        }
        auto two = i + 1 < n ? sql.substr(i, 2) : std::string_view{};
        if (two == "<=" || two == ">=" || two == "!=" || two == "<>" || two == "==" || two == "||") {
            push(TokenKind::symbol, std::string(two), start);
            i += 2;
            continue;
        }
        static constexpr std::string_view singles = "(),.;*+-/%=<>";
        if (singles.find(static_cast<char>(c)) != std::string_view::npos) {
            push(TokenKind::symbol, std::string(1, static_cast<char>(c)), start);
            ++i;
            continue;
        }
        return ParseError{i, std::string("unexpected character '") + static_cast<char>(c) + "'"};
    }
    Token end;
    end.pos = n;
    out.push_back(end);
    return out;
}

bool has_top_level_order_by(std::string_view sql) {
    auto lexed = tokenize(sql);
    if (std::holds_alternative<ParseError>(lexed)) return false;
    const auto& toks = std::get<std::vector<Token>>(lexed);
    int depth = 0;
    for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
        if (toks[i].is_symbol("(")) ++depth;
        else if (toks[i].is_symbol(")")) --depth;
        else if (depth == 0 && toks[i].is_word("order") && toks[i + 1].is_word("by")) return true;
    }
    return false;
}

std::string skeleton(std::string_view sql) {
    auto lexed = tokenize(sql);
    if (std::holds_alternative<ParseError>(lexed)) return to_lower(trim(sql));
    std::string out;
    for (const auto& t : std::get<std::vector<Token>>(lexed)) {
        if (t.kind == TokenKind::end) break;
        std::string piece;
        if (t.kind == TokenKind::identifier && (detail::is_reserved(t.lower) || detail::is_aggregate(t.lower)))
            piece = t.lower;
        else if (t.kind == TokenKind::symbol)
            piece = t.text;
        else
            piece = "_";
        if (!out.empty()) out += ' ';
        out += piece;
    }
    return out;
}

}  // namespace t2s::sql
