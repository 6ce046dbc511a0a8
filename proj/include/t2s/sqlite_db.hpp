#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

struct sqlite3;

namespace t2s {

struct Blob {
    std::vector<unsigned char> bytes;
    friend bool operator==(const Blob&, const Blob&) = default;
};

/// One result cell: NULL, integer, real, text or blob.
using Cell = std::variant<std::monostate, std::int64_t, double, std::string, Blob>;
using Row = std::vector<Cell>;

std::string describe(const Cell& cell);

class SqliteError : public std::runtime_error {
public:
    SqliteError(int code, const std::string& message) : std::runtime_error(message), code_(code) {}
    int code() const noexcept { return code_; }
    bool interrupted() const noexcept;

private:
    int code_;
};

/// RAII connection. Read-only connections also set query_only so that no
/// statement can modify the file.
class SqliteDb {
public:
    enum class Mode { read_only, read_write_create };

    static SqliteDb open(const std::filesystem::path& path, Mode mode);

    /// Runs one or more statements, discarding results.
    void exec(const std::string& sql);

    /// Runs the first statement in `sql` and fetches every row. When a
    /// deadline is given the statement is interrupted once it passes and
    /// SqliteError::interrupted() is true.
    std::vector<Row> query(std::string_view sql,
                           std::optional<std::chrono::steady_clock::time_point> deadline = std::nullopt);

    sqlite3* handle() const noexcept { return db_.get(); }

private:
    struct Closer {
        void operator()(sqlite3* db) const noexcept;
    };
    explicit SqliteDb(sqlite3* db) : db_(db) {}
    std::unique_ptr<sqlite3, Closer> db_;
};

}  // namespace t2s
