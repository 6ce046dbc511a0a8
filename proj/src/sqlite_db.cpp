#include "t2s/sqlite_db.hpp"

#include <sqlite3.h>

#include <cstdio>

#include "t2s/util.hpp"

namespace t2s {

std::string describe(const Cell& cell) {
    struct Visitor {
        std::string operator()(std::monostate) const { return "NULL"; }
        std::string operator()(std::int64_t v) const { return std::to_string(v); }
        std::string operator()(double v) const { return format_double_exact(v); }
        std::string operator()(const std::string& v) const { return "'" + v + "'"; }
        std::string operator()(const Blob& b) const { return "<blob " + std::to_string(b.bytes.size()) + "B>"; }
    };
    return std::visit(Visitor{}, cell);
}

bool SqliteError::interrupted() const noexcept { return code_ == SQLITE_INTERRUPT; }

void SqliteDb::Closer::operator()(sqlite3* db) const noexcept { sqlite3_close_v2(db); }

SqliteDb SqliteDb::open(const std::filesystem::path& path, Mode mode) {
    sqlite3* raw = nullptr;
    const int flags = mode == Mode::read_only ? SQLITE_OPEN_READONLY
                                              : SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE;
    const int rc = sqlite3_open_v2(path.c_str(), &raw, flags | SQLITE_OPEN_NOMUTEX, nullptr);
    SqliteDb db(raw);
    if (rc != SQLITE_OK) {
        std::string msg = raw ? sqlite3_errmsg(raw) : sqlite3_errstr(rc);
        throw SqliteError(rc, "cannot open " + path.string() + ": " + msg);
    }
    if (mode == Mode::read_only) db.exec("PRAGMA query_only = 1");
    return db;
}

void SqliteDb::exec(const std::string& sql) {
    char* err = nullptr;
    const int rc = sqlite3_exec(db_.get(), sql.c_str(), nullptr, nullptr, &err);
    if (rc != SQLITE_OK) {
        std::string msg = err ? err : sqlite3_errstr(rc);
        sqlite3_free(err);
        throw SqliteError(rc, msg);
    }
}

namespace {

struct StatementCloser {
    void operator()(sqlite3_stmt* s) const noexcept { sqlite3_finalize(s); }
};

struct ProgressGuard {
    sqlite3* db;
    ~ProgressGuard() { sqlite3_progress_handler(db, 0, nullptr, nullptr); }
};

int deadline_check(void* arg) {
    const auto* deadline = static_cast<const std::chrono::steady_clock::time_point*>(arg);
    return std::chrono::steady_clock::now() >= *deadline ? 1 : 0;
}

Cell read_cell(sqlite3_stmt* stmt, int col) {
    switch (sqlite3_column_type(stmt, col)) {
        case SQLITE_INTEGER:
            return static_cast<std::int64_t>(sqlite3_column_int64(stmt, col));
        case SQLITE_FLOAT:
            return sqlite3_column_double(stmt, col);
        case SQLITE_TEXT: {
            const auto* text = reinterpret_cast<const char*>(sqlite3_column_text(stmt, col));
            return std::string(text, static_cast<std::size_t>(sqlite3_column_bytes(stmt, col)));
        }
        case SQLITE_BLOB: {
            const auto* data = static_cast<const unsigned char*>(sqlite3_column_blob(stmt, col));
            Blob b;
            b.bytes.assign(data, data + sqlite3_column_bytes(stmt, col));
            return b;
        }
        default:
            return std::monostate{};
    }
}

}  // namespace

std::vector<Row> SqliteDb::query(std::string_view sql,
                                 std::optional<std::chrono::steady_clock::time_point> deadline) {
    sqlite3* db = db_.get();
    ProgressGuard guard{db};
    if (deadline) sqlite3_progress_handler(db, 1000, deadline_check, &*deadline);

    sqlite3_stmt* raw = nullptr;
    int rc = sqlite3_prepare_v2(db, sql.data(), static_cast<int>(sql.size()), &raw, nullptr);
    std::unique_ptr<sqlite3_stmt, StatementCloser> stmt(raw);
    if (rc != SQLITE_OK) throw SqliteError(rc, sqlite3_errmsg(db));
    if (!stmt) throw SqliteError(SQLITE_MISUSE, "empty statement");

    std::vector<Row> rows;
    const int ncol = sqlite3_column_count(stmt.get());
    while ((rc = sqlite3_step(stmt.get())) == SQLITE_ROW) {
        Row row;
        row.reserve(static_cast<std::size_t>(ncol));
        for (int c = 0; c < ncol; ++c) row.push_back(read_cell(stmt.get(), c));
        rows.push_back(std::move(row));
    }
    if (rc != SQLITE_DONE) throw SqliteError(rc, sqlite3_errmsg(db));
    return rows;
}

}  // namespace t2s
