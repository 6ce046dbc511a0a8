#include "fixtures.hpp"

#include <atomic>
#include <random>
#include <unistd.h>

#include "t2s/sqlite_db.hpp"

namespace t2s::fx {

fs::path fixture_dir() { return T2S_FIXTURE_DIR; }

TempDir::TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("t2s-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" + std::to_string(rd()));
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

fs::path build_db(const fs::path& script, const fs::path& out) {
    fs::create_directories(out.parent_path());
    fs::remove(out);
    auto db = SqliteDb::open(out, SqliteDb::Mode::read_write_create);
    db.exec(read_file(script));
    return out;
}

DatasetSource spider_mini_source(const fs::path& root, bool with_db) {
    const fs::path dir = fixture_dir() / "spider_mini";
    DatasetSource src;
    src.name = "spider-mini";
    src.dialect = Dialect::spider;
    src.tables = dir / "tables.json";
    src.splits = {{"train", dir / "train.json"}, {"dev", dir / "dev.json"}};
    if (with_db) {
        for (const char* db : {"concert_singer", "college_2"})
            build_db(dir / "sql" / (std::string(db) + ".sql"), root / "database" / db / (std::string(db) + ".sqlite"));
        src.db_dir = root / "database";
    }
    return src;
}

DatasetBundle spider_mini(const fs::path& root, bool with_db) { return load_bundle(spider_mini_source(root, with_db)); }

std::string slurp(const fs::path& p) { return read_file(p); }

}  // namespace t2s::fx
