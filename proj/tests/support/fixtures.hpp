#pragma once

#include <string>

#include "t2s/dataset.hpp"

namespace t2s::fx {

fs::path fixture_dir();

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

/// Runs a SQL script into a fresh database file.
fs::path build_db(const fs::path& script, const fs::path& out);

/// Builds the spider_mini databases under `root`/database and returns a
/// source pointing at the committed catalog and splits.
DatasetSource spider_mini_source(const fs::path& root, bool with_db = true);
DatasetBundle spider_mini(const fs::path& root, bool with_db = true);

std::string slurp(const fs::path& p);

}  // namespace t2s::fx
