#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "t2s/difficulty.hpp"
#include "t2s/util.hpp"

namespace t2s {

enum class ColumnType { text, number, time, boolean, other };

/// Case-folds the declared type and maps it by prefix onto the five kinds.
ColumnType map_column_type(std::string_view declared);
std::string_view to_string(ColumnType t);

struct ColumnDef {
    std::string name;           // identifier as used in SQL and prompts
    ColumnType data_type = ColumnType::other;
    std::string original_name;  // human-readable name from the catalog, if any
};

struct TableDef {
    std::string name;
    std::vector<ColumnDef> columns;

    /// Case-insensitive lookup.
    std::optional<std::size_t> find_column(std::string_view column) const;
};

struct ColumnRef {
    std::string table;
    std::string column;
};

struct ForeignKey {
    ColumnRef from;
    ColumnRef to;
};

struct DatabaseSchema {
    std::string db_id;
    std::vector<TableDef> tables;
    std::vector<ColumnRef> primary_keys;
    std::vector<ForeignKey> foreign_keys;

    const TableDef* find_table(std::string_view table) const;
    /// Throws ValidationError naming every key that does not resolve.
    void validate() const;
};

/// True when both schemas describe the same tables, columns, types and keys,
/// ignoring identifier case and the order of key lists.
bool schemas_equivalent(const DatabaseSchema& a, const DatabaseSchema& b);

struct ExampleTriple {
    int index = 0;
    std::string split;
    std::string question;
    std::string gold_sql;
    std::string db_id;
    std::optional<DifficultyLabel> difficulty;
    std::optional<std::string> evidence;
};

enum class Dialect { spider, bird };

std::string_view to_string(Dialect d);
std::optional<Dialect> parse_dialect(std::string_view s);

struct DatasetBundle {
    std::string name;
    Dialect dialect = Dialect::spider;
    std::map<std::string, std::vector<ExampleTriple>> splits;
    std::map<std::string, DatabaseSchema> schemas;
    std::map<std::string, fs::path> db_files;

    const DatabaseSchema& schema(const std::string& db_id) const;
    std::optional<fs::path> db_file(const std::string& db_id) const;
    const std::vector<ExampleTriple>& split(const std::string& name) const;
};

/// Parses a tables catalog (array of Spider/BIRD tables entries).
std::vector<DatabaseSchema> parse_schema_catalog(const json& catalog);
std::vector<DatabaseSchema> load_schemas(const fs::path& path);

/// Parses example records against the bundle's schemas. Indices are
/// assigned sequentially from zero; `split` is stamped on every triple.
std::vector<ExampleTriple> parse_examples(const json& records, const DatasetBundle& bundle,
                                          const std::string& split);
std::vector<ExampleTriple> load_examples(const fs::path& path, const DatasetBundle& bundle,
                                         const std::string& split);

/// Reads the schema of a SQLite database file from the engine catalog.
/// db_id is the file stem.
DatabaseSchema introspect_database(const fs::path& db_file);

/// Where a dataset lives on disk. Database files are expected at
/// db_dir/{db_id}/{db_id}.sqlite, the layout both benchmarks ship.
struct DatasetSource {
    std::string name;
    Dialect dialect = Dialect::spider;
    fs::path tables;
    std::map<std::string, fs::path> splits;
    std::optional<fs::path> db_dir;
};

/// Loads schemas, then every split, then locates database files. Missing
/// database files are allowed; everything else that fails is collected into
/// one ValidationError.
DatasetBundle load_bundle(const DatasetSource& source);

json to_json(const DatabaseSchema& schema);
json to_json(const ExampleTriple& example);
json to_json(const DatasetBundle& bundle);

}  // namespace t2s
