#include "t2s/dataset.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "t2s/errors.hpp"
#include "t2s/sqlite_db.hpp"

namespace t2s {

// ---------------------------------------------------------------------------
// difficulty labels

bool belongs_to(Difficulty d, DifficultyScheme scheme) {
    switch (d) {
        case Difficulty::easy:
        case Difficulty::medium:
        case Difficulty::hard:
        case Difficulty::extra:
            return scheme == DifficultyScheme::spider4;
        default:
            return scheme == DifficultyScheme::bird3;
    }
}

std::string_view to_string(Difficulty d) {
    switch (d) {
        case Difficulty::easy: return "easy";
        case Difficulty::medium: return "medium";
        case Difficulty::hard: return "hard";
        case Difficulty::extra: return "extra";
        case Difficulty::simple: return "simple";
        case Difficulty::moderate: return "moderate";
        case Difficulty::challenge: return "challenge";
    }
    return "?";
}

std::string_view display_name(Difficulty d) {
    switch (d) {
        case Difficulty::easy: return "Easy";
        case Difficulty::medium: return "Medium";
        case Difficulty::hard: return "Hard";
        case Difficulty::extra: return "Extra";
        case Difficulty::simple: return "Simple";
        case Difficulty::moderate: return "Moderate";
        case Difficulty::challenge: return "Challenging";
    }
    return "?";
}

std::string_view to_string(DifficultyScheme s) { return s == DifficultyScheme::spider4 ? "spider4" : "bird3"; }

std::optional<DifficultyScheme> parse_scheme(std::string_view s) {
    if (s == "spider4") return DifficultyScheme::spider4;
    if (s == "bird3") return DifficultyScheme::bird3;
    return std::nullopt;
}

std::optional<DifficultyLabel> parse_difficulty(std::string_view raw) {
    const std::string s = to_lower(trim(raw));
    using D = Difficulty;
    using S = DifficultyScheme;
    if (s == "easy") return DifficultyLabel{S::spider4, D::easy};
    if (s == "medium") return DifficultyLabel{S::spider4, D::medium};
    if (s == "hard") return DifficultyLabel{S::spider4, D::hard};
    if (s == "extra" || s == "extra hard" || s == "extra_hard") return DifficultyLabel{S::spider4, D::extra};
    if (s == "simple") return DifficultyLabel{S::bird3, D::simple};
    if (s == "moderate") return DifficultyLabel{S::bird3, D::moderate};
    if (s == "challenge" || s == "challenging") return DifficultyLabel{S::bird3, D::challenge};
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// schema types

ColumnType map_column_type(std::string_view declared) {
    const std::string t = to_lower(trim(declared));
    auto starts = [&](std::string_view p) { return t.rfind(p, 0) == 0; };
    if (starts("int") || starts("real") || starts("numeric") || starts("decimal") || starts("number") ||
        starts("float") || starts("double") || starts("bigint") || starts("smallint") || starts("tinyint"))
        return ColumnType::number;
    if (starts("char") || starts("text") || starts("varchar") || starts("nvarchar") || starts("nchar") ||
        starts("clob"))
        return ColumnType::text;
    if (starts("date") || starts("time")) return ColumnType::time;
    if (starts("bool")) return ColumnType::boolean;
    return ColumnType::other;
}

std::string_view to_string(ColumnType t) {
    switch (t) {
        case ColumnType::text: return "text";
        case ColumnType::number: return "number";
        case ColumnType::time: return "time";
        case ColumnType::boolean: return "boolean";
        case ColumnType::other: return "others";
    }
    return "others";
}

std::optional<std::size_t> TableDef::find_column(std::string_view column) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (iequals(columns[i].name, column)) return i;
    return std::nullopt;
}

const TableDef* DatabaseSchema::find_table(std::string_view table) const {
    for (const auto& t : tables)
        if (iequals(t.name, table)) return &t;
    return nullptr;
}

void DatabaseSchema::validate() const {
    std::vector<std::string> issues;
    const std::string where = "database '" + db_id + "'";
    if (db_id.empty()) issues.push_back("database with empty db_id");
    std::set<std::string> table_names;
    for (const auto& t : tables) {
        if (t.name.empty()) issues.push_back(where + ": table with empty name");
        if (!table_names.insert(to_lower(t.name)).second)
            issues.push_back(where + ": duplicate table '" + t.name + "'");
        std::set<std::string> names;
        for (const auto& c : t.columns) {
            if (c.name.empty()) issues.push_back(where + ": table '" + t.name + "' has a column with empty name");
            if (!names.insert(to_lower(c.name)).second)
                issues.push_back(where + ": table '" + t.name + "' has duplicate column '" + c.name + "'");
        }
    }
    auto check = [&](const ColumnRef& ref, const std::string& what) {
        const TableDef* t = find_table(ref.table);
        if (!t)
            issues.push_back(where + ": " + what + " references unknown table '" + ref.table + "'");
        else if (!t->find_column(ref.column))
            issues.push_back(where + ": " + what + " references unknown column '" + ref.table + "." + ref.column + "'");
    };
    for (std::size_t i = 0; i < primary_keys.size(); ++i) check(primary_keys[i], "primary_keys[" + std::to_string(i) + "]");
    for (std::size_t i = 0; i < foreign_keys.size(); ++i) {
        check(foreign_keys[i].from, "foreign_keys[" + std::to_string(i) + "]");
        check(foreign_keys[i].to, "foreign_keys[" + std::to_string(i) + "]");
    }
    if (!issues.empty()) throw ValidationError(std::move(issues));
}

namespace {

std::tuple<std::string, std::string> folded(const ColumnRef& r) { return {to_lower(r.table), to_lower(r.column)}; }

}  // namespace

bool schemas_equivalent(const DatabaseSchema& a, const DatabaseSchema& b) {
    if (!iequals(a.db_id, b.db_id) || a.tables.size() != b.tables.size()) return false;
    for (const auto& ta : a.tables) {
        const TableDef* tb = b.find_table(ta.name);
        if (!tb || tb->columns.size() != ta.columns.size()) return false;
        for (std::size_t i = 0; i < ta.columns.size(); ++i) {
            if (!iequals(ta.columns[i].name, tb->columns[i].name)) return false;
            if (ta.columns[i].data_type != tb->columns[i].data_type) return false;
        }
    }
    auto keyset = [](const DatabaseSchema& s) {
        std::multiset<std::tuple<std::string, std::string>> pks;
        for (const auto& k : s.primary_keys) pks.insert(folded(k));
        std::multiset<std::tuple<std::string, std::string, std::string, std::string>> fks;
        for (const auto& fk : s.foreign_keys) {
            auto [ft, fc] = folded(fk.from);
            auto [tt, tc] = folded(fk.to);
            fks.emplace(ft, fc, tt, tc);
        }
        return std::pair{pks, fks};
    };
    return keyset(a) == keyset(b);
}

std::string_view to_string(Dialect d) { return d == Dialect::spider ? "spider" : "bird"; }

std::optional<Dialect> parse_dialect(std::string_view s) {
    const std::string l = to_lower(s);
    if (l == "spider" || l == "spider-style") return Dialect::spider;
    if (l == "bird" || l == "bird-style") return Dialect::bird;
    return std::nullopt;
}

const DatabaseSchema& DatasetBundle::schema(const std::string& db_id) const {
    auto it = schemas.find(db_id);
    if (it == schemas.end()) throw ValidationError("unknown db_id '" + db_id + "'");
    return it->second;
}

std::optional<fs::path> DatasetBundle::db_file(const std::string& db_id) const {
    auto it = db_files.find(db_id);
    if (it == db_files.end()) return std::nullopt;
    return it->second;
}

const std::vector<ExampleTriple>& DatasetBundle::split(const std::string& name) const {
    auto it = splits.find(name);
    if (it == splits.end()) throw ValidationError("split '" + name + "' is not loaded");
    return it->second;
}

// ---------------------------------------------------------------------------
// catalog loading

namespace {

DatabaseSchema parse_catalog_entry(const json& entry, std::size_t ordinal, std::vector<std::string>& issues) {
    DatabaseSchema schema;
    const std::string at = "catalog entry #" + std::to_string(ordinal);
    if (!entry.is_object() || !entry.contains("db_id") || !entry["db_id"].is_string()) {
        issues.push_back(at + ": missing db_id");
        return schema;
    }
    schema.db_id = entry["db_id"].get<std::string>();
    const std::string where = at + " ('" + schema.db_id + "')";

    auto field = [&](const char* name) -> const json* {
        if (!entry.contains(name) || !entry[name].is_array()) {
            issues.push_back(where + ": missing array field " + name);
            return nullptr;
        }
        return &entry[name];
    };
    const json* tables = field("table_names_original");
    const json* columns = field("column_names_original");
    const json* types = field("column_types");
    const json* pks = field("primary_keys");
    const json* fks = field("foreign_keys");
    if (!tables || !columns || !types || !pks || !fks) return schema;

    const json* readable = entry.contains("column_names") && entry["column_names"].is_array() &&
                                   entry["column_names"].size() == columns->size()
                               ? &entry["column_names"]
                               : nullptr;

    for (const auto& t : *tables) schema.tables.push_back(TableDef{t.get<std::string>(), {}});
    if (types->size() != columns->size())
        issues.push_back(where + ": column_types has " + std::to_string(types->size()) + " entries for " +
                         std::to_string(columns->size()) + " columns");

    // key indices count the [-1, "*"] entry, so a catalog without it is shifted by one
    if (columns->empty() || !(*columns)[0].is_array() || (*columns)[0].size() != 2 || (*columns)[0][0] != -1 ||
        (*columns)[0][1] != "*")
        issues.push_back(where + ": column_names_original[0] must be the [-1, \"*\"] entry");

    // Global column index -> (table, column) position; index 0 is the "*" sentinel.
    std::vector<std::optional<std::pair<std::size_t, std::size_t>>> slots(columns->size());
    for (std::size_t i = 0; i < columns->size(); ++i) {
        const json& c = (*columns)[i];
        if (!c.is_array() || c.size() != 2) {
            issues.push_back(where + ": column_names_original[" + std::to_string(i) + "] is not a pair");
            continue;
        }
        const int ti = c[0].get<int>();
        if (ti == -1) continue;
        if (ti < 0 || static_cast<std::size_t>(ti) >= schema.tables.size()) {
            issues.push_back(where + ": column_names_original[" + std::to_string(i) + "] has table index " +
                             std::to_string(ti) + " out of range");
            continue;
        }
        ColumnDef col;
        col.name = c[1].get<std::string>();
        col.original_name = readable ? (*readable)[i][1].get<std::string>() : col.name;
        col.data_type = i < types->size() ? map_column_type((*types)[i].get<std::string>()) : ColumnType::other;
        auto& table = schema.tables[static_cast<std::size_t>(ti)];
        slots[i] = std::pair{static_cast<std::size_t>(ti), table.columns.size()};
        table.columns.push_back(std::move(col));
    }

    auto resolve = [&](const json& idx, const std::string& what) -> std::optional<ColumnRef> {
        if (!idx.is_number_integer()) {
            issues.push_back(where + ": " + what + " is not a column index");
            return std::nullopt;
        }
        const auto i = idx.get<long long>();
        if (i < 0 || static_cast<std::size_t>(i) >= slots.size() || !slots[static_cast<std::size_t>(i)]) {
            issues.push_back(where + ": " + what + " references column index " + std::to_string(i) + " (have " +
                             std::to_string(slots.size()) + " columns)");
            return std::nullopt;
        }
        auto [t, c] = *slots[static_cast<std::size_t>(i)];
        return ColumnRef{schema.tables[t].name, schema.tables[t].columns[c].name};
    };

    for (std::size_t i = 0; i < pks->size(); ++i) {
        const json& pk = (*pks)[i];
        // Composite keys appear as nested lists in some catalogs.
        if (pk.is_array()) {
            for (std::size_t j = 0; j < pk.size(); ++j)
                if (auto r = resolve(pk[j], "primary_keys[" + std::to_string(i) + "][" + std::to_string(j) + "]"))
                    schema.primary_keys.push_back(*r);
        } else if (auto r = resolve(pk, "primary_keys[" + std::to_string(i) + "]")) {
            schema.primary_keys.push_back(*r);
        }
    }
    for (std::size_t i = 0; i < fks->size(); ++i) {
        const json& fk = (*fks)[i];
        const std::string what = "foreign_keys[" + std::to_string(i) + "]";
        if (!fk.is_array() || fk.size() != 2) {
            issues.push_back(where + ": " + what + " is not a pair");
            continue;
        }
        auto from = resolve(fk[0], what);
        auto to = resolve(fk[1], what);
        if (from && to) schema.foreign_keys.push_back(ForeignKey{*from, *to});
    }
    try {
        schema.validate();
    } catch (const ValidationError& e) {
        for (const auto& issue : e.issues()) issues.push_back(at + ": " + issue);
    }
    return schema;
}

}  // namespace

std::vector<DatabaseSchema> parse_schema_catalog(const json& catalog) {
    if (!catalog.is_array()) throw ValidationError("schema catalog must be an array of entries");
    std::vector<std::string> issues;
    std::vector<DatabaseSchema> out;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < catalog.size(); ++i) {
        DatabaseSchema s = parse_catalog_entry(catalog[i], i, issues);
        if (!s.db_id.empty() && !seen.insert(s.db_id).second)
            issues.push_back("catalog entry #" + std::to_string(i) + ": duplicate db_id '" + s.db_id + "'");
        out.push_back(std::move(s));
    }
    if (!issues.empty()) throw ValidationError(std::move(issues));
    return out;
}

std::vector<DatabaseSchema> load_schemas(const fs::path& path) { return parse_schema_catalog(read_json_file(path)); }

// ---------------------------------------------------------------------------
// examples

std::vector<ExampleTriple> parse_examples(const json& records, const DatasetBundle& bundle, const std::string& split) {
    if (!records.is_array()) throw ValidationError("examples file for split '" + split + "' must be an array");
    std::vector<std::string> issues;
    std::vector<ExampleTriple> out;
    out.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const json& r = records[i];
        const std::string at = split + " record #" + std::to_string(i);
        if (!r.is_object()) {
            issues.push_back(at + ": not an object");
            continue;
        }
        auto text = [&](std::initializer_list<const char*> keys) -> std::optional<std::string> {
            for (const char* k : keys)
                if (r.contains(k) && r[k].is_string()) return r[k].get<std::string>();
            return std::nullopt;
        };
        ExampleTriple e;
        e.index = static_cast<int>(i);
        e.split = split;
        auto question = text({"question"});
        auto sql = text({"query", "SQL", "sql"});
        auto db_id = text({"db_id"});
        if (!question || trim(*question).empty()) issues.push_back(at + ": missing question");
        if (!sql || trim(*sql).empty()) issues.push_back(at + ": missing SQL");
        if (!db_id) {
            issues.push_back(at + ": missing db_id");
        } else if (!bundle.schemas.count(*db_id)) {
            issues.push_back(at + ": unknown db_id '" + *db_id + "'");
        }
        if (!question || !sql || !db_id) continue;
        e.question = *question;
        e.gold_sql = *sql;
        e.db_id = *db_id;
        if (bundle.dialect == Dialect::bird) {
            e.evidence = text({"evidence"});
            if (auto d = text({"difficulty"})) {
                auto label = parse_difficulty(*d);
                if (!label || label->scheme != DifficultyScheme::bird3)
                    issues.push_back(at + ": difficulty '" + *d + "' is not a bird3 label");
                else
                    e.difficulty = label;
            }
        }
        out.push_back(std::move(e));
    }
    if (!issues.empty()) throw ValidationError(std::move(issues));
    return out;
}

std::vector<ExampleTriple> load_examples(const fs::path& path, const DatasetBundle& bundle, const std::string& split) {
    return parse_examples(read_json_file(path), bundle, split);
}

// ---------------------------------------------------------------------------
// introspection

DatabaseSchema introspect_database(const fs::path& db_file) {
    if (!fs::exists(db_file)) throw IoError("database file not found: " + db_file.string());
    DatabaseSchema schema;
    schema.db_id = db_file.stem().string();
    try {
        auto db = SqliteDb::open(db_file, SqliteDb::Mode::read_only);
        auto names = db.query(
            "SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY rowid");
        for (const auto& row : names) {
            TableDef table{std::get<std::string>(row[0]), {}};
            std::vector<std::pair<std::int64_t, std::string>> pk_cols;
            for (const auto& col : db.query("PRAGMA table_info(\"" + table.name + "\")")) {
                ColumnDef c;
                c.name = std::get<std::string>(col[1]);
                c.original_name = c.name;
                const auto* declared = std::get_if<std::string>(&col[2]);
                c.data_type = map_column_type(declared ? *declared : "");
                if (const auto* pk = std::get_if<std::int64_t>(&col[5]); pk && *pk > 0) pk_cols.emplace_back(*pk, c.name);
                table.columns.push_back(std::move(c));
            }
            std::sort(pk_cols.begin(), pk_cols.end());
            for (auto& [_, col] : pk_cols) schema.primary_keys.push_back(ColumnRef{table.name, col});
            schema.tables.push_back(std::move(table));
        }
        for (const auto& table : schema.tables) {
            for (const auto& fk : db.query("PRAGMA foreign_key_list(\"" + table.name + "\")")) {
                const auto& parent_raw = std::get<std::string>(fk[2]);
                const TableDef* parent = schema.find_table(parent_raw);
                std::string parent_name = parent ? parent->name : parent_raw;
                std::string to_col;
                if (const auto* to = std::get_if<std::string>(&fk[4])) {
                    to_col = *to;
                    if (parent)
                        if (auto i = parent->find_column(to_col)) to_col = parent->columns[*i].name;
                } else {
                    // REFERENCES parent without a column list targets the parent's primary key.
                    for (const auto& pk : schema.primary_keys)
                        if (iequals(pk.table, parent_name)) to_col = pk.column;
                }
                std::string from_col = std::get<std::string>(fk[3]);
                if (auto i = table.find_column(from_col)) from_col = table.columns[*i].name;
                schema.foreign_keys.push_back(ForeignKey{{table.name, from_col}, {parent_name, to_col}});
            }
        }
    } catch (const SqliteError& e) {
        throw IoError("cannot introspect " + db_file.string() + ": " + e.what());
    }
    return schema;
}

// ---------------------------------------------------------------------------
// bundle

DatasetBundle load_bundle(const DatasetSource& source) {
    DatasetBundle bundle;
    bundle.name = source.name;
    bundle.dialect = source.dialect;
    for (const auto& s : load_schemas(source.tables)) bundle.schemas.emplace(s.db_id, s);

    std::vector<std::string> issues;
    for (const auto& [split, path] : source.splits) {
        if (split != "train" && split != "dev" && split != "test") {
            issues.push_back("split name '" + split + "' is not one of train/dev/test");
            continue;
        }
        try {
            bundle.splits[split] = load_examples(path, bundle, split);
        } catch (const ValidationError& e) {
            issues.insert(issues.end(), e.issues().begin(), e.issues().end());
        } catch (const IoError& e) {
            issues.emplace_back(e.what());
        }
    }
    if (!issues.empty()) throw ValidationError(std::move(issues));

    if (source.db_dir) {
        for (const auto& [db_id, _] : bundle.schemas) {
            fs::path p = *source.db_dir / db_id / (db_id + ".sqlite");
            if (fs::exists(p)) bundle.db_files.emplace(db_id, p);
        }
    }
    return bundle;
}

// ---------------------------------------------------------------------------
// serialization

json to_json(const DatabaseSchema& schema) {
    json tables = json::array();
    for (const auto& t : schema.tables) {
        json cols = json::array();
        for (const auto& c : t.columns)
            cols.push_back({{"name", c.name}, {"type", to_string(c.data_type)}, {"original_name", c.original_name}});
        tables.push_back({{"name", t.name}, {"columns", cols}});
    }
    json pks = json::array();
    for (const auto& k : schema.primary_keys) pks.push_back({k.table, k.column});
    json fks = json::array();
    for (const auto& fk : schema.foreign_keys) fks.push_back({{fk.from.table, fk.from.column}, {fk.to.table, fk.to.column}});
    return {{"db_id", schema.db_id}, {"tables", tables}, {"primary_keys", pks}, {"foreign_keys", fks}};
}

json to_json(const ExampleTriple& e) {
    json j = {{"index", e.index}, {"split", e.split}, {"question", e.question}, {"query", e.gold_sql}, {"db_id", e.db_id}};
    if (e.difficulty) j["difficulty"] = to_string(e.difficulty->label);
    if (e.evidence) j["evidence"] = *e.evidence;
    return j;
}

json to_json(const DatasetBundle& bundle) {
    json splits = json::object();
    for (const auto& [name, examples] : bundle.splits) {
        json arr = json::array();
        for (const auto& e : examples) arr.push_back(to_json(e));
        splits[name] = arr;
    }
    json schemas = json::object();
    for (const auto& [id, s] : bundle.schemas) schemas[id] = to_json(s);
    json files = json::object();
    for (const auto& [id, p] : bundle.db_files) files[id] = p.string();
    return {{"name", bundle.name}, {"dialect", to_string(bundle.dialect)}, {"splits", splits},
            {"schemas", schemas}, {"db_files", files}};
}

}  // namespace t2s
