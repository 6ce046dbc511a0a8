#include "t2s/report.hpp"

#include <cstdio>
#include <numeric>
#include <sstream>

#include "t2s/errors.hpp"

namespace t2s {

std::vector<Difficulty> scheme_labels(DifficultyScheme scheme) {
    if (scheme == DifficultyScheme::spider4) return {Difficulty::easy, Difficulty::medium, Difficulty::hard, Difficulty::extra};
    return {Difficulty::simple, Difficulty::moderate, Difficulty::challenge};
}

std::optional<double> RunSummary::em_rate(const Tally& t) const {
    if (t.em_n == 0) return std::nullopt;
    return static_cast<double>(t.em_correct) / static_cast<double>(t.em_n);
}

std::optional<double> RunSummary::ex_rate(const Tally& t) const {
    if (t.ex_n == 0) return std::nullopt;
    return static_cast<double>(t.ex_correct) / static_cast<double>(t.ex_n);
}

namespace {

void add(Tally& t, const EvalRecord& r) {
    t.n++;
    if (r.em) {
        t.em_n++;
        t.em_correct += *r.em ? 1 : 0;
    }
    if (r.ex) {
        t.ex_n++;
        t.ex_correct += *r.ex ? 1 : 0;
    }
}

}  // namespace

RunSummary summarize(std::span<const EvalRecord> records, DifficultyScheme scheme, const std::string& run_id,
                     const std::string& config_fingerprint) {
    RunSummary s;
    s.run_id = run_id;
    s.config_fingerprint = config_fingerprint;
    s.scheme = scheme;
    for (auto d : scheme_labels(scheme)) s.buckets[d] = Tally{};
    double ves_total = 0.0;
    bool any_ves = false;
    for (const auto& r : records) {
        if (r.difficulty) {
            if (r.difficulty->scheme != scheme || !belongs_to(r.difficulty->label, scheme))
                throw ContractViolation("record " + std::to_string(r.example_index) + " has difficulty '" +
                                        std::string(to_string(r.difficulty->label)) + "' outside scheme " +
                                        std::string(to_string(scheme)));
            add(s.buckets[r.difficulty->label], r);
        } else {
            add(s.unlabeled, r);
        }
        add(s.overall, r);
        if (r.ves_ratio) {
            any_ves = true;
            if (r.ex && *r.ex) ves_total += *r.ves_ratio;
        }
    }
    if (any_ves && s.overall.ex_n > 0) s.ves_mean = ves_total / static_cast<double>(s.overall.ex_n);
    return s;
}

Rational Rational::of(std::int64_t num, std::int64_t den) {
    if (den == 0) throw ContractViolation("zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const std::int64_t g = std::gcd(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    return {num, den};
}

namespace {

std::optional<Rational> rate_delta(std::int64_t base_c, std::int64_t base_n, std::int64_t tgt_c, std::int64_t tgt_n) {
    if (base_n == 0 || tgt_n == 0) return std::nullopt;
    return Rational::of(tgt_c * base_n - base_c * tgt_n, tgt_n * base_n);
}

BucketDelta delta(const Tally& base, const Tally& target) {
    return {rate_delta(base.em_correct, base.em_n, target.em_correct, target.em_n),
            rate_delta(base.ex_correct, base.ex_n, target.ex_correct, target.ex_n)};
}

}  // namespace

DeltaReport compare(const RunSummary& base, const RunSummary& target) {
    if (base.scheme != target.scheme)
        throw ContractViolation("cannot compare runs with different difficulty schemes (" +
                                std::string(to_string(base.scheme)) + " vs " + std::string(to_string(target.scheme)) +
                                ")");
    DeltaReport d;
    d.base_run = base.run_id;
    d.target_run = target.run_id;
    d.scheme = base.scheme;
    for (auto label : scheme_labels(base.scheme)) {
        auto b = base.buckets.find(label);
        auto t = target.buckets.find(label);
        d.buckets[label] = delta(b == base.buckets.end() ? Tally{} : b->second,
                                 t == target.buckets.end() ? Tally{} : t->second);
    }
    d.overall = delta(base.overall, target.overall);
    return d;
}

std::optional<ReportFormat> parse_report_format(std::string_view s) {
    if (s == "plain-table" || s == "plain" || s == "table") return ReportFormat::plain_table;
    if (s == "csv") return ReportFormat::csv;
    if (s == "structured" || s == "json") return ReportFormat::structured;
    return std::nullopt;
}

namespace {

std::string pad_left(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

constexpr std::size_t label_width = 8;
constexpr std::size_t cell_width = 12;

std::string table_row(const std::string& label, const std::vector<std::string>& cells) {
    std::string line = pad_right(label, label_width);
    for (const auto& c : cells) line += pad_left(c, cell_width);
    return line + "\n";
}

std::string signed_rate(const std::optional<Rational>& r) {
    if (!r) return "n/a";
    std::string s = format_rational(r->num, r->den);
    if (r->num > 0 && s != "0.000") s.insert(s.begin(), '+');
    return s;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

// RFC 4180 records; quoted fields may span lines.
std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !field.empty()) {
                row.push_back(std::move(field));
                rows.push_back(std::move(row));
            }
            row.clear();
            field.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (quoted) throw ValidationError("csv: unterminated quoted field");
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::int64_t parse_count(const std::string& s) {
    std::size_t used = 0;
    std::int64_t v = 0;
    try {
        v = std::stoll(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty() || v < 0) throw ValidationError("csv: bad count '" + s + "'");
    return v;
}

const char* const csv_header = "run_id,config_fingerprint,scheme,bucket,n,em_n,em_correct,ex_n,ex_correct,ves_mean";

json tally_json(const RunSummary& s, const Tally& t) {
    auto rate = [](std::optional<double> r) { return r ? json(*r) : json(nullptr); };
    return {{"n", t.n},
            {"em_n", t.em_n},
            {"em_correct", t.em_correct},
            {"ex_n", t.ex_n},
            {"ex_correct", t.ex_correct},
            {"em_rate", rate(s.em_rate(t))},
            {"ex_rate", rate(s.ex_rate(t))}};
}

Tally tally_from_json(const json& j) {
    return {j.at("n").get<std::int64_t>(), j.at("em_n").get<std::int64_t>(), j.at("em_correct").get<std::int64_t>(),
            j.at("ex_n").get<std::int64_t>(), j.at("ex_correct").get<std::int64_t>()};
}

json rational_json(const std::optional<Rational>& r) {
    if (!r) return nullptr;
    return {{"num", r->num}, {"den", r->den}, {"value", r->value()}};
}

json bucket_delta_json(const BucketDelta& b) { return {{"em", rational_json(b.em)}, {"ex", rational_json(b.ex)}}; }

}  // namespace

std::string render(const RunSummary& s, ReportFormat format) {
    if (format == ReportFormat::structured) return to_json(s).dump(2) + "\n";
    if (format == ReportFormat::csv) {
        std::string out = std::string(csv_header) + "\n";
        auto row = [&](const std::string& bucket, const Tally& t, bool with_ves) {
            out += csv_field(s.run_id) + "," + csv_field(s.config_fingerprint) + "," + std::string(to_string(s.scheme)) +
                   "," + bucket + "," + std::to_string(t.n) + "," + std::to_string(t.em_n) + "," +
                   std::to_string(t.em_correct) + "," + std::to_string(t.ex_n) + "," + std::to_string(t.ex_correct) +
                   "," + (with_ves && s.ves_mean ? format_double_exact(*s.ves_mean) : "") + "\n";
        };
        for (const auto& [label, t] : s.buckets) row(std::string(to_string(label)), t, false);
        row("unlabeled", s.unlabeled, false);
        row("overall", s.overall, true);
        return out;
    }

    std::vector<std::string> header;
    std::vector<const Tally*> cols;
    for (auto label : scheme_labels(s.scheme)) {
        header.emplace_back(display_name(label));
        auto it = s.buckets.find(label);
        static const Tally empty{};
        cols.push_back(it == s.buckets.end() ? &empty : &it->second);
    }
    if (s.unlabeled.n > 0) {
        header.emplace_back("Unlabeled");
        cols.push_back(&s.unlabeled);
    }
    header.emplace_back("Overall");
    cols.push_back(&s.overall);

    std::string out = "run " + s.run_id + "  config " + s.config_fingerprint + "\n";
    out += table_row("", header);
    if (s.overall.n == 0) return out;
    std::vector<std::string> n, ex, em;
    for (const auto* t : cols) {
        n.push_back(std::to_string(t->n));
        ex.push_back(format_rational(t->ex_correct, t->ex_n));
        em.push_back(format_rational(t->em_correct, t->em_n));
    }
    out += table_row("n", n);
    out += table_row("EX", ex);
    out += table_row("EM", em);
    if (s.ves_mean) {
        std::vector<std::string> ves(cols.size(), "");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", *s.ves_mean);
        ves.back() = buf;
        out += table_row("VES", ves);
    }
    return out;
}

std::string render(const DeltaReport& d, ReportFormat format) {
    if (format == ReportFormat::structured) return to_json(d).dump(2) + "\n";
    if (format == ReportFormat::csv) {
        std::string out = "base_run,target_run,scheme,bucket,metric,num,den\n";
        auto row = [&](const std::string& bucket, const char* metric, const std::optional<Rational>& r) {
            out += csv_field(d.base_run) + "," + csv_field(d.target_run) + "," + std::string(to_string(d.scheme)) + "," +
                   bucket + "," + metric + "," + (r ? std::to_string(r->num) : "") + "," +
                   (r ? std::to_string(r->den) : "") + "\n";
        };
        for (const auto& [label, b] : d.buckets) {
            row(std::string(to_string(label)), "ex", b.ex);
            row(std::string(to_string(label)), "em", b.em);
        }
        row("overall", "ex", d.overall.ex);
        row("overall", "em", d.overall.em);
        return out;
    }
    std::vector<std::string> header;
    std::vector<const BucketDelta*> cols;
    for (auto label : scheme_labels(d.scheme)) {
        header.emplace_back(display_name(label));
        auto it = d.buckets.find(label);
        static const BucketDelta empty{};
        cols.push_back(it == d.buckets.end() ? &empty : &it->second);
    }
    header.emplace_back("Overall");
    cols.push_back(&d.overall);
    std::string out = "base " + d.base_run + "  target " + d.target_run + "\n";
    out += table_row("", header);
    std::vector<std::string> ex, em;
    for (const auto* b : cols) {
        ex.push_back(signed_rate(b->ex));
        em.push_back(signed_rate(b->em));
    }
    out += table_row("EX", ex);
    out += table_row("EM", em);
    return out;
}

RunSummary parse_summary_csv(std::string_view text) {
    auto rows = parse_csv(text);
    if (rows.empty() || join(rows[0], ",") != csv_header) throw ValidationError("csv: missing summary header");
    RunSummary s;
    bool have_scheme = false, have_overall = false;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() != 10) throw ValidationError("csv: row " + std::to_string(i) + " has " + std::to_string(r.size()) + " fields");
        auto scheme = parse_scheme(r[2]);
        if (!scheme) throw ValidationError("csv: unknown scheme '" + r[2] + "'");
        if (!have_scheme) {
            s.run_id = r[0];
            s.config_fingerprint = r[1];
            s.scheme = *scheme;
            have_scheme = true;
        }
        Tally t{parse_count(r[4]), parse_count(r[5]), parse_count(r[6]), parse_count(r[7]), parse_count(r[8])};
        if (r[3] == "overall") {
            s.overall = t;
            have_overall = true;
            if (!r[9].empty()) {
                std::size_t used = 0;
                s.ves_mean = std::stod(r[9], &used);
                if (used != r[9].size()) throw ValidationError("csv: bad ves_mean '" + r[9] + "'");
            }
        } else if (r[3] == "unlabeled") {
            s.unlabeled = t;
        } else {
            auto label = parse_difficulty(r[3]);
            if (!label || label->scheme != s.scheme) throw ValidationError("csv: unknown bucket '" + r[3] + "'");
            s.buckets[label->label] = t;
        }
    }
    if (!have_overall) throw ValidationError("csv: no overall row");
    return s;
}

json to_json(const RunSummary& s) {
    json buckets = json::object();
    for (const auto& [label, t] : s.buckets) buckets[std::string(to_string(label))] = tally_json(s, t);
    return {{"run_id", s.run_id},
            {"config_fingerprint", s.config_fingerprint},
            {"scheme", std::string(to_string(s.scheme))},
            {"buckets", buckets},
            {"unlabeled", tally_json(s, s.unlabeled)},
            {"overall", tally_json(s, s.overall)},
            {"ves_mean", s.ves_mean ? json(*s.ves_mean) : json(nullptr)}};
}

RunSummary summary_from_json(const json& j) {
    try {
        RunSummary s;
        s.run_id = j.at("run_id").get<std::string>();
        s.config_fingerprint = j.at("config_fingerprint").get<std::string>();
        auto scheme = parse_scheme(j.at("scheme").get<std::string>());
        if (!scheme) throw ValidationError("summary: unknown scheme");
        s.scheme = *scheme;
        for (const auto& [name, t] : j.at("buckets").items()) {
            auto label = parse_difficulty(name);
            if (!label || label->scheme != s.scheme) throw ValidationError("summary: unknown bucket '" + name + "'");
            s.buckets[label->label] = tally_from_json(t);
        }
        s.unlabeled = tally_from_json(j.at("unlabeled"));
        s.overall = tally_from_json(j.at("overall"));
        if (j.contains("ves_mean") && !j["ves_mean"].is_null()) s.ves_mean = j["ves_mean"].get<double>();
        return s;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("summary: ") + e.what());
    }
}

json to_json(const DeltaReport& d) {
    json buckets = json::object();
    for (const auto& [label, b] : d.buckets) buckets[std::string(to_string(label))] = bucket_delta_json(b);
    return {{"base_run", d.base_run},
            {"target_run", d.target_run},
            {"scheme", std::string(to_string(d.scheme))},
            {"buckets", buckets},
            {"overall", bucket_delta_json(d.overall)}};
}

}  // namespace t2s
