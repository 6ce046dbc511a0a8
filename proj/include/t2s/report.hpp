#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "t2s/metrics.hpp"

namespace t2s {

/// Counts for one bucket. em_n / ex_n count the records where that metric
/// was decided, so a disabled metric shows up as n/a rather than 0.
struct Tally {
    std::int64_t n = 0;
    std::int64_t em_n = 0;
    std::int64_t em_correct = 0;
    std::int64_t ex_n = 0;
    std::int64_t ex_correct = 0;

    friend bool operator==(const Tally&, const Tally&) = default;
};

struct RunSummary {
    std::string run_id;
    std::string config_fingerprint;
    DifficultyScheme scheme = DifficultyScheme::spider4;
    std::map<Difficulty, Tally> buckets;  // every label of the scheme
    Tally unlabeled;                      // records without a difficulty
    Tally overall;
    std::optional<double> ves_mean;

    std::optional<double> em_rate(const Tally& t) const;
    std::optional<double> ex_rate(const Tally& t) const;

    friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

std::vector<Difficulty> scheme_labels(DifficultyScheme scheme);

/// Records labelled with another scheme's difficulty are a ContractViolation.
RunSummary summarize(std::span<const EvalRecord> records, DifficultyScheme scheme, const std::string& run_id,
                     const std::string& config_fingerprint);

/// Reduced fraction with a positive denominator.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    static Rational of(std::int64_t num, std::int64_t den);
    Rational operator-() const { return {-num, den}; }
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    friend bool operator==(const Rational&, const Rational&) = default;
};

struct BucketDelta {
    std::optional<Rational> em;  // empty when either side has no decided records
    std::optional<Rational> ex;
    friend bool operator==(const BucketDelta&, const BucketDelta&) = default;
};

struct DeltaReport {
    std::string base_run;
    std::string target_run;
    DifficultyScheme scheme = DifficultyScheme::spider4;
    std::map<Difficulty, BucketDelta> buckets;
    BucketDelta overall;
    friend bool operator==(const DeltaReport&, const DeltaReport&) = default;
};

/// target rate minus base rate, positive when the target is better.
DeltaReport compare(const RunSummary& base, const RunSummary& target);

enum class ReportFormat { plain_table, csv, structured };

std::optional<ReportFormat> parse_report_format(std::string_view s);

std::string render(const RunSummary& s, ReportFormat format);
std::string render(const DeltaReport& d, ReportFormat format);

RunSummary parse_summary_csv(std::string_view text);
json to_json(const RunSummary& s);
RunSummary summary_from_json(const json& j);
json to_json(const DeltaReport& d);

}  // namespace t2s
