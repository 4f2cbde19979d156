#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dyadgc/au.hpp"
#include "dyadgc/granger.hpp"
#include "dyadgc/intervals.hpp"
#include "dyadgc/stats.hpp"

namespace dyadgc {

/// pooled: one VAR on the concatenated intervals. averaged: one VAR per
/// interval, F statistics combined by average_gc.
enum class GcMode { pooled, averaged };
/// expression: GC on the mean of the member AUs. per_au: GC per member AU
/// at a common order, combined by average_gc.
enum class SignalMode { expression, per_au };

std::string_view to_string(GcMode m);
GcMode parse_gc_mode(std::string_view s);
std::string_view to_string(SignalMode m);
SignalMode parse_signal_mode(std::string_view s);
std::string_view to_string(WConvention c);
WConvention parse_w_convention(std::string_view s);

struct PipelineConfig {
    IntervalParams intervals;
    double confidence = kDefaultConfidence;
    double alpha = 0.05;
    OrderCriterion criterion = OrderCriterion::bic;
    int m_max = 12;
    GcMode mode = GcMode::pooled;
    SignalMode signal = SignalMode::expression;
    double activation_factor = kDefaultActivationFactor;
    double fdr_q = 0.05;
    WConvention w_convention = WConvention::min_sum;
    /// Expression names to analyse; empty means the whole registry.
    std::vector<std::string> expressions;
    /// Worker threads; 0 picks the hardware concurrency.
    int jobs = 0;

    /// Throws ConfigError on any invalid value.
    void validate() const;
    std::vector<ExpressionDef> expression_defs() const;
};

/// Applies one `key = value` setting; throws ConfigError on an unknown key
/// or a malformed value.
void apply_setting(PipelineConfig& cfg, std::string_view key, std::string_view value);

/// Flat `key = value` lines, `#` starts a comment. Unlisted keys keep their
/// defaults.
PipelineConfig parse_config(std::istream& is);
/// "default" (or an empty path) yields the built-in defaults.
PipelineConfig load_config(const std::string& path_or_default);
void write_config(std::ostream& os, const PipelineConfig& cfg);

struct ManifestRow {
    std::string pair_id;
    Role role = Role::sender;
    Condition condition = Condition::respectful;
    std::filesystem::path path;
};

struct Manifest {
    std::vector<ManifestRow> rows;

    /// Throws FormatError on duplicates or a pair missing a role.
    void validate() const;
    std::vector<std::string> pair_ids() const;
    std::vector<Condition> conditions() const;
    const ManifestRow* find(const std::string& pair_id, Role role, Condition c) const;
};

/// CSV with header `pair_id,role,condition,path`. Relative paths resolve
/// against the manifest's directory.
Manifest load_manifest(const std::filesystem::path& path);
Manifest parse_manifest(std::istream& is, const std::filesystem::path& base_dir);
void write_manifest(std::ostream& os, const Manifest& m);

enum class GcMethod { full_span, interval_selected };
std::string_view to_string(GcMethod m);

/// One GC run on one pair, condition and expression.
struct CellRecord {
    std::string pair_id;
    Condition condition = Condition::respectful;
    std::string expression;
    GcMethod method = GcMethod::full_span;
    /// Empty when the cell could not be tested; `reason` says why.
    std::optional<GCTestResult> result;
    /// Set when the cell was analysable but the test degenerated; it then
    /// counts as no causality.
    bool degenerate = false;
    std::string reason;
    Frame frames_used = 0;
    std::size_t segments = 0;

    Direction outcome() const { return result ? result->outcome : Direction::none; }
};

struct DirectionCounts {
    int s_gc_r = 0;
    int r_gc_s = 0;
    int bidirectional = 0;
    int none = 0;
    int degenerate = 0;

    void add(Direction d);
    int total() const { return s_gc_r + r_gc_s + bidirectional + none; }
    /// The larger of S_GC_R and R_GC_S; empty on a tie.
    std::optional<Direction> dominant() const;
    friend bool operator==(const DirectionCounts&, const DirectionCounts&) = default;
};

struct ExpressionRow {
    std::string expression;
    int analyzable = 0;
    DirectionCounts full_span;
    DirectionCounts interval_selected;
    friend bool operator==(const ExpressionRow&, const ExpressionRow&) = default;
};

struct AverageCounts {
    double s_gc_r = 0.0;
    double r_gc_s = 0.0;
    double bidirectional = 0.0;
    double none = 0.0;
    friend bool operator==(const AverageCounts&, const AverageCounts&) = default;
};

struct ConditionTable {
    Condition condition = Condition::respectful;
    std::vector<ExpressionRow> rows;
    /// Mean over the rows with at least one analysable pair.
    AverageCounts average_full_span;
    AverageCounts average_interval_selected;
    friend bool operator==(const ConditionTable&, const ConditionTable&) = default;
};

struct ConditionReport {
    GcMode mode = GcMode::pooled;
    SignalMode signal = SignalMode::expression;
    double alpha = 0.05;
    std::vector<ConditionTable> tables;
    std::vector<ComparisonRow> occurrence;
    std::vector<std::string> warnings;
    friend bool operator==(const ConditionReport&, const ConditionReport&) = default;
};

struct PipelineResult {
    ConditionReport report;
    std::vector<CellRecord> records;
    /// Selected intervals keyed by "<pair>_<condition>_<expression>".
    std::map<std::string, IntervalSet> intervals;
};

/// Both recordings of one pair in one condition, synchronised.
struct CellInput {
    std::string pair_id;
    Condition condition = Condition::respectful;
    SyncedPair synced;
};

/// Relevant intervals of one expression in one cell: per-AU shifted mining
/// inside each run of confident frames, per-AU median filtering,
/// intersection over the member AUs, dilation, and a final restriction to
/// the confident frames. Throws ConfigError when an AU is missing.
IntervalSet select_intervals(const CellInput& cell, const ExpressionDef& expr, const PipelineConfig& cfg);

/// GC for one expression, over the given intervals or, when `intervals` is
/// null, over every run of confident frames. Failures become degenerate
/// records rather than exceptions.
CellRecord granger_cell(const CellInput& cell, const ExpressionDef& expr, const IntervalSet* intervals,
                        const PipelineConfig& cfg);

/// Parses and synchronises every pair and condition in the manifest.
/// Cells whose files fail to load are reported in `warnings`.
std::vector<CellInput> load_cells(const Manifest& m, const PipelineConfig& cfg,
                                  std::vector<std::string>& warnings);

PipelineResult run_pipeline(const Manifest& m, const PipelineConfig& cfg);

/// Builds the condition tables from cell records.
std::vector<ConditionTable> tabulate(const std::vector<CellRecord>& records,
                                     const std::vector<Condition>& conditions,
                                     const std::vector<std::string>& expressions);

enum class ReportFormat { csv, json, both };
ReportFormat parse_report_format(std::string_view s);

/// report.csv and report_<condition>.csv, occurrence.csv, report.json,
/// depending on `format`.
void emit_report(const ConditionReport& report, const std::filesystem::path& dir, ReportFormat format);
/// results.jsonl plus intervals/<key>.tsv.
void emit_records(const PipelineResult& result, const std::filesystem::path& dir);

std::string report_to_json(const ConditionReport& report);
ConditionReport report_from_json(std::string_view text);
std::string record_to_json(const CellRecord& r);
CellRecord record_from_json(std::string_view text);

/// Shortest decimal that round-trips, used for every number written.
std::string format_number(double v);

}  // namespace dyadgc
