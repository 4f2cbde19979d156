#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "dyadgc/au.hpp"

namespace dyadgc {

/// Exact null distribution is used up to this many non-zero differences.
inline constexpr int kWilcoxonExactMax = 25;

enum class WConvention { min_sum, positive_sum };

struct PairedSample {
    std::string label;
    Eigen::VectorXd values_a;
    Eigen::VectorXd values_b;
};

struct WilcoxonResult {
    /// Smaller of the two signed-rank sums.
    double w_min = 0.0;
    /// Sum of ranks of positive differences (a - b > 0).
    double w_plus = 0.0;
    double p_value = 1.0;
    int n_effective = 0;
    bool exact = true;
    /// All differences were zero; p is reported as 1.
    bool degenerate = false;

    double w(WConvention c) const { return c == WConvention::min_sum ? w_min : w_plus; }
};

/// Two-sided signed-rank test. Zero differences are dropped, ties get
/// average ranks. Exact for n_effective <= kWilcoxonExactMax, otherwise
/// normal approximation with tie correction.
WilcoxonResult wilcoxon_signed_rank(const PairedSample& s);

/// Benjamini-Hochberg step-up decisions in input order.
std::vector<bool> benjamini_hochberg(std::span<const double> p_values, double q = 0.05);

/// Normalised occurrence of each expression per participant and condition.
struct CohortCounts {
    // participant -> condition -> expression -> value
    std::map<std::string, std::map<Condition, std::map<std::string, double>>> values;
};

/// Divide each expression's counts by its maximum over the cohort.
CohortCounts normalize_by_cohort_max(const CohortCounts& counts);

struct ComparisonRow {
    std::string expression;
    Condition condition_a = Condition::respectful;
    Condition condition_b = Condition::contempt;
    double p_value = 1.0;
    double w_statistic = 0.0;
    int n_effective = 0;
    bool significant_after_bh = false;

    friend bool operator==(const ComparisonRow&, const ComparisonRow&) = default;
};

/// Wilcoxon test for every expression and unordered condition pair,
/// corrected with BH over the whole family. Returns every test; use
/// significant_rows() for the published subset.
std::vector<ComparisonRow> condition_comparison(const CohortCounts& counts, double q = 0.05,
                                                WConvention convention = WConvention::min_sum);

std::vector<ComparisonRow> significant_rows(const std::vector<ComparisonRow>& rows);

}  // namespace dyadgc
