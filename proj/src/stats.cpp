#include "dyadgc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace dyadgc {

WilcoxonResult wilcoxon_signed_rank(const PairedSample& s) {
    if (s.values_a.size() != s.values_b.size())
        throw ShapeError("wilcoxon: paired samples differ in length");
    if (s.values_a.size() < 1) throw InsufficientData("wilcoxon: empty sample");

    std::vector<double> diffs;
    for (Eigen::Index i = 0; i < s.values_a.size(); ++i) {
        const double d = s.values_a(i) - s.values_b(i);
        if (!std::isfinite(d)) throw DegenerateSeries("wilcoxon: non-finite value");
        if (d != 0.0) diffs.push_back(d);
    }
    WilcoxonResult r;
    const int n = static_cast<int>(diffs.size());
    r.n_effective = n;
    if (n == 0) {
        r.degenerate = true;
        r.p_value = 1.0;
        return r;
    }

    // Doubled average ranks of |d| keep every rank sum an integer.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int l, int r2) { return std::abs(diffs[l]) < std::abs(diffs[r2]); });
    std::vector<long> rank2(n);
    double tie_term = 0.0;
    for (int i = 0; i < n;) {
        int j = i;
        while (j + 1 < n && std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]])) ++j;
        const long doubled = static_cast<long>(i + 1) + static_cast<long>(j + 1);
        for (int k = i; k <= j; ++k) rank2[order[k]] = doubled;
        const double t = j - i + 1;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    const long total2 = static_cast<long>(n) * (n + 1);
    long plus2 = 0;
    for (int i = 0; i < n; ++i)
        if (diffs[i] > 0.0) plus2 += rank2[i];
    const long min2 = std::min(plus2, total2 - plus2);
    r.w_plus = plus2 / 2.0;
    r.w_min = min2 / 2.0;

    if (n <= kWilcoxonExactMax) {
        // Number of sign patterns per doubled positive-rank sum.
        std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
        count[0] = 1.0;
        long reach = 0;
        for (int i = 0; i < n; ++i) {
            for (long v = reach; v >= 0; --v)
                if (count[v] != 0.0) count[v + rank2[i]] += count[v];
            reach += rank2[i];
        }
        double extreme = 0.0;
        for (long v = 0; v <= total2; ++v)
            if (std::min(v, total2 - v) <= min2) extreme += count[v];
        r.p_value = std::min(1.0, std::ldexp(extreme, -n));
        r.exact = true;
    } else {
        const double nn = n;
        const double mean = nn * (nn + 1.0) / 4.0;
        const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
        const double z = var > 0.0 ? (r.w_plus - mean) / std::sqrt(var) : 0.0;
        r.p_value = std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
        r.exact = false;
    }
    return r;
}

std::vector<bool> benjamini_hochberg(std::span<const double> p_values, double q) {
    if (!(q > 0.0 && q <= 1.0)) throw ConfigError("benjamini_hochberg: q must lie in (0, 1]");
    const std::size_t m = p_values.size();
    for (const double p : p_values)
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("benjamini_hochberg: p-value outside [0, 1]");
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t l, std::size_t r) { return p_values[l] < p_values[r]; });
    std::size_t k = 0;
    for (std::size_t i = 0; i < m; ++i)
        if (p_values[order[i]] <= static_cast<double>(i + 1) * q / static_cast<double>(m)) k = i + 1;
    std::vector<bool> reject(m, false);
    for (std::size_t i = 0; i < k; ++i) reject[order[i]] = true;
    return reject;
}

CohortCounts normalize_by_cohort_max(const CohortCounts& counts) {
    std::map<std::string, double> max_by_expr;
    for (const auto& [pid, by_cond] : counts.values)
        for (const auto& [cond, by_expr] : by_cond)
            for (const auto& [expr, v] : by_expr) max_by_expr[expr] = std::max(max_by_expr[expr], v);
    CohortCounts out = counts;
    for (auto& [pid, by_cond] : out.values)
        for (auto& [cond, by_expr] : by_cond)
            for (auto& [expr, v] : by_expr)
                if (max_by_expr[expr] > 0.0) v /= max_by_expr[expr];
    return out;
}

std::vector<ComparisonRow> condition_comparison(const CohortCounts& counts, double q,
                                                WConvention convention) {
    if (counts.values.size() < 2)
        throw InsufficientData("condition_comparison: need at least two participants");
    std::set<std::string> expressions;
    for (const auto& [pid, by_cond] : counts.values)
        for (const auto& [cond, by_expr] : by_cond)
            for (const auto& [expr, v] : by_expr) expressions.insert(expr);

    std::vector<ComparisonRow> rows;
    for (const auto& expr : expressions) {
        for (std::size_t i = 0; i < kAllConditions.size(); ++i) {
            for (std::size_t j = i + 1; j < kAllConditions.size(); ++j) {
                const Condition ca = kAllConditions[i], cb = kAllConditions[j];
                std::vector<double> va, vb;
                for (const auto& [pid, by_cond] : counts.values) {
                    const auto ia = by_cond.find(ca), ib = by_cond.find(cb);
                    if (ia == by_cond.end() || ib == by_cond.end()) continue;
                    const auto ea = ia->second.find(expr), eb = ib->second.find(expr);
                    if (ea == ia->second.end() || eb == ib->second.end()) continue;
                    va.push_back(ea->second);
                    vb.push_back(eb->second);
                }
                if (va.size() < 2) continue;
                PairedSample sample{expr,
                                    Eigen::Map<const Eigen::VectorXd>(va.data(), static_cast<Eigen::Index>(va.size())),
                                    Eigen::Map<const Eigen::VectorXd>(vb.data(), static_cast<Eigen::Index>(vb.size()))};
                const WilcoxonResult w = wilcoxon_signed_rank(sample);
                rows.push_back({expr, ca, cb, w.p_value, w.w(convention), w.n_effective, false});
            }
        }
    }
    std::vector<double> ps;
    for (const auto& r : rows) ps.push_back(r.p_value);
    const auto reject = benjamini_hochberg(ps, q);
    for (std::size_t k = 0; k < rows.size(); ++k) rows[k].significant_after_bh = reject[k];
    return rows;
}

std::vector<ComparisonRow> significant_rows(const std::vector<ComparisonRow>& rows) {
    std::vector<ComparisonRow> out;
    std::copy_if(rows.begin(), rows.end(), std::back_inserter(out),
                 [](const ComparisonRow& r) { return r.significant_after_bh; });
    return out;
}

}  // namespace dyadgc
