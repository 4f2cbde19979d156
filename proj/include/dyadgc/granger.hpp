#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "dyadgc/timeseries.hpp"

namespace dyadgc {

/// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// Survival function P(F > f) of the F(d1, d2) distribution.
/// Throws ConfigError for d1 < 1, d2 < 1 or negative f.
double f_sf(double f, double d1, double d2);

enum class OrderCriterion { aic, bic };
std::string_view to_string(OrderCriterion c);
OrderCriterion parse_criterion(std::string_view s);

/// Direction of influence between x (the sender) and y (the receiver).
enum class Direction { sender_causes_receiver, receiver_causes_sender, bidirectional, none };
std::string_view to_string(Direction d);
Direction parse_direction(std::string_view s);

/// Lagged regression rows built from segments. No row uses lags from a
/// different segment than its target.
struct LaggedDesign {
    struct RowOrigin {
        std::size_t segment;
        Eigen::Index target;   // position of the target sample inside its segment
    };

    int order = 0;
    Eigen::MatrixXd x_lags;  // T x M, column j-1 holds x(t-j)
    Eigen::MatrixXd y_lags;  // T x M
    Eigen::VectorXd x_target;
    Eigen::VectorXd y_target;
    std::vector<RowOrigin> origin;

    Eigen::Index rows() const { return x_target.size(); }
};

/// Rows for every target with a full lag window inside its own segment.
/// With `min_target` > order the first rows of each segment are skipped so
/// that fits of different orders share one estimation sample.
LaggedDesign build_design(std::span<const SegmentPair> segments, int order, int min_target = -1);

struct OlsFit {
    Eigen::VectorXd coeffs;
    double rss = 0.0;
    Eigen::Index rank = 0;
};

/// Minimum-norm least squares via complete orthogonal decomposition.
template <typename DerivedA, typename DerivedB>
OlsFit ols(const Eigen::MatrixBase<DerivedA>& design, const Eigen::MatrixBase<DerivedB>& target) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
    OlsFit fit;
    fit.coeffs = cod.solve(target);
    fit.rss = (target - design * fit.coeffs).squaredNorm();
    fit.rank = cod.rank();
    return fit;
}

/// Least-squares fits of the enriched and restricted autoregressions for
/// both equations. Residual variances are RSS / T. Intercepts are fitted
/// alongside the lag coefficients.
struct VarModel {
    int order = 0;
    Eigen::Index n_effective = 0;

    // x(t) = sum a_j x(t-j) + sum b_j y(t-j) + e(t)
    Eigen::VectorXd a, b;
    // y(t) = sum c_j x(t-j) + sum d_j y(t-j) + v(t)
    Eigen::VectorXd c, d;
    // Restricted models: own lags only.
    Eigen::VectorXd a_restricted, d_restricted;

    double resid_var_enriched_x = 0.0;
    double resid_var_restricted_x = 0.0;
    double resid_var_enriched_y = 0.0;
    double resid_var_restricted_y = 0.0;
};

/// Throws InsufficientData when fewer than 4M + 4 rows exist and
/// SingularDesign when a design matrix is rank deficient.
VarModel fit_var(std::span<const SegmentPair> segments, int order);

/// (restricted - enriched)(T - 2M - 1) / (restricted * M), clamped at 0
/// for round-off. Throws InsufficientData for T <= 2M + 1.
double f_statistic(double resid_var_restricted, double resid_var_enriched, Eigen::Index n_effective,
                   int order);

/// Order in [1, m_max] minimising the information criterion of the
/// bivariate enriched system; ties go to the smaller order.
int select_order(std::span<const SegmentPair> segments, int m_max,
                 OrderCriterion criterion = OrderCriterion::bic);

struct GCTestResult {
    double f_y_causes_x = 0.0;
    double p_y_causes_x = 1.0;
    double f_x_causes_y = 0.0;
    double p_x_causes_y = 1.0;
    double alpha = 0.05;
    int order = 0;
    Eigen::Index n_effective = 0;
    Direction outcome = Direction::none;
};

/// Outcome as a function of which null hypotheses are rejected (p <= alpha).
Direction classify(double p_y_causes_x, double p_x_causes_y, double alpha);

GCTestResult gc_test(std::span<const SegmentPair> segments, int order, double alpha = 0.05);

/// Weighted mean of the directional F statistics with p-values recomputed
/// at the pooled effective sample size. Throws EmptyInput on no results.
GCTestResult average_gc(std::span<const GCTestResult> results, std::span<const double> weights);

/// One test per segment long enough for `order`, combined by average_gc
/// with segment lengths as weights.
GCTestResult gc_test_averaged(std::span<const SegmentPair> segments, int order, double alpha = 0.05);

}  // namespace dyadgc
