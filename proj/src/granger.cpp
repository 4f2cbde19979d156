#include "dyadgc/granger.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace dyadgc {

std::string_view to_string(OrderCriterion c) { return c == OrderCriterion::aic ? "aic" : "bic"; }

OrderCriterion parse_criterion(std::string_view s) {
    if (s == "aic") return OrderCriterion::aic;
    if (s == "bic") return OrderCriterion::bic;
    throw ConfigError("unknown order criterion '" + std::string(s) + "'");
}

std::string_view to_string(Direction d) {
    switch (d) {
        case Direction::sender_causes_receiver: return "sender_causes_receiver";
        case Direction::receiver_causes_sender: return "receiver_causes_sender";
        case Direction::bidirectional: return "bidirectional";
        case Direction::none: return "none";
    }
    return "none";
}

Direction parse_direction(std::string_view s) {
    for (const auto d : {Direction::sender_causes_receiver, Direction::receiver_causes_sender,
                         Direction::bidirectional, Direction::none})
        if (to_string(d) == s) return d;
    throw ConfigError("unknown direction '" + std::string(s) + "'");
}

LaggedDesign build_design(std::span<const SegmentPair> segments, int order, int min_target) {
    if (order < 1) throw ConfigError("model order must be >= 1");
    const Eigen::Index first = std::max(order, min_target);
    Eigen::Index rows = 0;
    for (const auto& seg : segments) {
        if (seg.x.size() != seg.y.size()) throw ShapeError("segment x/y length mismatch");
        rows += std::max<Eigen::Index>(0, seg.size() - first);
    }

    LaggedDesign d;
    d.order = order;
    d.x_lags.resize(rows, order);
    d.y_lags.resize(rows, order);
    d.x_target.resize(rows);
    d.y_target.resize(rows);
    d.origin.reserve(static_cast<std::size_t>(rows));
    Eigen::Index r = 0;
    for (std::size_t k = 0; k < segments.size(); ++k) {
        const auto& seg = segments[k];
        for (Eigen::Index t = first; t < seg.size(); ++t, ++r) {
            d.x_target(r) = seg.x(t);
            d.y_target(r) = seg.y(t);
            for (int j = 1; j <= order; ++j) {
                d.x_lags(r, j - 1) = seg.x(t - j);
                d.y_lags(r, j - 1) = seg.y(t - j);
            }
            d.origin.push_back({k, t});
        }
    }
    return d;
}

namespace {

Eigen::MatrixXd with_intercept(std::initializer_list<const Eigen::MatrixXd*> blocks, Eigen::Index rows) {
    Eigen::Index cols = 1;
    for (const auto* b : blocks) cols += b->cols();
    Eigen::MatrixXd out(rows, cols);
    out.col(0).setOnes();
    Eigen::Index c = 1;
    for (const auto* b : blocks) {
        out.middleCols(c, b->cols()) = *b;
        c += b->cols();
    }
    return out;
}

OlsFit checked_ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& target, const char* what) {
    OlsFit fit = ols(design, target);
    if (fit.rank < design.cols())
        throw SingularDesign(std::string("rank-deficient design in ") + what + " (rank " +
                             std::to_string(fit.rank) + " of " + std::to_string(design.cols()) + ")");
    return fit;
}

}  // namespace

VarModel fit_var(std::span<const SegmentPair> segments, int order) {
    const LaggedDesign design = build_design(segments, order);
    const Eigen::Index T = design.rows();
    if (T < 4 * order + 4)
        throw InsufficientData("fit_var: " + std::to_string(T) + " regression rows, need " +
                               std::to_string(4 * order + 4));

    const Eigen::MatrixXd full = with_intercept({&design.x_lags, &design.y_lags}, T);
    const Eigen::MatrixXd own_x = with_intercept({&design.x_lags}, T);
    const Eigen::MatrixXd own_y = with_intercept({&design.y_lags}, T);

    const OlsFit ex = checked_ols(full, design.x_target, "enriched x equation");
    const OlsFit ey = checked_ols(full, design.y_target, "enriched y equation");
    const OlsFit rx = checked_ols(own_x, design.x_target, "restricted x equation");
    const OlsFit ry = checked_ols(own_y, design.y_target, "restricted y equation");

    VarModel m;
    m.order = order;
    m.n_effective = T;
    m.a = ex.coeffs.segment(1, order);
    m.b = ex.coeffs.segment(1 + order, order);
    m.c = ey.coeffs.segment(1, order);
    m.d = ey.coeffs.segment(1 + order, order);
    m.a_restricted = rx.coeffs.tail(order);
    m.d_restricted = ry.coeffs.tail(order);
    const double n = static_cast<double>(T);
    m.resid_var_enriched_x = ex.rss / n;
    m.resid_var_enriched_y = ey.rss / n;
    m.resid_var_restricted_x = rx.rss / n;
    m.resid_var_restricted_y = ry.rss / n;
    return m;
}

double f_statistic(double resid_var_restricted, double resid_var_enriched, Eigen::Index n_effective,
                   int order) {
    if (order < 1) throw ConfigError("f_statistic: order must be >= 1");
    const Eigen::Index dof = n_effective - 2 * order - 1;
    if (dof <= 0)
        throw InsufficientData("f_statistic: T = " + std::to_string(n_effective) +
                               " leaves no residual degrees of freedom");
    if (resid_var_enriched < 0.0 || resid_var_restricted < 0.0)
        throw ConfigError("f_statistic: negative residual variance");
    const double gain = resid_var_restricted - resid_var_enriched;
    if (resid_var_restricted <= 0.0 || gain <= 0.0) {
        if (gain < -1e-9 * std::max(1.0, resid_var_restricted))
            throw ConfigError("f_statistic: restricted residual variance below enriched");
        return 0.0;
    }
    return gain * static_cast<double>(dof) / (resid_var_restricted * order);
}

int select_order(std::span<const SegmentPair> segments, int m_max, OrderCriterion criterion) {
    if (m_max < 1) throw ConfigError("select_order: m_max must be >= 1");
    const LaggedDesign design = build_design(segments, m_max);
    const Eigen::Index T = design.rows();
    if (T <= 2 * m_max + 1)
        throw InsufficientData("select_order: " + std::to_string(T) + " rows for m_max " +
                               std::to_string(m_max));
    const double n = static_cast<double>(T);
    const double penalty = criterion == OrderCriterion::aic ? 2.0 : std::log(n);

    int best_order = 1;
    double best_ic = std::numeric_limits<double>::infinity();
    for (int m = 1; m <= m_max; ++m) {
        const Eigen::MatrixXd xl = design.x_lags.leftCols(m);
        const Eigen::MatrixXd yl = design.y_lags.leftCols(m);
        const Eigen::MatrixXd full = with_intercept({&xl, &yl}, T);
        const OlsFit fx = checked_ols(full, design.x_target, "order selection");
        const OlsFit fy = checked_ols(full, design.y_target, "order selection");
        Eigen::MatrixXd resid(T, 2);
        resid.col(0) = design.x_target - full * fx.coeffs;
        resid.col(1) = design.y_target - full * fy.coeffs;
        const Eigen::Matrix2d sigma = resid.transpose() * resid / n;
        const double det = sigma.determinant();
        const double log_det = det > 0.0 ? std::log(det) : -std::numeric_limits<double>::infinity();
        const double k = 2.0 * (2.0 * m + 1.0);
        const double ic = n * log_det + penalty * k;
        if (ic < best_ic) {
            best_ic = ic;
            best_order = m;
        }
    }
    return best_order;
}

Direction classify(double p_y_causes_x, double p_x_causes_y, double alpha) {
    const bool y_to_x = p_y_causes_x <= alpha;
    const bool x_to_y = p_x_causes_y <= alpha;
    if (x_to_y && y_to_x) return Direction::bidirectional;
    if (x_to_y) return Direction::sender_causes_receiver;
    if (y_to_x) return Direction::receiver_causes_sender;
    return Direction::none;
}

namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
}

}  // namespace

GCTestResult gc_test(std::span<const SegmentPair> segments, int order, double alpha) {
    check_alpha(alpha);
    const VarModel m = fit_var(segments, order);
    GCTestResult r;
    r.alpha = alpha;
    r.order = order;
    r.n_effective = m.n_effective;
    const double dof = static_cast<double>(m.n_effective - 2 * order - 1);
    r.f_y_causes_x = f_statistic(m.resid_var_restricted_x, m.resid_var_enriched_x, m.n_effective, order);
    r.f_x_causes_y = f_statistic(m.resid_var_restricted_y, m.resid_var_enriched_y, m.n_effective, order);
    r.p_y_causes_x = f_sf(r.f_y_causes_x, order, dof);
    r.p_x_causes_y = f_sf(r.f_x_causes_y, order, dof);
    r.outcome = classify(r.p_y_causes_x, r.p_x_causes_y, alpha);
    return r;
}

GCTestResult average_gc(std::span<const GCTestResult> results, std::span<const double> weights) {
    if (results.empty()) throw EmptyInput("average_gc: no interval results");
    if (weights.size() != results.size()) throw ShapeError("average_gc: one weight per result required");
    const int order = results.front().order;
    const double alpha = results.front().alpha;
    double wsum = 0.0, f_yx = 0.0, f_xy = 0.0;
    Eigen::Index pooled = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (results[i].order != order || results[i].alpha != alpha)
            throw ConfigError("average_gc: results differ in order or alpha");
        if (!(weights[i] > 0.0)) throw ConfigError("average_gc: weights must be positive");
        wsum += weights[i];
        f_yx += weights[i] * results[i].f_y_causes_x;
        f_xy += weights[i] * results[i].f_x_causes_y;
        pooled += results[i].n_effective;
    }
    if (results.size() == 1) return results.front();

    GCTestResult r;
    r.alpha = alpha;
    r.order = order;
    r.n_effective = pooled;
    r.f_y_causes_x = f_yx / wsum;
    r.f_x_causes_y = f_xy / wsum;
    const double dof = static_cast<double>(pooled - 2 * order - 1);
    r.p_y_causes_x = f_sf(r.f_y_causes_x, order, dof);
    r.p_x_causes_y = f_sf(r.f_x_causes_y, order, dof);
    r.outcome = classify(r.p_y_causes_x, r.p_x_causes_y, alpha);
    return r;
}

GCTestResult gc_test_averaged(std::span<const SegmentPair> segments, int order, double alpha) {
    std::vector<GCTestResult> results;
    std::vector<double> weights;
    for (const auto& seg : segments) {
        if (seg.size() - order < 4 * order + 4) continue;
        try {
            results.push_back(gc_test(std::span(&seg, 1), order, alpha));
            weights.push_back(static_cast<double>(seg.size()));
        } catch (const SingularDesign&) {
            // A flat interval carries no evidence; the remaining ones decide.
        }
    }
    if (results.empty())
        throw InsufficientData("gc_test_averaged: no segment long enough for order " +
                               std::to_string(order));
    return average_gc(results, weights);
}

}  // namespace dyadgc
