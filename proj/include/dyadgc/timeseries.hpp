#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "dyadgc/errors.hpp"

namespace dyadgc {

using Frame = std::int64_t;

/// Degrees-of-freedom correction used for every standard deviation the
/// library reports (AU baselines, summary statistics). Sample convention.
inline constexpr int kStdDdof = 1;

/// Standard deviations below this are treated as zero when dividing.
inline constexpr double kStdFloor = 1e-12;

inline constexpr double kDefaultFrameRate = 25.0;

/// Uniformly sampled scalar signal anchored at an absolute frame index.
template <typename Scalar>
class BasicTimeSeries {
public:
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    BasicTimeSeries() = default;

    explicit BasicTimeSeries(Vector values, Frame start_frame = 0,
                             double frame_rate_hz = kDefaultFrameRate)
        : values_(std::move(values)), start_frame_(start_frame), frame_rate_hz_(frame_rate_hz) {
        if (start_frame_ < 0) throw ShapeError("time series start_frame must be >= 0");
        if (!(frame_rate_hz_ > 0.0)) throw ConfigError("frame rate must be positive");
        if (!values_.allFinite()) throw DegenerateSeries("time series contains NaN or Inf");
    }

    const Vector& values() const { return values_; }
    Eigen::Index size() const { return values_.size(); }
    bool empty() const { return values_.size() == 0; }
    Frame start_frame() const { return start_frame_; }
    /// One past the last covered frame.
    Frame end_frame() const { return start_frame_ + values_.size(); }
    double frame_rate_hz() const { return frame_rate_hz_; }

    Scalar at_frame(Frame f) const { return values_(static_cast<Eigen::Index>(f - start_frame_)); }

    /// Sub-series covering the closed frame range [first, last].
    BasicTimeSeries slice(Frame first, Frame last) const {
        if (first < start_frame_ || last >= end_frame() || last < first - 1)
            throw ShapeError("slice [" + std::to_string(first) + ", " + std::to_string(last) +
                             "] outside series");
        return BasicTimeSeries(values_.segment(first - start_frame_, last - first + 1), first,
                               frame_rate_hz_);
    }

private:
    Vector values_;
    Frame start_frame_ = 0;
    double frame_rate_hz_ = kDefaultFrameRate;
};

using TimeSeries = BasicTimeSeries<double>;

/// Boolean per-frame mask (activation, interval coverage).
class BinaryMask {
public:
    using Bits = Eigen::Array<bool, Eigen::Dynamic, 1>;

    BinaryMask() = default;
    explicit BinaryMask(Bits bits, Frame start_frame = 0)
        : bits_(std::move(bits)), start_frame_(start_frame) {
        if (start_frame_ < 0) throw ShapeError("mask start_frame must be >= 0");
    }
    static BinaryMask constant(Eigen::Index n, bool value, Frame start_frame = 0) {
        return BinaryMask(Bits::Constant(n, value), start_frame);
    }

    const Bits& bits() const { return bits_; }
    Bits& bits() { return bits_; }
    Eigen::Index size() const { return bits_.size(); }
    Frame start_frame() const { return start_frame_; }
    Frame end_frame() const { return start_frame_ + bits_.size(); }
    bool operator[](Eigen::Index i) const { return bits_(i); }
    Eigen::Index count() const { return bits_.count(); }

    friend bool operator==(const BinaryMask& a, const BinaryMask& b) {
        return a.start_frame_ == b.start_frame_ && a.bits_.size() == b.bits_.size() &&
               (a.bits_ == b.bits_).all();
    }

private:
    Bits bits_;
    Frame start_frame_ = 0;
};

/// Two aligned stretches of signal starting at frame `offset`.
struct SegmentPair {
    Frame offset = 0;
    Eigen::VectorXd x;
    Eigen::VectorXd y;

    Eigen::Index size() const { return x.size(); }
};

/// Pearson correlation of two equally sized vectors. A constant argument
/// yields 0 (no co-movement evidence) instead of NaN.
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar pearson(const Eigen::MatrixBase<DerivedX>& x,
                                  const Eigen::MatrixBase<DerivedY>& y) {
    using Scalar = typename DerivedX::Scalar;
    if (x.size() != y.size())
        throw ShapeError("pearson: length mismatch (" + std::to_string(x.size()) + " vs " +
                         std::to_string(y.size()) + ")");
    if (x.size() < 2) throw ShapeError("pearson: need at least two samples");
    const auto is_constant = [](const auto& v) { return (v.array() == v(0)).all(); };
    if (is_constant(x) || is_constant(y)) return Scalar(0);
    const auto xc = (x.array() - x.mean()).eval();
    const auto yc = (y.array() - y.mean()).eval();
    const Scalar sxx = xc.square().sum();
    const Scalar syy = yc.square().sum();
    if (sxx <= Scalar(0) || syy <= Scalar(0)) return Scalar(0);
    const Scalar r = (xc * yc).sum() / std::sqrt(sxx * syy);
    return std::clamp(r, Scalar(-1), Scalar(1));
}

template <typename Scalar>
Scalar pearson(const BasicTimeSeries<Scalar>& x, const BasicTimeSeries<Scalar>& y) {
    return pearson(x.values(), y.values());
}

/// Zero mean, unit population standard deviation. Constant input maps to
/// all zeros.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> standardized(
    const Eigen::MatrixBase<Derived>& x) {
    using Scalar = typename Derived::Scalar;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    if (x.size() < 2) throw DegenerateSeries("standardize: need at least two samples");
    if ((x.array() == x(0)).all()) return Vector::Zero(x.size());
    const Scalar mean = x.mean();
    Vector centered = x.array() - mean;
    Scalar sd = std::sqrt(centered.squaredNorm() / static_cast<Scalar>(x.size()));
    if (sd < Scalar(kStdFloor)) sd = Scalar(1);
    return centered / sd;
}

template <typename Scalar>
BasicTimeSeries<Scalar> standardize(const BasicTimeSeries<Scalar>& x) {
    return BasicTimeSeries<Scalar>(standardized(x.values()), x.start_frame(), x.frame_rate_hz());
}

/// Delay (s > 0) or advance (s < 0) a series by |s| frames, keeping only
/// the frames still covered by the unshifted series. Frame t of the result
/// holds the original value at t - s.
template <typename Scalar>
BasicTimeSeries<Scalar> shift(const BasicTimeSeries<Scalar>& x, Eigen::Index s) {
    const Eigen::Index n = x.size();
    if (std::abs(s) >= n)
        throw ShapeError("shift: |" + std::to_string(s) + "| >= length " + std::to_string(n));
    if (s >= 0)
        return BasicTimeSeries<Scalar>(x.values().head(n - s), x.start_frame() + s,
                                       x.frame_rate_hz());
    const Eigen::Index a = -s;
    return BasicTimeSeries<Scalar>(x.values().tail(n - a), x.start_frame(), x.frame_rate_hz());
}

/// Restrict two series to their common frame range.
template <typename Scalar>
std::pair<BasicTimeSeries<Scalar>, BasicTimeSeries<Scalar>> align(
    const BasicTimeSeries<Scalar>& x, const BasicTimeSeries<Scalar>& y) {
    const Frame first = std::max(x.start_frame(), y.start_frame());
    const Frame last = std::min(x.end_frame(), y.end_frame()) - 1;
    if (last < first) throw EmptyOverlap("align: series do not overlap");
    return {x.slice(first, last), y.slice(first, last)};
}

/// Windowed majority vote. Windows are truncated at the edges; a tie in a
/// truncated window resolves to false.
BinaryMask median_filter(const BinaryMask& m, int kernel);

}  // namespace dyadgc
