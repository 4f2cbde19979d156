#include <cmath>
#include <limits>
#include <string>

#include "dyadgc/granger.hpp"

namespace dyadgc {

namespace {

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 100000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = std::numeric_limits<double>::min() / kEps;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    return h;
}

// I_x(a, b) given both x and 1 - x, so callers can supply an accurate
// complement when x is close to 1.
double incomplete_beta_split(double a, double b, double x, double one_minus_x) {
    if (x <= 0.0) return 0.0;
    if (one_minus_x <= 0.0) return 1.0;
    const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                  a * std::log(x) + b * std::log(one_minus_x));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, one_minus_x) / b;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("incomplete_beta: a and b must be positive");
    if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("incomplete_beta: x must lie in [0, 1]");
    return incomplete_beta_split(a, b, x, 1.0 - x);
}

double f_sf(double f, double d1, double d2) {
    if (!(d1 >= 1.0) || !(d2 >= 1.0))
        throw ConfigError("f_sf: degrees of freedom must be >= 1 (got " + std::to_string(d1) + ", " +
                          std::to_string(d2) + ")");
    if (!(f >= 0.0)) throw ConfigError("f_sf: statistic must be >= 0");
    if (f == 0.0) return 1.0;
    if (std::isinf(f)) return 0.0;
    // P(F > f) = I_{d2 / (d2 + d1 f)}(d2 / 2, d1 / 2)
    const double denom = d2 + d1 * f;
    const double p = incomplete_beta_split(d2 / 2.0, d1 / 2.0, d2 / denom, d1 * f / denom);
    return std::min(1.0, std::max(0.0, p));
}

}  // namespace dyadgc
