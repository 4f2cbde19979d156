#include "dyadgc/intervals.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

namespace dyadgc {

IntervalSet::IntervalSet(std::vector<Interval> intervals) : intervals_(std::move(intervals)) {
    for (std::size_t i = 0; i < intervals_.size(); ++i) {
        const auto& iv = intervals_[i];
        if (iv.a < 0 || iv.b < iv.a)
            throw ShapeError("malformed interval [" + std::to_string(iv.a) + ", " +
                             std::to_string(iv.b) + "]");
        if (i > 0 && intervals_[i - 1].b >= iv.a)
            throw ShapeError("intervals must be sorted and disjoint");
    }
}

IntervalSet IntervalSet::from_mask(const BinaryMask& m) {
    std::vector<Interval> out;
    const auto& bits = m.bits();
    Eigen::Index i = 0;
    while (i < bits.size()) {
        if (!bits(i)) { ++i; continue; }
        Eigen::Index j = i;
        while (j + 1 < bits.size() && bits(j + 1)) ++j;
        out.push_back({m.start_frame() + i, m.start_frame() + j, std::nullopt});
        i = j + 1;
    }
    return IntervalSet(std::move(out));
}

BinaryMask IntervalSet::to_mask(Frame first, Frame end) const {
    BinaryMask::Bits bits = BinaryMask::Bits::Constant(std::max<Frame>(0, end - first), false);
    for (const auto& iv : intervals_) {
        const Frame lo = std::max(iv.a, first);
        const Frame hi = std::min(iv.b, end - 1);
        if (lo <= hi) bits.segment(lo - first, hi - lo + 1).setConstant(true);
    }
    return BinaryMask(std::move(bits), first);
}

Frame IntervalSet::total_length() const {
    Frame total = 0;
    for (const auto& iv : intervals_) total += iv.length();
    return total;
}

bool IntervalSet::contains(Frame f) const {
    auto it = std::upper_bound(intervals_.begin(), intervals_.end(), f,
                               [](Frame v, const Interval& iv) { return v < iv.a; });
    return it != intervals_.begin() && std::prev(it)->b >= f;
}

void IntervalParams::validate() const {
    if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in (0, 1]");
    if (l_min < 2) throw ConfigError("l_min must be >= 2");
    if (median_kernel < 1 || median_kernel % 2 == 0)
        throw ConfigError("median_kernel must be odd and >= 1");
    if (extension < 0) throw ConfigError("extension must be >= 0");
    if (shifts.empty()) throw ConfigError("shift grid is empty");
}

namespace {

/// O(1) windowed Pearson correlation from prefix sums of centred data.
/// Constant windows are detected exactly through a count of value changes.
class WindowCorrelation {
public:
    WindowCorrelation(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
        const Eigen::Index n = x.size();
        const Eigen::VectorXd xc = x.array() - x.mean();
        const Eigen::VectorXd yc = y.array() - y.mean();
        sx_.setZero(n + 1); sy_.setZero(n + 1);
        sxx_.setZero(n + 1); syy_.setZero(n + 1); sxy_.setZero(n + 1);
        cx_.assign(n + 1, 0); cy_.assign(n + 1, 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sx_(i + 1) = sx_(i) + xc(i);
            sy_(i + 1) = sy_(i) + yc(i);
            sxx_(i + 1) = sxx_(i) + xc(i) * xc(i);
            syy_(i + 1) = syy_(i) + yc(i) * yc(i);
            sxy_(i + 1) = sxy_(i) + xc(i) * yc(i);
            cx_[i + 1] = cx_[i] + (i > 0 && x(i) != x(i - 1));
            cy_[i + 1] = cy_[i] + (i > 0 && y(i) != y(i - 1));
        }
    }

    /// Correlation over positions [a, b].
    double operator()(Eigen::Index a, Eigen::Index b) const {
        if (cx_[b + 1] == cx_[a + 1] || cy_[b + 1] == cy_[a + 1]) return 0.0;
        const double m = static_cast<double>(b - a + 1);
        const double sx = sx_(b + 1) - sx_(a);
        const double sy = sy_(b + 1) - sy_(a);
        const double vx = (sxx_(b + 1) - sxx_(a)) - sx * sx / m;
        const double vy = (syy_(b + 1) - syy_(a)) - sy * sy / m;
        const double cov = (sxy_(b + 1) - sxy_(a)) - sx * sy / m;
        if (vx <= 0.0 || vy <= 0.0) return 0.0;
        return std::clamp(cov / std::sqrt(vx * vy), -1.0, 1.0);
    }

private:
    Eigen::VectorXd sx_, sy_, sxx_, syy_, sxy_;
    std::vector<Eigen::Index> cx_, cy_;
};

bool interval_less(const Interval& l, const Interval& r) {
    return l.a != r.a ? l.a < r.a : l.b < r.b;
}

}  // namespace

std::vector<Interval> correlated_intervals(const TimeSeries& x, const TimeSeries& y,
                                           const IntervalParams& p) {
    p.validate();
    if (x.size() != y.size())
        throw ShapeError("correlated_intervals: length mismatch");
    const Eigen::Index n = x.size();
    const Eigen::Index lmin = p.l_min;
    if (n < lmin)
        throw ShapeError("correlated_intervals: series length " + std::to_string(n) +
                         " below l_min " + std::to_string(lmin));

    const WindowCorrelation corr(x.values(), y.values());
    const auto passes = [&](Eigen::Index a, Eigen::Index b) {
        const double r = corr(a, b);
        return p.signed_correlation ? r >= p.beta : std::abs(r) >= p.beta;
    };

    std::vector<Interval> out;
    // Starts of correlated intervals at the current length, ascending.
    std::vector<Eigen::Index> level;
    for (Eigen::Index a = 0; a + lmin <= n; ++a)
        if (passes(a, a + lmin - 1)) level.push_back(a);

    std::vector<Eigen::Index> next;
    for (Eigen::Index len = lmin; !level.empty(); ++len) {
        // A length len+1 interval is correlated iff both of its length-len
        // children are and its own correlation passes.
        next.clear();
        if (len < n) {
            for (std::size_t k = 0; k + 1 < level.size(); ++k) {
                const Eigen::Index a = level[k];
                if (level[k + 1] == a + 1 && passes(a, a + len)) next.push_back(a);
            }
        }
        // [a, a+len-1] grows right into [a, a+len] (start a) or left into
        // [a-1, a+len-1] (start a-1).
        std::size_t j = 0;
        for (const Eigen::Index a : level) {
            while (j < next.size() && next[j] < a - 1) ++j;
            bool grows = false;
            for (std::size_t q = j; q < next.size() && next[q] <= a; ++q) grows = true;
            if (!grows)
                out.push_back({x.start_frame() + a, x.start_frame() + a + len - 1, std::nullopt});
        }
        level.swap(next);
    }
    std::sort(out.begin(), out.end(), interval_less);
    return out;
}

IntervalSet longest_set(std::vector<Interval> candidates) {
    if (candidates.empty()) return {};
    std::sort(candidates.begin(), candidates.end(), [](const Interval& l, const Interval& r) {
        return l.b != r.b ? l.b < r.b : l.a < r.a;
    });
    const std::size_t n = candidates.size();

    // Chosen sets are persistent linked lists through `nodes`, newest
    // (latest ending) interval first.
    struct Node { std::size_t interval; int prev; };
    struct State { Frame total = 0; std::size_t count = 0; int head = -1; };
    std::vector<Node> nodes;
    nodes.reserve(n);

    const auto starts_of = [&](int head) {
        std::vector<Frame> s;
        for (int k = head; k >= 0; k = nodes[k].prev) s.push_back(candidates[nodes[k].interval].a);
        std::reverse(s.begin(), s.end());
        return s;
    };
    const auto better = [&](const State& l, const State& r) {
        if (l.total != r.total) return l.total > r.total;
        if (l.count != r.count) return l.count < r.count;
        return starts_of(l.head) < starts_of(r.head);
    };

    std::vector<State> best(n + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        const Interval& iv = candidates[i - 1];
        // Number of candidates ending strictly before iv starts.
        const std::size_t compatible = static_cast<std::size_t>(
            std::lower_bound(candidates.begin(), candidates.begin() + (i - 1), iv.a,
                             [](const Interval& c, Frame a) { return c.b < a; }) -
            candidates.begin());
        const State& base = best[compatible];
        nodes.push_back({i - 1, base.head});
        const State take{base.total + iv.length(), base.count + 1,
                         static_cast<int>(nodes.size() - 1)};
        best[i] = better(take, best[i - 1]) ? take : best[i - 1];
    }

    std::vector<Interval> chosen;
    for (int k = best[n].head; k >= 0; k = nodes[k].prev) chosen.push_back(candidates[nodes[k].interval]);
    std::reverse(chosen.begin(), chosen.end());
    return IntervalSet(std::move(chosen));
}

namespace {

/// Identical intervals found at several shifts keep the smallest |shift|
/// (negative first on a tie).
void dedupe_candidates(std::vector<Interval>& pool) {
    const auto shift_rank = [](const Interval& iv) {
        const int s = iv.shift.value_or(0);
        return std::pair{std::abs(s), s};
    };
    std::sort(pool.begin(), pool.end(), [&](const Interval& l, const Interval& r) {
        if (l.a != r.a || l.b != r.b) return interval_less(l, r);
        return shift_rank(l) < shift_rank(r);
    });
    pool.erase(std::unique(pool.begin(), pool.end(),
                           [](const Interval& l, const Interval& r) { return l.a == r.a && l.b == r.b; }),
               pool.end());
}

}  // namespace

IntervalSet mine_shifted(const TimeSeries& x, const TimeSeries& y, const IntervalParams& p) {
    p.validate();
    if (x.size() != y.size() || x.start_frame() != y.start_frame())
        throw ShapeError("mine_shifted: series must be aligned");
    if (x.size() < p.l_min)
        throw ShapeError("mine_shifted: series length below l_min");

    std::vector<Interval> pool;
    for (const int s : p.shifts) {
        if (std::abs(s) >= x.size()) continue;
        // y advanced by s: frame t carries y(t + s).
        const TimeSeries ys = shift(y, -s);
        const auto [xa, ya] = align(x, ys);
        if (xa.size() < p.l_min) continue;
        for (auto iv : correlated_intervals(xa, ya, p)) {
            iv.shift = s;
            pool.push_back(iv);
        }
    }
    dedupe_candidates(pool);
    return longest_set(std::move(pool));
}

IntervalSet mine_shifted_runs(const TimeSeries& x, const TimeSeries& y, const IntervalSet& runs,
                              const IntervalParams& p) {
    p.validate();
    if (x.size() != y.size() || x.start_frame() != y.start_frame())
        throw ShapeError("mine_shifted_runs: series must be aligned");
    std::vector<Interval> out;
    for (const auto& run : runs) {
        if (run.a < x.start_frame() || run.b >= x.end_frame())
            throw ShapeError("mine_shifted_runs: run outside series");
        if (run.length() < p.l_min) continue;
        const IntervalSet found = mine_shifted(x.slice(run.a, run.b), y.slice(run.a, run.b), p);
        out.insert(out.end(), found.begin(), found.end());
    }
    return IntervalSet(std::move(out));
}

IntervalSet intersect_sets(const IntervalSet& a, const IntervalSet& b) {
    std::vector<Interval> out;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const Frame lo = std::max(a[i].a, b[j].a);
        const Frame hi = std::min(a[i].b, b[j].b);
        if (lo <= hi) {
            if (!out.empty() && out.back().b + 1 == lo) out.back().b = hi;
            else out.push_back({lo, hi, std::nullopt});
        }
        if (a[i].b < b[j].b) ++i; else ++j;
    }
    return IntervalSet(std::move(out));
}

IntervalSet intersect_sets(std::span<const IntervalSet> sets) {
    if (sets.empty()) throw EmptyInput("intersect_sets: no sets given");
    if (sets.size() == 1) return sets.front();
    IntervalSet acc = intersect_sets(sets[0], sets[1]);
    for (std::size_t k = 2; k < sets.size(); ++k) acc = intersect_sets(acc, sets[k]);
    return acc;
}

IntervalSet median_filter_set(const IntervalSet& s, int kernel, Frame series_len) {
    if (series_len <= 0) return {};
    return IntervalSet::from_mask(median_filter(s.to_mask(0, series_len), kernel));
}

IntervalSet dilate(const IntervalSet& s, int extension, Frame series_len) {
    if (extension < 0) throw ConfigError("dilate: extension must be >= 0");
    std::vector<Interval> out;
    for (const auto& iv : s) {
        const Frame lo = std::max<Frame>(0, iv.a - extension);
        const Frame hi = std::min<Frame>(series_len - 1, iv.b + extension);
        if (lo > hi) continue;
        if (!out.empty() && out.back().b + 1 >= lo) out.back().b = std::max(out.back().b, hi);
        else out.push_back({lo, hi, std::nullopt});
    }
    return IntervalSet(std::move(out));
}

IntervalSet postprocess(const IntervalSet& s, const IntervalParams& p, Frame series_len) {
    p.validate();
    return dilate(median_filter_set(s, p.median_kernel, series_len), p.extension, series_len);
}

std::vector<SegmentPair> segment_series(const TimeSeries& x, const TimeSeries& y,
                                        const IntervalSet& s) {
    if (x.size() != y.size() || x.start_frame() != y.start_frame())
        throw ShapeError("segment_series: series must be aligned");
    std::vector<SegmentPair> out;
    out.reserve(s.size());
    for (const auto& iv : s) {
        if (iv.a < x.start_frame() || iv.b >= x.end_frame())
            throw ShapeError("segment_series: interval [" + std::to_string(iv.a) + ", " +
                             std::to_string(iv.b) + "] outside series");
        const Eigen::Index off = iv.a - x.start_frame();
        out.push_back({iv.a, x.values().segment(off, iv.length()),
                       y.values().segment(off, iv.length())});
    }
    return out;
}

void write_intervals_tsv(std::ostream& os, const IntervalSet& s) {
    for (const auto& iv : s) {
        os << iv.a << '\t' << iv.b << '\t';
        if (iv.shift) os << *iv.shift; else os << "NA";
        os << '\n';
    }
}

IntervalSet read_intervals_tsv(std::istream& is) {
    std::vector<Interval> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string a, b, sh;
        if (!std::getline(ls, a, '\t') || !std::getline(ls, b, '\t') || !std::getline(ls, sh))
            throw FormatError("interval line " + std::to_string(lineno) + ": expected 3 fields");
        Interval iv;
        try {
            std::size_t used = 0;
            iv.a = std::stoll(a, &used);
            if (used != a.size()) throw std::invalid_argument(a);
            iv.b = std::stoll(b, &used);
            if (used != b.size()) throw std::invalid_argument(b);
            if (sh != "NA") {
                iv.shift = std::stoi(sh, &used);
                if (used != sh.size()) throw std::invalid_argument(sh);
            }
        } catch (const std::logic_error&) {
            throw FormatError("interval line " + std::to_string(lineno) + ": non-numeric field");
        }
        out.push_back(iv);
    }
    return IntervalSet(std::move(out));
}

}  // namespace dyadgc
