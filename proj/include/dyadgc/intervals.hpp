#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "dyadgc/timeseries.hpp"

namespace dyadgc {

/// Closed frame interval [a, b].
struct Interval {
    Frame a = 0;
    Frame b = 0;
    /// Shift (frames the second signal lags the first) at which the
    /// interval was found; empty once sets are combined or filtered.
    std::optional<int> shift;

    Frame length() const { return b - a + 1; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Sorted, pairwise disjoint intervals.
class IntervalSet {
public:
    IntervalSet() = default;
    /// Throws ShapeError unless the intervals are well formed, sorted and disjoint.
    explicit IntervalSet(std::vector<Interval> intervals);

    /// Runs of true bits, in absolute frame coordinates.
    static IntervalSet from_mask(const BinaryMask& m);
    /// Coverage mask over the frame range [first, end).
    BinaryMask to_mask(Frame first, Frame end) const;

    const std::vector<Interval>& intervals() const { return intervals_; }
    auto begin() const { return intervals_.begin(); }
    auto end() const { return intervals_.end(); }
    std::size_t size() const { return intervals_.size(); }
    bool empty() const { return intervals_.empty(); }
    const Interval& operator[](std::size_t i) const { return intervals_[i]; }
    Frame total_length() const;
    bool contains(Frame f) const;

    friend bool operator==(const IntervalSet&, const IntervalSet&) = default;

private:
    std::vector<Interval> intervals_;
};

/// Parameters of relevant-interval mining and post-processing.
struct IntervalParams {
    double beta = 0.8;
    int l_min = 75;
    std::vector<int> shifts{-12, -8, -4, 0, 4, 8, 12};
    int median_kernel = 51;
    int extension = 12;
    /// When false, |r| >= beta also counts as correlated.
    bool signed_correlation = true;

    /// Throws ConfigError on out-of-range values.
    void validate() const;
};

/// All maximal correlated intervals of two aligned, equally long series,
/// reported in the frame coordinates of `x`. An interval is correlated when
/// every subinterval of length >= l_min (itself included) has Pearson
/// correlation >= beta; it is maximal when it cannot be grown by one frame
/// on either side. Sorted by (a, b). Maximal intervals may overlap.
std::vector<Interval> correlated_intervals(const TimeSeries& x, const TimeSeries& y,
                                           const IntervalParams& p);

/// Non-overlapping subset of `candidates` with maximal total length.
/// Ties prefer fewer intervals, then the lexicographically earliest starts.
IntervalSet longest_set(std::vector<Interval> candidates);

/// Pools correlated_intervals over every shift s in p.shifts, where x(t) is
/// paired with y(t + s), and selects the longest set. Intervals are in the
/// frame coordinates of x and carry the shift they were found at.
IntervalSet mine_shifted(const TimeSeries& x, const TimeSeries& y, const IntervalParams& p);

/// mine_shifted applied independently inside each run of `runs`; no
/// correlation window crosses a run boundary.
IntervalSet mine_shifted_runs(const TimeSeries& x, const TimeSeries& y, const IntervalSet& runs,
                              const IntervalParams& p);

/// Frame-wise intersection. Throws EmptyInput for an empty list.
IntervalSet intersect_sets(std::span<const IntervalSet> sets);
IntervalSet intersect_sets(const IntervalSet& a, const IntervalSet& b);

/// Majority filter of the coverage mask over [0, series_len).
IntervalSet median_filter_set(const IntervalSet& s, int kernel, Frame series_len);
/// Grow each interval by `extension` frames per side, clip to
/// [0, series_len), merge overlapping or touching results.
IntervalSet dilate(const IntervalSet& s, int extension, Frame series_len);
/// median_filter_set followed by dilate.
IntervalSet postprocess(const IntervalSet& s, const IntervalParams& p, Frame series_len);

/// Per-interval sub-series of two aligned series, kept as separate segments.
std::vector<SegmentPair> segment_series(const TimeSeries& x, const TimeSeries& y,
                                        const IntervalSet& s);

/// Line format: `a<TAB>b<TAB>shift`, with `NA` for an unknown shift.
void write_intervals_tsv(std::ostream& os, const IntervalSet& s);
IntervalSet read_intervals_tsv(std::istream& is);

}  // namespace dyadgc
