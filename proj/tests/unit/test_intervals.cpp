#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "../oracles.hpp"
#include "dyadgc/intervals.hpp"

using namespace dyadgc;

namespace {

IntervalParams params(double beta, int l_min) {
    IntervalParams p;
    p.beta = beta;
    p.l_min = l_min;
    p.shifts = {0};
    return p;
}

std::vector<double> as_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd white(std::mt19937_64& g, Eigen::Index n) {
    std::normal_distribution<double> d;
    Eigen::VectorXd v(n);
    for (auto& x : v) x = d(g);
    return v;
}

std::vector<std::pair<Frame, Frame>> bounds(const std::vector<Interval>& v) {
    std::vector<std::pair<Frame, Frame>> out;
    for (const auto& iv : v) out.emplace_back(iv.a, iv.b);
    return out;
}

}  // namespace

TEST(CorrelatedIntervals, IdenticalSeriesGiveWholeSpan) {
    std::mt19937_64 g(1);
    const Eigen::VectorXd x = white(g, 200);
    const auto got = correlated_intervals(TimeSeries(x), TimeSeries(x), params(0.8, 75));
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(got[0].a, 0);
    EXPECT_EQ(got[0].b, 199);
}

TEST(CorrelatedIntervals, WhiteNoiseMatchesBruteForce) {
    std::mt19937_64 g(2);
    const Eigen::VectorXd x = white(g, 500), y = white(g, 500);
    const auto got = correlated_intervals(TimeSeries(x), TimeSeries(y), params(0.8, 75));
    EXPECT_TRUE(got.empty());
    EXPECT_EQ(bounds(got), bounds(oracle::correlated_intervals(as_std(x), as_std(y), 0.8, 75)));
}

TEST(CorrelatedIntervals, RandomMixturesMatchBruteForce) {
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        const Eigen::Index n = 60 + static_cast<Eigen::Index>(g() % 100);
        const Eigen::VectorXd x = white(g, n), e = white(g, n);
        // Mixing weight drifts, so correlation comes and goes.
        Eigen::VectorXd y(n);
        double w = u(g);
        for (Eigen::Index t = 0; t < n; ++t) {
            w = std::clamp(w + 0.08 * (u(g) - 0.5), 0.0, 1.0);
            y(t) = w * x(t) + (1.0 - w) * e(t);
        }
        for (const double beta : {0.3, 0.6}) {
            for (const int lmin : {5, 12}) {
                const auto got = correlated_intervals(TimeSeries(x), TimeSeries(y), params(beta, lmin));
                ASSERT_EQ(bounds(got), bounds(oracle::correlated_intervals(as_std(x), as_std(y), beta, lmin)))
                    << "trial " << trial << " beta " << beta << " l_min " << lmin;
            }
        }
    }
}

TEST(CorrelatedIntervals, EveryResultRechecks) {
    std::mt19937_64 g(4);
    const Eigen::VectorXd x = white(g, 250);
    const Eigen::VectorXd y = x + 0.6 * white(g, 250);
    const int lmin = 20;
    for (const auto& iv : correlated_intervals(TimeSeries(x), TimeSeries(y), params(0.6, lmin))) {
        EXPECT_GE(pearson(x.segment(iv.a, iv.length()), y.segment(iv.a, iv.length())), 0.6);
        for (Frame a = iv.a; a + lmin - 1 <= iv.b; ++a)
            EXPECT_GE(pearson(x.segment(a, lmin), y.segment(a, lmin)), 0.6);
    }
}

TEST(CorrelatedIntervals, SignedThresholdIgnoresAnticorrelation) {
    std::mt19937_64 g(5);
    const Eigen::VectorXd x = white(g, 120);
    IntervalParams p = params(0.8, 30);
    EXPECT_TRUE(correlated_intervals(TimeSeries(x), TimeSeries(Eigen::VectorXd(-x)), p).empty());
    p.signed_correlation = false;
    EXPECT_EQ(correlated_intervals(TimeSeries(x), TimeSeries(Eigen::VectorXd(-x)), p).size(), 1u);
}

TEST(CorrelatedIntervals, ShorterThanLminThrows) {
    EXPECT_THROW(correlated_intervals(TimeSeries(Eigen::VectorXd::Ones(10)), TimeSeries(Eigen::VectorXd::Ones(10)),
                                      params(0.8, 20)),
                 ShapeError);
}

TEST(LongestSet, DisjointAllSelected) {
    const IntervalSet s = longest_set({{0, 9, {}}, {20, 29, {}}, {40, 41, {}}});
    EXPECT_EQ(s.size(), 3u);
}

TEST(LongestSet, LongerOverlapWins) {
    const IntervalSet s = longest_set({{0, 99, {}}, {50, 129, {}}});
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].length(), 100);
}

TEST(LongestSet, MatchesExhaustiveSearch) {
    std::mt19937_64 g(6);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Interval> cand;
        const int k = 1 + static_cast<int>(g() % 15);
        for (int i = 0; i < k; ++i) {
            const Frame a = static_cast<Frame>(g() % 200);
            cand.push_back({a, a + static_cast<Frame>(g() % 40), {}});
        }
        const IntervalSet got = longest_set(cand);
        const auto want = oracle::best_subset(cand);
        ASSERT_EQ(bounds(got.intervals()), bounds(want)) << "trial " << trial;
    }
}

TEST(LongestSet, NotWorseThanGreedy) {
    std::mt19937_64 g(7);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Interval> cand;
        for (int i = 0; i < 30; ++i) {
            const Frame a = static_cast<Frame>(g() % 500);
            cand.push_back({a, a + static_cast<Frame>(g() % 80), {}});
        }
        auto by_len = cand;
        std::sort(by_len.begin(), by_len.end(), [](auto& l, auto& r) { return l.length() > r.length(); });
        std::vector<Interval> greedy;
        Frame greedy_total = 0;
        for (const auto& c : by_len) {
            if (std::none_of(greedy.begin(), greedy.end(), [&](auto& q) { return c.a <= q.b && q.a <= c.b; })) {
                greedy.push_back(c);
                greedy_total += c.length();
            }
        }
        EXPECT_GE(longest_set(cand).total_length(), greedy_total);
    }
}

TEST(MineShifted, OffGridLagFoundAtNeighbouringShift) {
    std::mt19937_64 g(8);
    const Eigen::Index n = 600;
    // Box-smoothed noise, so lag 6 still correlates strongly at lag 4 or 8.
    const Eigen::VectorXd e = white(g, n + 12);
    Eigen::VectorXd x(n);
    for (Eigen::Index t = 0; t < n; ++t) x(t) = e.segment(t, 13).mean();
    Eigen::VectorXd y = white(g, n) * x.norm() / std::sqrt(static_cast<double>(n));
    for (Eigen::Index t = 150; t < 450; ++t) y(t + 6) = x(t);
    IntervalParams p;
    p.beta = 0.7;
    p.l_min = 60;
    const IntervalSet got = mine_shifted(TimeSeries(x), TimeSeries(y), p);
    ASSERT_FALSE(got.empty());
    for (const auto& iv : got) {
        ASSERT_TRUE(iv.shift.has_value());
        EXPECT_TRUE(*iv.shift == 4 || *iv.shift == 8) << *iv.shift;
    }
}

TEST(MineShifted, SingleZeroShiftEqualsPlainMining) {
    std::mt19937_64 g(9);
    const Eigen::VectorXd x = white(g, 300);
    const Eigen::VectorXd y = x + 0.5 * white(g, 300);
    const IntervalParams p = params(0.7, 25);
    const IntervalSet a = mine_shifted(TimeSeries(x), TimeSeries(y), p);
    const IntervalSet b = longest_set(correlated_intervals(TimeSeries(x), TimeSeries(y), p));
    EXPECT_EQ(bounds(a.intervals()), bounds(b.intervals()));
}

TEST(MineShifted, SwappingRolesNegatesShifts) {
    std::mt19937_64 g(10);
    const Eigen::Index n = 400;
    const Eigen::VectorXd x = white(g, n);
    Eigen::VectorXd y = white(g, n);
    for (Eigen::Index t = 50; t < 250; ++t) y(t + 4) = x(t);
    IntervalParams p;
    p.beta = 0.9;
    p.l_min = 40;
    const IntervalSet xy = mine_shifted(TimeSeries(x), TimeSeries(y), p);
    const IntervalSet yx = mine_shifted(TimeSeries(y), TimeSeries(x), p);
    ASSERT_EQ(xy.size(), 1u);
    ASSERT_EQ(yx.size(), 1u);
    EXPECT_EQ(*xy[0].shift, 4);
    EXPECT_EQ(*yx[0].shift, -4);
    // Reported in the first argument's frames: y's copy sits 4 frames later.
    EXPECT_EQ(yx[0].a, xy[0].a + 4);
    EXPECT_EQ(yx[0].b, xy[0].b + 4);
}

TEST(MineShifted, OutputDisjointAndLongEnough) {
    std::mt19937_64 g(11);
    const Eigen::VectorXd x = white(g, 600);
    const Eigen::VectorXd y = x + 0.7 * white(g, 600);
    IntervalParams p;
    p.beta = 0.6;
    p.l_min = 30;
    const IntervalSet s = mine_shifted(TimeSeries(x), TimeSeries(y), p);
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_GE(s[i].length(), p.l_min);
        if (i > 0) {
            EXPECT_GT(s[i].a, s[i - 1].b);
        }
    }
}

TEST(MineShiftedRuns, NoWindowCrossesAGap) {
    const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(300, 0.0, 1.0).array().sin() +
                              0.1 * Eigen::VectorXd::LinSpaced(300, 0.0, 60.0).array().cos();
    IntervalParams p;
    p.l_min = 40;
    const IntervalSet runs({{0, 139, {}}, {150, 299, {}}});
    const IntervalSet got = mine_shifted_runs(TimeSeries(x), TimeSeries(x), runs, p);
    for (const auto& iv : got) EXPECT_TRUE((iv.b <= 139) || (iv.a >= 150));
    EXPECT_EQ(got.total_length(), 140 + 150);
}

TEST(IntersectSets, Algebra) {
    const IntervalSet au6({{0, 100, {}}}), au12({{50, 150, {}}});
    const std::vector<IntervalSet> one{au6};
    EXPECT_EQ(intersect_sets(one), au6);
    const IntervalSet both = intersect_sets(au6, au12);
    ASSERT_EQ(both.size(), 1u);
    EXPECT_EQ(both[0].a, 50);
    EXPECT_EQ(both[0].b, 100);
    EXPECT_TRUE(intersect_sets(IntervalSet({{0, 9, {}}}), IntervalSet({{10, 19, {}}})).empty());
    EXPECT_THROW(intersect_sets(std::span<const IntervalSet>{}), EmptyInput);
}

TEST(IntersectSets, MatchesFrameWiseAnd) {
    std::mt19937_64 g(12);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<IntervalSet> sets;
        for (int k = 0; k < 3; ++k) {
            BinaryMask m = BinaryMask::constant(200, false);
            for (int i = 0; i < 200; ++i) m.bits()(i) = (g() % 10) < 7;
            sets.push_back(IntervalSet::from_mask(m));
        }
        const BinaryMask got = intersect_sets(sets).to_mask(0, 200);
        const BinaryMask m0 = sets[0].to_mask(0, 200), m1 = sets[1].to_mask(0, 200), m2 = sets[2].to_mask(0, 200);
        const BinaryMask::Bits want = m0.bits() && m1.bits() && m2.bits();
        EXPECT_TRUE((got.bits() == want).all());
    }
}

TEST(Postprocess, LongIntervalGrows) {
    IntervalParams p;
    const IntervalSet s({{100, 299, {}}});
    const IntervalSet out = postprocess(s, p, 1000);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].a, 88);
    EXPECT_EQ(out[0].b, 311);
    const IntervalSet edge = postprocess(IntervalSet({{0, 199, {}}}), p, 205);
    EXPECT_EQ(edge[0].a, 0);
    EXPECT_EQ(edge[0].b, 204);
}

TEST(Postprocess, ShortIsolatedIntervalRemoved) {
    IntervalParams p;
    const IntervalSet s({{500, 519, {}}});
    std::vector<bool> bits(1000, false);
    for (int i = 500; i <= 519; ++i) bits[i] = true;
    const auto filtered = oracle::windowed_majority(bits, p.median_kernel);
    EXPECT_EQ(std::count(filtered.begin(), filtered.end(), true), 0);
    EXPECT_TRUE(postprocess(s, p, 1000).empty());
}

TEST(Postprocess, CloseIntervalsMerge) {
    IntervalParams p;
    p.median_kernel = 1;
    const IntervalSet out = postprocess(IntervalSet({{100, 199, {}}, {210, 309, {}}}), p, 1000);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].a, 88);
    EXPECT_EQ(out[0].b, 321);
}

TEST(Postprocess, NeverOverlapsOrLeavesBounds) {
    std::mt19937_64 g(13);
    IntervalParams p;
    p.median_kernel = 5;
    for (int trial = 0; trial < 100; ++trial) {
        BinaryMask m = BinaryMask::constant(300, false);
        for (int i = 0; i < 300; ++i) m.bits()(i) = (g() % 10) < 5;
        const IntervalSet out = postprocess(IntervalSet::from_mask(m), p, 300);
        for (std::size_t i = 0; i < out.size(); ++i) {
            EXPECT_GE(out[i].a, 0);
            EXPECT_LT(out[i].b, 300);
            if (i > 0) {
                EXPECT_GT(out[i].a, out[i - 1].b + 1);
            }
        }
    }
}

TEST(SegmentSeries, CoverageAndOffsets) {
    const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(100, 0, 99);
    const TimeSeries x(v, 10), y(Eigen::VectorXd(2 * v), 10);
    const auto whole = segment_series(x, y, IntervalSet({{10, 109, {}}}));
    ASSERT_EQ(whole.size(), 1u);
    EXPECT_EQ(whole[0].x, v);
    const IntervalSet s({{20, 29, {}}, {50, 79, {}}});
    const auto segs = segment_series(x, y, s);
    ASSERT_EQ(segs.size(), 2u);
    EXPECT_EQ(segs[0].offset, 20);
    EXPECT_EQ(segs[1].offset, 50);
    Eigen::Index covered = 0;
    for (const auto& seg : segs) {
        covered += seg.size();
        for (Eigen::Index i = 0; i < seg.size(); ++i) {
            EXPECT_EQ(seg.x(i), static_cast<double>(seg.offset - 10 + i));
            EXPECT_EQ(seg.y(i), 2.0 * seg.x(i));
        }
    }
    EXPECT_EQ(covered, s.total_length());
}

TEST(IntervalSet, RejectsOverlap) {
    EXPECT_THROW(IntervalSet({{0, 10, {}}, {10, 20, {}}}), ShapeError);
    EXPECT_THROW(IntervalSet({{5, 4, {}}}), ShapeError);
}

TEST(IntervalSet, TsvRoundTrip) {
    const IntervalSet s({{3, 80, 4}, {100, 180, std::nullopt}, {200, 290, -12}});
    std::stringstream ss;
    write_intervals_tsv(ss, s);
    EXPECT_EQ(ss.str(), "3\t80\t4\n100\t180\tNA\n200\t290\t-12\n");
    EXPECT_EQ(read_intervals_tsv(ss), s);
}

TEST(IntervalParams, Validation) {
    IntervalParams p;
    EXPECT_NO_THROW(p.validate());
    p.median_kernel = 50;
    EXPECT_THROW(p.validate(), ConfigError);
    p = {};
    p.l_min = 1;
    EXPECT_THROW(p.validate(), ConfigError);
    p = {};
    p.beta = 1.5;
    EXPECT_THROW(p.validate(), ConfigError);
}
