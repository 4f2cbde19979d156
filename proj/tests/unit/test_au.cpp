#include <gtest/gtest.h>

#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "dyadgc/au.hpp"

using namespace dyadgc;

namespace {

std::string header(bool with_confidence = true) {
    std::string h = "frame";
    if (with_confidence) h += ", confidence";
    for (const AuId au : kOpenFaceAus) h += ", " + au_column(au);
    return h + "\n";
}

std::string row(Frame f, double conf, double au06, double other = 0.5) {
    std::ostringstream os;
    os << f << ", " << conf;
    for (const AuId au : kOpenFaceAus) os << ", " << (au == 6 ? au06 : other);
    os << "\n";
    return os.str();
}

AURecording recording(std::vector<Frame> frames, std::vector<double> conf,
                      std::map<AuId, std::vector<double>> traces, Condition c = Condition::respectful) {
    AURecording r;
    r.condition = c;
    const auto n = static_cast<Eigen::Index>(frames.size());
    r.frames = Eigen::Map<Eigen::Matrix<Frame, Eigen::Dynamic, 1>>(frames.data(), n);
    r.confidence = Eigen::Map<Eigen::VectorXd>(conf.data(), n);
    r.intensity.resize(n, static_cast<Eigen::Index>(traces.size()));
    Eigen::Index k = 0;
    for (auto& [au, v] : traces) {
        r.au_ids.push_back(au);
        r.intensity.col(k++) = Eigen::Map<Eigen::VectorXd>(v.data(), n);
    }
    return r;
}

}  // namespace

TEST(ParseAuCsv, EchoesIntensities) {
    std::istringstream in(header() + row(0, 0.98, 0.0) + row(1, 0.98, 1.0) + row(2, 0.98, 2.0));
    const AURecording r = parse_au_csv(in);
    ASSERT_EQ(r.num_frames(), 3);
    EXPECT_EQ(r.trace(6)(0), 0.0);
    EXPECT_EQ(r.trace(6)(1), 1.0);
    EXPECT_EQ(r.trace(6)(2), 2.0);
    EXPECT_EQ(r.trace(12)(1), 0.5);
    EXPECT_FALSE(r.has_au(24));
    EXPECT_EQ(r.frame(2).au_intensity.at(6), 2.0);
}

TEST(ParseAuCsv, MissingConfidenceNamesTheColumn) {
    std::istringstream in(header(false) + "0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0\n");
    try {
        parse_au_csv(in);
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_STREQ(e.what(), "confidence");
    }
}

TEST(ParseAuCsv, NonNumericCellNamesTheRow) {
    std::string body = header() + row(0, 1.0, 0.0);
    body += "1, 1.0, abc";
    for (int i = 1; i < 17; ++i) body += ", 0";
    body += "\n";
    std::istringstream in(body);
    try {
        parse_au_csv(in);
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
    }
}

TEST(ParseAuCsv, ExtraColumnsAndAu24) {
    std::istringstream in("face_id, " + header().substr(0, header().size() - 1) + ", AU24_r, gaze\n" +
                          "0, " + row(7, 0.9, 1.5).substr(0, row(7, 0.9, 1.5).size() - 1) + ", 3.25, 9\n");
    const AURecording r = parse_au_csv(in);
    EXPECT_EQ(r.frames(0), 7);
    ASSERT_TRUE(r.has_au(24));
    EXPECT_EQ(r.trace(24)(0), 3.25);
}

TEST(ParseAuCsv, OutOfRangeRejected) {
    std::istringstream a(header() + row(0, 1.0, 5.5));
    EXPECT_THROW(parse_au_csv(a), FormatError);
    std::istringstream b(header() + row(3, 1.0, 1.0) + row(2, 1.0, 1.0));
    EXPECT_THROW(parse_au_csv(b), FormatError);
}

TEST(AuCsv, LargeRoundTrip) {
    std::mt19937_64 g(1);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    std::vector<Frame> frames;
    std::vector<double> conf;
    std::map<AuId, std::vector<double>> traces;
    for (int i = 0; i < 10000; ++i) {
        frames.push_back(i * 2 + 1);
        conf.push_back(u(g) / 5.0);
        for (const AuId au : kOpenFaceAus) traces[au].push_back(u(g));
    }
    const AURecording r = recording(frames, conf, traces);
    std::stringstream ss;
    write_au_csv(ss, r);
    const AURecording back = parse_au_csv(ss);
    EXPECT_EQ(back.frames, r.frames);
    EXPECT_EQ(back.confidence, r.confidence);
    EXPECT_EQ(back.intensity, r.intensity);
}

TEST(ConfidenceSync, AllConfidentKeepsEverything) {
    const AURecording s = recording({0, 1, 2, 3}, {1, 1, 1, 1}, {{6, {0, 1, 2, 3}}});
    const SyncedPair p = confidence_sync(s, s);
    EXPECT_EQ(p.sender.num_frames(), 4);
    ASSERT_EQ(p.kept_frames.size(), 1u);
    EXPECT_EQ(p.kept_frames.total_length(), 4);
}

TEST(ConfidenceSync, EitherSideDropsTheFrame) {
    const AURecording s = recording({0, 1, 2, 3, 4}, {1, 1, 0.5, 1, 1}, {{6, {0, 1, 2, 3, 4}}});
    const AURecording r = recording({0, 1, 2, 3, 4}, {1, 1, 1, 1, 1}, {{6, {5, 6, 7, 8, 9}}});
    const SyncedPair p = confidence_sync(s, r);
    const Eigen::Matrix<Frame, 4, 1> want(0, 1, 3, 4);
    EXPECT_EQ(p.sender.frames, want);
    EXPECT_EQ(p.receiver.frames, want);
    EXPECT_EQ(p.receiver.trace(6)(2), 8.0);
    ASSERT_EQ(p.kept_frames.size(), 2u);
    EXPECT_EQ(p.kept_frames[1].a, 3);
}

TEST(ConfidenceSync, MatchesPerFrameAnd) {
    std::mt19937_64 g(2);
    std::uniform_real_distribution<double> u(0.8, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Frame> fs, fr;
        std::vector<double> cs, cr;
        std::map<AuId, std::vector<double>> ts, tr;
        for (Frame f = 0; f < 300; ++f) {
            if (g() % 10) { fs.push_back(f); cs.push_back(u(g)); ts[6].push_back(1.0); }
            if (g() % 10) { fr.push_back(f); cr.push_back(u(g)); tr[6].push_back(1.0); }
        }
        const AURecording s = recording(fs, cs, ts), r = recording(fr, cr, tr);
        std::vector<Frame> want;
        for (std::size_t i = 0; i < fs.size(); ++i)
            for (std::size_t j = 0; j < fr.size(); ++j)
                if (fs[i] == fr[j] && cs[i] >= 0.89 && cr[j] >= 0.89) want.push_back(fs[i]);
        const SyncedPair p = confidence_sync(s, r);
        ASSERT_EQ(p.sender.frames, p.receiver.frames);
        ASSERT_EQ(static_cast<std::size_t>(p.sender.num_frames()), want.size());
        for (std::size_t i = 0; i < want.size(); ++i) ASSERT_EQ(p.sender.frames(i), want[i]);
        EXPECT_EQ(static_cast<std::size_t>(p.kept_frames.total_length()), want.size());
    }
}

TEST(ConfidenceSync, NoCommonFramesThrows) {
    const AURecording s = recording({0, 1}, {1, 1}, {{6, {0, 0}}});
    const AURecording r = recording({5, 6}, {1, 1}, {{6, {0, 0}}});
    EXPECT_THROW(confidence_sync(s, r), EmptyOverlap);
}

TEST(Baseline, ConstantTrace) {
    const std::vector<AURecording> recs{recording({0, 1, 2}, {1, 1, 1}, {{6, {2, 2, 2}}})};
    const AUBaseline b = baseline_stats(recs);
    EXPECT_EQ(b.stats.at(6).mean, 2.0);
    EXPECT_EQ(b.stats.at(6).std, 0.0);
    EXPECT_TRUE(b.incomplete);
}

TEST(Baseline, PooledOverConditions) {
    const std::vector<AURecording> recs{
        recording({0, 1}, {1, 1}, {{6, {0, 0}}}, Condition::respectful),
        recording({0}, {1}, {{6, {4}}}, Condition::contempt),
        recording({0}, {1}, {{6, {4}}}, Condition::objective),
    };
    const AUBaseline b = baseline_stats(recs);
    EXPECT_FALSE(b.incomplete);
    EXPECT_DOUBLE_EQ(b.stats.at(6).mean, 2.0);
    // Sample convention: sum of squares 16 over n - 1 = 3.
    EXPECT_DOUBLE_EQ(b.stats.at(6).std, std::sqrt(16.0 / 3.0));
}

TEST(Activation, Thresholds) {
    AUBaseline b;
    b.stats[6] = {1.0, 0.0};
    b.stats[12] = {1.0, 2.0};
    const AURecording r = recording({0, 1}, {1, 1}, {{6, {1.0, 0.9}}, {12, {1.9, 2.0}}});
    const auto act = au_activation(r, b);
    EXPECT_TRUE(act.at(6)[0]);
    EXPECT_FALSE(act.at(6)[1]);
    EXPECT_FALSE(act.at(12)[0]);
    EXPECT_TRUE(act.at(12)[1]);
}

TEST(Activation, SingleCrossingGivesOneRun) {
    AUBaseline b;
    b.stats[6] = {2.0, 0.0};
    const AURecording r = recording({0, 1, 2, 3, 4, 5}, std::vector<double>(6, 1.0), {{6, {0, 1, 2, 3, 4, 5}}});
    EXPECT_EQ(IntervalSet::from_mask(au_activation(r, b).at(6)).size(), 1u);
}

TEST(Activation, RaisingFactorNeverAddsFrames) {
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    std::vector<double> v(500);
    for (auto& x : v) x = u(g);
    std::vector<Frame> f(500);
    std::iota(f.begin(), f.end(), 0);
    const std::vector<AURecording> recs{recording(f, std::vector<double>(500, 1.0), {{6, v}})};
    const AUBaseline b = baseline_stats(recs);
    Eigen::Index last = recs[0].num_frames() + 1;
    for (const double factor : {-1.0, 0.0, 0.5, 1.0, 2.0}) {
        const Eigen::Index n = au_activation(recs[0], b, factor).at(6).count();
        EXPECT_LE(n, last);
        last = n;
    }
}

TEST(ExpressionActivation, AndSemantics) {
    std::map<AuId, BinaryMask> act;
    act.emplace(15, BinaryMask((BinaryMask::Bits(4) << true, true, false, true).finished()));
    act.emplace(17, BinaryMask((BinaryMask::Bits(4) << true, false, false, true).finished()));
    const BinaryMask m = expression_activation(act, find_expression("sadness_lower"));
    EXPECT_TRUE(m[0]);
    EXPECT_FALSE(m[1]);
    EXPECT_FALSE(m[2]);
    EXPECT_TRUE(m[3]);
    act.at(17) = BinaryMask::constant(4, false);
    EXPECT_EQ(expression_activation(act, find_expression("sadness_lower")).count(), 0);
    EXPECT_EQ(expression_activation(act, ExpressionDef{"only15", {15}}), act.at(15));
    EXPECT_THROW(expression_activation(act, find_expression("happiness_lower")), ConfigError);
}

TEST(ExpressionActivation, ImpliesEveryMember) {
    std::mt19937_64 g(4);
    const ExpressionDef& def = find_expression("fear_upper");
    for (int trial = 0; trial < 50; ++trial) {
        std::map<AuId, BinaryMask> act;
        for (const AuId au : def.au_ids) {
            BinaryMask m = BinaryMask::constant(64, false);
            for (int i = 0; i < 64; ++i) m.bits()(i) = g() % 3 != 0;
            act.emplace(au, m);
        }
        const BinaryMask e = expression_activation(act, def);
        for (int i = 0; i < 64; ++i) {
            bool all = true;
            for (const AuId au : def.au_ids) all = all && act.at(au)[i];
            ASSERT_EQ(e[i], all);
        }
    }
}

TEST(ExpressionSignal, MeanOfMembers) {
    const AURecording r = recording({4, 5}, {1, 1}, {{15, {1.0, 0.0}}, {17, {3.0, 1.0}}, {6, {0.25, 4.0}}});
    const TimeSeries s = expression_signal(r, find_expression("sadness_lower"));
    EXPECT_EQ(s.values()(0), 2.0);
    EXPECT_EQ(s.values()(1), 0.5);
    EXPECT_EQ(s.start_frame(), 4);
    EXPECT_EQ(expression_signal(r, find_expression("happiness_upper")).values(), r.trace(6));
}

TEST(ExpressionSignal, MatchesPerFrameMean) {
    std::mt19937_64 g(5);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    std::map<AuId, std::vector<double>> t;
    for (const AuId au : {1, 2, 4, 5})
        for (int i = 0; i < 100; ++i) t[au].push_back(u(g));
    std::vector<Frame> f(100);
    std::iota(f.begin(), f.end(), 0);
    const AURecording r = recording(f, std::vector<double>(100, 1.0), t);
    const TimeSeries s = expression_signal(r, find_expression("fear_upper"));
    for (int i = 0; i < 100; ++i)
        EXPECT_NEAR(s.values()(i), (t[1][i] + t[2][i] + t[4][i] + t[5][i]) / 4.0, 1e-15);
}

TEST(CountActivations, Fractions) {
    BinaryMask m = BinaryMask::constant(1000, false);
    EXPECT_EQ(count_activations(m, 1000), 0.0);
    for (int i = 0; i < 129; ++i) m.bits()(i * 7) = true;
    EXPECT_DOUBLE_EQ(count_activations(m, 1000), 0.129);
    EXPECT_EQ(count_activations(BinaryMask::constant(1000, true), 1000), 1.0);
    EXPECT_THROW(count_activations(m, 0), ConfigError);
}

TEST(Registry, MatchesShippedTable) {
    std::ifstream in(std::string(DYADGC_SOURCE_DIR) + "/data/expressions.tsv");
    ASSERT_TRUE(in) << "data/expressions.tsv not found";
    std::string line;
    std::getline(in, line);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string name, emotion, region, aus;
        std::getline(ls, name, '\t');
        std::getline(ls, emotion, '\t');
        std::getline(ls, region, '\t');
        std::getline(ls, aus, '\t');
        EXPECT_EQ(name, emotion + "_" + region);
        std::vector<AuId> ids;
        std::istringstream as(aus);
        for (std::string tok; std::getline(as, tok, ',');) ids.push_back(std::stoi(tok));
        const ExpressionDef& def = find_expression(name);
        EXPECT_EQ(def.au_ids, ids) << name;
        EXPECT_EQ(def.name, default_expressions()[rows].name);
        ++rows;
    }
    EXPECT_EQ(rows, default_expressions().size());
    EXPECT_EQ(rows, 11u);
}

TEST(Registry, UnknownNames) {
    EXPECT_THROW(find_expression("joy"), ConfigError);
    EXPECT_THROW(parse_condition("friendly"), ConfigError);
    EXPECT_EQ(parse_role("receiver"), Role::receiver);
    EXPECT_EQ(au_column(6), "AU06_r");
    EXPECT_EQ(au_column(45), "AU45_r");
}
