#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "dyadgc/au.hpp"
#include "dyadgc/intervals.hpp"

namespace dyadgc {

/// Standard normal draws from mt19937_64 via Box-Muller, so a seed gives
/// the same stream with every standard library.
class NormalSource {
public:
    explicit NormalSource(std::uint64_t seed) : engine_(seed) {}
    double operator()();
    /// Uniform in [0, 1).
    double uniform();

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

/// Mixes a base seed with a stream tag (splitmix64 finaliser).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

enum class Coupling { x_to_y, y_to_x, bidirectional, none };
std::string_view to_string(Coupling c);
Coupling parse_coupling(std::string_view s);

struct CouplingSpec {
    Coupling direction = Coupling::x_to_y;
    int lag = 1;
    double strength = 0.8;
    /// Frames where the coupling acts; everything else is uncoupled.
    IntervalSet active_intervals;
    double noise_std = 1.0;
    double ar_coeff = 0.5;
    Eigen::Index length = 2000;
    std::uint64_t seed = 0;
    /// Optional coupling applied outside `active_intervals`.
    Coupling background_direction = Coupling::none;
    double background_strength = 0.0;

    /// Active over the whole span.
    static IntervalSet everywhere(Eigen::Index length) {
        return length > 0 ? IntervalSet({{0, length - 1, std::nullopt}}) : IntervalSet{};
    }
    /// Throws ConfigError for invalid or explosive specifications.
    void validate() const;
};

struct CoupledPair {
    TimeSeries x;
    TimeSeries y;
    CouplingSpec truth;
};

/// Two AR(ar_coeff) series with Gaussian innovations; inside the active
/// intervals the driven series also receives strength * driver(t - lag).
CoupledPair gen_coupled_pair(const CouplingSpec& spec);

struct PlantedExpression {
    std::string expression;
    /// x drives the sender's member AUs, y the receiver's. `length` and
    /// `seed` are taken from the fixture.
    CouplingSpec coupling;
};

struct AUFixtureSpec {
    std::string pair_id = "p01";
    Condition condition = Condition::respectful;
    Eigen::Index length = 1500;
    std::uint64_t seed = 1;
    std::vector<PlantedExpression> planted;
    /// Bursts per participant whose frames get confidence 0.5, as when
    /// the tracker briefly loses the face.
    int low_confidence_bursts = 2;
    Eigen::Index low_confidence_burst_length = 6;
    double idle_level = 1.0;
    double idle_noise = 0.1;
    /// Level of member AUs above idle inside an active interval. A level
    /// shift makes the partner's level a regime indicator, which a linear
    /// VAR picks up as spurious reverse causality near episode edges.
    double episode_offset = 0.0;
    /// Raised-cosine onset and offset of the episode envelope, in frames;
    /// 1 switches abruptly.
    Eigen::Index ramp_frames = 1;
    /// Scale of the coupled dynamics inside an active interval.
    double amplitude = 0.35;
    /// Round intensities to this many decimals (OpenFace writes two).
    int decimals = 2;
};

struct AUFixture {
    AURecording sender;
    AURecording receiver;
    /// Per planted expression, frames where the driving participant's
    /// member AUs are raised; the driven side follows `lag` frames later.
    std::map<std::string, IntervalSet> planted_episodes;
    /// Frames given low confidence on either side.
    std::vector<Frame> low_confidence_frames;
    /// Fraction of intensity samples that had to be clipped into [0, 5].
    double clipped_fraction = 0.0;
};

/// Regime used for planted episodes: lag 4 sits on the default shift grid
/// and the drive dominates the receiver's own noise, so windows inside an
/// episode clear beta = 0.8.
CouplingSpec episode_coupling(Coupling direction);

/// `count` disjoint intervals of `len` frames in [0, n), at least `gap`
/// frames apart, drawn from `rng`. Throws ConfigError if they cannot fit.
IntervalSet random_episodes(Eigen::Index n, int count, Eigen::Index len, Eigen::Index gap,
                            NormalSource& rng);

/// Builds the recordings in memory.
AUFixture gen_au_fixture(const AUFixtureSpec& spec);

/// Builds the recordings and writes `<pair>_<condition>_{sender,receiver}.csv`
/// into `dir`; returns the two paths.
std::pair<std::filesystem::path, std::filesystem::path> write_au_fixture(
    const AUFixture& fixture, const std::filesystem::path& dir);

struct CohortSpec {
    int pairs = 4;
    Eigen::Index length = 1200;
    std::uint64_t seed = 20210901;
    int episodes = 2;
    Eigen::Index episode_length = 160;
};

/// One fixture per pair and condition. Each condition plants its own
/// expressions: respectful happiness_lower S->R and surprise_lower R->S,
/// contempt sadness_lower S->R and happiness_upper R->S, objective
/// surprise_upper S->R.
std::vector<AUFixtureSpec> cohort_specs(const CohortSpec& spec);

}  // namespace dyadgc
