#include "dyadgc/synth.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

namespace dyadgc {

double NormalSource::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double NormalSource::operator()() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string_view to_string(Coupling c) {
    switch (c) {
        case Coupling::x_to_y: return "x_to_y";
        case Coupling::y_to_x: return "y_to_x";
        case Coupling::bidirectional: return "bidirectional";
        case Coupling::none: return "none";
    }
    return "none";
}

Coupling parse_coupling(std::string_view s) {
    for (const auto c : {Coupling::x_to_y, Coupling::y_to_x, Coupling::bidirectional, Coupling::none})
        if (to_string(c) == s) return c;
    throw ConfigError("unknown coupling direction '" + std::string(s) + "'");
}

namespace {

bool drives_y(Coupling c) { return c == Coupling::x_to_y || c == Coupling::bidirectional; }
bool drives_x(Coupling c) { return c == Coupling::y_to_x || c == Coupling::bidirectional; }

/// Spectral radius of the VAR(lag) companion matrix of one coupling regime.
double spectral_radius(double ar, int lag, double to_y, double to_x) {
    const int dim = 2 * lag;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(dim, dim);
    // State: [x(t), ..., x(t-lag+1), y(t), ..., y(t-lag+1)].
    companion(0, 0) = ar;
    companion(lag, lag) = ar;
    companion(0, lag + lag - 1) += to_x;
    companion(lag, lag - 1) += to_y;
    for (int k = 1; k < lag; ++k) {
        companion(k, k - 1) = 1.0;
        companion(lag + k, lag + k - 1) = 1.0;
    }
    return Eigen::EigenSolver<Eigen::MatrixXd>(companion, false).eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

void CouplingSpec::validate() const {
    if (!(std::abs(ar_coeff) < 1.0)) throw ConfigError("ar_coeff must lie in (-1, 1)");
    if (lag < 1) throw ConfigError("lag must be >= 1");
    if (length < 1) throw ConfigError("length must be >= 1");
    if (!(noise_std >= 0.0)) throw ConfigError("noise_std must be >= 0");
    if (!std::isfinite(strength) || !std::isfinite(background_strength))
        throw ConfigError("coupling strength must be finite");
    for (const auto& iv : active_intervals)
        if (iv.b >= length) throw ConfigError("active interval beyond series length");
    const auto check = [&](Coupling dir, double s) {
        const double radius = spectral_radius(ar_coeff, lag, drives_y(dir) ? s : 0.0,
                                              drives_x(dir) ? s : 0.0);
        if (!(radius < 1.0))
            throw ConfigError("coupling regime is not stable (spectral radius " +
                              std::to_string(radius) + ")");
    };
    check(direction, strength);
    check(background_direction, background_strength);
}

CoupledPair gen_coupled_pair(const CouplingSpec& spec) {
    spec.validate();
    constexpr Eigen::Index kBurnIn = 500;
    const Eigen::Index n = spec.length;
    const Eigen::Index total = kBurnIn + n;
    NormalSource noise_x(derive_seed(spec.seed, 1));
    NormalSource noise_y(derive_seed(spec.seed, 2));

    const BinaryMask active = spec.active_intervals.to_mask(0, n);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(total);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(total);
    for (Eigen::Index t = 0; t < total; ++t) {
        const Eigen::Index frame = t - kBurnIn;
        const bool on = frame >= 0 && active[frame];
        const Coupling dir = on ? spec.direction : spec.background_direction;
        const double s = on ? spec.strength : spec.background_strength;
        double xt = spec.noise_std * noise_x();
        double yt = spec.noise_std * noise_y();
        if (t > 0) {
            xt += spec.ar_coeff * x(t - 1);
            yt += spec.ar_coeff * y(t - 1);
        }
        if (t >= spec.lag) {
            if (drives_y(dir)) yt += s * x(t - spec.lag);
            if (drives_x(dir)) xt += s * y(t - spec.lag);
        }
        x(t) = xt;
        y(t) = yt;
    }
    return {TimeSeries(x.tail(n)), TimeSeries(y.tail(n)), spec};
}

namespace {

double quantize(double v, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::round(v * scale) / scale;
}

AURecording blank_recording(const AUFixtureSpec& spec, Role role) {
    AURecording rec;
    rec.participant_id = spec.pair_id + "_" + std::string(to_string(role));
    rec.condition = spec.condition;
    rec.role = role;
    rec.au_ids.assign(kOpenFaceAus.begin(), kOpenFaceAus.end());
    rec.frames = Eigen::Matrix<Frame, Eigen::Dynamic, 1>::LinSpaced(spec.length, 1, spec.length);
    rec.confidence = Eigen::VectorXd::Constant(spec.length, 0.98);
    rec.intensity.resize(spec.length, static_cast<Eigen::Index>(rec.au_ids.size()));
    return rec;
}

/// Slow idle fluctuation: AR(0.8) rescaled to unit variance.
Eigen::VectorXd idle_trace(Eigen::Index n, std::uint64_t seed) {
    NormalSource g(seed);
    const double phi = 0.8;
    const double scale = std::sqrt(1.0 - phi * phi);
    Eigen::VectorXd v(n);
    double state = g();
    for (Eigen::Index t = 0; t < n; ++t) {
        state = phi * state + scale * g();
        v(t) = state;
    }
    return v;
}

}  // namespace

CouplingSpec episode_coupling(Coupling direction) {
    CouplingSpec c;
    c.direction = direction;
    c.lag = 4;
    c.strength = 3.0;
    c.ar_coeff = 0.5;
    return c;
}

IntervalSet random_episodes(Eigen::Index n, int count, Eigen::Index len, Eigen::Index gap,
                            NormalSource& rng) {
    if (count < 0 || len < 1 || gap < 0) throw ConfigError("random_episodes: bad arguments");
    // Place `count` blocks of len + gap in the span, spreading the slack at random.
    const Eigen::Index slack = n - count * (len + gap) + gap;
    if (slack < 0) throw ConfigError("random_episodes: episodes do not fit the span");
    std::vector<Eigen::Index> cuts(count);
    for (auto& c : cuts) c = static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(slack + 1));
    std::sort(cuts.begin(), cuts.end());
    std::vector<Interval> out;
    for (int k = 0; k < count; ++k) {
        const Eigen::Index a = cuts[k] + k * (len + gap);
        out.push_back({a, a + len - 1, std::nullopt});
    }
    return IntervalSet(std::move(out));
}

AUFixture gen_au_fixture(const AUFixtureSpec& spec) {
    if (spec.length < 2) throw ConfigError("fixture length must be >= 2");
    if (spec.low_confidence_bursts < 0 || spec.low_confidence_burst_length < 1 ||
        spec.low_confidence_burst_length > spec.length)
        throw ConfigError("invalid low-confidence bursts");

    AUFixture fx{blank_recording(spec, Role::sender), blank_recording(spec, Role::receiver), {}, {}, 0.0};
    const auto n = spec.length;
    const auto num_aus = static_cast<Eigen::Index>(kOpenFaceAus.size());
    for (Eigen::Index k = 0; k < num_aus; ++k) {
        fx.sender.intensity.col(k) =
            spec.idle_level + spec.idle_noise * idle_trace(n, derive_seed(spec.seed, 100 + k)).array();
        fx.receiver.intensity.col(k) =
            spec.idle_level + spec.idle_noise * idle_trace(n, derive_seed(spec.seed, 200 + k)).array();
    }

    std::set<AuId> used;
    std::uint64_t stream = 1000;
    for (const auto& planted : spec.planted) {
        const ExpressionDef& def = find_expression(planted.expression);
        for (const AuId au : def.au_ids) {
            if (std::find(kOpenFaceAus.begin(), kOpenFaceAus.end(), au) == kOpenFaceAus.end())
                throw ConfigError("expression '" + def.name + "' needs " + au_column(au) +
                                  ", which OpenFace does not regress");
            if (!used.insert(au).second)
                throw ConfigError("planted expressions share " + au_column(au));
        }
        CouplingSpec cs = planted.coupling;
        cs.length = n;
        cs.seed = derive_seed(spec.seed, stream++);
        const CoupledPair pair = gen_coupled_pair(cs);
        const auto unit = [](const Eigen::VectorXd& v) {
            const double sd = std::sqrt((v.array() - v.mean()).square().mean());
            return Eigen::VectorXd((v.array() - v.mean()) / (sd > kStdFloor ? sd : 1.0));
        };
        const Eigen::VectorXd zx = unit(pair.x.values());
        const Eigen::VectorXd zy = unit(pair.y.values());
        // Envelope in [0, 1] rising and falling over ramp_frames at each
        // episode edge; it crossfades from the idle trace to the coupled one. The driven participant's envelope trails the
        // driver's by `lag` frames, as a response would.
        Eigen::VectorXd envelope = Eigen::VectorXd::Zero(n);
        const double ramp = static_cast<double>(std::max<Eigen::Index>(spec.ramp_frames, 1));
        for (const auto& iv : cs.active_intervals) {
            for (Eigen::Index t = iv.a; t <= iv.b; ++t) {
                const double edge = static_cast<double>(std::min(t - iv.a, iv.b - t)) + 1.0;
                envelope(t) = edge >= ramp ? 1.0 : 0.5 - 0.5 * std::cos(std::numbers::pi * edge / ramp);
            }
        }
        const Eigen::Index delay_s = cs.direction == Coupling::y_to_x ? cs.lag : 0;
        const Eigen::Index delay_r = cs.direction == Coupling::x_to_y ? cs.lag : 0;
        for (const AuId au : def.au_ids) {
            const Eigen::Index col = fx.sender.au_index(au);
            for (Eigen::Index t = 0; t < n; ++t) {
                if (t >= delay_s) {
                    const double e = envelope(t - delay_s);
                    double& v = fx.sender.intensity(t, col);
                    v = (1.0 - e) * v + e * (spec.idle_level + spec.episode_offset + spec.amplitude * zx(t));
                }
                if (t >= delay_r) {
                    const double e = envelope(t - delay_r);
                    double& v = fx.receiver.intensity(t, col);
                    v = (1.0 - e) * v + e * (spec.idle_level + spec.episode_offset + spec.amplitude * zy(t));
                }
            }
        }
        std::vector<Interval> episodes;
        for (const auto& iv : cs.active_intervals)
            episodes.push_back({fx.sender.frames(iv.a), fx.sender.frames(iv.b), std::nullopt});
        fx.planted_episodes[def.name] = IntervalSet(std::move(episodes));
    }

    Eigen::Index clipped = 0;
    for (AURecording* rec : {&fx.sender, &fx.receiver}) {
        clipped += (rec->intensity.array() < 0.0).count() + (rec->intensity.array() > kMaxIntensity).count();
        rec->intensity = rec->intensity.unaryExpr([&](double v) {
            return quantize(std::clamp(v, 0.0, kMaxIntensity), spec.decimals);
        });
    }
    fx.clipped_fraction = static_cast<double>(clipped) / static_cast<double>(2 * n * num_aus);

    NormalSource conf_rng(derive_seed(spec.seed, 7));
    std::set<Frame> low;
    for (AURecording* rec : {&fx.sender, &fx.receiver}) {
        for (int k = 0; k < spec.low_confidence_bursts; ++k) {
            const auto first = static_cast<Eigen::Index>(
                conf_rng.uniform() * static_cast<double>(n - spec.low_confidence_burst_length + 1));
            for (Eigen::Index t = first; t < first + spec.low_confidence_burst_length; ++t) {
                rec->confidence(t) = 0.5;
                low.insert(rec->frames(t));
            }
        }
    }
    fx.low_confidence_frames.assign(low.begin(), low.end());
    fx.sender.validate();
    fx.receiver.validate();
    return fx;
}

std::pair<std::filesystem::path, std::filesystem::path> write_au_fixture(
    const AUFixture& fixture, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto stem = [&](const AURecording& r) {
        const std::string pair = r.participant_id.substr(0, r.participant_id.rfind('_'));
        return dir / (pair + "_" + std::string(to_string(r.condition)) + "_" +
                      std::string(to_string(r.role)) + ".csv");
    };
    const auto s = stem(fixture.sender);
    const auto r = stem(fixture.receiver);
    write_au_csv(s, fixture.sender);
    write_au_csv(r, fixture.receiver);
    return {s, r};
}

std::vector<AUFixtureSpec> cohort_specs(const CohortSpec& spec) {
    if (spec.pairs < 1) throw ConfigError("cohort needs at least one pair");
    struct Plan {
        Condition condition;
        std::vector<std::pair<std::string, Coupling>> planted;
    };
    const std::vector<Plan> plans{
        {Condition::respectful, {{"happiness_lower", Coupling::x_to_y}, {"surprise_lower", Coupling::y_to_x}}},
        {Condition::contempt, {{"sadness_lower", Coupling::x_to_y}, {"happiness_upper", Coupling::y_to_x}}},
        {Condition::objective, {{"surprise_upper", Coupling::x_to_y}}},
    };
    std::vector<AUFixtureSpec> out;
    for (int i = 0; i < spec.pairs; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "p%02d", i + 1);
        for (std::size_t c = 0; c < plans.size(); ++c) {
            AUFixtureSpec fx;
            fx.pair_id = id;
            fx.condition = plans[c].condition;
            fx.length = spec.length;
            fx.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(i) * 16 + c);
            NormalSource rng(derive_seed(fx.seed, 3));
            for (const auto& [expr, dir] : plans[c].planted) {
                PlantedExpression pe{expr, episode_coupling(dir)};
                pe.coupling.active_intervals =
                    random_episodes(spec.length, spec.episodes, spec.episode_length, 50, rng);
                fx.planted.push_back(std::move(pe));
            }
            out.push_back(std::move(fx));
        }
    }
    return out;
}

}  // namespace dyadgc
