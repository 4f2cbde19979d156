#include "dyadgc/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <set>
#include <sstream>
#include <thread>

namespace dyadgc {

std::string_view to_string(GcMode m) { return m == GcMode::pooled ? "pooled" : "averaged"; }

GcMode parse_gc_mode(std::string_view s) {
    if (s == "pooled") return GcMode::pooled;
    if (s == "averaged") return GcMode::averaged;
    throw ConfigError("unknown GC mode '" + std::string(s) + "' (pooled|averaged)");
}

std::string_view to_string(SignalMode m) { return m == SignalMode::expression ? "expression" : "per_au"; }

SignalMode parse_signal_mode(std::string_view s) {
    if (s == "expression") return SignalMode::expression;
    if (s == "per_au") return SignalMode::per_au;
    throw ConfigError("unknown signal mode '" + std::string(s) + "' (expression|per_au)");
}

std::string_view to_string(WConvention c) { return c == WConvention::min_sum ? "min_sum" : "positive_sum"; }

WConvention parse_w_convention(std::string_view s) {
    if (s == "min_sum") return WConvention::min_sum;
    if (s == "positive_sum") return WConvention::positive_sum;
    throw ConfigError("unknown W convention '" + std::string(s) + "' (min_sum|positive_sum)");
}

std::string_view to_string(GcMethod m) { return m == GcMethod::full_span ? "full_span" : "interval_selected"; }

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------- config

void PipelineConfig::validate() const {
    intervals.validate();
    if (!(confidence >= 0.0 && confidence <= 1.0)) throw ConfigError("confidence must lie in [0, 1]");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
    if (m_max < 1) throw ConfigError("m_max must be >= 1");
    if (!(activation_factor >= 0.0) || !std::isfinite(activation_factor))
        throw ConfigError("activation_factor must be >= 0");
    if (!(fdr_q > 0.0 && fdr_q <= 1.0)) throw ConfigError("fdr_q must lie in (0, 1]");
    if (jobs < 0) throw ConfigError("jobs must be >= 0");
    for (const auto& e : expressions) find_expression(e);
}

std::vector<ExpressionDef> PipelineConfig::expression_defs() const {
    if (expressions.empty()) return default_expressions();
    std::vector<ExpressionDef> out;
    for (const auto& e : expressions) out.push_back(find_expression(e));
    return out;
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
    T out{};
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(v) + "'");
    return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config key '" + std::string(key) + "': expected true or false");
}

std::string join_ints(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

}  // namespace

void apply_setting(PipelineConfig& cfg, std::string_view key, std::string_view value) {
    key = trim(key);
    value = trim(value);
    if (key == "beta") cfg.intervals.beta = parse_number<double>(key, value);
    else if (key == "l_min") cfg.intervals.l_min = parse_number<int>(key, value);
    else if (key == "shifts") {
        cfg.intervals.shifts.clear();
        for (const auto item : split(value, ',')) cfg.intervals.shifts.push_back(parse_number<int>(key, item));
    } else if (key == "median_kernel") cfg.intervals.median_kernel = parse_number<int>(key, value);
    else if (key == "extension") cfg.intervals.extension = parse_number<int>(key, value);
    else if (key == "signed_correlation") cfg.intervals.signed_correlation = parse_bool(key, value);
    else if (key == "confidence") cfg.confidence = parse_number<double>(key, value);
    else if (key == "alpha") cfg.alpha = parse_number<double>(key, value);
    else if (key == "criterion") cfg.criterion = parse_criterion(value);
    else if (key == "m_max") cfg.m_max = parse_number<int>(key, value);
    else if (key == "mode") cfg.mode = parse_gc_mode(value);
    else if (key == "signal") cfg.signal = parse_signal_mode(value);
    else if (key == "activation_factor") cfg.activation_factor = parse_number<double>(key, value);
    else if (key == "fdr_q") cfg.fdr_q = parse_number<double>(key, value);
    else if (key == "w_convention") cfg.w_convention = parse_w_convention(value);
    else if (key == "expressions") {
        cfg.expressions.clear();
        if (value != "all")
            for (const auto item : split(value, ',')) cfg.expressions.push_back(find_expression(item).name);
    } else if (key == "jobs") cfg.jobs = parse_number<int>(key, value);
    else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

PipelineConfig parse_config(std::istream& is) {
    PipelineConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string_view v = line;
        if (const auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
        v = trim(v);
        if (v.empty()) continue;
        const auto eq = v.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        apply_setting(cfg, v.substr(0, eq), v.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::string& path_or_default) {
    if (path_or_default.empty() || path_or_default == "default") return PipelineConfig{};
    std::ifstream in(path_or_default);
    if (!in) throw ConfigError("cannot open config file '" + path_or_default + "'");
    return parse_config(in);
}

void write_config(std::ostream& os, const PipelineConfig& cfg) {
    std::string exprs = "all";
    if (!cfg.expressions.empty()) {
        exprs.clear();
        for (std::size_t i = 0; i < cfg.expressions.size(); ++i) exprs += (i ? "," : "") + cfg.expressions[i];
    }
    os << "beta = " << format_number(cfg.intervals.beta) << '\n'
       << "l_min = " << cfg.intervals.l_min << '\n'
       << "shifts = " << join_ints(cfg.intervals.shifts) << '\n'
       << "median_kernel = " << cfg.intervals.median_kernel << '\n'
       << "extension = " << cfg.intervals.extension << '\n'
       << "signed_correlation = " << (cfg.intervals.signed_correlation ? "true" : "false") << '\n'
       << "confidence = " << format_number(cfg.confidence) << '\n'
       << "alpha = " << format_number(cfg.alpha) << '\n'
       << "criterion = " << to_string(cfg.criterion) << '\n'
       << "m_max = " << cfg.m_max << '\n'
       << "mode = " << to_string(cfg.mode) << '\n'
       << "signal = " << to_string(cfg.signal) << '\n'
       << "activation_factor = " << format_number(cfg.activation_factor) << '\n'
       << "fdr_q = " << format_number(cfg.fdr_q) << '\n'
       << "w_convention = " << to_string(cfg.w_convention) << '\n'
       << "expressions = " << exprs << '\n'
       << "jobs = " << cfg.jobs << '\n';
}

// -------------------------------------------------------------- manifest

void Manifest::validate() const {
    std::set<std::tuple<std::string, Role, Condition>> seen;
    for (const auto& r : rows) {
        if (r.pair_id.empty()) throw FormatError("manifest: empty pair_id");
        if (!seen.insert({r.pair_id, r.role, r.condition}).second)
            throw FormatError("manifest: duplicate row for " + r.pair_id + " " + std::string(to_string(r.role)) +
                              " " + std::string(to_string(r.condition)));
    }
    for (const auto& r : rows) {
        const Role other = r.role == Role::sender ? Role::receiver : Role::sender;
        if (!seen.count({r.pair_id, other, r.condition}))
            throw FormatError("manifest: pair " + r.pair_id + " has no " + std::string(to_string(other)) +
                              " in condition " + std::string(to_string(r.condition)));
    }
}

std::vector<std::string> Manifest::pair_ids() const {
    std::set<std::string> ids;
    for (const auto& r : rows) ids.insert(r.pair_id);
    return {ids.begin(), ids.end()};
}

std::vector<Condition> Manifest::conditions() const {
    std::vector<Condition> out;
    for (const auto c : kAllConditions)
        if (std::any_of(rows.begin(), rows.end(), [&](const ManifestRow& r) { return r.condition == c; }))
            out.push_back(c);
    return out;
}

const ManifestRow* Manifest::find(const std::string& pair_id, Role role, Condition c) const {
    for (const auto& r : rows)
        if (r.pair_id == pair_id && r.role == role && r.condition == c) return &r;
    return nullptr;
}

Manifest parse_manifest(std::istream& is, const std::filesystem::path& base_dir) {
    std::string line;
    if (!std::getline(is, line)) return {};
    const auto header = split(line, ',');
    const std::vector<std::string_view> wanted{"pair_id", "role", "condition", "path"};
    std::vector<std::size_t> col(wanted.size());
    for (std::size_t k = 0; k < wanted.size(); ++k) {
        const auto it = std::find(header.begin(), header.end(), wanted[k]);
        if (it == header.end()) throw FormatError(std::string(wanted[k]));
        col[k] = static_cast<std::size_t>(it - header.begin());
    }
    Manifest m;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != header.size())
            throw FormatError("manifest line " + std::to_string(lineno) + ": expected " +
                              std::to_string(header.size()) + " fields");
        ManifestRow row;
        try {
            row.pair_id = std::string(cells[col[0]]);
            row.role = parse_role(cells[col[1]]);
            row.condition = parse_condition(cells[col[2]]);
        } catch (const ConfigError& e) {
            throw FormatError("manifest line " + std::to_string(lineno) + ": " + e.what());
        }
        const std::filesystem::path p(std::string(cells[col[3]]));
        row.path = p.is_absolute() ? p : base_dir / p;
        m.rows.push_back(std::move(row));
    }
    m.validate();
    return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open manifest '" + path.string() + "'");
    return parse_manifest(in, path.parent_path());
}

void write_manifest(std::ostream& os, const Manifest& m) {
    os << "pair_id,role,condition,path\n";
    for (const auto& r : m.rows)
        os << r.pair_id << ',' << to_string(r.role) << ',' << to_string(r.condition) << ','
           << r.path.generic_string() << '\n';
}

// ------------------------------------------------------------- per cell

namespace {

/// Values on synced rows laid out on a contiguous frame axis. Frames that
/// were dropped hold zero and are never read: every consumer works inside
/// the runs of kept frames.
TimeSeries dense_series(const Eigen::Matrix<Frame, Eigen::Dynamic, 1>& frames, const Eigen::VectorXd& v) {
    if (frames.size() == 0) return TimeSeries();
    const Frame first = frames(0);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(frames(frames.size() - 1) - first + 1);
    for (Eigen::Index i = 0; i < frames.size(); ++i) out(frames(i) - first) = v(i);
    return TimeSeries(std::move(out), first);
}

Frame series_length(const SyncedPair& p) { return p.kept_frames.empty() ? 0 : p.kept_frames.intervals().back().b + 1; }

std::optional<std::string> missing_au(const CellInput& cell, const ExpressionDef& expr) {
    for (const AuId au : expr.au_ids)
        if (!cell.synced.sender.has_au(au) || !cell.synced.receiver.has_au(au)) return au_column(au);
    return std::nullopt;
}

using AuCache = std::map<AuId, IntervalSet>;

IntervalSet au_intervals(const CellInput& cell, AuId au, const PipelineConfig& cfg) {
    const auto& s = cell.synced;
    const TimeSeries x = dense_series(s.sender.frames, s.sender.trace(au));
    const TimeSeries y = dense_series(s.receiver.frames, s.receiver.trace(au));
    const IntervalSet found = mine_shifted_runs(x, y, s.kept_frames, cfg.intervals);
    return median_filter_set(found, cfg.intervals.median_kernel, series_length(s));
}

IntervalSet select_intervals_cached(const CellInput& cell, const ExpressionDef& expr, const PipelineConfig& cfg,
                                    AuCache* cache) {
    if (const auto au = missing_au(cell, expr)) throw ConfigError("recording has no " + *au);
    std::vector<IntervalSet> per_au;
    for (const AuId au : expr.au_ids) {
        if (cache) {
            auto it = cache->find(au);
            if (it == cache->end()) it = cache->emplace(au, au_intervals(cell, au, cfg)).first;
            per_au.push_back(it->second);
        } else {
            per_au.push_back(au_intervals(cell, au, cfg));
        }
    }
    const IntervalSet common = intersect_sets(per_au);
    const IntervalSet grown = dilate(common, cfg.intervals.extension, series_length(cell.synced));
    return intersect_sets(grown, cell.synced.kept_frames);
}

std::vector<SegmentPair> signal_segments(const CellInput& cell, const Eigen::VectorXd& sx,
                                         const Eigen::VectorXd& sy, const IntervalSet& span) {
    const auto& frames = cell.synced.sender.frames;
    return segment_series(dense_series(frames, standardized(sx)), dense_series(frames, standardized(sy)), span);
}

GCTestResult run_gc(std::span<const SegmentPair> segs, int order, const PipelineConfig& cfg) {
    return cfg.mode == GcMode::pooled ? gc_test(segs, order, cfg.alpha) : gc_test_averaged(segs, order, cfg.alpha);
}

}  // namespace

IntervalSet select_intervals(const CellInput& cell, const ExpressionDef& expr, const PipelineConfig& cfg) {
    return select_intervals_cached(cell, expr, cfg, nullptr);
}

CellRecord granger_cell(const CellInput& cell, const ExpressionDef& expr, const IntervalSet* intervals,
                        const PipelineConfig& cfg) {
    CellRecord rec;
    rec.pair_id = cell.pair_id;
    rec.condition = cell.condition;
    rec.expression = expr.name;
    rec.method = intervals ? GcMethod::interval_selected : GcMethod::full_span;
    if (const auto au = missing_au(cell, expr)) {
        rec.reason = "missing " + *au;
        return rec;
    }
    const IntervalSet& span = intervals ? *intervals : cell.synced.kept_frames;
    rec.frames_used = span.total_length();
    rec.segments = span.size();
    if (span.empty()) {
        rec.degenerate = true;
        rec.reason = "no relevant intervals";
        return rec;
    }
    try {
        const auto& s = cell.synced;
        const auto segs = signal_segments(cell, expression_signal(s.sender, expr).values(),
                                          expression_signal(s.receiver, expr).values(), span);
        const int order = select_order(segs, cfg.m_max, cfg.criterion);
        if (cfg.signal == SignalMode::expression || expr.au_ids.size() == 1) {
            rec.result = run_gc(segs, order, cfg);
        } else {
            std::vector<GCTestResult> per_au;
            std::vector<double> weights;
            for (const AuId au : expr.au_ids) {
                try {
                    const auto au_segs = signal_segments(cell, s.sender.trace(au), s.receiver.trace(au), span);
                    per_au.push_back(run_gc(au_segs, order, cfg));
                    weights.push_back(static_cast<double>(per_au.back().n_effective));
                } catch (const SingularDesign&) {
                    // A flat AU carries no evidence; the others decide.
                }
            }
            rec.result = average_gc(per_au, weights);
        }
    } catch (const Error& e) {
        rec.degenerate = true;
        rec.reason = e.what();
        rec.result.reset();
    }
    return rec;
}

// ------------------------------------------------------------- pipeline

namespace {

using RecKey = std::tuple<std::string, Role, Condition>;

struct Loaded {
    std::map<RecKey, AURecording> recordings;
    std::vector<std::string> warnings;
};

int worker_count(const PipelineConfig& cfg, std::size_t tasks) {
    int n = cfg.jobs > 0 ? cfg.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n), std::max<std::size_t>(1, tasks)));
}

/// Runs fn(i) for i in [0, n) on `workers` threads. Each index is written
/// by exactly one task, so results stay in input order.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
}

Loaded load_recordings(const Manifest& m, const PipelineConfig& cfg) {
    std::vector<std::optional<AURecording>> parsed(m.rows.size());
    std::vector<std::string> errors(m.rows.size());
    parallel_for(m.rows.size(), worker_count(cfg, m.rows.size()), [&](std::size_t i) {
        const auto& row = m.rows[i];
        try {
            AURecording rec = parse_au_csv(row.path);
            rec.participant_id = row.pair_id + "_" + std::string(to_string(row.role));
            rec.role = row.role;
            rec.condition = row.condition;
            parsed[i] = std::move(rec);
        } catch (const std::exception& e) {
            errors[i] = row.path.generic_string() + ": " + e.what();
        }
    });
    Loaded out;
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
        const auto& row = m.rows[i];
        if (parsed[i]) out.recordings.emplace(RecKey{row.pair_id, row.role, row.condition}, std::move(*parsed[i]));
        else out.warnings.push_back(errors[i]);
    }
    return out;
}

std::vector<CellInput> make_cells(const Manifest& m, const Loaded& loaded, const PipelineConfig& cfg,
                                  std::vector<std::string>& warnings) {
    std::vector<CellInput> cells;
    for (const auto& pair : m.pair_ids()) {
        for (const auto c : m.conditions()) {
            const auto s = loaded.recordings.find({pair, Role::sender, c});
            const auto r = loaded.recordings.find({pair, Role::receiver, c});
            if (!m.find(pair, Role::sender, c)) continue;
            const std::string label = pair + " " + std::string(to_string(c));
            if (s == loaded.recordings.end() || r == loaded.recordings.end()) {
                warnings.push_back(label + ": skipped, a recording failed to load");
                continue;
            }
            try {
                cells.push_back({pair, c, confidence_sync(s->second, r->second, cfg.confidence)});
            } catch (const Error& e) {
                warnings.push_back(label + ": skipped, " + e.what());
            }
        }
    }
    return cells;
}

AURecording confident_rows(const AURecording& rec, double threshold) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < rec.num_frames(); ++i)
        if (rec.confidence(i) >= threshold) keep.push_back(i);
    AURecording out = rec;
    out.frames.resize(static_cast<Eigen::Index>(keep.size()));
    out.confidence.resize(out.frames.size());
    out.intensity.resize(out.frames.size(), rec.intensity.cols());
    for (std::size_t k = 0; k < keep.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        out.frames(i) = rec.frames(keep[k]);
        out.confidence(i) = rec.confidence(keep[k]);
        out.intensity.row(i) = rec.intensity.row(keep[k]);
    }
    return out;
}

std::vector<ComparisonRow> occurrence_table(const Loaded& loaded, const PipelineConfig& cfg,
                                            const std::vector<ExpressionDef>& exprs,
                                            std::vector<std::string>& warnings) {
    std::map<std::string, std::vector<const AURecording*>> by_participant;
    for (const auto& [key, rec] : loaded.recordings) by_participant[rec.participant_id].push_back(&rec);

    CohortCounts counts;
    for (const auto& [pid, recs] : by_participant) {
        std::vector<AURecording> confident;
        std::vector<Eigen::Index> video_len;
        for (const auto* r : recs) {
            AURecording c = confident_rows(*r, cfg.confidence);
            if (c.num_frames() < 2) continue;
            confident.push_back(std::move(c));
            video_len.push_back(r->num_frames());
        }
        if (confident.empty()) continue;
        AUBaseline base;
        try {
            base = baseline_stats(confident);
        } catch (const Error& e) {
            warnings.push_back(pid + ": no baseline, " + e.what());
            continue;
        }
        for (std::size_t k = 0; k < confident.size(); ++k) {
            const auto act = au_activation(confident[k], base, cfg.activation_factor);
            for (const auto& e : exprs) {
                if (!std::all_of(e.au_ids.begin(), e.au_ids.end(), [&](AuId au) { return act.count(au) > 0; }))
                    continue;
                const BinaryMask mask = expression_activation(act, e);
                counts.values[pid][confident[k].condition][e.name] = count_activations(mask, video_len[k]);
            }
        }
    }
    if (counts.values.size() < 2) {
        warnings.push_back("occurrence comparison skipped: fewer than two participants");
        return {};
    }
    return condition_comparison(normalize_by_cohort_max(counts), cfg.fdr_q, cfg.w_convention);
}

std::string cell_key(const std::string& pair, Condition c, const std::string& expr) {
    return pair + "_" + std::string(to_string(c)) + "_" + expr;
}

}  // namespace

std::vector<CellInput> load_cells(const Manifest& m, const PipelineConfig& cfg, std::vector<std::string>& warnings) {
    Loaded loaded = load_recordings(m, cfg);
    warnings.insert(warnings.end(), loaded.warnings.begin(), loaded.warnings.end());
    return make_cells(m, loaded, cfg, warnings);
}

void DirectionCounts::add(Direction d) {
    switch (d) {
        case Direction::sender_causes_receiver: ++s_gc_r; break;
        case Direction::receiver_causes_sender: ++r_gc_s; break;
        case Direction::bidirectional: ++bidirectional; break;
        case Direction::none: ++none; break;
    }
}

std::optional<Direction> DirectionCounts::dominant() const {
    if (s_gc_r > r_gc_s) return Direction::sender_causes_receiver;
    if (r_gc_s > s_gc_r) return Direction::receiver_causes_sender;
    return std::nullopt;
}

std::vector<ConditionTable> tabulate(const std::vector<CellRecord>& records, const std::vector<Condition>& conditions,
                                     const std::vector<std::string>& expressions) {
    std::vector<ConditionTable> tables;
    for (const auto c : conditions) {
        ConditionTable t;
        t.condition = c;
        for (const auto& e : expressions) {
            ExpressionRow row;
            row.expression = e;
            for (const auto& r : records) {
                if (r.condition != c || r.expression != e) continue;
                if (!r.result && !r.degenerate) continue;
                DirectionCounts& dc = r.method == GcMethod::full_span ? row.full_span : row.interval_selected;
                dc.add(r.outcome());
                if (r.degenerate) ++dc.degenerate;
            }
            row.analyzable = row.full_span.total();
            t.rows.push_back(std::move(row));
        }
        int used = 0;
        for (const auto& row : t.rows) {
            if (row.analyzable == 0) continue;
            ++used;
            const auto acc = [](AverageCounts& a, const DirectionCounts& d) {
                a.s_gc_r += d.s_gc_r;
                a.r_gc_s += d.r_gc_s;
                a.bidirectional += d.bidirectional;
                a.none += d.none;
            };
            acc(t.average_full_span, row.full_span);
            acc(t.average_interval_selected, row.interval_selected);
        }
        if (used > 0) {
            for (AverageCounts* a : {&t.average_full_span, &t.average_interval_selected}) {
                a->s_gc_r /= used;
                a->r_gc_s /= used;
                a->bidirectional /= used;
                a->none /= used;
            }
        }
        tables.push_back(std::move(t));
    }
    return tables;
}

PipelineResult run_pipeline(const Manifest& m, const PipelineConfig& cfg) {
    cfg.validate();
    m.validate();
    PipelineResult out;
    out.report.mode = cfg.mode;
    out.report.signal = cfg.signal;
    out.report.alpha = cfg.alpha;
    if (m.rows.empty()) {
        out.report.warnings.push_back("manifest lists no recordings");
        return out;
    }
    const auto exprs = cfg.expression_defs();
    Loaded loaded = load_recordings(m, cfg);
    out.report.warnings = loaded.warnings;
    const auto cells = make_cells(m, loaded, cfg, out.report.warnings);

    struct CellOutput {
        std::vector<CellRecord> records;
        std::vector<std::pair<std::string, IntervalSet>> intervals;
        std::vector<std::string> warnings;
    };
    std::vector<CellOutput> outputs(cells.size());
    parallel_for(cells.size(), worker_count(cfg, cells.size()), [&](std::size_t i) {
        const CellInput& cell = cells[i];
        CellOutput& o = outputs[i];
        AuCache cache;
        for (const auto& e : exprs) {
            o.records.push_back(granger_cell(cell, e, nullptr, cfg));
            if (const auto au = missing_au(cell, e)) {
                o.records.push_back(granger_cell(cell, e, &cell.synced.kept_frames, cfg));
                o.warnings.push_back(cell.pair_id + " " + std::string(to_string(cell.condition)) + " " + e.name +
                                     ": not analysable, missing " + *au);
                continue;
            }
            try {
                const IntervalSet aw = select_intervals_cached(cell, e, cfg, &cache);
                o.intervals.emplace_back(cell_key(cell.pair_id, cell.condition, e.name), aw);
                o.records.push_back(granger_cell(cell, e, &aw, cfg));
            } catch (const Error& err) {
                CellRecord rec;
                rec.pair_id = cell.pair_id;
                rec.condition = cell.condition;
                rec.expression = e.name;
                rec.method = GcMethod::interval_selected;
                rec.degenerate = true;
                rec.reason = err.what();
                o.records.push_back(std::move(rec));
            }
        }
    });
    for (auto& o : outputs) {
        for (auto& r : o.records) out.records.push_back(std::move(r));
        for (auto& [k, v] : o.intervals) out.intervals.emplace(k, std::move(v));
        for (auto& w : o.warnings) out.report.warnings.push_back(std::move(w));
    }

    std::vector<std::string> names;
    for (const auto& e : exprs) names.push_back(e.name);
    out.report.tables = tabulate(out.records, m.conditions(), names);
    try {
        out.report.occurrence = occurrence_table(loaded, cfg, exprs, out.report.warnings);
    } catch (const Error& e) {
        out.report.warnings.push_back(std::string("occurrence comparison failed: ") + e.what());
    }
    return out;
}

}  // namespace dyadgc
