#include "dyadgc/au.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace dyadgc {

std::string_view to_string(Condition c) {
    switch (c) {
        case Condition::respectful: return "respectful";
        case Condition::contempt: return "contempt";
        case Condition::objective: return "objective";
    }
    return "?";
}

std::string_view to_string(Role r) { return r == Role::sender ? "sender" : "receiver"; }

Condition parse_condition(std::string_view s) {
    for (const auto c : kAllConditions)
        if (to_string(c) == s) return c;
    throw ConfigError("unknown condition '" + std::string(s) + "'");
}

Role parse_role(std::string_view s) {
    if (s == "sender") return Role::sender;
    if (s == "receiver") return Role::receiver;
    throw ConfigError("unknown role '" + std::string(s) + "'");
}

std::string au_column(AuId au) {
    std::ostringstream os;
    os << "AU" << std::setw(2) << std::setfill('0') << au << "_r";
    return os.str();
}

const std::vector<ExpressionDef>& default_expressions() {
    static const std::vector<ExpressionDef> registry{
        {"happiness_upper", {6}},       {"happiness_lower", {12, 25}},
        {"surprise_upper", {1, 2, 5}},  {"surprise_lower", {26}},
        {"disgust_lower", {9, 10, 25}}, {"fear_upper", {1, 2, 4, 5}},
        {"fear_lower", {20, 25}},       {"sadness_upper", {1, 4}},
        {"sadness_lower", {15, 17}},    {"anger_upper", {4, 5, 7}},
        {"anger_lower", {17, 23, 24}},
    };
    return registry;
}

const ExpressionDef& find_expression(std::string_view name) {
    for (const auto& e : default_expressions())
        if (e.name == name) return e;
    throw ConfigError("unknown expression '" + std::string(name) + "'");
}

bool AURecording::has_au(AuId au) const {
    return std::find(au_ids.begin(), au_ids.end(), au) != au_ids.end();
}

Eigen::Index AURecording::au_index(AuId au) const {
    const auto it = std::find(au_ids.begin(), au_ids.end(), au);
    if (it == au_ids.end())
        throw ConfigError("recording '" + participant_id + "' has no " + au_column(au));
    return it - au_ids.begin();
}

AUFrame AURecording::frame(Eigen::Index row) const {
    AUFrame f{frames(row), confidence(row), {}};
    for (std::size_t k = 0; k < au_ids.size(); ++k)
        f.au_intensity[au_ids[k]] = intensity(row, static_cast<Eigen::Index>(k));
    return f;
}

void AURecording::validate() const {
    const Eigen::Index n = frames.size();
    if (confidence.size() != n || intensity.rows() != n ||
        intensity.cols() != static_cast<Eigen::Index>(au_ids.size()))
        throw FormatError("recording '" + participant_id + "': inconsistent column sizes");
    for (Eigen::Index i = 1; i < n; ++i)
        if (frames(i) <= frames(i - 1))
            throw FormatError("recording '" + participant_id + "': frame indices not increasing at row " +
                              std::to_string(i + 1));
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(confidence(i) >= 0.0 && confidence(i) <= 1.0))
            throw FormatError("recording '" + participant_id + "': confidence out of [0,1] at row " +
                              std::to_string(i + 1));
        if (!(intensity.row(i).array() >= 0.0).all() ||
            !(intensity.row(i).array() <= kMaxIntensity).all())
            throw FormatError("recording '" + participant_id + "': intensity out of [0,5] at row " +
                              std::to_string(i + 1));
    }
}

namespace {

std::string_view trim(std::string_view s) {
    const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && ws(s.front())) s.remove_prefix(1);
    while (!s.empty() && ws(s.back())) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t comma = line.find(',', pos);
        out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

AURecording parse_au_csv(std::istream& is, std::string_view source) {
    const std::string src(source);
    std::string line;
    if (!std::getline(is, line)) throw FormatError(src + ": missing header row");
    const auto header = split_csv(line);
    const auto find_col = [&](std::string_view name) -> std::ptrdiff_t {
        const auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : it - header.begin();
    };

    const auto require = [&](const std::string& name) {
        const auto c = find_col(name);
        if (c < 0) throw FormatError(name);
        return c;
    };
    const auto frame_col = require("frame");
    const auto conf_col = require("confidence");

    AURecording rec;
    std::vector<std::ptrdiff_t> au_cols;
    for (const AuId au : kOpenFaceAus) {
        au_cols.push_back(require(au_column(au)));
        rec.au_ids.push_back(au);
    }
    for (const AuId au : kOptionalAus) {
        if (const auto c = find_col(au_column(au)); c >= 0) {
            au_cols.push_back(c);
            rec.au_ids.push_back(au);
        }
    }

    std::vector<Frame> frames;
    std::vector<double> conf;
    std::vector<double> values;
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() < header.size())
            throw FormatError(src + ": row " + std::to_string(row) + " has too few columns");
        const auto bad = [&](std::ptrdiff_t col) {
            return FormatError(src + ": non-numeric value in column '" + std::string(header[col]) +
                               "' at row " + std::to_string(row));
        };
        Frame f = 0;
        if (!parse_number(cells[frame_col], f)) throw bad(frame_col);
        double c = 0.0;
        if (!parse_number(cells[conf_col], c)) throw bad(conf_col);
        frames.push_back(f);
        conf.push_back(c);
        for (const auto col : au_cols) {
            double v = 0.0;
            if (!parse_number(cells[col], v)) throw bad(col);
            values.push_back(v);
        }
    }

    const auto n = static_cast<Eigen::Index>(frames.size());
    const auto k = static_cast<Eigen::Index>(rec.au_ids.size());
    rec.participant_id = src;
    rec.frames = Eigen::Map<const Eigen::Matrix<Frame, Eigen::Dynamic, 1>>(frames.data(), n);
    rec.confidence = Eigen::Map<const Eigen::VectorXd>(conf.data(), n);
    rec.intensity =
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            values.data(), n, k);
    rec.validate();
    return rec;
}

AURecording parse_au_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(path.string() + ": cannot open file");
    return parse_au_csv(in, path.string());
}

namespace {

void put_number(std::ostream& os, double v) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    os.write(buf, end - buf);
}

}  // namespace

void write_au_csv(std::ostream& os, const AURecording& rec) {
    os << "frame,confidence";
    for (const AuId au : rec.au_ids) os << ',' << au_column(au);
    os << '\n';
    for (Eigen::Index i = 0; i < rec.num_frames(); ++i) {
        os << rec.frames(i) << ',';
        put_number(os, rec.confidence(i));
        for (Eigen::Index k = 0; k < rec.intensity.cols(); ++k) {
            os << ',';
            put_number(os, rec.intensity(i, k));
        }
        os << '\n';
    }
}

void write_au_csv(const std::filesystem::path& path, const AURecording& rec) {
    std::ofstream out(path);
    if (!out) throw Error(path.string() + ": cannot open for writing");
    write_au_csv(out, rec);
    if (!out) throw Error(path.string() + ": write failed");
}

namespace {

AURecording select_rows(const AURecording& rec, const std::vector<Eigen::Index>& rows) {
    AURecording out;
    out.participant_id = rec.participant_id;
    out.condition = rec.condition;
    out.role = rec.role;
    out.au_ids = rec.au_ids;
    const auto n = static_cast<Eigen::Index>(rows.size());
    out.frames.resize(n);
    out.confidence.resize(n);
    out.intensity.resize(n, rec.intensity.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        out.frames(i) = rec.frames(rows[i]);
        out.confidence(i) = rec.confidence(rows[i]);
        out.intensity.row(i) = rec.intensity.row(rows[i]);
    }
    return out;
}

}  // namespace

SyncedPair confidence_sync(const AURecording& s, const AURecording& r, double threshold) {
    std::vector<Eigen::Index> rows_s, rows_r;
    bool any_common = false;
    Eigen::Index i = 0, j = 0;
    while (i < s.num_frames() && j < r.num_frames()) {
        if (s.frames(i) < r.frames(j)) { ++i; continue; }
        if (r.frames(j) < s.frames(i)) { ++j; continue; }
        any_common = true;
        if (s.confidence(i) >= threshold && r.confidence(j) >= threshold) {
            rows_s.push_back(i);
            rows_r.push_back(j);
        }
        ++i;
        ++j;
    }
    if (!any_common) throw EmptyOverlap("confidence_sync: recordings share no frames");
    if (rows_s.empty())
        throw EmptyOverlap("confidence_sync: no frame passes confidence " + std::to_string(threshold));

    SyncedPair out{select_rows(s, rows_s), select_rows(r, rows_r), {}};
    std::vector<Interval> runs;
    for (Eigen::Index k = 0; k < out.sender.num_frames(); ++k) {
        const Frame f = out.sender.frames(k);
        if (!runs.empty() && runs.back().b + 1 == f) runs.back().b = f;
        else runs.push_back({f, f, std::nullopt});
    }
    out.kept_frames = IntervalSet(std::move(runs));
    return out;
}

AUBaseline baseline_stats(std::span<const AURecording> recordings) {
    AUBaseline base;
    std::set<Condition> seen;
    Eigen::Index total = 0;
    for (const auto& rec : recordings) {
        seen.insert(rec.condition);
        total += rec.num_frames();
    }
    if (total == 0) throw DegenerateSeries("baseline_stats: no frames");
    base.incomplete = seen.size() < kAllConditions.size();

    std::set<AuId> aus;
    for (const auto& rec : recordings) aus.insert(rec.au_ids.begin(), rec.au_ids.end());
    for (const AuId au : aus) {
        // Two passes over the pooled frames of every recording carrying the AU.
        double sum = 0.0;
        Eigen::Index n = 0;
        for (const auto& rec : recordings)
            if (rec.has_au(au)) { sum += rec.trace(au).sum(); n += rec.num_frames(); }
        if (n == 0) continue;
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (const auto& rec : recordings)
            if (rec.has_au(au)) ss += (rec.trace(au).array() - mean).square().sum();
        const double sd = n > kStdDdof ? std::sqrt(ss / static_cast<double>(n - kStdDdof)) : 0.0;
        base.stats[au] = {mean, sd};
    }
    return base;
}

std::map<AuId, BinaryMask> au_activation(const AURecording& rec, const AUBaseline& base,
                                         double factor) {
    std::map<AuId, BinaryMask> out;
    const Frame start = rec.num_frames() > 0 ? rec.frames(0) : 0;
    for (const AuId au : rec.au_ids) {
        const auto it = base.stats.find(au);
        if (it == base.stats.end()) throw ConfigError("baseline lacks " + au_column(au));
        const double threshold = it->second.mean + factor * it->second.std;
        out.emplace(au, BinaryMask((rec.trace(au).array() >= threshold).eval(), start));
    }
    return out;
}

BinaryMask expression_activation(const std::map<AuId, BinaryMask>& act, const ExpressionDef& def) {
    if (def.au_ids.empty()) throw ConfigError("expression '" + def.name + "' has no AUs");
    BinaryMask out;
    bool first = true;
    for (const AuId au : def.au_ids) {
        const auto it = act.find(au);
        if (it == act.end())
            throw ConfigError("expression '" + def.name + "': no activation mask for " + au_column(au));
        if (first) {
            out = it->second;
            first = false;
            continue;
        }
        if (it->second.size() != out.size())
            throw ShapeError("expression '" + def.name + "': mask length mismatch");
        out.bits() = out.bits() && it->second.bits();
    }
    return out;
}

TimeSeries expression_signal(const AURecording& rec, const ExpressionDef& def) {
    if (def.au_ids.empty()) throw ConfigError("expression '" + def.name + "' has no AUs");
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(rec.num_frames());
    for (const AuId au : def.au_ids) acc += rec.trace(au);
    acc /= static_cast<double>(def.au_ids.size());
    return TimeSeries(std::move(acc), rec.num_frames() > 0 ? rec.frames(0) : 0);
}

double count_activations(const BinaryMask& mask, Eigen::Index video_len) {
    if (video_len <= 0) throw ConfigError("count_activations: video length must be positive");
    return static_cast<double>(mask.count()) / static_cast<double>(video_len);
}

}  // namespace dyadgc
