#include <fstream>
#include <sstream>

#include "dyadgc/pipeline.hpp"
#include "json.hpp"

namespace dyadgc {

using ojson = nlohmann::ordered_json;

ReportFormat parse_report_format(std::string_view s) {
    if (s == "csv") return ReportFormat::csv;
    if (s == "json") return ReportFormat::json;
    if (s == "both") return ReportFormat::both;
    throw ConfigError("unknown report format '" + std::string(s) + "' (csv|json|both)");
}

namespace {

const char* dominant_label(std::optional<Direction> d) {
    if (!d) return "";
    return *d == Direction::sender_causes_receiver ? "S_GC_R" : "R_GC_S";
}

std::optional<Direction> dominant_of(const AverageCounts& a) {
    if (a.s_gc_r > a.r_gc_s) return Direction::sender_causes_receiver;
    if (a.r_gc_s > a.s_gc_r) return Direction::receiver_causes_sender;
    return std::nullopt;
}

ojson counts_json(const DirectionCounts& c) {
    ojson j;
    j["S_GC_R"] = c.s_gc_r;
    j["R_GC_S"] = c.r_gc_s;
    j["bidirectional"] = c.bidirectional;
    j["none"] = c.none;
    j["degenerate"] = c.degenerate;
    const auto d = c.dominant();
    j["dominant"] = d ? ojson(dominant_label(d)) : ojson(nullptr);
    return j;
}

DirectionCounts counts_from(const ojson& j) {
    DirectionCounts c;
    c.s_gc_r = j.at("S_GC_R").get<int>();
    c.r_gc_s = j.at("R_GC_S").get<int>();
    c.bidirectional = j.at("bidirectional").get<int>();
    c.none = j.at("none").get<int>();
    c.degenerate = j.at("degenerate").get<int>();
    return c;
}

ojson average_json(const AverageCounts& a) {
    ojson j;
    j["S_GC_R"] = a.s_gc_r;
    j["R_GC_S"] = a.r_gc_s;
    j["bidirectional"] = a.bidirectional;
    j["none"] = a.none;
    const auto d = dominant_of(a);
    j["dominant"] = d ? ojson(dominant_label(d)) : ojson(nullptr);
    return j;
}

AverageCounts average_from(const ojson& j) {
    return {j.at("S_GC_R").get<double>(), j.at("R_GC_S").get<double>(), j.at("bidirectional").get<double>(),
            j.at("none").get<double>()};
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write '" + p.string() + "'");
    out << text;
    if (!out) throw Error("write failed for '" + p.string() + "'");
}

void csv_counts(std::ostream& os, const DirectionCounts& c) {
    os << ',' << c.s_gc_r << ',' << c.r_gc_s << ',' << c.bidirectional << ',' << c.none << ',' << c.degenerate << ','
       << dominant_label(c.dominant());
}

void csv_average(std::ostream& os, const AverageCounts& a) {
    os << ',' << format_number(a.s_gc_r) << ',' << format_number(a.r_gc_s) << ',' << format_number(a.bidirectional)
       << ',' << format_number(a.none) << ",," << dominant_label(dominant_of(a));
}

std::string table_csv(const std::vector<ConditionTable>& tables, bool with_condition) {
    std::ostringstream os;
    if (with_condition) os << "condition,";
    os << "expression,analyzable";
    for (const char* m : {"full_span", "interval_selected"})
        for (const char* col : {"S_GC_R", "R_GC_S", "bidirectional", "none", "degenerate", "dominant"})
            os << ',' << m << '_' << col;
    os << '\n';
    for (const auto& t : tables) {
        for (const auto& row : t.rows) {
            if (with_condition) os << to_string(t.condition) << ',';
            os << row.expression << ',' << row.analyzable;
            csv_counts(os, row.full_span);
            csv_counts(os, row.interval_selected);
            os << '\n';
        }
        if (with_condition) os << to_string(t.condition) << ',';
        os << "average,";
        csv_average(os, t.average_full_span);
        csv_average(os, t.average_interval_selected);
        os << '\n';
    }
    return os.str();
}

std::string occurrence_csv(const std::vector<ComparisonRow>& rows) {
    std::ostringstream os;
    os << "expression,condition_a,condition_b,p_value,w_statistic,significant_after_bh\n";
    for (const auto& r : rows)
        os << r.expression << ',' << to_string(r.condition_a) << ',' << to_string(r.condition_b) << ','
           << format_number(r.p_value) << ',' << format_number(r.w_statistic) << ','
           << (r.significant_after_bh ? "true" : "false") << '\n';
    return os.str();
}

}  // namespace

std::string report_to_json(const ConditionReport& report) {
    ojson j;
    j["mode"] = std::string(to_string(report.mode));
    j["signal"] = std::string(to_string(report.signal));
    j["alpha"] = report.alpha;
    j["conditions"] = ojson::array();
    for (const auto& t : report.tables) {
        ojson jt;
        jt["condition"] = std::string(to_string(t.condition));
        jt["rows"] = ojson::array();
        for (const auto& row : t.rows) {
            ojson jr;
            jr["expression"] = row.expression;
            jr["analyzable"] = row.analyzable;
            jr["full_span"] = counts_json(row.full_span);
            jr["interval_selected"] = counts_json(row.interval_selected);
            jt["rows"].push_back(std::move(jr));
        }
        jt["average"]["full_span"] = average_json(t.average_full_span);
        jt["average"]["interval_selected"] = average_json(t.average_interval_selected);
        j["conditions"].push_back(std::move(jt));
    }
    j["occurrence"] = ojson::array();
    for (const auto& r : report.occurrence) {
        ojson jr;
        jr["expression"] = r.expression;
        jr["condition_a"] = std::string(to_string(r.condition_a));
        jr["condition_b"] = std::string(to_string(r.condition_b));
        jr["p_value"] = r.p_value;
        jr["w_statistic"] = r.w_statistic;
        jr["n_effective"] = r.n_effective;
        jr["significant_after_bh"] = r.significant_after_bh;
        j["occurrence"].push_back(std::move(jr));
    }
    j["warnings"] = report.warnings;
    return j.dump(2) + "\n";
}

ConditionReport report_from_json(std::string_view text) {
    ConditionReport r;
    try {
        const ojson j = ojson::parse(text);
        r.mode = parse_gc_mode(j.at("mode").get<std::string>());
        r.signal = parse_signal_mode(j.at("signal").get<std::string>());
        r.alpha = j.at("alpha").get<double>();
        for (const auto& jt : j.at("conditions")) {
            ConditionTable t;
            t.condition = parse_condition(jt.at("condition").get<std::string>());
            for (const auto& jr : jt.at("rows")) {
                ExpressionRow row;
                row.expression = jr.at("expression").get<std::string>();
                row.analyzable = jr.at("analyzable").get<int>();
                row.full_span = counts_from(jr.at("full_span"));
                row.interval_selected = counts_from(jr.at("interval_selected"));
                t.rows.push_back(std::move(row));
            }
            t.average_full_span = average_from(jt.at("average").at("full_span"));
            t.average_interval_selected = average_from(jt.at("average").at("interval_selected"));
            r.tables.push_back(std::move(t));
        }
        for (const auto& jr : j.at("occurrence")) {
            ComparisonRow row;
            row.expression = jr.at("expression").get<std::string>();
            row.condition_a = parse_condition(jr.at("condition_a").get<std::string>());
            row.condition_b = parse_condition(jr.at("condition_b").get<std::string>());
            row.p_value = jr.at("p_value").get<double>();
            row.w_statistic = jr.at("w_statistic").get<double>();
            row.n_effective = jr.at("n_effective").get<int>();
            row.significant_after_bh = jr.at("significant_after_bh").get<bool>();
            r.occurrence.push_back(std::move(row));
        }
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("report json: ") + e.what());
    }
    return r;
}

std::string record_to_json(const CellRecord& r) {
    ojson j;
    j["pair_id"] = r.pair_id;
    j["condition"] = std::string(to_string(r.condition));
    j["expression"] = r.expression;
    j["method"] = std::string(to_string(r.method));
    j["outcome"] = std::string(to_string(r.outcome()));
    j["degenerate"] = r.degenerate;
    j["reason"] = r.reason;
    j["frames_used"] = r.frames_used;
    j["segments"] = r.segments;
    if (r.result) {
        const auto& g = *r.result;
        j["order"] = g.order;
        j["n_effective"] = g.n_effective;
        j["f_y_causes_x"] = g.f_y_causes_x;
        j["p_y_causes_x"] = g.p_y_causes_x;
        j["f_x_causes_y"] = g.f_x_causes_y;
        j["p_x_causes_y"] = g.p_x_causes_y;
        j["alpha"] = g.alpha;
    } else {
        j["order"] = nullptr;
    }
    return j.dump();
}

CellRecord record_from_json(std::string_view text) {
    CellRecord r;
    try {
        const ojson j = ojson::parse(text);
        r.pair_id = j.at("pair_id").get<std::string>();
        r.condition = parse_condition(j.at("condition").get<std::string>());
        r.expression = j.at("expression").get<std::string>();
        const auto method = j.at("method").get<std::string>();
        if (method == "full_span") r.method = GcMethod::full_span;
        else if (method == "interval_selected") r.method = GcMethod::interval_selected;
        else throw FormatError("record json: unknown method '" + method + "'");
        r.degenerate = j.at("degenerate").get<bool>();
        r.reason = j.at("reason").get<std::string>();
        r.frames_used = j.at("frames_used").get<Frame>();
        r.segments = j.at("segments").get<std::size_t>();
        if (!j.at("order").is_null()) {
            GCTestResult g;
            g.order = j.at("order").get<int>();
            g.n_effective = j.at("n_effective").get<Eigen::Index>();
            g.f_y_causes_x = j.at("f_y_causes_x").get<double>();
            g.p_y_causes_x = j.at("p_y_causes_x").get<double>();
            g.f_x_causes_y = j.at("f_x_causes_y").get<double>();
            g.p_x_causes_y = j.at("p_x_causes_y").get<double>();
            g.alpha = j.at("alpha").get<double>();
            g.outcome = parse_direction(j.at("outcome").get<std::string>());
            r.result = g;
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("record json: ") + e.what());
    }
    return r;
}

void emit_report(const ConditionReport& report, const std::filesystem::path& dir, ReportFormat format) {
    std::filesystem::create_directories(dir);
    if (format != ReportFormat::json) {
        write_file(dir / "report.csv", table_csv(report.tables, true));
        for (const auto& t : report.tables)
            write_file(dir / ("report_" + std::string(to_string(t.condition)) + ".csv"), table_csv({t}, false));
        write_file(dir / "occurrence.csv", occurrence_csv(report.occurrence));
    }
    if (format != ReportFormat::csv) write_file(dir / "report.json", report_to_json(report));
}

void emit_records(const PipelineResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::string lines;
    for (const auto& r : result.records) lines += record_to_json(r) + "\n";
    write_file(dir / "results.jsonl", lines);
    if (result.intervals.empty()) return;
    const auto idir = dir / "intervals";
    std::filesystem::create_directories(idir);
    for (const auto& [key, set] : result.intervals) {
        std::ostringstream os;
        write_intervals_tsv(os, set);
        write_file(idir / (key + ".tsv"), os.str());
    }
}

}  // namespace dyadgc
