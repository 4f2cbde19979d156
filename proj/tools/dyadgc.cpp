#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "dyadgc/pipeline.hpp"
#include "dyadgc/synth.hpp"

namespace {

using namespace dyadgc;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

/// Flags shared by every analysis subcommand. Overrides are kept as text
/// and applied on top of the config file in one place.
struct CommonOptions {
    std::string config = "default";
    std::string manifest;
    std::string out = ".";
    std::vector<std::pair<std::string, std::string>> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool needs_manifest = true) {
    cmd->add_option("--config", o.config, "Config file, or 'default'");
    auto* m = cmd->add_option("--manifest", o.manifest, "Manifest CSV (pair_id,role,condition,path)");
    if (needs_manifest) m->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "Output directory");
    const auto override_flag = [&](const std::string& flag, const std::string& key, const std::string& help) {
        cmd->add_option_function<std::string>(
               flag, [&o, key](const std::string& v) { o.overrides.emplace_back(key, v); }, help)
            ->type_name("VALUE");
    };
    override_flag("--mode", "mode", "pooled|averaged");
    override_flag("--alpha", "alpha", "Significance level");
    override_flag("--beta", "beta", "Correlation threshold");
    override_flag("--lmin", "l_min", "Minimum correlated window length");
    override_flag("--kernel", "median_kernel", "Median filter width (odd)");
    override_flag("--extension", "extension", "Frames added to each side of an interval");
    override_flag("--shifts", "shifts", "Comma-separated shift grid");
    override_flag("--confidence", "confidence", "Confidence threshold for sync");
    override_flag("--criterion", "criterion", "aic|bic");
    override_flag("--m-max", "m_max", "Largest VAR order considered");
    override_flag("--signal", "signal", "expression|per_au");
    override_flag("--expressions", "expressions", "Comma-separated expression names or 'all'");
    override_flag("--jobs", "jobs", "Worker threads (0 = all cores)");
}

PipelineConfig resolve_config(const CommonOptions& o) {
    PipelineConfig cfg = load_config(o.config);
    for (const auto& [k, v] : o.overrides) apply_setting(cfg, k, v);
    cfg.validate();
    return cfg;
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

std::string cell_name(const CellInput& c, const std::string& expr) {
    return c.pair_id + "_" + std::string(to_string(c.condition)) + "_" + expr;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write '" + p.string() + "'");
    out << text;
}

int cmd_ingest(const CommonOptions& o) {
    const PipelineConfig cfg = resolve_config(o);
    const Manifest m = load_manifest(o.manifest);
    std::vector<std::string> warnings;
    const auto cells = load_cells(m, cfg, warnings);
    for (const auto& c : cells)
        std::cout << c.pair_id << '\t' << to_string(c.condition) << "\tframes=" << c.synced.sender.num_frames()
                  << "\truns=" << c.synced.kept_frames.size() << '\n';
    print_warnings(warnings);
    return warnings.empty() ? kExitOk : kExitData;
}

int cmd_intervals(const CommonOptions& o) {
    const PipelineConfig cfg = resolve_config(o);
    const Manifest m = load_manifest(o.manifest);
    std::vector<std::string> warnings;
    const auto cells = load_cells(m, cfg, warnings);
    const auto dir = std::filesystem::path(o.out) / "intervals";
    std::filesystem::create_directories(dir);
    for (const auto& c : cells) {
        for (const auto& e : cfg.expression_defs()) {
            try {
                const IntervalSet s = select_intervals(c, e, cfg);
                std::ostringstream os;
                write_intervals_tsv(os, s);
                write_text(dir / (cell_name(c, e.name) + ".tsv"), os.str());
            } catch (const Error& err) {
                warnings.push_back(cell_name(c, e.name) + ": " + err.what());
            }
        }
    }
    print_warnings(warnings);
    return kExitOk;
}

int cmd_granger(const CommonOptions& o, bool full_span, const std::string& intervals_dir) {
    const PipelineConfig cfg = resolve_config(o);
    const Manifest m = load_manifest(o.manifest);
    std::vector<std::string> warnings;
    const auto cells = load_cells(m, cfg, warnings);
    std::string lines;
    for (const auto& c : cells) {
        for (const auto& e : cfg.expression_defs()) {
            if (full_span) {
                lines += record_to_json(granger_cell(c, e, nullptr, cfg)) + "\n";
                continue;
            }
            const auto path = std::filesystem::path(intervals_dir) / (cell_name(c, e.name) + ".tsv");
            std::ifstream in(path);
            if (!in) {
                warnings.push_back(cell_name(c, e.name) + ": no interval file");
                continue;
            }
            const IntervalSet s = read_intervals_tsv(in);
            lines += record_to_json(granger_cell(c, e, &s, cfg)) + "\n";
        }
    }
    std::filesystem::create_directories(o.out);
    write_text(std::filesystem::path(o.out) / "results.jsonl", lines);
    print_warnings(warnings);
    return kExitOk;
}

int cmd_pipeline(const CommonOptions& o, const std::string& format) {
    const PipelineConfig cfg = resolve_config(o);
    const ReportFormat fmt = parse_report_format(format);
    const Manifest m = load_manifest(o.manifest);
    const PipelineResult r = run_pipeline(m, cfg);
    emit_report(r.report, o.out, fmt);
    emit_records(r, o.out);
    print_warnings(r.report.warnings);
    return kExitOk;
}

int cmd_report(const std::string& input, const std::string& out, const std::string& format) {
    std::ifstream in(input, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + input + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    emit_report(report_from_json(ss.str()), out, parse_report_format(format));
    return kExitOk;
}

int cmd_synth(const std::string& out, std::uint64_t seed, int pairs, long length) {
    CohortSpec spec;
    spec.seed = seed;
    spec.pairs = pairs;
    spec.length = length;
    const std::filesystem::path dir(out);
    Manifest m;
    for (const auto& fs : cohort_specs(spec)) {
        const AUFixture fx = gen_au_fixture(fs);
        const auto [s, r] = write_au_fixture(fx, dir);
        m.rows.push_back({fs.pair_id, Role::sender, fs.condition, s.filename()});
        m.rows.push_back({fs.pair_id, Role::receiver, fs.condition, r.filename()});
        if (fx.clipped_fraction > 0.01)
            std::cerr << "warning: " << fs.pair_id << ' ' << to_string(fs.condition) << ": "
                      << fx.clipped_fraction * 100.0 << "% of samples clipped into [0, 5]\n";
    }
    std::ostringstream os;
    write_manifest(os, m);
    write_text(dir / "manifest.csv", os.str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dyadic facial-expression Granger causality with relevant-interval selection"};
    app.require_subcommand(1);

    CommonOptions ingest_o, intervals_o, granger_o, pipeline_o;
    auto* ingest = app.add_subcommand("ingest", "Validate the manifest and every AU CSV");
    add_common(ingest, ingest_o);

    auto* intervals = app.add_subcommand("intervals", "Write the relevant intervals of every cell");
    add_common(intervals, intervals_o);

    auto* granger = app.add_subcommand("granger", "GC per cell over stored intervals or the full span");
    add_common(granger, granger_o);
    bool full_span = false;
    std::string intervals_dir;
    auto* fs_flag = granger->add_flag("--full-span", full_span, "Test over all confident frames");
    auto* iv_opt = granger->add_option("--intervals-dir", intervals_dir, "Directory written by 'intervals'");
    fs_flag->excludes(iv_opt);

    auto* pipeline = app.add_subcommand("pipeline", "End-to-end run and report");
    add_common(pipeline, pipeline_o);
    std::string format = "both";
    pipeline->add_option("--format", format, "csv|json|both");

    auto* synth = app.add_subcommand("synth", "Write a synthetic cohort and its manifest");
    std::string synth_out = "cohort";
    std::uint64_t seed = CohortSpec{}.seed;
    int pairs = CohortSpec{}.pairs;
    long length = static_cast<long>(CohortSpec{}.length);
    synth->add_option("--out", synth_out, "Output directory");
    synth->add_option("--seed", seed, "Random seed");
    synth->add_option("--pairs", pairs, "Number of pairs")->check(CLI::PositiveNumber);
    synth->add_option("--length", length, "Frames per recording")->check(CLI::PositiveNumber);

    auto* report = app.add_subcommand("report", "Re-emit tables from report.json");
    std::string report_in, report_out = ".", report_format = "csv";
    report->add_option("--input", report_in, "report.json")->required()->check(CLI::ExistingFile);
    report->add_option("--out", report_out, "Output directory");
    report->add_option("--format", report_format, "csv|json|both");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*ingest) return cmd_ingest(ingest_o);
        if (*intervals) return cmd_intervals(intervals_o);
        if (*granger) {
            if (!full_span && intervals_dir.empty()) {
                std::cerr << "granger: give --full-span or --intervals-dir\n";
                return kExitUsage;
            }
            return cmd_granger(granger_o, full_span, intervals_dir);
        }
        if (*pipeline) return cmd_pipeline(pipeline_o, format);
        if (*synth) return cmd_synth(synth_out, seed, pairs, length);
        if (*report) return cmd_report(report_in, report_out, report_format);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
