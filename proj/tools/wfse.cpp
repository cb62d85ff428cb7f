#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "wfse/bounds.hpp"
#include "wfse/defenses.hpp"
#include "wfse/errors.hpp"
#include "wfse/log.hpp"
#include "wfse/parallel.hpp"
#include "wfse/pipeline.hpp"
#include "wfse/synth.hpp"
#include "wfse/trace_io.hpp"

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw wfse::ConfigError("cannot open config file: " + path);
    try {
        json j;
        in >> j;
        return j;
    } catch (const std::exception& e) {
        throw wfse::ConfigError("config parse error in " + path + ": " + e.what());
    }
}

ordered_json oracle_to_json(const wfse::OracleValue& o) {
    ordered_json j;
    j["value"] = o.value;
    j["std_error"] = o.std_error;
    j["exact"] = o.exact;
    return j;
}

void write_feature_matrix_csv(std::ostream& out, const wfse::FeatureMatrix& m) {
    for (std::size_t d = 0; d < m.dim; ++d) out << "f" << d << ",";
    out << "label\n";
    char buf[40];
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* row = m.row(i);
        for (std::size_t d = 0; d < m.dim; ++d) {
            std::snprintf(buf, sizeof buf, "%.10g", row[d]);
            out << buf << ",";
        }
        out << m.labels[i] << "\n";
    }
}

struct GlobalArgs {
    std::string config_path;
    std::string in_path;
    std::string out_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool config_given = false;
    bool in_given = false;
    bool out_given = false;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw wfse::ConfigError(what);
}

int run_synth(const GlobalArgs& g, const std::string& features_path) {
    require(g.config_given, "synth: --config is required");
    json j = read_json_file(g.config_path);
    if (g.seed_given && j.is_object()) j["seed"] = g.seed;
    const wfse::SynthSpec spec = wfse::synth_spec_from_json(j);
    const wfse::SynthData data = wfse::generate(spec);

    if (g.out_given) {
        require(std::holds_alternative<wfse::TemplateTracesSpec>(spec.variant),
                "synth: only template_traces has a trace form; gaussian_1d and "
                "separated_clusters write features via --features");
        wfse::save_dataset(g.out_path, data.dataset);
        wfse::log_info("dataset written: " + g.out_path);
    }
    if (!features_path.empty()) {
        std::ofstream out(features_path, std::ios::binary);
        if (!out) throw wfse::DataError("cannot write features: " + features_path);
        write_feature_matrix_csv(out, data.features);
        wfse::log_info("features written: " + features_path);
    }

    ordered_json out;
    out["spec"] = wfse::synth_spec_to_json(spec);
    out["num_classes"] = wfse::synth_num_classes(spec);
    out["oracle_ber"] = oracle_to_json(wfse::oracle_ber(spec));
    out["oracle_mi_bits"] = oracle_to_json(wfse::oracle_mi(spec));
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_defend(const GlobalArgs& g) {
    require(g.config_given, "defend: --config is required");
    require(g.in_given, "defend: --in is required");
    require(g.out_given, "defend: --out is required");
    const json j = read_json_file(g.config_path);
    const std::optional<wfse::DefenseSpec> spec =
        wfse::defense_spec_from_json(j, g.seed_given ? g.seed : 0);
    require(spec.has_value(), "defend: kind \"none\" has nothing to apply");

    const wfse::TraceDataset dataset = wfse::load_dataset(g.in_path);
    const wfse::DefendedDataset defended = wfse::apply_defense(dataset, *spec);
    wfse::save_dataset(g.out_path, defended.dataset);

    ordered_json out;
    out["defense"] = wfse::defense_spec_to_json(spec);
    out["traces"] = defended.dataset.traces.size();
    ordered_json oh;
    oh["bandwidth"] = defended.overhead.bandwidth_overhead;
    oh["latency_seconds"] = defended.overhead.latency_overhead;
    out["overhead"] = oh;
    out["dataset"] = g.out_path;
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_estimate(const GlobalArgs& g) {
    require(g.config_given, "estimate: --config is required");
    json j = read_json_file(g.config_path);
    if (g.seed_given && j.is_object()) j["seed"] = g.seed;
    wfse::RunConfig cfg = wfse::run_config_from_json(j);
    if (g.in_given) cfg.dataset_root = g.in_path;
    if (g.out_given) cfg.output = g.out_path;

    const wfse::EstimateReport report = wfse::run_estimation(cfg);
    wfse::emit_report(report, cfg.output);

    const ordered_json full = wfse::report_to_json(report);
    ordered_json out;
    out["report"] = cfg.output.string();
    out["num_classes"] = report.num_classes;
    out["aggregates"] = full["aggregates"];
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_bounds(const GlobalArgs& g, std::size_t classes, std::size_t grid) {
    const wfse::BoundRegion region = wfse::bound_region(classes, grid);
    if (g.out_given) {
        std::ofstream out(g.out_path, std::ios::binary);
        if (!out) throw wfse::DataError("cannot write bounds: " + g.out_path);
        wfse::write_bound_region_csv(out, region);
        wfse::log_info("bounds written: " + g.out_path);
    } else {
        wfse::write_bound_region_csv(std::cout, region);
    }
    return 0;
}

int run_merged_oracle(std::int64_t m) {
    ordered_json out;
    out["m"] = m;
    out["theoretical_error"] = wfse::merged_theoretical_error(m);
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_report(const GlobalArgs& g) {
    require(g.in_given, "report: --in is required");
    const json j = read_json_file(g.in_path);
    const wfse::ReportCheck check = wfse::verify_report_json(j);
    if (!check.ok) throw wfse::DataError("report verification failed: " + check.detail);
    if (g.out_given) {
        std::ofstream out(g.out_path, std::ios::binary);
        if (!out) throw wfse::DataError("cannot write csv: " + g.out_path);
        out << wfse::csv_from_report_json(j);
        wfse::log_info("csv written: " + g.out_path);
    }
    ordered_json out;
    out["ok"] = true;
    out["folds_used"] = j.at("aggregates").at("folds_used").get<std::size_t>();
    std::cout << out.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"security estimation for website-fingerprinting defenses"};
    app.require_subcommand(1);

    GlobalArgs g;
    std::size_t threads = 0;
    std::string log_level = "info";
    auto* opt_config = app.add_option("--config", g.config_path, "JSON config file");
    auto* opt_seed =
        app.add_option("--seed", g.seed, "master seed, overrides the config's seed");
    app.add_option("--threads", threads, "worker threads, 0 = all cores");
    auto* opt_in = app.add_option("--in", g.in_path, "input path");
    auto* opt_out = app.add_option("--out", g.out_path, "output path");
    app.add_option("--log-level", log_level, "stderr verbosity")
        ->check(CLI::IsMember({"debug", "info", "warn", "silent"}));

    auto* synth =
        app.add_subcommand("synth", "generate synthetic data and print its ground truth");
    std::string features_path;
    synth->add_option("--features", features_path, "write the feature matrix as CSV");

    auto* defend = app.add_subcommand("defend", "apply a defense to a dataset on disk");
    auto* estimate = app.add_subcommand("estimate", "run the security estimation pipeline");

    auto* bounds =
        app.add_subcommand("bounds", "emit the feasible (error, information) region as CSV");
    std::size_t classes = 0;
    std::size_t grid = 400;
    bounds->add_option("--classes", classes, "number of classes")->required();
    bounds->add_option("--grid", grid, "grid points");

    auto* merged =
        app.add_subcommand("merged-oracle", "theoretical attacker error after merging");
    std::int64_t m = 1;
    merged->add_option("--m", m, "traces per merge, target included")->required();

    auto* report = app.add_subcommand("report", "verify a report file and re-emit its CSV");

    for (CLI::App* sub : {synth, defend, estimate, bounds, merged, report}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (log_level == "debug") wfse::set_log_level(wfse::LogLevel::Debug);
    else if (log_level == "info") wfse::set_log_level(wfse::LogLevel::Info);
    else if (log_level == "warn") wfse::set_log_level(wfse::LogLevel::Warn);
    else wfse::set_log_level(wfse::LogLevel::Silent);
    wfse::set_num_threads(threads);

    g.config_given = opt_config->count() > 0;
    g.seed_given = opt_seed->count() > 0;
    g.in_given = opt_in->count() > 0;
    g.out_given = opt_out->count() > 0;

    try {
        if (synth->parsed()) return run_synth(g, features_path);
        if (defend->parsed()) return run_defend(g);
        if (estimate->parsed()) return run_estimate(g);
        if (bounds->parsed()) return run_bounds(g, classes, grid);
        if (merged->parsed()) return run_merged_oracle(m);
        if (report->parsed()) return run_report(g);
        std::cerr << "error: no subcommand\n";
        return 2;
    } catch (const wfse::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const wfse::NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
