// Command-line runner: predict / estimate NMSE sweeps and synthetic channel files.

#include "mmsechan/dataset_io.hpp"
#include "mmsechan/experiment.hpp"
#include "mmsechan/seeds.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace mmsechan;

struct RunOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::vector<double> snr;
    bool no_cache = false;
    std::string cache_dir;
    std::size_t threads = 0;
    bool print_default = false;
};

void add_run_flags(CLI::App* cmd, RunOptions& o) {
    cmd->add_option("-c,--config", o.config, "INI config file (defaults are used when omitted)");
    cmd->add_option("--seed", o.seed, "Override the experiment seed");
    cmd->add_option("-o,--out", o.out, "Output CSV path");
    cmd->add_option("--snr", o.snr, "SNR points in dB (replaces the configured sweep)")->delimiter(',');
    cmd->add_flag("--no-cache", o.no_cache, "Always retrain; do not read or write model snapshots");
    cmd->add_option("--cache-dir", o.cache_dir, "Snapshot cache directory");
    cmd->add_option("-j,--threads", o.threads, "Parallel SNR workers (0: hardware concurrency)");
    cmd->add_flag("--print-default-config", o.print_default, "Print the default config for this task and exit");
}

int run(Task task, const RunOptions& o) {
    const ExperimentConfig defaults =
        task == Task::Predict ? ExperimentConfig::predict_defaults() : ExperimentConfig::estimate_defaults();
    if (o.print_default) {
        std::cout << format_config(defaults);
        return 0;
    }
    ExperimentConfig cfg = o.config.empty() ? defaults : load_config(o.config);
    if (cfg.task != task)
        throw ConfigError("config file '" + o.config + "' is for task '" + to_string(cfg.task) + "'");
    if (o.seed) cfg.seed = *o.seed;
    if (!o.out.empty()) cfg.output = o.out;
    if (!o.snr.empty()) cfg.snr_override = o.snr;
    if (o.no_cache) cfg.use_cache = false;
    if (!o.cache_dir.empty()) cfg.cache_dir = o.cache_dir;
    if (o.threads) cfg.threads = o.threads;
    cfg.validate();

    const ResultTable table = run_experiment(cfg);
    emit_results(table, cfg.output);
    std::fprintf(stderr, "wrote %zu rows to %s\n", table.rows.size(), cfg.output.c_str());
    return 0;
}

struct GenOptions {
    std::string kind = "ula";
    std::size_t count = 1000;
    std::size_t dim = 16;
    std::size_t paths = 25;
    double velocity_kmh = 4.0;
    double carrier_hz = 2.4e9;
    double grid_spacing_m = 0.01;
    std::uint64_t seed = 1;
    std::string out;
};

int gen(const GenOptions& g) {
    ChannelMatrix ch;
    if (g.kind == "ula") {
        ch = synthesize_ula_channels(g.count, g.dim, ClusterSpec{}, g.seed);
    } else {
        const double v = kmh_to_mps(g.velocity_kmh);
        const DopplerSpec spec(v, g.carrier_hz, g.grid_spacing_m / v);
        ch = synthesize_trajectories(g.count, g.paths, spec, g.dim, g.seed).blocks;
    }
    save_channels(g.out, ch);
    std::fprintf(stderr, "wrote %zu x %zu channels to %s\n", g.count, g.dim, g.out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MMSE channel estimation and prediction experiments"};
    app.require_subcommand(1);

    RunOptions predict_opts, estimate_opts;
    auto* predict = app.add_subcommand("predict", "Channel prediction NMSE sweep");
    add_run_flags(predict, predict_opts);
    auto* estimate = app.add_subcommand("estimate", "Channel estimation NMSE sweep");
    add_run_flags(estimate, estimate_opts);

    GenOptions gen_opts;
    auto* gencmd = app.add_subcommand("gen", "Write a synthetic channel file");
    gencmd->add_option("--kind", gen_opts.kind, "ula (one vector per row) or trajectory (one time series per row)")
        ->check(CLI::IsMember({"ula", "trajectory"}));
    gencmd->add_option("-n,--count", gen_opts.count, "Number of rows")->check(CLI::PositiveNumber);
    gencmd->add_option("-d,--dim", gen_opts.dim, "Antennas (ula) or trajectory length")->check(CLI::PositiveNumber);
    gencmd->add_option("--paths", gen_opts.paths, "Paths per trajectory")->check(CLI::PositiveNumber);
    gencmd->add_option("--velocity-kmh", gen_opts.velocity_kmh, "Trajectory speed")->check(CLI::PositiveNumber);
    gencmd->add_option("--carrier-hz", gen_opts.carrier_hz, "Carrier frequency")->check(CLI::PositiveNumber);
    gencmd->add_option("--grid-spacing-m", gen_opts.grid_spacing_m, "Distance between samples")
        ->check(CLI::PositiveNumber);
    gencmd->add_option("--seed", gen_opts.seed, "Generator seed");
    gencmd->add_option("-o,--out", gen_opts.out, "Output channel file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*predict) return run(Task::Predict, predict_opts);
        if (*estimate) return run(Task::Estimate, estimate_opts);
        return gen(gen_opts);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
