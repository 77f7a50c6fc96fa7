// SPDX-License-Identifier: Apache-2.0
// Command-line front end: estimate, sweep, bench.
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ddest/harness.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kEstimatorFailure = 3;

ddest::ExperimentConfig read_config(const std::string& path) {
    return path.empty() ? ddest::parse_config("") : ddest::load_config(path);
}

void emit_csv(const std::string& path, const std::vector<ddest::ResultRow>& rows) {
    if (path.empty() || path == "-") {
        ddest::write_csv(std::cout, rows);
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    ddest::write_csv(out, rows);
}

void report_failures(const ddest::ExperimentResult& res) {
    for (const auto& f : res.failures) {
        std::cerr << "failure: " << f.estimator << " snr=" << f.snr_db << " r=(" << f.r_nu << "," << f.r_tau
                  << ") trial=" << f.trial << ": " << f.message << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Delay-Doppler off-grid channel estimation experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::string json_path;
    std::optional<double> snr;
    std::optional<std::string> estimator;
    std::optional<std::uint64_t> seed;

    auto* est = app.add_subcommand("estimate", "run the configured estimators at one operating point");
    est->add_option("--config", config_path, "config file (defaults when omitted)");
    est->add_option("--snr", snr, "SNR in dB, overrides sweep.snr_db");
    est->add_option("--estimator", estimator, "single estimator name");
    est->add_option("--seed", seed, "base seed");
    est->add_option("--out", out_path, "CSV output (stdout when omitted)");

    auto* sweep = app.add_subcommand("sweep", "full Monte-Carlo sweep");
    sweep->add_option("--config", config_path, "config file")->required();
    sweep->add_option("--out", out_path, "CSV output")->required();
    sweep->add_option("--json", json_path, "optional JSON mirror");

    std::vector<double> scales{1.0, 2.0};
    ddest::BenchOptions bench_opts;
    auto* bench = app.add_subcommand("bench", "1D vs 2D solver wall time against grid size");
    bench->add_option("--grid-scale", scales, "grid refinement factors")->delimiter(',');
    bench->add_option("--base-r", bench_opts.base_r, "resolution at scale 1");
    bench->add_option("--iterations", bench_opts.iterations, "fixed EM iterations per solve");
    bench->add_option("--repeats", bench_opts.repeats, "best-of repeats");
    bench->add_option("--config", config_path, "config file for the frame geometry");

    CLI11_PARSE(app, argc, argv);

    ddest::ExperimentConfig cfg;
    try {
        cfg = read_config(config_path);
        if (snr) cfg.snr_sweep_db = {*snr};
        if (estimator) cfg.estimators = {*estimator};
        if (seed) cfg.base_seed = *seed;
        cfg.validate();
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }

    try {
        if (*est) {
            const auto res = ddest::run_experiment(cfg);
            emit_csv(out_path, res.rows);
            report_failures(res);
            return res.failures.empty() ? 0 : kEstimatorFailure;
        }
        if (*sweep) {
            const auto res = ddest::run_experiment(cfg);
            emit_csv(out_path, res.rows);
            if (!json_path.empty()) {
                std::ofstream js(json_path);
                if (!js) throw std::runtime_error("cannot write " + json_path);
                ddest::write_json(js, res);
            }
            report_failures(res);
            return 0;
        }
        if (*bench) {
            const auto rows = ddest::run_bench(cfg.otfs, scales, bench_opts);
            std::cout << "scale,N_nu,M_tau,sbl1d_ms,sbl2d_ms\n";
            for (const auto& r : rows) {
                std::cout << r.scale << ',' << r.N_nu << ',' << r.M_tau << ',' << r.sbl1d_ms << ',' << r.sbl2d_ms << '\n';
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return *est ? kEstimatorFailure : 1;
    }
    return 0;
}
