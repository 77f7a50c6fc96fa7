// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddest/baselines.hpp"
#include "ddest/channel.hpp"
#include "ddest/frame.hpp"
#include "ddest/sbl1d.hpp"
#include "ddest/sbl2d.hpp"

namespace ddest {

/// Sum |h - h_est|^2 / sum |h|^2 over the full grid. Throws on a zero-energy
/// reference.
double nmse(const CMatrix& h_true, const CMatrix& h_est);

double to_db(double linear);

/// Which recovered entries feed the reconstruction: every nonzero entry,
/// or only the P-hat dominant ones.
enum class ReconSupport { all, top };

/// Effective channel of the recovered (h, k_nu, l_tau) triples.
CMatrix reconstruct_effective(const Estimate1D& est, int N, int M, ReconSupport mode = ReconSupport::all);

/// Same for the 2D estimate; `p_hat` applies to ReconSupport::top.
CMatrix reconstruct_effective(const Estimate2D& est, int N, int M, int p_hat, ReconSupport mode = ReconSupport::all);

inline const std::vector<std::string>& estimator_names() {
    static const std::vector<std::string> names{"sbl1d-offgrid", "sbl1d-ongrid", "sbl2d-offgrid",
                                                "sbl2d-ongrid",  "omp",          "impulse"};
    return names;
}

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ResolutionPoint {
    double r_nu = 0.5;
    double r_tau = 0.5;
};

struct ExperimentConfig {
    OtfsConfig otfs;
    ChannelGenConfig channel;
    std::vector<ResolutionPoint> grid{{0.5, 0.5}};
    std::vector<double> snr_sweep_db{0, 5, 10, 15, 20, 25, 30};
    std::vector<std::string> estimators = estimator_names();
    int num_frames = 1000;
    std::uint64_t base_seed = 1;
    int threads = 0;  // 0: DDEST_THREADS or hardware concurrency
    bool record_timing = true;
    ReconSupport recon = ReconSupport::all;
    SblOptions sbl;
    OmpOptions omp;
    ImpulseOptions impulse;

    void validate() const;
};

/// Parses the flat `key = value` format. `[section]` lines prefix later
/// keys; `#` starts a comment; lists are comma separated.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

struct ResultRow {
    std::string estimator;
    double snr_db = 0.0;
    double r_nu = 0.0;
    double r_tau = 0.0;
    bool guard = true;
    int frames = 0;
    double nmse_db = 0.0;
    double wall_time_ms = 0.0;
};

struct TrialFailure {
    std::string estimator;
    double snr_db = 0.0;
    double r_nu = 0.0;
    double r_tau = 0.0;
    int trial = 0;
    std::string message;
};

struct ExperimentResult {
    std::vector<ResultRow> rows;
    std::vector<TrialFailure> failures;
    /// Digest of the received frame per (trial, snr); index trial * n_snr + s.
    std::vector<std::uint64_t> rx_digests;
};

/// Seed of trial i. It does not depend on SNR or resolution so every sweep
/// point reuses the same channel, data and unit noise draw.
std::uint64_t trial_seed(std::uint64_t base_seed, int trial);

std::uint64_t digest(const CMatrix& m);

/// Runs one estimator on a received frame; returns the effective-channel
/// estimate. Throws std::invalid_argument for an unknown name.
CMatrix run_estimator(const std::string& name, const RxFrame& rx, const OtfsConfig& otfs, const VirtualGrid& grid,
                      const ExperimentConfig& cfg);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

void write_csv(std::ostream& os, const std::vector<ResultRow>& rows);
void write_json(std::ostream& os, const ExperimentResult& result);

struct BenchRow {
    double scale = 1.0;
    int N_nu = 0;
    int M_tau = 0;
    double sbl1d_ms = 0.0;
    double sbl2d_ms = 0.0;
};

struct BenchOptions {
    double base_r = 0.4;  // scale 2 lands on r = 0.2, the finest swept resolution
    int iterations = 30;  // fixed EM iterations per solve
    int repeats = 5;      // best-of
    std::uint64_t seed = 7;
};

/// Times both off-grid solvers at resolution base_r / scale with a fixed
/// iteration count, so the numbers reflect per-iteration cost.
std::vector<BenchRow> run_bench(const OtfsConfig& otfs, const std::vector<double>& scales, const BenchOptions& opts);

int resolve_threads(int requested);

}  // namespace ddest
