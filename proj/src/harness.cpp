// SPDX-License-Identifier: Apache-2.0
#include "ddest/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "ddest/kernel.hpp"
#include "ddest/ssr.hpp"

namespace ddest {

double nmse(const CMatrix& h_true, const CMatrix& h_est) {
    if (h_true.rows() != h_est.rows() || h_true.cols() != h_est.cols()) {
        throw std::invalid_argument("nmse: size mismatch");
    }
    const double energy = h_true.squaredNorm();
    if (!(energy > 0.0)) throw std::invalid_argument("nmse: reference channel has zero energy");
    return (h_true - h_est).squaredNorm() / energy;
}

double to_db(double linear) {
    // Keeps a perfect estimate finite in the CSV.
    return 10.0 * std::log10(std::max(linear, 1e-30));
}

CMatrix reconstruct_effective(const Estimate1D& est, int N, int M, ReconSupport mode) {
    IndexList idx = est.support;
    if (mode == ReconSupport::all) {
        idx.clear();
        for (Eigen::Index g = 0; g < est.h_hat.size(); ++g) idx.push_back(g);
    }
    std::vector<ChannelPath> paths;
    for (const auto g : idx) {
        if (est.h_hat[g] == Complex{}) continue;
        paths.push_back({est.k_nu_hat[g], est.l_tau_hat[g], est.h_hat[g]});
    }
    if (paths.empty()) return CMatrix::Zero(N, M);
    return effective_channel(paths, N, M);
}

CMatrix reconstruct_effective(const Estimate2D& est, int N, int M, int p_hat, ReconSupport mode) {
    const Eigen::Index cols = est.h_mat.cols();
    RVector mag(est.h_mat.size());
    for (Eigen::Index k = 0; k < est.h_mat.rows(); ++k) {
        for (Eigen::Index l = 0; l < cols; ++l) mag[k * cols + l] = std::norm(est.h_mat(k, l));
    }
    const int keep = mode == ReconSupport::all ? static_cast<int>(mag.size()) : p_hat;
    std::vector<ChannelPath> paths;
    for (const auto idx : top_indices(mag, keep)) {
        const Eigen::Index k = idx / cols;
        const Eigen::Index l = idx % cols;
        if (est.h_mat(k, l) == Complex{}) continue;
        // Each row keeps its own delay offsets.
        const double l_tau = est.l_tau_rows.size() ? est.l_tau_rows(k, l) : est.l_tau_hat[l];
        paths.push_back({est.k_nu_hat[k], l_tau, est.h_mat(k, l)});
    }
    if (paths.empty()) return CMatrix::Zero(N, M);
    return effective_channel(paths, N, M);
}

// ---------------------------------------------------------------- config --

void ExperimentConfig::validate() const {
    otfs.validate();
    if (grid.empty()) throw ConfigError("grid: at least one resolution point is required");
    for (const auto& g : grid) {
        if (!(g.r_nu > 0.0 && g.r_nu <= 1.0) || !(g.r_tau > 0.0 && g.r_tau <= 1.0)) {
            throw ConfigError("grid: resolutions must lie in (0, 1]");
        }
    }
    if (snr_sweep_db.empty()) throw ConfigError("sweep.snr_db: at least one SNR is required");
    for (const double s : snr_sweep_db) {
        if (std::isnan(s)) throw ConfigError("sweep.snr_db: NaN");
    }
    if (estimators.empty()) throw ConfigError("run.estimators: at least one estimator is required");
    for (const auto& e : estimators) {
        const auto& known = estimator_names();
        if (std::find(known.begin(), known.end(), e) == known.end()) throw ConfigError("unknown estimator: " + e);
    }
    if (num_frames < 1) throw ConfigError("run.frames must be >= 1");
    if (channel.num_paths < 1) throw ConfigError("channel.paths must be >= 1");
    if (!(impulse.threshold_factor > 0.0)) throw ConfigError("impulse.threshold_factor must be positive");
    try {
        sbl.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key + ": not a number: '" + v + "'");
    }
}

long long to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long long x = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key + ": not an integer: '" + v + "'");
    }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
        const unsigned long long x = std::stoull(v, &used, 0);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key + ": not an unsigned integer: '" + v + "'");
    }
}

int to_int32(const std::string& key, const std::string& v) {
    const long long x = to_int(key, v);
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
        throw ConfigError(key + ": out of range");
    }
    return static_cast<int>(x);
}

bool to_bool(const std::string& key, std::string v) {
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": not a boolean: '" + v + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& item : split_list(v)) out.push_back(to_double(key, item));
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::optional<int> pilot_k;
    std::optional<int> pilot_l;
    std::vector<double> r_nu{0.5};
    std::vector<double> r_tau{0.5};

    std::stringstream ss(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!section.empty()) key = section + "." + key;
        if (val.empty()) throw ConfigError(key + ": empty value");

        auto& o = cfg.otfs;
        if (key == "otfs.M") o.M = to_int32(key, val);
        else if (key == "otfs.N") o.N = to_int32(key, val);
        else if (key == "otfs.k_max") o.k_max = to_int32(key, val);
        else if (key == "otfs.l_max") o.l_max = to_int32(key, val);
        else if (key == "otfs.pilot_k") pilot_k = to_int32(key, val);
        else if (key == "otfs.pilot_l") pilot_l = to_int32(key, val);
        else if (key == "otfs.pilot_power_db") o.pilot_power_db = to_double(key, val);
        else if (key == "otfs.guard") o.guard_enabled = to_bool(key, val);
        else if (key == "otfs.data") {
            if (val == "none") o.data = Constellation::none;
            else if (val == "bpsk") o.data = Constellation::bpsk;
            else if (val == "qpsk") o.data = Constellation::qpsk;
            else throw ConfigError(key + ": expected none, bpsk or qpsk");
        }
        else if (key == "channel.paths") cfg.channel.num_paths = to_int32(key, val);
        else if (key == "channel.pdp_decay") cfg.channel.pdp_decay = to_double(key, val);
        else if (key == "grid.r_nu") r_nu = to_doubles(key, val);
        else if (key == "grid.r_tau") r_tau = to_doubles(key, val);
        else if (key == "sweep.snr_db") cfg.snr_sweep_db = to_doubles(key, val);
        else if (key == "run.estimators") cfg.estimators = split_list(val);
        else if (key == "run.frames") cfg.num_frames = to_int32(key, val);
        else if (key == "run.seed") cfg.base_seed = to_u64(key, val);
        else if (key == "run.threads") cfg.threads = to_int32(key, val);
        else if (key == "run.record_timing") cfg.record_timing = to_bool(key, val);
        else if (key == "sbl.epsilon") cfg.sbl.epsilon = to_double(key, val);
        else if (key == "sbl.t_max") cfg.sbl.t_max = to_int32(key, val);
        else if (key == "sbl.rho") cfg.sbl.rho = to_double(key, val);
        else if (key == "sbl.c") cfg.sbl.c = to_double(key, val);
        else if (key == "sbl.d") cfg.sbl.d = to_double(key, val);
        else if (key == "sbl.sigma2_init_divisor") cfg.sbl.sigma2_init_divisor = to_double(key, val);
        else if (key == "recon.support") {
            if (val == "all") cfg.recon = ReconSupport::all;
            else if (val == "top") cfg.recon = ReconSupport::top;
            else throw ConfigError(key + ": expected all or top");
        }
        else if (key == "omp.residual_tol") cfg.omp.residual_tol = to_double(key, val);
        else if (key == "omp.max_atoms") cfg.omp.max_atoms = to_int32(key, val);
        else if (key == "impulse.threshold_factor") cfg.impulse.threshold_factor = to_double(key, val);
        else throw ConfigError("unknown key: " + key);
    }

    cfg.otfs.pilot_k = pilot_k.value_or(cfg.otfs.N / 2 + 1);
    cfg.otfs.pilot_l = pilot_l.value_or(cfg.otfs.M / 2 + 1);
    cfg.channel.k_max = cfg.otfs.k_max;
    cfg.channel.l_max = cfg.otfs.l_max;
    cfg.channel.doppler_bins = cfg.otfs.N;

    // One-element lists broadcast against the other axis.
    if (r_nu.size() != r_tau.size() && r_nu.size() != 1 && r_tau.size() != 1) {
        throw ConfigError("grid.r_nu and grid.r_tau must have equal lengths or length 1");
    }
    const std::size_t n = std::max(r_nu.size(), r_tau.size());
    cfg.grid.clear();
    for (std::size_t i = 0; i < n; ++i) {
        cfg.grid.push_back({r_nu[r_nu.size() == 1 ? 0 : i], r_tau[r_tau.size() == 1 ? 0 : i]});
    }

    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

// ------------------------------------------------------------ experiment --

std::uint64_t trial_seed(std::uint64_t base_seed, int trial) {
    // splitmix64 finaliser over the combined words
    std::uint64_t z = base_seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(trial) + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t digest(const CMatrix& m) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto* bytes = reinterpret_cast<const unsigned char*>(m.data());
    const std::size_t n = static_cast<std::size_t>(m.size()) * sizeof(Complex);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("DDEST_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

struct Prepared {
    VirtualGrid grid;
    Measurement1D meas1;
    Measurement2D meas2;
    int p_hat = 1;
};

Prepared prepare(const OtfsConfig& otfs, double r_nu, double r_tau) {
    Prepared p;
    p.grid = build_grid(otfs.k_max, otfs.l_max, r_nu, r_tau);
    p.meas1 = build_measurement(p.grid, otfs, otfs.pilot_amplitude());
    p.meas2 = build_measurement_2d(p.grid, otfs, otfs.pilot_amplitude());
    p.p_hat = sparsity_level(p.meas1.rows(), p.meas1.cols());
    return p;
}

CMatrix estimate(const std::string& name, const RxFrame& rx, const OtfsConfig& otfs, const Prepared& prep,
                 const ExperimentConfig& cfg) {
    if (name == "impulse") return impulse_threshold(rx.y_full, otfs, cfg.impulse);
    if (name == "omp") return reconstruct_effective(omp_ongrid(rx.y_trunc, prep.meas1, cfg.omp), otfs.N, otfs.M, cfg.recon);
    if (name == "sbl1d-offgrid" || name == "sbl1d-ongrid") {
        SblOptions o = cfg.sbl;
        o.offgrid_enabled = name == "sbl1d-offgrid";
        return reconstruct_effective(run_sbl_1d(rx.y_trunc, prep.meas1, o), otfs.N, otfs.M, cfg.recon);
    }
    if (name == "sbl2d-offgrid" || name == "sbl2d-ongrid") {
        Sbl2dOptions o;
        o.sbl = cfg.sbl;
        o.sbl.offgrid_enabled = name == "sbl2d-offgrid";
        const Estimate2D e = run_sbl_2d(truncate_matrix(rx.y_full, otfs), prep.meas2, o);
        return reconstruct_effective(e, otfs.N, otfs.M, prep.p_hat, cfg.recon);
    }
    throw std::invalid_argument("unknown estimator: " + name);
}

struct Cell {
    double nmse = 0.0;
    double ms = 0.0;
    bool ok = false;
    std::string error;
};

}  // namespace

CMatrix run_estimator(const std::string& name, const RxFrame& rx, const OtfsConfig& otfs, const VirtualGrid& grid,
                      const ExperimentConfig& cfg) {
    return estimate(name, rx, otfs, prepare(otfs, grid.r_nu, grid.r_tau), cfg);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::size_t n_snr = cfg.snr_sweep_db.size();
    const std::size_t n_r = cfg.grid.size();
    const std::size_t n_est = cfg.estimators.size();
    const std::size_t per_trial = n_snr * n_r * n_est;

    std::vector<Prepared> prep;
    for (const auto& g : cfg.grid) prep.push_back(prepare(cfg.otfs, g.r_nu, g.r_tau));

    ChannelGenConfig ch = cfg.channel;
    ch.k_max = cfg.otfs.k_max;
    ch.l_max = cfg.otfs.l_max;
    ch.doppler_bins = cfg.otfs.N;

    const auto trials = static_cast<std::size_t>(cfg.num_frames);
    std::vector<Cell> cells(trials * per_trial);
    std::vector<std::uint64_t> digests(trials * n_snr);

    const auto run_trial = [&](std::size_t i) {
        std::mt19937_64 rng(trial_seed(cfg.base_seed, static_cast<int>(i)));
        const ChannelRealization chan = make_realization(generate_channel(ch, rng), cfg.otfs.N, cfg.otfs.M);
        const Frame frame = build_frame(cfg.otfs, rng);
        const CMatrix unit_noise = complex_gaussian(cfg.otfs.N, cfg.otfs.M, rng);
        for (std::size_t s = 0; s < n_snr; ++s) {
            OtfsConfig o = cfg.otfs;
            o.snr_db = cfg.snr_sweep_db[s];
            const RxFrame rx = synthesize_rx(frame, chan, o, unit_noise);
            const std::uint64_t dg = digest(rx.y_full);
            digests[i * n_snr + s] = dg;
            for (std::size_t r = 0; r < n_r; ++r) {
                for (std::size_t e = 0; e < n_est; ++e) {
                    Cell& c = cells[i * per_trial + (s * n_r + r) * n_est + e];
                    // Every estimator must see the identical frame.
                    if (digest(rx.y_full) != dg) throw std::logic_error("received frame modified between estimators");
                    const auto t0 = std::chrono::steady_clock::now();
                    try {
                        const CMatrix h = estimate(cfg.estimators[e], rx, o, prep[r], cfg);
                        c.nmse = nmse(chan.effective, h);
                        c.ok = std::isfinite(c.nmse);
                        if (!c.ok) c.error = "non-finite NMSE";
                    } catch (const std::exception& ex) {
                        c.error = ex.what();
                    }
                    c.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
                }
            }
        }
    };

    const auto workers = static_cast<std::size_t>(std::min<long>(resolve_threads(cfg.threads), static_cast<long>(trials)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < trials; ++i) run_trial(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr fatal;
        std::mutex fatal_mu;
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < trials; i = next++) {
                    try {
                        run_trial(i);
                    } catch (...) {
                        const std::lock_guard<std::mutex> lock(fatal_mu);
                        if (!fatal) fatal = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (fatal) std::rethrow_exception(fatal);
    }

    ExperimentResult out;
    out.rx_digests = std::move(digests);
    for (std::size_t s = 0; s < n_snr; ++s) {
        for (std::size_t r = 0; r < n_r; ++r) {
            for (std::size_t e = 0; e < n_est; ++e) {
                double sum = 0.0;
                double ms = 0.0;
                int frames = 0;
                for (std::size_t i = 0; i < trials; ++i) {
                    const Cell& c = cells[i * per_trial + (s * n_r + r) * n_est + e];
                    if (c.ok) {
                        sum += c.nmse;
                        ms += c.ms;
                        ++frames;
                    } else {
                        out.failures.push_back({cfg.estimators[e], cfg.snr_sweep_db[s], cfg.grid[r].r_nu,
                                                cfg.grid[r].r_tau, static_cast<int>(i), c.error});
                    }
                }
                if (frames == 0) continue;
                ResultRow row;
                row.estimator = cfg.estimators[e];
                row.snr_db = cfg.snr_sweep_db[s];
                row.r_nu = cfg.grid[r].r_nu;
                row.r_tau = cfg.grid[r].r_tau;
                row.guard = cfg.otfs.guard_enabled;
                row.frames = frames;
                row.nmse_db = to_db(sum / frames);
                row.wall_time_ms = cfg.record_timing ? ms / frames : 0.0;
                out.rows.push_back(row);
            }
        }
    }
    return out;
}

void write_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
    os << "estimator,snr_db,r_nu,r_tau,guard,frames,nmse_db,wall_time_ms\n";
    const auto old = os.flags();
    for (const auto& r : rows) {
        os << r.estimator << ',' << std::defaultfloat << std::setprecision(10) << r.snr_db << ',' << r.r_nu << ','
           << r.r_tau << ',' << (r.guard ? 1 : 0) << ',' << r.frames << ',' << std::fixed << std::setprecision(6)
           << r.nmse_db << ',' << std::setprecision(3) << r.wall_time_ms << '\n';
        os.flags(old);
    }
}

void write_json(std::ostream& os, const ExperimentResult& result) {
    nlohmann::json j;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : result.rows) {
        j["rows"].push_back({{"estimator", r.estimator},
                             {"snr_db", r.snr_db},
                             {"r_nu", r.r_nu},
                             {"r_tau", r.r_tau},
                             {"guard", r.guard},
                             {"frames", r.frames},
                             {"nmse_db", r.nmse_db},
                             {"wall_time_ms", r.wall_time_ms}});
    }
    j["failures"] = nlohmann::json::array();
    for (const auto& f : result.failures) {
        j["failures"].push_back({{"estimator", f.estimator},
                                 {"snr_db", f.snr_db},
                                 {"r_nu", f.r_nu},
                                 {"r_tau", f.r_tau},
                                 {"trial", f.trial},
                                 {"message", f.message}});
    }
    os << j.dump(2) << '\n';
}

// ----------------------------------------------------------------- bench --

std::vector<BenchRow> run_bench(const OtfsConfig& otfs, const std::vector<double>& scales, const BenchOptions& opts) {
    if (scales.empty()) throw std::invalid_argument("run_bench: no grid scales");
    std::mt19937_64 rng(opts.seed);
    ChannelGenConfig ch;
    ch.k_max = otfs.k_max;
    ch.l_max = otfs.l_max;
    ch.doppler_bins = otfs.N;
    const ChannelRealization chan = make_realization(generate_channel(ch, rng), otfs.N, otfs.M);
    const Frame frame = build_frame(otfs, rng);
    const RxFrame rx = synthesize_rx(frame, chan, otfs, rng);
    const CMatrix Y = truncate_matrix(rx.y_full, otfs);

    SblOptions sbl;
    sbl.fixed_iterations = true;
    sbl.t_max = opts.iterations;
    Sbl2dOptions sbl2;
    sbl2.sbl = sbl;

    using clock = std::chrono::steady_clock;
    std::vector<BenchRow> out;
    for (const double s : scales) {
        if (!(s > 0.0)) throw std::invalid_argument("run_bench: grid scale must be positive");
        const Prepared p = prepare(otfs, opts.base_r / s, opts.base_r / s);
        BenchRow row;
        row.scale = s;
        row.N_nu = p.grid.N_nu;
        row.M_tau = p.grid.M_tau;
        row.sbl1d_ms = std::numeric_limits<double>::infinity();
        row.sbl2d_ms = std::numeric_limits<double>::infinity();
        for (int rep = 0; rep < std::max(opts.repeats, 1); ++rep) {
            auto t0 = clock::now();
            const Estimate1D e1 = run_sbl_1d(rx.y_trunc, p.meas1, sbl);
            auto t1 = clock::now();
            const Estimate2D e2 = run_sbl_2d(Y, p.meas2, sbl2);
            auto t2 = clock::now();
            row.sbl1d_ms = std::min(row.sbl1d_ms, std::chrono::duration<double, std::milli>(t1 - t0).count());
            row.sbl2d_ms = std::min(row.sbl2d_ms, std::chrono::duration<double, std::milli>(t2 - t1).count());
            (void)e1;
            (void)e2;
        }
        out.push_back(row);
    }
    return out;
}

}  // namespace ddest
