// SPDX-License-Identifier: Apache-2.0
#include "ddest/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "ddest/kernel.hpp"

namespace ddest {

std::vector<ChannelPath> generate_channel(const ChannelGenConfig& cfg, std::mt19937_64& rng) {
    if (cfg.num_paths < 1) throw std::invalid_argument("generate_channel: num_paths must be >= 1");
    if (!(cfg.k_max > 0.0) || !(cfg.l_max > 0.0)) {
        throw std::invalid_argument("generate_channel: k_max and l_max must be positive");
    }
    if (cfg.doppler_bins < 2) throw std::invalid_argument("generate_channel: doppler_bins must be >= 2");

    std::uniform_real_distribution<double> doppler(-cfg.k_max, cfg.k_max);
    std::uniform_real_distribution<double> delay(0.0, cfg.l_max);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<ChannelPath> paths(cfg.num_paths);
    for (auto& p : paths) {
        p.k_nu = doppler(rng);
        p.l_tau = delay(rng);
    }

    double norm = 0.0;
    for (const auto& p : paths) norm += std::exp(-cfg.pdp_decay * p.l_tau);

    for (auto& p : paths) {
        const double var = std::exp(-cfg.pdp_decay * p.l_tau) / norm;
        const double sd = std::sqrt(var / 2.0);
        const double re = gauss(rng);
        const double im = gauss(rng);
        const Complex h{sd * re, sd * im};
        p.coeff = h * std::polar(1.0, -2.0 * kPi * p.k_nu * p.l_tau / cfg.doppler_bins);
    }
    return paths;
}

std::vector<ChannelPath> generate_channel(const ChannelGenConfig& cfg) {
    std::mt19937_64 rng(cfg.rng_seed);
    return generate_channel(cfg, rng);
}

CMatrix effective_channel(const std::vector<ChannelPath>& paths, int N, int M) {
    if (N < 2 || M < 2) throw std::invalid_argument("effective_channel: N and M must be >= 2");
    if (paths.empty()) throw std::invalid_argument("effective_channel: empty path list");
    CMatrix h = CMatrix::Zero(N, M);
    for (const auto& p : paths) {
        const CVector wd = kernel_vector(0, N, p.k_nu, N);
        const CVector wl = kernel_vector(0, M, p.l_tau, M);
        h.noalias() += p.coeff * wd * wl.transpose();
    }
    return h;
}

ChannelRealization make_realization(std::vector<ChannelPath> paths, int N, int M) {
    ChannelRealization r;
    r.effective = effective_channel(paths, N, M);
    r.paths = std::move(paths);
    return r;
}

}  // namespace ddest
