// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ddest/types.hpp"

namespace ddest {

/// One propagation path in normalized grid units.
struct ChannelPath {
    double k_nu = 0.0;   // Doppler shift, nu * N * T
    double l_tau = 0.0;  // delay shift, tau * M * delta_f
    Complex coeff{};     // coefficient with the delay-Doppler phase absorbed
};

struct ChannelGenConfig {
    int num_paths = 5;
    double k_max = 3.0;
    double l_max = 4.0;
    double pdp_decay = 0.1;
    int doppler_bins = 32;  // N, used for the absorbed phase
    std::uint64_t rng_seed = 1;
};

/// Path list plus its sampled effective channel h_w (N x M, row = Doppler).
struct ChannelRealization {
    std::vector<ChannelPath> paths;
    CMatrix effective;
};

/// Draws P paths: Doppler ~ U(-k_max, k_max), delay ~ U(0, l_max),
/// h ~ CN(0, q(l)) with the normalized exponential power-delay profile
/// q(l) = exp(-decay l) / sum_i exp(-decay l_i). The stored coefficient is
/// h * exp(-j 2 pi k_nu l_tau / N).
std::vector<ChannelPath> generate_channel(const ChannelGenConfig& cfg, std::mt19937_64& rng);
std::vector<ChannelPath> generate_channel(const ChannelGenConfig& cfg);

/// h_w[a, b] = sum_i coeff_i * w(a - k_nu_i, N) * w(b - l_tau_i, M).
CMatrix effective_channel(const std::vector<ChannelPath>& paths, int N, int M);

ChannelRealization make_realization(std::vector<ChannelPath> paths, int N, int M);

}  // namespace ddest
