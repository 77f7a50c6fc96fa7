// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>
#include <random>

#include "ddest/channel.hpp"
#include "ddest/types.hpp"

namespace ddest {

enum class Constellation { none, bpsk, qpsk };

/// DD frame geometry and link parameters.
struct OtfsConfig {
    int M = 32;        // subcarriers (delay bins)
    int N = 32;        // time slots (Doppler bins)
    int k_max = 3;
    int l_max = 4;
    int pilot_k = 17;  // Doppler index of the pilot
    int pilot_l = 17;  // delay index of the pilot
    double pilot_power_db = 30.0;
    double snr_db = 20.0;
    bool guard_enabled = true;
    Constellation data = Constellation::qpsk;

    int n_t() const { return 2 * k_max + 1; }
    int m_t() const { return l_max + 1; }
    double pilot_amplitude() const;
    /// N0 = 10^(-snr/10); zero for snr_db = +inf.
    double noise_power() const;
    void validate() const;
};

struct Frame {
    CMatrix symbols;  // N x M
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> pilot_mask;
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> guard_mask;
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> data_mask;
};

struct RxFrame {
    CMatrix y_full;   // N x M
    CVector y_trunc;  // N_T * M_T, index k * M_T + l
    double noise_power = 0.0;
};

Frame build_frame(const OtfsConfig& cfg, std::mt19937_64& rng);

/// y = x (*) h_w + z, 2D circular convolution plus CN(0, N0) noise.
RxFrame synthesize_rx(const Frame& frame, const ChannelRealization& channel, const OtfsConfig& cfg,
                      std::mt19937_64& rng);

/// Same as synthesize_rx() with the unit-variance noise field supplied by
/// the caller; it is scaled by sqrt(N0). Lets one trial share its noise
/// realization across SNR points.
RxFrame synthesize_rx(const Frame& frame, const ChannelRealization& channel, const OtfsConfig& cfg,
                      const CMatrix& unit_noise);

/// Draws an N x M field of CN(0, 1) samples.
CMatrix complex_gaussian(int rows, int cols, std::mt19937_64& rng);

/// Direct O((NM)^2) circular convolution of x with h.
CMatrix circular_convolve(const CMatrix& x, const CMatrix& h);

/// Observation window around the pilot: Doppler k_p - k_max .. k_p + k_max,
/// delay l_p .. l_p + l_max, modulo the grid.
CVector truncate(const CMatrix& y_full, const OtfsConfig& cfg);

/// The truncated window as an N_T x M_T matrix (row = Doppler).
CMatrix truncate_matrix(const CMatrix& y_full, const OtfsConfig& cfg);

}  // namespace ddest
