// SPDX-License-Identifier: Apache-2.0
#include "ddest/frame.hpp"

#include <cmath>
#include <stdexcept>

namespace ddest {

double OtfsConfig::pilot_amplitude() const { return std::pow(10.0, pilot_power_db / 20.0); }

double OtfsConfig::noise_power() const {
    if (std::isinf(snr_db) && snr_db > 0) return 0.0;
    return std::pow(10.0, -snr_db / 10.0);
}

void OtfsConfig::validate() const {
    if (M < 2 || N < 2) throw std::invalid_argument("OtfsConfig: M and N must be >= 2");
    if (k_max < 0 || l_max < 0) throw std::invalid_argument("OtfsConfig: k_max and l_max must be >= 0");
    if (pilot_k < 0 || pilot_k >= N) throw std::invalid_argument("OtfsConfig: pilot_k out of range");
    if (pilot_l < 0 || pilot_l >= M) throw std::invalid_argument("OtfsConfig: pilot_l out of range");
    if (2 * k_max + 1 > N) throw std::invalid_argument("OtfsConfig: 2 k_max + 1 exceeds N");
    if (l_max + 1 > M) throw std::invalid_argument("OtfsConfig: l_max + 1 exceeds M");
    if (std::isnan(snr_db)) throw std::invalid_argument("OtfsConfig: snr_db is NaN");
}

Frame build_frame(const OtfsConfig& cfg, std::mt19937_64& rng) {
    cfg.validate();
    const int N = cfg.N;
    const int M = cfg.M;
    Frame f;
    f.symbols = CMatrix::Zero(N, M);
    f.pilot_mask.setConstant(N, M, false);
    f.guard_mask.setConstant(N, M, false);
    f.data_mask.setConstant(N, M, false);

    f.pilot_mask(cfg.pilot_k, cfg.pilot_l) = true;
    f.symbols(cfg.pilot_k, cfg.pilot_l) = cfg.pilot_amplitude();

    if (cfg.guard_enabled) {
        for (int dk = -2 * cfg.k_max; dk <= 2 * cfg.k_max; ++dk) {
            for (int dl = -cfg.l_max; dl <= cfg.l_max; ++dl) {
                if (dk == 0 && dl == 0) continue;
                f.guard_mask(wrap(cfg.pilot_k + dk, N), wrap(cfg.pilot_l + dl, M)) = true;
            }
        }
    }

    std::bernoulli_distribution bit(0.5);
    const double q = 1.0 / std::sqrt(2.0);
    // Column-major sweep keeps the symbol draw order fixed for a given seed.
    for (int l = 0; l < M; ++l) {
        for (int k = 0; k < N; ++k) {
            if (f.pilot_mask(k, l) || f.guard_mask(k, l)) continue;
            f.data_mask(k, l) = true;
            switch (cfg.data) {
                case Constellation::none:
                    break;
                case Constellation::bpsk:
                    f.symbols(k, l) = bit(rng) ? 1.0 : -1.0;
                    break;
                case Constellation::qpsk: {
                    const double re = bit(rng) ? q : -q;
                    const double im = bit(rng) ? q : -q;
                    f.symbols(k, l) = Complex{re, im};
                    break;
                }
            }
        }
    }
    return f;
}

CMatrix complex_gaussian(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    CMatrix z(rows, cols);
    for (int c = 0; c < cols; ++c) {
        for (int r = 0; r < rows; ++r) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            z(r, c) = Complex{re, im};
        }
    }
    return z;
}

CMatrix circular_convolve(const CMatrix& x, const CMatrix& h) {
    const auto N = x.rows();
    const auto M = x.cols();
    if (h.rows() != N || h.cols() != M) throw std::invalid_argument("circular_convolve: size mismatch");
    CMatrix y = CMatrix::Zero(N, M);
    for (Eigen::Index kp = 0; kp < N; ++kp) {
        for (Eigen::Index lp = 0; lp < M; ++lp) {
            const Complex s = x(kp, lp);
            if (s == Complex{}) continue;
            // y[k, l] += s * h[(k - kp)_N, (l - lp)_M]
            for (Eigen::Index l = 0; l < M; ++l) {
                const int hl = wrap(l - lp, M);
                for (Eigen::Index k = 0; k < N; ++k) {
                    y(k, l) += s * h(wrap(k - kp, N), hl);
                }
            }
        }
    }
    return y;
}

CVector truncate(const CMatrix& y_full, const OtfsConfig& cfg) {
    const int nt = cfg.n_t();
    const int mt = cfg.m_t();
    CVector v(nt * mt);
    for (int k = 0; k < nt; ++k) {
        const int row = wrap(cfg.pilot_k - cfg.k_max + k, cfg.N);
        for (int l = 0; l < mt; ++l) {
            v[k * mt + l] = y_full(row, wrap(cfg.pilot_l + l, cfg.M));
        }
    }
    return v;
}

CMatrix truncate_matrix(const CMatrix& y_full, const OtfsConfig& cfg) {
    const int nt = cfg.n_t();
    const int mt = cfg.m_t();
    const CVector v = truncate(y_full, cfg);
    CMatrix Y(nt, mt);
    for (int k = 0; k < nt; ++k) {
        for (int l = 0; l < mt; ++l) Y(k, l) = v[k * mt + l];
    }
    return Y;
}

namespace {

RxFrame finish_rx(const Frame& frame, const ChannelRealization& channel, const OtfsConfig& cfg,
                  const CMatrix* unit_noise) {
    if (channel.effective.rows() != cfg.N || channel.effective.cols() != cfg.M) {
        throw std::invalid_argument("synthesize_rx: channel size does not match the frame geometry");
    }
    if (frame.symbols.rows() != cfg.N || frame.symbols.cols() != cfg.M) {
        throw std::invalid_argument("synthesize_rx: frame size does not match the config");
    }
    RxFrame rx;
    rx.noise_power = cfg.noise_power();
    rx.y_full = circular_convolve(frame.symbols, channel.effective);
    if (unit_noise != nullptr && rx.noise_power > 0.0) {
        rx.y_full += std::sqrt(rx.noise_power) * (*unit_noise);
    }
    rx.y_trunc = truncate(rx.y_full, cfg);
    return rx;
}

}  // namespace

RxFrame synthesize_rx(const Frame& frame, const ChannelRealization& channel, const OtfsConfig& cfg,
                      std::mt19937_64& rng) {
    const CMatrix z = complex_gaussian(cfg.N, cfg.M, rng);
    return finish_rx(frame, channel, cfg, &z);
}

RxFrame synthesize_rx(const Frame& frame, const ChannelRealization& channel, const OtfsConfig& cfg,
                      const CMatrix& unit_noise) {
    if (unit_noise.rows() != cfg.N || unit_noise.cols() != cfg.M) {
        throw std::invalid_argument("synthesize_rx: noise field size mismatch");
    }
    return finish_rx(frame, channel, cfg, &unit_noise);
}

}  // namespace ddest
