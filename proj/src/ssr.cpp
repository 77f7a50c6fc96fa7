// SPDX-License-Identifier: Apache-2.0
#include "ddest/ssr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ddest/kernel.hpp"

namespace ddest {

VirtualGrid build_grid(int k_max, int l_max, double r_nu, double r_tau) {
    if (!(r_nu > 0.0) || !(r_tau > 0.0)) throw std::invalid_argument("build_grid: resolution must be positive");
    if (r_nu > 1.0 || r_tau > 1.0) throw std::invalid_argument("build_grid: resolution must be <= 1");
    if (k_max < 1 || l_max < 1) throw std::invalid_argument("build_grid: k_max and l_max must be >= 1");
    VirtualGrid g;
    g.r_nu = r_nu;
    g.r_tau = r_tau;
    // The small slack keeps e.g. 4 / 0.8 from rounding up to 6.
    g.N_nu = static_cast<int>(std::ceil(2.0 * k_max / r_nu - 1e-9));
    g.M_tau = static_cast<int>(std::ceil(static_cast<double>(l_max) / r_tau - 1e-9));
    g.k_bar.resize(g.N_nu);
    g.l_bar.resize(g.M_tau);
    for (int k = 0; k < g.N_nu; ++k) g.k_bar[k] = k * r_nu - k_max;
    for (int l = 0; l < g.M_tau; ++l) g.l_bar[l] = l * r_tau;
    return g;
}

namespace {

CVector kron(const CVector& a, const CVector& b) {
    CVector out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a[i] * b;
    return out;
}

}  // namespace

CVector observation_column(const OtfsConfig& cfg, Complex pilot_amp, double k_nu, double l_tau) {
    const CVector wd = kernel_vector(-cfg.k_max, cfg.n_t(), k_nu, cfg.N);
    const CVector wl = kernel_vector(0, cfg.m_t(), l_tau, cfg.M);
    return pilot_amp * kron(wd, wl);
}

CVector observation_column_dnu(const OtfsConfig& cfg, Complex pilot_amp, double k_nu, double l_tau) {
    const CVector dd = kernel_derivative_vector(-cfg.k_max, cfg.n_t(), k_nu, cfg.N);
    const CVector wl = kernel_vector(0, cfg.m_t(), l_tau, cfg.M);
    return pilot_amp * kron(dd, wl);
}

CVector observation_column_dtau(const OtfsConfig& cfg, Complex pilot_amp, double k_nu, double l_tau) {
    const CVector wd = kernel_vector(-cfg.k_max, cfg.n_t(), k_nu, cfg.N);
    const CVector dl = kernel_derivative_vector(0, cfg.m_t(), l_tau, cfg.M);
    return pilot_amp * kron(wd, dl);
}

Measurement1D build_measurement(const VirtualGrid& grid, const OtfsConfig& cfg, Complex pilot_amp) {
    cfg.validate();
    const int rows = cfg.n_t() * cfg.m_t();
    const int G = grid.size();
    Measurement1D m;
    m.phi.resize(rows, G);
    m.phi_dnu.resize(rows, G);
    m.phi_dtau.resize(rows, G);
    m.k_bar.resize(G);
    m.l_bar.resize(G);
    m.r_nu = grid.r_nu;
    m.r_tau = grid.r_tau;

    for (int k2 = 0; k2 < grid.N_nu; ++k2) {
        const double kn = grid.k_bar[k2];
        const CVector wd = kernel_vector(-cfg.k_max, cfg.n_t(), kn, cfg.N);
        const CVector dd = kernel_derivative_vector(-cfg.k_max, cfg.n_t(), kn, cfg.N);
        for (int l2 = 0; l2 < grid.M_tau; ++l2) {
            const double ln = grid.l_bar[l2];
            const CVector wl = kernel_vector(0, cfg.m_t(), ln, cfg.M);
            const CVector dl = kernel_derivative_vector(0, cfg.m_t(), ln, cfg.M);
            const int col = grid.column(k2, l2);
            m.phi.col(col) = pilot_amp * kron(wd, wl);
            m.phi_dnu.col(col) = pilot_amp * kron(dd, wl);
            m.phi_dtau.col(col) = pilot_amp * kron(wd, dl);
            m.k_bar[col] = kn;
            m.l_bar[col] = ln;
        }
    }
    return m;
}

CMatrix assemble_offgrid(const Measurement1D& meas, const RVector& kappa, const RVector& iota) {
    CMatrix out = meas.phi;
    if (kappa.size() > 0) {
        if (kappa.size() != meas.cols() || !meas.has_doppler()) {
            throw std::invalid_argument("assemble_offgrid: kappa length mismatch");
        }
        out += meas.phi_dnu * kappa.cast<Complex>().asDiagonal();
    }
    if (iota.size() > 0) {
        if (iota.size() != meas.cols() || !meas.has_delay()) {
            throw std::invalid_argument("assemble_offgrid: iota length mismatch");
        }
        out += meas.phi_dtau * iota.cast<Complex>().asDiagonal();
    }
    return out;
}

int sparsity_level(Eigen::Index rows, Eigen::Index cols) {
    if (cols <= 1) return static_cast<int>(std::max<Eigen::Index>(cols, 1));
    const auto p = static_cast<Eigen::Index>(std::floor(static_cast<double>(rows) / std::log(static_cast<double>(cols))));
    return static_cast<int>(std::clamp<Eigen::Index>(p, 1, cols));
}

}  // namespace ddest
