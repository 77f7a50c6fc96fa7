// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>

#include "ddest/frame.hpp"
#include "ddest/types.hpp"

namespace ddest {

/// Virtual DD sampling grid: k_bar[k''] = k'' r_nu - k_max, l_bar[l''] = l'' r_tau.
struct VirtualGrid {
    double r_nu = 1.0;
    double r_tau = 1.0;
    int N_nu = 0;
    int M_tau = 0;
    RVector k_bar;
    RVector l_bar;

    int size() const { return N_nu * M_tau; }
    /// Joint column index k'' M_tau + l''.
    int column(int k2, int l2) const { return k2 * M_tau + l2; }
    std::pair<int, int> split(int col) const { return {col / M_tau, col % M_tau}; }
};

VirtualGrid build_grid(int k_max, int l_max, double r_nu, double r_tau);

/// Dictionary of a linearized sparse-recovery problem
///
///     y = (phi + phi_dnu diag(kappa) + phi_dtau diag(iota)) h + z.
///
/// A derivative matrix with zero columns marks an axis without off-grid
/// refinement. The per-column grid coordinates k_bar / l_bar are kept so
/// estimates can be mapped back to shifts.
struct Measurement1D {
    CMatrix phi;
    CMatrix phi_dnu;
    CMatrix phi_dtau;
    RVector k_bar;  // per column
    RVector l_bar;  // per column
    double r_nu = 1.0;
    double r_tau = 1.0;

    Eigen::Index rows() const { return phi.rows(); }
    Eigen::Index cols() const { return phi.cols(); }
    bool has_doppler() const { return phi_dnu.cols() == phi.cols() && phi.cols() > 0; }
    bool has_delay() const { return phi_dtau.cols() == phi.cols() && phi.cols() > 0; }
};

/// Exact truncated-window response of a path at (k_nu, l_tau):
/// entry k M_T + l is x_p w(k - k_max - k_nu, N) w(l - l_tau, M).
CVector observation_column(const OtfsConfig& cfg, Complex pilot_amp, double k_nu, double l_tau);

/// Analytic derivatives of observation_column() in k_nu and l_tau.
CVector observation_column_dnu(const OtfsConfig& cfg, Complex pilot_amp, double k_nu, double l_tau);
CVector observation_column_dtau(const OtfsConfig& cfg, Complex pilot_amp, double k_nu, double l_tau);

Measurement1D build_measurement(const VirtualGrid& grid, const OtfsConfig& cfg, Complex pilot_amp);

/// phi + phi_dnu diag(kappa) + phi_dtau diag(iota). Either offset vector may
/// be empty when the corresponding axis is absent.
CMatrix assemble_offgrid(const Measurement1D& meas, const RVector& kappa, const RVector& iota);

/// floor(rows / ln(cols)), clamped to [1, cols].
int sparsity_level(Eigen::Index rows, Eigen::Index cols);

}  // namespace ddest
