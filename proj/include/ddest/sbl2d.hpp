// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ddest/sbl1d.hpp"
#include "ddest/ssr.hpp"
#include "ddest/types.hpp"

namespace ddest {

/// Separable factors of the 1D dictionary: Phi_T = Phi_L kron Phi_R under
/// the joint index k'' M_tau + l''. The pilot amplitude sits in Phi_L.
struct Measurement2D {
    CMatrix phi_L;       // N_T x N_nu
    CMatrix phi_L_dnu;   // N_T x N_nu
    CMatrix phi_R;       // M_T x M_tau
    CMatrix phi_R_dtau;  // M_T x M_tau
    RVector k_bar;       // N_nu
    RVector l_bar;       // M_tau
    double r_nu = 1.0;
    double r_tau = 1.0;
};

Measurement2D build_measurement_2d(const VirtualGrid& grid, const OtfsConfig& cfg, Complex pilot_amp);

/// Phi_L + Phi_L,nu diag(kappa_nu) and Phi_R + Phi_R,tau diag(iota_tau).
CMatrix assemble_left(const Measurement2D& m, const RVector& kappa_nu);
CMatrix assemble_right(const Measurement2D& m, const RVector& iota_tau);

struct MmvState {
    CMatrix mu_cols;       // N_nu x M_T
    CMatrix sigma_common;  // N_nu x N_nu
    RVector alpha_nu;
    RVector kappa_nu;
    double beta0 = 1.0;
    int iter = 0;
    bool converged = false;
};

/// Step one: joint-sparse recovery of D in Y_T = Phi_L(kappa) D + Z.
MmvState run_mmv_sbl(const CMatrix& Y_t, const Measurement2D& meas, const SblOptions& opts);

struct Estimate2D {
    CMatrix h_mat;      // N_nu x M_tau
    RVector k_nu_hat;   // N_nu
    RVector l_tau_hat;  // M_tau
    RVector kappa_nu;
    RMatrix iota_rows;  // N_nu x M_tau, per-row delay offsets from step two
    RMatrix l_tau_rows; // l_bar + iota_rows, entry by entry
    IndexList rows_solved;
    int mmv_iterations = 0;
};

struct Sbl2dOptions {
    SblOptions sbl;
    int threads = 1;  // step-two row solves
};

/// Step one, then the delay-axis problems d_k = Phi_R(iota) h_k for the
/// top-P rows of alpha_nu; remaining rows stay zero.
Estimate2D run_sbl_2d(const CMatrix& Y_t, const Measurement2D& meas, const Sbl2dOptions& opts);
Estimate2D run_sbl_2d(const CMatrix& Y_t, const VirtualGrid& grid, const OtfsConfig& cfg, const Sbl2dOptions& opts);

}  // namespace ddest
