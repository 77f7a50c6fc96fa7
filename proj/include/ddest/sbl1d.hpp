// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ddest/ssr.hpp"
#include "ddest/types.hpp"

namespace ddest {

struct SblOptions {
    double epsilon = 1e-3;  // stop when ||alpha' - alpha|| / ||alpha|| <= epsilon
    int t_max = 200;
    double rho = 1e-2;
    double c = 1e-4;
    double d = 1e-4;
    bool offgrid_enabled = true;
    double sigma2_init_divisor = 100.0;
    /// Run exactly t_max iterations; used for timing.
    bool fixed_iterations = false;
    /// Overrides the initial beta0 when positive.
    double beta0_init = 0.0;

    void validate() const;
};

inline constexpr double kAlphaFloor = 1e-12;
inline constexpr double kBeta0Cap = 1e12;

struct SblState {
    CVector mu;
    CMatrix sigma;
    RVector alpha;
    RVector kappa;
    RVector iota;
    double beta0 = 1.0;
    int iter = 0;
};

struct Estimate1D {
    CVector h_hat;
    RVector k_nu_hat;
    RVector l_tau_hat;
    IndexList support;
    RVector kappa;
    RVector iota;
    double beta0 = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct Posterior {
    CVector mu;
    CMatrix sigma;
};

SblState init_state(const CVector& y, const Measurement1D& meas, const SblOptions& opts);

/// Posterior of h given (alpha, kappa, iota, beta0), computed through the
/// (rows x rows) Woodbury inner matrix beta0^-1 I + Phi Lambda Phi^H.
Posterior posterior_update(const SblState& state, const CVector& y, const Measurement1D& meas);

/// Same posterior through the (G x G) inverse (beta0 Phi^H Phi + Lambda^-1)^-1.
Posterior posterior_update_direct(const SblState& state, const CVector& y, const Measurement1D& meas);

/// Elementwise (sqrt(1 + 4 rho s) - 1) / (2 rho) with s = |mu|^2 + Sigma_gg.
RVector update_alpha(const CVector& mu, const CMatrix& sigma, double rho);

/// The bracketed residual term ||y - Phi mu||^2 + beta0^-1 sum_g (1 - Sigma_gg / alpha_g).
double beta0_residual(const SblState& state, const CVector& y, const Measurement1D& meas);

/// (c - 1 + rows) / (d + A), A clamped at 0 and the result capped.
double update_beta0(const SblState& state, const CVector& y, const Measurement1D& meas, const SblOptions& opts);

enum class OffgridAxis { doppler, delay };

/// Indices of the p largest entries, descending, ties by ascending index.
IndexList top_indices(const RVector& score, int p);

/// Quadratic-program update of the off-grid offsets on one axis over the
/// top-P support of alpha. Returns the full-length offset vector.
RVector update_offgrid(const SblState& state, const CVector& y, const Measurement1D& meas, OffgridAxis axis);

/// Normal equations of the off-grid quadratic program for one axis on the
/// given support: minimise k^T A k - 2 b^T k.
void offgrid_system(const SblState& state, const CVector& y, const Measurement1D& meas, OffgridAxis axis,
                    const IndexList& support, RMatrix& A, RVector& b);

/// Solves A k = b on the support when cond(A) <= 1e10, else one
/// Gauss-Seidel sweep started from `current`; clamps to [-half, half] and
/// scatters into a zero vector of length `size`.
RVector solve_offgrid_qp(const RMatrix& A, const RVector& b, const IndexList& support, const RVector& current,
                         double half, Eigen::Index size);

Estimate1D run_sbl_1d(const CVector& y, const Measurement1D& meas, const SblOptions& opts);

}  // namespace ddest
