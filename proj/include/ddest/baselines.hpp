// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ddest/frame.hpp"
#include "ddest/sbl1d.hpp"
#include "ddest/ssr.hpp"

namespace ddest {

struct OmpOptions {
    int max_atoms = 0;  // 0 selects floor(rows / ln(cols))
    double residual_tol = 1e-6;
};

/// Greedy on-grid recovery over meas.phi with a least-squares refit after
/// every selection. Offsets stay zero.
Estimate1D omp_ongrid(const CVector& y, const Measurement1D& meas, const OmpOptions& opts);

/// Residual norms after each OMP iteration, starting with ||y||.
std::vector<double> omp_residual_trace(const CVector& y, const Measurement1D& meas, const OmpOptions& opts);

struct ImpulseOptions {
    double threshold_factor = 3.0;
};

/// Classical single-impulse estimate of h_w: y / x_p over the observation
/// window where |y| > threshold_factor sqrt(N0), zero elsewhere.
CMatrix impulse_threshold(const CMatrix& y_full, const OtfsConfig& cfg, const ImpulseOptions& opts);

}  // namespace ddest
