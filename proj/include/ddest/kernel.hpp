// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ddest/types.hpp"

namespace ddest {

/// Periodic Dirichlet sampling kernel of the ideal-pulse, rectangular-window
/// OTFS link:
///
///     w(x) = (1/L) sum_{n=0}^{L-1} exp(-j 2 pi n x / L)
///          = (1/L) exp(-j (L-1) pi x / L) sin(pi x) / sin(pi x / L)
///
/// `x` is an offset in grid units (e.g. k - k' - k_nu) and `L` the period
/// (N for the Doppler axis, M for the delay axis). The closed form is used
/// away from x = 0 (mod L); near the removable singularity the DFT sum is
/// evaluated instead.
///
/// Throws std::invalid_argument for non-finite x or L < 2.
Complex kernel(double x, int L);

/// Reference DFT-sum evaluation of kernel(). O(L).
Complex kernel_dft(double x, int L);

/// Derivative of the kernel with respect to the off-grid shift kappa of
/// kernel(x - kappa, L), evaluated at kappa = 0:
///
///     (1/L) sum_{n=0}^{L-1} (j 2 pi n / L) exp(-j 2 pi n x / L)
Complex kernel_derivative(double x, int L);

/// Kernel values w(first + i - shift, L) for i in [0, count).
CVector kernel_vector(int first, int count, double shift, int L);

/// Derivative values matching kernel_vector().
CVector kernel_derivative_vector(int first, int count, double shift, int L);

}  // namespace ddest
