// SPDX-License-Identifier: Apache-2.0
#include "ddest/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace ddest {

namespace {

void check_args(double x, int L) {
    if (!std::isfinite(x)) throw std::invalid_argument("kernel: offset must be finite");
    if (L < 2) throw std::invalid_argument("kernel: period must be >= 2");
}

// Below this |sin(pi x / L)| the ratio loses digits; fall back to the sum.
constexpr double kSingularBand = 1e-3;

}  // namespace

Complex kernel_dft(double x, int L) {
    check_args(x, L);
    Complex acc{0.0, 0.0};
    const double step = -2.0 * kPi * x / L;
    for (int n = 0; n < L; ++n) acc += std::polar(1.0, step * n);
    return acc / static_cast<double>(L);
}

Complex kernel(double x, int L) {
    check_args(x, L);
    // Periodic in L; reduce to [-L/2, L/2] so the phase term stays small.
    const double r = x - L * std::round(x / L);
    const double den = std::sin(kPi * r / L);
    if (std::abs(den) < kSingularBand) return kernel_dft(r, L);
    const double mag = std::sin(kPi * r) / (L * den);
    return std::polar(1.0, -(L - 1) * kPi * r / L) * mag;
}

Complex kernel_derivative(double x, int L) {
    check_args(x, L);
    const double r = x - L * std::round(x / L);
    Complex acc{0.0, 0.0};
    const double step = -2.0 * kPi * r / L;
    for (int n = 0; n < L; ++n) {
        acc += Complex{0.0, 2.0 * kPi * n / L} * std::polar(1.0, step * n);
    }
    return acc / static_cast<double>(L);
}

CVector kernel_vector(int first, int count, double shift, int L) {
    CVector v(count);
    for (int i = 0; i < count; ++i) v[i] = kernel(first + i - shift, L);
    return v;
}

CVector kernel_derivative_vector(int first, int count, double shift, int L) {
    CVector v(count);
    for (int i = 0; i < count; ++i) v[i] = kernel_derivative(first + i - shift, L);
    return v;
}

}  // namespace ddest
