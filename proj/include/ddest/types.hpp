// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace ddest {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;
using IndexList = std::vector<Eigen::Index>;

inline constexpr double kPi = 3.14159265358979323846;

// Non-negative modulo for circular DD-grid addressing.
inline int wrap(long i, long n) {
    long r = i % n;
    return static_cast<int>(r < 0 ? r + n : r);
}

}  // namespace ddest
