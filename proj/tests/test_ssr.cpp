// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "ddest/kernel.hpp"
#include "ddest/ssr.hpp"

using namespace ddest;

namespace {

double rel(const CVector& a, const CVector& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("build_grid: sizes and points") {
    const VirtualGrid g = build_grid(3, 4, 0.8, 0.8);
    CHECK(g.N_nu == 8);
    CHECK(g.M_tau == 5);
    CHECK(g.k_bar[0] == doctest::Approx(-3.0));
    CHECK(g.k_bar[1] == doctest::Approx(-2.2));
    CHECK(g.k_bar[7] == doctest::Approx(2.6));
    const double lb[] = {0.0, 0.8, 1.6, 2.4, 3.2};
    for (int i = 0; i < 5; ++i) CHECK(g.l_bar[i] == doctest::Approx(lb[i]));

    CHECK(build_grid(3, 4, 0.5, 0.5).N_nu == 12);
    CHECK(build_grid(3, 4, 0.5, 0.5).M_tau == 8);
    CHECK(build_grid(3, 4, 1.0, 1.0).size() == 24);
}

TEST_CASE("build_grid: range and errors") {
    for (double r : {0.2, 0.3, 0.45, 0.7, 0.9, 1.0}) {
        const VirtualGrid g = build_grid(3, 4, r, r);
        CHECK(g.k_bar[0] >= -3.0);
        CHECK(g.k_bar[g.N_nu - 1] < 3.0);
        CHECK(g.k_bar[g.N_nu - 1] + r >= 3.0 - 1e-9);
        CHECK(g.l_bar[g.M_tau - 1] < 4.0);
        CHECK(g.l_bar[g.M_tau - 1] + r >= 4.0 - 1e-9);
    }
    CHECK_THROWS_AS(build_grid(3, 4, 0.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(3, 4, 0.5, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(3, 4, 1.5, 0.5), std::invalid_argument);
}

TEST_CASE("grid joint index round trip") {
    const VirtualGrid g = build_grid(3, 4, 0.45, 0.7);
    for (int c = 0; c < g.size(); ++c) {
        const auto [k2, l2] = g.split(c);
        CHECK(g.column(k2, l2) == c);
        CHECK(k2 < g.N_nu);
        CHECK(l2 < g.M_tau);
    }
}

TEST_CASE("build_measurement: column definition") {
    OtfsConfig cfg;
    const Complex xp = cfg.pilot_amplitude();
    const VirtualGrid g = build_grid(cfg.k_max, cfg.l_max, 0.5, 0.5);
    const Measurement1D m = build_measurement(g, cfg, xp);
    CHECK(m.rows() == cfg.n_t() * cfg.m_t());
    CHECK(m.cols() == g.size());
    for (int c : {0, 7, 41, g.size() - 1}) {
        const auto [k2, l2] = g.split(c);
        CHECK(m.k_bar[c] == g.k_bar[k2]);
        CHECK(m.l_bar[c] == g.l_bar[l2]);
        for (int k = 0; k < cfg.n_t(); ++k) {
            for (int l = 0; l < cfg.m_t(); ++l) {
                const Complex want =
                    xp * kernel_dft(k - cfg.k_max - g.k_bar[k2], cfg.N) * kernel_dft(l - g.l_bar[l2], cfg.M);
                CHECK(std::abs(m.phi(k * cfg.m_t() + l, c) - want) < 1e-10);
            }
        }
    }
}

TEST_CASE("build_measurement: integer grid gives impulses") {
    OtfsConfig cfg;
    const VirtualGrid g = build_grid(cfg.k_max, cfg.l_max, 1.0, 1.0);
    const Measurement1D m = build_measurement(g, cfg, Complex(1.0, 0.0));
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        int ones = 0;
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            const double a = std::abs(m.phi(r, c));
            if (a > 1e-12) {
                CHECK(a == doctest::Approx(1.0));
                ++ones;
            }
        }
        CHECK(ones == 1);
    }
}

TEST_CASE("build_measurement: derivative columns vs finite differences") {
    OtfsConfig cfg;
    const Complex xp(0.7, 0.2);
    const VirtualGrid g = build_grid(cfg.k_max, cfg.l_max, 0.45, 0.6);
    const Measurement1D m = build_measurement(g, cfg, xp);
    const double h = 1e-6;
    for (int c = 0; c < g.size(); c += 5) {
        const double kn = m.k_bar[c];
        const double ln = m.l_bar[c];
        const CVector fd_nu =
            (observation_column(cfg, xp, kn + h, ln) - observation_column(cfg, xp, kn - h, ln)) / (2.0 * h);
        const CVector fd_tau =
            (observation_column(cfg, xp, kn, ln + h) - observation_column(cfg, xp, kn, ln - h)) / (2.0 * h);
        CHECK(rel(m.phi_dnu.col(c), fd_nu) < 1e-6);
        CHECK(rel(m.phi_dtau.col(c), fd_tau) < 1e-6);
    }
}

TEST_CASE("assemble_offgrid: degeneration and single column") {
    OtfsConfig cfg;
    const VirtualGrid g = build_grid(cfg.k_max, cfg.l_max, 0.5, 0.5);
    const Measurement1D m = build_measurement(g, cfg, cfg.pilot_amplitude());
    const RVector zero = RVector::Zero(m.cols());
    CHECK((assemble_offgrid(m, zero, zero) - m.phi).cwiseAbs().maxCoeff() == 0.0);

    RVector k = zero;
    k[13] = 0.1;
    const CMatrix a = assemble_offgrid(m, k, zero);
    CMatrix want = m.phi;
    want.col(13) += 0.1 * m.phi_dnu.col(13);
    CHECK((a - want).cwiseAbs().maxCoeff() < 1e-14);

    CHECK_THROWS_AS(assemble_offgrid(m, RVector::Zero(3), zero), std::invalid_argument);
    CHECK_THROWS_AS(assemble_offgrid(m, zero, RVector::Zero(m.cols() + 1)), std::invalid_argument);
    CHECK((assemble_offgrid(m, RVector(), RVector()) - m.phi).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("linearization error is second order") {
    OtfsConfig cfg;
    const Complex xp = cfg.pilot_amplitude();
    const double kn = -0.5;
    const double ln = 1.5;
    const CVector base = observation_column(cfg, xp, kn, ln);
    const CVector dn = observation_column_dnu(cfg, xp, kn, ln);
    const CVector dt = observation_column_dtau(cfg, xp, kn, ln);
    auto err = [&](double d) {
        const CVector exact = observation_column(cfg, xp, kn + d, ln + 0.5 * d);
        const CVector lin = base + d * dn + 0.5 * d * dt;
        return (exact - lin).norm();
    };
    double prev = err(0.2);
    for (double d : {0.1, 0.05, 0.025}) {
        const double e = err(d);
        CHECK(prev / e == doctest::Approx(4.0).epsilon(0.15));
        prev = e;
    }
}

TEST_CASE("linearization accuracy at r = 0.5") {
    OtfsConfig cfg;
    const Complex xp = cfg.pilot_amplitude();
    const VirtualGrid g = build_grid(cfg.k_max, cfg.l_max, 0.5, 0.5);
    const Measurement1D m = build_measurement(g, cfg, xp);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.25, 0.25);
    std::uniform_int_distribution<int> pick(0, g.size() - 1);
    for (int i = 0; i < 200; ++i) {
        const int c = pick(rng);
        const double dk = u(rng);
        const double dl = u(rng);
        const CVector exact = observation_column(cfg, xp, m.k_bar[c] + dk, m.l_bar[c] + dl);
        const CVector lin = m.phi.col(c) + dk * m.phi_dnu.col(c) + dl * m.phi_dtau.col(c);
        CHECK(rel(lin, exact) < 0.30);
    }
}

TEST_CASE("sparsity_level") {
    CHECK(sparsity_level(35, 40) == 9);
    CHECK(sparsity_level(35, 96) == 7);
    CHECK(sparsity_level(35, 1) == 1);
    CHECK(sparsity_level(1, 1000) == 1);
    CHECK(sparsity_level(100, 3) == 3);
}
