// SPDX-License-Identifier: Apache-2.0
#include "ddest/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace ddest {

namespace {

struct OmpRun {
    IndexList atoms;
    CVector coef;
    std::vector<double> residuals;
};

OmpRun omp_core(const CVector& y, const Measurement1D& meas, const OmpOptions& opts) {
    if (meas.cols() == 0) throw std::invalid_argument("omp_ongrid: empty dictionary");
    if (y.size() != meas.rows()) throw std::invalid_argument("omp_ongrid: observation length mismatch");
    const int max_atoms = opts.max_atoms > 0 ? opts.max_atoms : sparsity_level(meas.rows(), meas.cols());

    OmpRun run;
    const double y_norm = y.norm();
    run.residuals.push_back(y_norm);
    if (y_norm == 0.0) return run;

    const RVector col_norm = meas.phi.colwise().norm().transpose();
    std::vector<bool> used(meas.cols(), false);
    CVector r = y;
    while (static_cast<int>(run.atoms.size()) < max_atoms && r.norm() > opts.residual_tol * y_norm) {
        const CVector corr = meas.phi.adjoint() * r;
        Eigen::Index best = -1;
        double best_score = 0.0;
        for (Eigen::Index g = 0; g < meas.cols(); ++g) {
            if (used[g] || col_norm[g] == 0.0) continue;
            const double score = std::abs(corr[g]) / col_norm[g];
            if (score > best_score) {
                best_score = score;
                best = g;
            }
        }
        if (best < 0) break;
        used[best] = true;
        run.atoms.push_back(best);

        CMatrix sub(meas.rows(), static_cast<Eigen::Index>(run.atoms.size()));
        for (std::size_t i = 0; i < run.atoms.size(); ++i) sub.col(static_cast<Eigen::Index>(i)) = meas.phi.col(run.atoms[i]);
        run.coef = sub.colPivHouseholderQr().solve(y);
        r = y - sub * run.coef;
        run.residuals.push_back(r.norm());
    }
    return run;
}

}  // namespace

Estimate1D omp_ongrid(const CVector& y, const Measurement1D& meas, const OmpOptions& opts) {
    const OmpRun run = omp_core(y, meas, opts);
    Estimate1D e;
    e.h_hat = CVector::Zero(meas.cols());
    for (std::size_t i = 0; i < run.atoms.size(); ++i) e.h_hat[run.atoms[i]] = run.coef[static_cast<Eigen::Index>(i)];
    e.kappa = RVector::Zero(meas.cols());
    e.iota = RVector::Zero(meas.cols());
    e.k_nu_hat = meas.k_bar;
    e.l_tau_hat = meas.l_bar;
    e.support = run.atoms;
    e.iterations = static_cast<int>(run.atoms.size());
    e.converged = true;
    return e;
}

std::vector<double> omp_residual_trace(const CVector& y, const Measurement1D& meas, const OmpOptions& opts) {
    return omp_core(y, meas, opts).residuals;
}

CMatrix impulse_threshold(const CMatrix& y_full, const OtfsConfig& cfg, const ImpulseOptions& opts) {
    if (!(opts.threshold_factor > 0.0)) throw std::invalid_argument("impulse_threshold: threshold_factor must be positive");
    if (y_full.rows() != cfg.N || y_full.cols() != cfg.M) throw std::invalid_argument("impulse_threshold: frame size mismatch");
    const double thr = opts.threshold_factor * std::sqrt(cfg.noise_power());
    const Complex xp = cfg.pilot_amplitude();
    CMatrix h = CMatrix::Zero(cfg.N, cfg.M);
    for (int a = -cfg.k_max; a <= cfg.k_max; ++a) {
        for (int b = 0; b <= cfg.l_max; ++b) {
            const Complex v = y_full(wrap(cfg.pilot_k + a, cfg.N), wrap(cfg.pilot_l + b, cfg.M));
            if (std::abs(v) > thr) h(wrap(a, cfg.N), b) = v / xp;
        }
    }
    return h;
}

}  // namespace ddest
