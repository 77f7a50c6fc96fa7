// SPDX-License-Identifier: Apache-2.0
#include "ddest/sbl1d.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ddest {

void SblOptions::validate() const {
    if (!(epsilon >= 0.0)) throw std::invalid_argument("SblOptions: epsilon must be >= 0");
    if (t_max < 1) throw std::invalid_argument("SblOptions: t_max must be >= 1");
    if (!(rho > 0.0) || !(c > 0.0) || !(d > 0.0)) throw std::invalid_argument("SblOptions: rho, c, d must be positive");
    if (!(sigma2_init_divisor > 0.0)) throw std::invalid_argument("SblOptions: sigma2_init_divisor must be positive");
}

namespace {

void check_dims(const CVector& y, const Measurement1D& meas) {
    if (y.size() == 0) throw std::invalid_argument("sbl: empty observation");
    if (y.size() != meas.rows()) throw std::invalid_argument("sbl: observation length does not match the dictionary");
    if (meas.cols() == 0) throw std::invalid_argument("sbl: empty dictionary");
}

CMatrix current_matrix(const SblState& s, const Measurement1D& meas) {
    const RVector none;
    return assemble_offgrid(meas, meas.has_doppler() ? s.kappa : none, meas.has_delay() ? s.iota : none);
}

// Cholesky with escalating diagonal loading; never throws on a numerically
// singular input.
Eigen::LLT<CMatrix> robust_llt(CMatrix C) {
    Eigen::LLT<CMatrix> llt(C);
    double jitter = 1e-12 * std::max(1.0, C.diagonal().real().cwiseAbs().maxCoeff());
    for (int attempt = 0; attempt < 12 && llt.info() != Eigen::Success; ++attempt) {
        C.diagonal().array() += jitter;
        llt.compute(C);
        jitter *= 10.0;
    }
    return llt;
}

void hermitize(CMatrix& S) { S = 0.5 * (S + S.adjoint()).eval(); }

}  // namespace

SblState init_state(const CVector& y, const Measurement1D& meas, const SblOptions& opts) {
    check_dims(y, meas);
    opts.validate();
    const Eigen::Index G = meas.cols();
    SblState s;
    s.kappa = RVector::Zero(G);
    s.iota = RVector::Zero(G);
    s.alpha = (meas.phi.adjoint() * y).cwiseAbs().cwiseMax(kAlphaFloor);
    const double energy = y.squaredNorm();
    if (opts.beta0_init > 0.0) {
        s.beta0 = std::min(opts.beta0_init, kBeta0Cap);
    } else if (energy > 0.0) {
        // 1 / sigma2 with sigma2 = ||y||^2 / (divisor * rows)
        s.beta0 = std::min(opts.sigma2_init_divisor * static_cast<double>(y.size()) / energy, kBeta0Cap);
    } else {
        s.beta0 = kBeta0Cap;
    }
    s.mu = CVector::Zero(G);
    s.sigma = s.alpha.cast<Complex>().asDiagonal();
    return s;
}

Posterior posterior_update(const SblState& state, const CVector& y, const Measurement1D& meas) {
    check_dims(y, meas);
    const CMatrix phi = current_matrix(state, meas);
    const CMatrix phi_l = phi * state.alpha.cast<Complex>().asDiagonal();
    CMatrix C = phi_l * phi.adjoint();
    C.diagonal().array() += 1.0 / state.beta0;
    const auto llt = robust_llt(std::move(C));

    Posterior p;
    p.mu = phi_l.adjoint() * llt.solve(y);
    p.sigma = -(phi_l.adjoint() * llt.solve(phi_l));
    p.sigma.diagonal() += state.alpha.cast<Complex>();
    hermitize(p.sigma);
    return p;
}

Posterior posterior_update_direct(const SblState& state, const CVector& y, const Measurement1D& meas) {
    check_dims(y, meas);
    const CMatrix phi = current_matrix(state, meas);
    CMatrix P = state.beta0 * (phi.adjoint() * phi);
    P.diagonal() += state.alpha.cwiseInverse().cast<Complex>();
    const auto llt = robust_llt(std::move(P));
    Posterior p;
    p.sigma = llt.solve(CMatrix::Identity(phi.cols(), phi.cols()));
    hermitize(p.sigma);
    p.mu = state.beta0 * (p.sigma * (phi.adjoint() * y));
    return p;
}

RVector update_alpha(const CVector& mu, const CMatrix& sigma, double rho) {
    RVector a(mu.size());
    for (Eigen::Index g = 0; g < mu.size(); ++g) {
        const double s = std::norm(mu[g]) + std::max(sigma(g, g).real(), 0.0);
        // (sqrt(1 + 4 rho s) - 1) / (2 rho), rationalised to avoid cancellation
        a[g] = 2.0 * s / (std::sqrt(1.0 + 4.0 * rho * s) + 1.0);
    }
    return a;
}

double beta0_residual(const SblState& state, const CVector& y, const Measurement1D& meas) {
    const CMatrix phi = current_matrix(state, meas);
    const double fit = (y - phi * state.mu).squaredNorm();
    double trace = 0.0;
    for (Eigen::Index g = 0; g < state.alpha.size(); ++g) {
        trace += 1.0 - std::max(state.sigma(g, g).real(), 0.0) / state.alpha[g];
    }
    return fit + trace / state.beta0;
}

double update_beta0(const SblState& state, const CVector& y, const Measurement1D& meas, const SblOptions& opts) {
    const double A = std::max(beta0_residual(state, y, meas), 0.0);
    const double b = (opts.c - 1.0 + static_cast<double>(y.size())) / (opts.d + A);
    return std::min(b, kBeta0Cap);
}

IndexList top_indices(const RVector& score, int p) {
    IndexList idx(score.size());
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return score[a] > score[b]; });
    idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(std::max(p, 0))));
    return idx;
}

void offgrid_system(const SblState& state, const CVector& y, const Measurement1D& meas, OffgridAxis axis,
                    const IndexList& support, RMatrix& A, RVector& b) {
    const bool dop = axis == OffgridAxis::doppler;
    const CMatrix& D = dop ? meas.phi_dnu : meas.phi_dtau;
    // The other axis enters through its current offsets.
    CMatrix base = meas.phi;
    if (dop && meas.has_delay()) base += meas.phi_dtau * state.iota.cast<Complex>().asDiagonal();
    if (!dop && meas.has_doppler()) base += meas.phi_dnu * state.kappa.cast<Complex>().asDiagonal();

    const auto P = static_cast<Eigen::Index>(support.size());
    const CVector resid = y - base * state.mu;
    A.resize(P, P);
    b.resize(P);
    for (Eigen::Index i = 0; i < P; ++i) {
        const Eigen::Index g = support[i];
        const auto dg = D.col(g);
        for (Eigen::Index j = 0; j < P; ++j) {
            const Eigen::Index h = support[j];
            const Complex gram = dg.dot(D.col(h));  // d_g^H d_h
            A(i, j) = (gram * (std::conj(state.mu[g]) * state.mu[h] + state.sigma(h, g))).real();
        }
        const CVector target = std::conj(state.mu[g]) * resid - base * state.sigma.col(g);
        b[i] = dg.dot(target).real();
    }
}

RVector update_offgrid(const SblState& state, const CVector& y, const Measurement1D& meas, OffgridAxis axis) {
    const bool dop = axis == OffgridAxis::doppler;
    if (dop ? !meas.has_doppler() : !meas.has_delay()) return RVector::Zero(meas.cols());
    const double half = 0.5 * (dop ? meas.r_nu : meas.r_tau);
    const RVector& current = dop ? state.kappa : state.iota;

    const IndexList support = top_indices(state.alpha, sparsity_level(meas.rows(), meas.cols()));
    RMatrix A;
    RVector b;
    offgrid_system(state, y, meas, axis, support, A, b);

    return solve_offgrid_qp(A, b, support, current, half, meas.cols());
}

RVector solve_offgrid_qp(const RMatrix& A, const RVector& b, const IndexList& support, const RVector& current,
                         double half, Eigen::Index size) {
    const auto P = static_cast<Eigen::Index>(support.size());
    RVector k(P);
    const Eigen::JacobiSVD<RMatrix> svd(A);
    const RVector sv = svd.singularValues();
    const double smax = sv.size() ? sv[0] : 0.0;
    const double smin = sv.size() ? sv[sv.size() - 1] : 0.0;
    if (smax > 0.0 && smin > 0.0 && smax / smin <= 1e10) {
        k = A.partialPivLu().solve(b);
    } else {
        // One Gauss-Seidel sweep of the coordinate update.
        for (Eigen::Index i = 0; i < P; ++i) k[i] = current[support[i]];
        const double tiny = 1e-300 + 1e-14 * (P ? A.cwiseAbs().maxCoeff() : 0.0);
        for (Eigen::Index i = 0; i < P; ++i) {
            if (std::abs(A(i, i)) <= tiny) {
                k[i] = 0.0;
                continue;
            }
            const double off = A.row(i).dot(k) - A(i, i) * k[i];
            k[i] = std::clamp((b[i] - off) / A(i, i), -half, half);
        }
    }

    RVector out = RVector::Zero(size);
    for (Eigen::Index i = 0; i < P; ++i) {
        const double v = std::isfinite(k[i]) ? k[i] : 0.0;
        out[support[i]] = std::clamp(v, -half, half);
    }
    return out;
}

Estimate1D run_sbl_1d(const CVector& y, const Measurement1D& meas, const SblOptions& opts) {
    SblState s = init_state(y, meas, opts);
    const bool dop = opts.offgrid_enabled && meas.has_doppler();
    const bool del = opts.offgrid_enabled && meas.has_delay();

    bool converged = false;
    for (int t = 0; t < opts.t_max; ++t) {
        Posterior post = posterior_update(s, y, meas);
        s.mu = std::move(post.mu);
        s.sigma = std::move(post.sigma);

        const RVector alpha = update_alpha(s.mu, s.sigma, opts.rho).cwiseMax(kAlphaFloor);

        // Conditional maximisation in the fixed order alpha, kappa, iota,
        // beta0; each step sees the values refreshed before it. The trace
        // term of beta0 keeps the alpha that produced sigma.
        SblState next = s;
        next.alpha = alpha;
        if (dop) next.kappa = update_offgrid(next, y, meas, OffgridAxis::doppler);
        if (del) next.iota = update_offgrid(next, y, meas, OffgridAxis::delay);
        next.alpha = s.alpha;
        const double beta0 = update_beta0(next, y, meas, opts);
        const RVector kappa = next.kappa;
        const RVector iota = next.iota;

        const double change = (alpha - s.alpha).norm() / s.alpha.norm();
        s.alpha = alpha;
        s.kappa = kappa;
        s.iota = iota;
        s.beta0 = beta0;
        s.iter = t + 1;
        if (!opts.fixed_iterations && change <= opts.epsilon) {
            converged = true;
            break;
        }
    }

    const Posterior fin = posterior_update(s, y, meas);
    Estimate1D e;
    e.h_hat = fin.mu;
    e.kappa = s.kappa;
    e.iota = s.iota;
    e.k_nu_hat = meas.k_bar + s.kappa;
    e.l_tau_hat = meas.l_bar + s.iota;
    e.support = top_indices(fin.mu.cwiseAbs2(), sparsity_level(meas.rows(), meas.cols()));
    e.beta0 = s.beta0;
    e.iterations = s.iter;
    e.converged = converged;
    return e;
}

}  // namespace ddest
