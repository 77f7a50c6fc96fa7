// SPDX-License-Identifier: Apache-2.0
#include "ddest/sbl2d.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "ddest/kernel.hpp"

namespace ddest {

Measurement2D build_measurement_2d(const VirtualGrid& grid, const OtfsConfig& cfg, Complex pilot_amp) {
    cfg.validate();
    Measurement2D m;
    m.r_nu = grid.r_nu;
    m.r_tau = grid.r_tau;
    m.k_bar = grid.k_bar;
    m.l_bar = grid.l_bar;
    m.phi_L.resize(cfg.n_t(), grid.N_nu);
    m.phi_L_dnu.resize(cfg.n_t(), grid.N_nu);
    m.phi_R.resize(cfg.m_t(), grid.M_tau);
    m.phi_R_dtau.resize(cfg.m_t(), grid.M_tau);
    for (int k2 = 0; k2 < grid.N_nu; ++k2) {
        m.phi_L.col(k2) = pilot_amp * kernel_vector(-cfg.k_max, cfg.n_t(), grid.k_bar[k2], cfg.N);
        m.phi_L_dnu.col(k2) = pilot_amp * kernel_derivative_vector(-cfg.k_max, cfg.n_t(), grid.k_bar[k2], cfg.N);
    }
    for (int l2 = 0; l2 < grid.M_tau; ++l2) {
        m.phi_R.col(l2) = kernel_vector(0, cfg.m_t(), grid.l_bar[l2], cfg.M);
        m.phi_R_dtau.col(l2) = kernel_derivative_vector(0, cfg.m_t(), grid.l_bar[l2], cfg.M);
    }
    return m;
}

CMatrix assemble_left(const Measurement2D& m, const RVector& kappa_nu) {
    if (kappa_nu.size() != m.phi_L.cols()) throw std::invalid_argument("assemble_left: kappa length mismatch");
    return m.phi_L + m.phi_L_dnu * kappa_nu.cast<Complex>().asDiagonal();
}

CMatrix assemble_right(const Measurement2D& m, const RVector& iota_tau) {
    if (iota_tau.size() != m.phi_R.cols()) throw std::invalid_argument("assemble_right: iota length mismatch");
    return m.phi_R + m.phi_R_dtau * iota_tau.cast<Complex>().asDiagonal();
}

namespace {

struct MmvPosterior {
    CMatrix mu;
    CMatrix sigma;
};

MmvPosterior mmv_posterior(const CMatrix& phi, const RVector& alpha, double beta0, const CMatrix& Y) {
    const CMatrix phi_l = phi * alpha.cast<Complex>().asDiagonal();
    CMatrix C = phi_l * phi.adjoint();
    C.diagonal().array() += 1.0 / beta0;
    Eigen::LLT<CMatrix> llt(C);
    double jitter = 1e-12 * std::max(1.0, C.diagonal().real().cwiseAbs().maxCoeff());
    for (int attempt = 0; attempt < 12 && llt.info() != Eigen::Success; ++attempt) {
        C.diagonal().array() += jitter;
        llt.compute(C);
        jitter *= 10.0;
    }
    MmvPosterior p;
    p.mu = phi_l.adjoint() * llt.solve(Y);
    p.sigma = -(phi_l.adjoint() * llt.solve(phi_l));
    p.sigma.diagonal() += alpha.cast<Complex>();
    p.sigma = 0.5 * (p.sigma + p.sigma.adjoint()).eval();
    return p;
}

int mmv_sparsity(const Measurement2D& m) {
    const auto rows = m.phi_L.rows() * m.phi_R.rows();
    const auto cols = m.phi_L.cols() * m.phi_R.cols();
    return std::min<int>(sparsity_level(rows, cols), static_cast<int>(m.phi_L.cols()));
}

}  // namespace

MmvState run_mmv_sbl(const CMatrix& Y_t, const Measurement2D& meas, const SblOptions& opts) {
    opts.validate();
    if (Y_t.rows() != meas.phi_L.rows() || Y_t.cols() != meas.phi_R.rows() || Y_t.size() == 0) {
        throw std::invalid_argument("run_mmv_sbl: observation does not match the dictionary");
    }
    const Eigen::Index Nv = meas.phi_L.cols();
    const auto L = static_cast<double>(Y_t.cols());  // snapshots M_T
    const double rho = opts.rho / L;
    const double total = static_cast<double>(Y_t.size());

    MmvState s;
    s.kappa_nu = RVector::Zero(Nv);
    s.alpha_nu = ((meas.phi_L.adjoint() * Y_t).cwiseAbs().rowwise().sum() / L).cwiseMax(kAlphaFloor);
    const double energy = Y_t.squaredNorm();
    if (opts.beta0_init > 0.0) {
        s.beta0 = std::min(opts.beta0_init, kBeta0Cap);
    } else if (energy > 0.0) {
        s.beta0 = std::min(opts.sigma2_init_divisor * total / energy, kBeta0Cap);
    } else {
        s.beta0 = kBeta0Cap;
    }

    const int p_hat = mmv_sparsity(meas);
    const double half = 0.5 * meas.r_nu;
    for (int t = 0; t < opts.t_max; ++t) {
        const CMatrix phi = assemble_left(meas, s.kappa_nu);
        MmvPosterior post = mmv_posterior(phi, s.alpha_nu, s.beta0, Y_t);

        RVector alpha(Nv);
        for (Eigen::Index g = 0; g < Nv; ++g) {
            const double avg = post.mu.row(g).squaredNorm() / L + std::max(post.sigma(g, g).real(), 0.0);
            alpha[g] = std::max(2.0 * avg / (std::sqrt(1.0 + 4.0 * rho * avg) + 1.0), kAlphaFloor);
        }

        RVector kappa = s.kappa_nu;
        if (opts.offgrid_enabled) {
            // Snapshot-averaged quadratic program over the Doppler offsets.
            const IndexList support = top_indices(alpha, p_hat);
            const auto P = static_cast<Eigen::Index>(support.size());
            const CMatrix& D = meas.phi_L_dnu;
            const CMatrix resid = Y_t - meas.phi_L * post.mu;
            RMatrix A(P, P);
            RVector b(P);
            for (Eigen::Index i = 0; i < P; ++i) {
                const Eigen::Index g = support[i];
                const auto dg = D.col(g);
                for (Eigen::Index j = 0; j < P; ++j) {
                    const Eigen::Index h = support[j];
                    // (1/L) sum_l conj(mu_gl) mu_hl
                    const Complex corr = post.mu.row(g).dot(post.mu.row(h)) / L;
                    A(i, j) = (dg.dot(D.col(h)) * (corr + post.sigma(h, g))).real();
                }
                const CVector weighted = resid * post.mu.row(g).adjoint() / L;
                const CVector target = weighted - meas.phi_L * post.sigma.col(g);
                b[i] = dg.dot(target).real();
            }
            kappa = solve_offgrid_qp(A, b, support, s.kappa_nu, half, Nv);
        }

        // Same order as the 1D loop: the residual sees the refreshed offsets.
        double A_beta = (Y_t - (opts.offgrid_enabled ? assemble_left(meas, kappa) : phi) * post.mu).squaredNorm();
        double trace = 0.0;
        for (Eigen::Index g = 0; g < Nv; ++g) trace += 1.0 - std::max(post.sigma(g, g).real(), 0.0) / s.alpha_nu[g];
        A_beta = std::max(A_beta + L * trace / s.beta0, 0.0);
        const double beta0 = std::min((opts.c - 1.0 + total) / (opts.d + A_beta), kBeta0Cap);

        const double change = (alpha - s.alpha_nu).norm() / s.alpha_nu.norm();
        s.mu_cols = std::move(post.mu);
        s.sigma_common = std::move(post.sigma);
        s.alpha_nu = alpha;
        s.kappa_nu = kappa;
        s.beta0 = beta0;
        s.iter = t + 1;
        if (!opts.fixed_iterations && change <= opts.epsilon) {
            s.converged = true;
            break;
        }
    }

    MmvPosterior fin = mmv_posterior(assemble_left(meas, s.kappa_nu), s.alpha_nu, s.beta0, Y_t);
    s.mu_cols = std::move(fin.mu);
    s.sigma_common = std::move(fin.sigma);
    return s;
}

Estimate2D run_sbl_2d(const CMatrix& Y_t, const Measurement2D& meas, const Sbl2dOptions& opts) {
    const MmvState mmv = run_mmv_sbl(Y_t, meas, opts.sbl);
    const Eigen::Index Nv = meas.phi_L.cols();
    const Eigen::Index Mt = meas.phi_R.cols();

    Measurement1D row_meas;
    row_meas.phi = meas.phi_R;
    row_meas.phi_dtau = meas.phi_R_dtau;
    row_meas.phi_dnu.resize(meas.phi_R.rows(), 0);
    row_meas.k_bar = RVector::Zero(Mt);
    row_meas.l_bar = meas.l_bar;
    row_meas.r_nu = meas.r_nu;
    row_meas.r_tau = meas.r_tau;

    SblOptions row_opts = opts.sbl;
    row_opts.beta0_init = mmv.beta0;

    Estimate2D e;
    e.h_mat = CMatrix::Zero(Nv, Mt);
    e.iota_rows = RMatrix::Zero(Nv, Mt);
    e.kappa_nu = mmv.kappa_nu;
    e.k_nu_hat = meas.k_bar + mmv.kappa_nu;
    e.mmv_iterations = mmv.iter;
    e.rows_solved = top_indices(mmv.alpha_nu, mmv_sparsity(meas));

    const auto solve_row = [&](std::size_t i) {
        const Eigen::Index k = e.rows_solved[i];
        const CVector d = mmv.mu_cols.row(k).transpose();
        const Estimate1D r = run_sbl_1d(d, row_meas, row_opts);
        e.h_mat.row(k) = r.h_hat.transpose();
        e.iota_rows.row(k) = r.iota.transpose();
    };

    const std::size_t n_rows = e.rows_solved.size();
    const auto workers = static_cast<std::size_t>(std::clamp<long>(opts.threads, 1, static_cast<long>(std::max<std::size_t>(n_rows, 1))));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n_rows; ++i) solve_row(i);
    } else {
        // Each row writes only its own slice of h_mat / iota_rows.
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < n_rows; i += workers) solve_row(i);
            });
        }
        for (auto& th : pool) th.join();
    }

    e.l_tau_rows = e.iota_rows.rowwise() + meas.l_bar.transpose();
    e.l_tau_hat = meas.l_bar;
    for (Eigen::Index l = 0; l < Mt; ++l) {
        Eigen::Index best = 0;
        const double peak = e.h_mat.col(l).cwiseAbs().maxCoeff(&best);
        if (peak > 0.0) e.l_tau_hat[l] += e.iota_rows(best, l);
    }
    return e;
}

Estimate2D run_sbl_2d(const CMatrix& Y_t, const VirtualGrid& grid, const OtfsConfig& cfg, const Sbl2dOptions& opts) {
    return run_sbl_2d(Y_t, build_measurement_2d(grid, cfg, cfg.pilot_amplitude()), opts);
}

}  // namespace ddest
