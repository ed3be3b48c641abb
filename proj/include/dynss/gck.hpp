#pragma once

// Sampler for a binary Markov regime chain in a conditionally Gaussian
// state-space model, without conditioning on the states. For each time t the
// two candidate regimes are scored by
//
//   p(K_t | y, K_{s != t}) ∝ p(y_t | y_{1:t-1}, K_{1:t})
//                            p(y_{t+1:n} | y_{1:t}, K_{1:n})
//                            p(K_t | K_{t-1}) p(K_{t+1} | K_t)
//
// where the future term comes from backward moment recursions (Omega_t,
// mu_t) satisfying p(y_{t+1:n} | theta_t, K) ∝ exp{-1/2 (theta' Omega_t
// theta - 2 mu_t' theta)}. Omega_t and mu_t depend only on K_{t+1:n}, so one
// backward pass per sweep is exact: a left-to-right sweep never changes the
// entries those statistics condition on.

#include "dynss/dists.hpp"
#include "dynss/dlm.hpp"
#include "dynss/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace dynss {

// One-step quantities for the transition + observation at a given time,
// written so that y_{t+1} enters p(y_{t+1:n} | theta_t, K) only through the
// affine map theta_{t+1} = a + A theta_t + B y_{t+1} + C xi.
struct StepMatrices {
    Eigen::VectorXd a;
    Eigen::MatrixXd A;
    Eigen::VectorXd B;
    Eigen::MatrixXd C;  // q x rank factor with C C' = M
    Eigen::MatrixXd M;  // residual state covariance given y_{t+1}
    double r = 0.0;     // Var(y_{t+1} | theta_t, K)
};

// idx is the 0-based time of the step (time idx+1 in 1-based terms).
inline StepMatrices compute_step_matrices(const ConditionalDlm& dlm, int idx) {
    const Eigen::VectorXd& F = dlm.F[idx];
    const Eigen::MatrixXd& G = dlm.G[idx];
    const Eigen::MatrixXd& W = dlm.W[idx];
    StepMatrices s;
    const Eigen::VectorXd WF = W * F;
    s.r = F.dot(WF) + dlm.gamma[idx] * dlm.gamma[idx];
    if (!(s.r > 0.0) || !std::isfinite(s.r))
        throw NumericalError("compute_step_matrices: degenerate one-step variance at t=" +
                             std::to_string(idx + 1));
    s.B = WF / s.r;
    s.A = G - s.B * (F.transpose() * G);
    s.a = dlm.g[idx] - s.B * (F.dot(dlm.g[idx]) + dlm.f[idx]);
    s.M = W - s.r * (s.B * s.B.transpose());
    s.M = 0.5 * (s.M + s.M.transpose()).eval();
    s.C = cov_sqrt_factor(s.M);
    return s;
}

struct BackwardStats {
    std::vector<Eigen::MatrixXd> Omega;  // Omega[i] for time i+1; Omega[T-1] = 0
    std::vector<Eigen::VectorXd> mu;
};

inline BackwardStats backward_recursion(const ConditionalDlm& dlm, const Eigen::VectorXd& y) {
    if (y.size() != dlm.T) throw DomainError("backward_recursion: y length must equal T");
    const int T = dlm.T, q = dlm.q;
    BackwardStats bs;
    bs.Omega.assign(T, Eigen::MatrixXd::Zero(q, q));
    bs.mu.assign(T, Eigen::VectorXd::Zero(q));
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(q, q);
    for (int t = T - 2; t >= 0; --t) {
        // all step quantities live at time t+1
        const int s = t + 1;
        const Eigen::VectorXd& F = dlm.F[s];
        const Eigen::MatrixXd& G = dlm.G[s];
        const Eigen::MatrixXd& W = dlm.W[s];
        const Eigen::VectorXd WF = W * F;
        const double r = F.dot(WF) + dlm.gamma[s] * dlm.gamma[s];
        if (!(r > 0.0) || !std::isfinite(r))
            throw NumericalError("backward_recursion: degenerate one-step variance at t=" +
                                 std::to_string(s + 1));
        const Eigen::VectorXd B = WF / r;
        const Eigen::MatrixXd A = G - B * (F.transpose() * G);
        const Eigen::VectorXd a = dlm.g[s] - B * (F.dot(dlm.g[s]) + dlm.f[s]);
        Eigen::MatrixXd M = W - r * (B * B.transpose());
        M = 0.5 * (M + M.transpose()).eval();

        const Eigen::MatrixXd& Om = bs.Omega[s];
        const Eigen::VectorXd& mu = bs.mu[s];
        // N = (I + M Omega)^{-1} M is symmetric; eigenvalues of I + M Omega
        // are >= 1 so the solve cannot blow up
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(I + M * Om);
        Eigen::MatrixXd N = lu.solve(M);
        N = 0.5 * (N + N.transpose()).eval();
        const Eigen::VectorXd w = mu - Om * (a + B * y[s]);
        const Eigen::VectorXd GF = G.transpose() * F;
        Eigen::MatrixXd Ot = A.transpose() * (Om - Om * N * Om) * A + GF * GF.transpose() / r;
        bs.Omega[t] = 0.5 * (Ot + Ot.transpose());
        bs.mu[t] = A.transpose() * (w - Om * (N * w)) + GF * (y[s] - dlm.f[s] - F.dot(dlm.g[s])) / r;
        if (!bs.Omega[t].allFinite() || !bs.mu[t].allFinite())
            throw NumericalError("backward_recursion: non-finite statistics at t=" + std::to_string(t + 1));
    }
    return bs;
}

// log p(y_{t+1:n} | y_{1:t}, K) up to a constant free of K_{1:t}, from the
// filtered moments (m, V) at t and the backward statistics (Omega, mu) at t:
//   -1/2 log det(Omega V + I)
//   -1/2 (m'Omega m - 2 mu'm - u' V (Omega V + I)^{-1} u),  u = mu - Omega m.
inline double log_predictive_factor(const Eigen::VectorXd& m, const Eigen::MatrixXd& V,
                                    const Eigen::MatrixXd& Omega, const Eigen::VectorXd& mu,
                                    int t_for_error = -1) {
    const int q = static_cast<int>(m.size());
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Omega * V + Eigen::MatrixXd::Identity(q, q));
    double logdet = 0.0;
    for (int i = 0; i < q; ++i) logdet += std::log(std::abs(lu.matrixLU()(i, i)));
    const Eigen::VectorXd u = mu - Omega * m;
    const double quad = u.dot(V * lu.solve(u));
    const double out = -0.5 * logdet - 0.5 * (m.dot(Omega * m) - 2.0 * mu.dot(m) - quad);
    if (!std::isfinite(out))
        throw NumericalError("log_predictive_factor: non-finite value" +
                             (t_for_error > 0 ? " at t=" + std::to_string(t_for_error) : std::string()));
    return out;
}

// Reference route through an explicit rank factor C of V (V = C C'): the
// determinant and quadratic term collapse onto the rank(V)-dimensional
// subspace. Kept for cross-checking the production route.
inline double log_predictive_factor_factored(const Eigen::VectorXd& m, const Eigen::MatrixXd& C,
                                             const Eigen::MatrixXd& Omega, const Eigen::VectorXd& mu) {
    const int rank = static_cast<int>(C.cols());
    const Eigen::VectorXd h = C.transpose() * (mu - Omega * m);
    const Eigen::MatrixXd D =
        C.transpose() * Omega * C + Eigen::MatrixXd::Identity(rank, rank);
    Eigen::LLT<Eigen::MatrixXd> llt(D);
    if (llt.info() != Eigen::Success)
        throw NumericalError("log_predictive_factor_factored: factor matrix not positive definite");
    double logdet = 0.0;
    for (int i = 0; i < rank; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    const double quad = h.dot(llt.solve(h));
    return -0.5 * logdet - 0.5 * (m.dot(Omega * m) - 2.0 * mu.dot(m) - quad);
}

struct RegimePrior {
    double initial_slab = 0.5;  // P(K_1 = slab)
    Eigen::Matrix2d trans;      // trans(from, to); index 0 = spike, 1 = slab

    void validate() const {
        if (!(initial_slab >= 0.0 && initial_slab <= 1.0))
            throw DomainError("RegimePrior: initial slab probability outside [0,1]");
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j)
                if (!(trans(i, j) >= 0.0 && trans(i, j) <= 1.0))
                    throw DomainError("RegimePrior: transition probability outside [0,1]");
            if (std::abs(trans.row(i).sum() - 1.0) > 1e-12)
                throw DomainError("RegimePrior: transition rows must sum to 1");
        }
    }
};

enum class SweepMode { Gck, Naive };

struct SweepOptions {
    SweepMode mode = SweepMode::Gck;
    // evaluate conditional probabilities but keep the incoming path; used to
    // compare against enumeration without perturbing state
    bool freeze_draws = false;
    std::vector<double>* record_slab_prob = nullptr;  // filled with p(slab | rest) per t
};

namespace detail {

inline int regime_index(double v, double spike_value) {
    if (v == 1.0) return 1;
    if (v == spike_value) return 0;
    throw DomainError("sample_regime_path: regime entry is neither spike value nor 1");
}

inline double log_prob(double p) {
    return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
}

} // namespace detail

// One Gibbs sweep over column j of the regime matrix K (entries spike_value
// or 1), holding all other columns fixed. K is updated in place; returns the
// number of entries that changed. dlm_builder must be a pure function of K.
//
// SweepMode::Gck assumes the regime enters the model only through the
// observation loadings, so candidate scoring swaps one loading entry; the
// Naive mode re-filters the whole future through dlm_builder and serves as
// the structural reference.
inline int sample_regime_path(
    const std::function<ConditionalDlm(const Eigen::MatrixXd&)>& dlm_builder,
    const Eigen::VectorXd& y, Eigen::MatrixXd& K, int j, const RegimePrior& prior,
    double spike_value, Rng& rng, const SweepOptions& opts = {}) {
    if (j < 0 || j >= K.cols()) throw DomainError("sample_regime_path: column index out of range");
    if (!(spike_value > 0.0 && spike_value < 1.0))
        throw DomainError("sample_regime_path: spike value must lie in (0,1)");
    prior.validate();
    const int T = static_cast<int>(K.rows());
    if (y.size() != T) throw DomainError("sample_regime_path: y length must match K rows");

    const double cand_val[2] = {spike_value, 1.0};
    ConditionalDlm dlm = dlm_builder(K);
    BackwardStats bs;
    std::vector<double> load[2];  // column-j loading under each candidate regime
    if (opts.mode == SweepMode::Gck) {
        bs = backward_recursion(dlm, y);
        Eigen::MatrixXd Kc = K;
        for (int c = 0; c < 2; ++c) {
            Kc.col(j).setConstant(cand_val[c]);
            ConditionalDlm d = dlm_builder(Kc);
            load[c].resize(T);
            for (int t = 0; t < T; ++t) load[c][t] = d.F[t][j];
        }
    }
    if (opts.record_slab_prob) opts.record_slab_prob->assign(T, 0.0);

    int flips = 0;
    Eigen::VectorXd m = dlm.m0;
    Eigen::MatrixXd V = dlm.V0;
    Eigen::VectorXd a;
    Eigen::MatrixXd P;
    KalmanStepResult cand[2];
    for (int t = 0; t < T; ++t) {
        double lw[2];
        if (opts.mode == SweepMode::Gck) {
            kalman_predict(m, V, dlm.G[t], dlm.g[t], dlm.W[t], a, P);
            Eigen::VectorXd Fc = dlm.F[t];
            for (int c = 0; c < 2; ++c) {
                Fc[j] = load[c][t];
                cand[c] = kalman_absorb(a, P, y[t], Fc, dlm.f[t], dlm.gamma[t], t + 1);
                lw[c] = cand[c].loglik;
                if (t < T - 1)
                    lw[c] += log_predictive_factor(cand[c].m, cand[c].V, bs.Omega[t], bs.mu[t], t + 1);
            }
        } else {
            const double incoming = K(t, j);
            for (int c = 0; c < 2; ++c) {
                K(t, j) = cand_val[c];
                ConditionalDlm d = dlm_builder(K);
                cand[c] = kalman_step(m, V, y[t], d.F[t], d.f[t], d.gamma[t], d.G[t], d.g[t],
                                      d.W[t], t + 1);
                lw[c] = cand[c].loglik;
                const Eigen::VectorXd* mp = &cand[c].m;
                const Eigen::MatrixXd* Vp = &cand[c].V;
                KalmanStepResult fut;
                for (int s = t + 1; s < T; ++s) {
                    fut = kalman_step(*mp, *Vp, y[s], d.F[s], d.f[s], d.gamma[s], d.G[s], d.g[s],
                                      d.W[s], s + 1);
                    lw[c] += fut.loglik;
                    mp = &fut.m;
                    Vp = &fut.V;
                }
            }
            K(t, j) = incoming;
        }
        // Markov prior factors touching K_t
        for (int c = 0; c < 2; ++c) {
            if (t == 0)
                lw[c] += detail::log_prob(c == 1 ? prior.initial_slab : 1.0 - prior.initial_slab);
            else
                lw[c] += detail::log_prob(prior.trans(detail::regime_index(K(t - 1, j), spike_value), c));
            if (t < T - 1)
                lw[c] += detail::log_prob(prior.trans(c, detail::regime_index(K(t + 1, j), spike_value)));
        }
        if (!std::isfinite(lw[0]) && !std::isfinite(lw[1]))
            throw NumericalError("sample_regime_path: zero posterior mass at t=" + std::to_string(t + 1));
        const double p_slab =
            std::isfinite(lw[1]) ? 1.0 / (1.0 + std::exp(lw[0] - lw[1])) : 0.0;
        if (opts.record_slab_prob) (*opts.record_slab_prob)[t] = p_slab;

        int pick;
        if (opts.freeze_draws)
            pick = detail::regime_index(K(t, j), spike_value);
        else
            pick = rng.uniform() < p_slab ? 1 : 0;
        if (K(t, j) != cand_val[pick]) {
            K(t, j) = cand_val[pick];
            ++flips;
        }
        m = std::move(cand[pick].m);
        V = std::move(cand[pick].V);
    }
    return flips;
}

} // namespace dynss
