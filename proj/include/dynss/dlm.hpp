#pragma once

// Linear-Gaussian state space model with scalar observations:
//
//   y_t     = f_t + F_t' theta_t + gamma_t u_t,        u_t ~ N(0,1)
//   theta_t = g_t + G_t theta_{t-1} + Gamma_t v_t,     v_t ~ N(0,I)
//
// with pre-sample state theta_0 ~ N(m0, V0). Arrays are 0-based: index i
// holds time t = i+1, so G[0]/Gamma[0]/g[0] propagate theta_0 into t=1.
//
// The regression model with time-varying scales runs on the scaled states:
// F_{j,t} = X_{j,t} sqrt(K_{j,t} tau_j^2), G = diag(phi),
// Gamma = diag(sqrt(1-phi^2)), m0 = 0, V0 = I; see build_conditional_dlm.

#include "dynss/dists.hpp"
#include "dynss/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

namespace dynss {

struct ConditionalDlm {
    int T = 0, q = 0;
    std::vector<double> f;               // observation offsets
    std::vector<Eigen::VectorXd> F;      // observation loadings
    std::vector<double> gamma;           // observation noise scales, >= 0
    std::vector<Eigen::VectorXd> g;      // state offsets
    std::vector<Eigen::MatrixXd> G;      // state transitions
    std::vector<Eigen::MatrixXd> Gamma;  // state noise factors
    std::vector<Eigen::MatrixXd> W;      // cached Gamma Gamma'; see finalize_noise()
    Eigen::VectorXd m0;
    Eigen::MatrixXd V0;

    // The filter consumes W rather than Gamma; anything assembling a dlm by
    // hand must call this (build_conditional_dlm does).
    void finalize_noise() {
        W.resize(Gamma.size());
        for (size_t i = 0; i < Gamma.size(); ++i) W[i] = Gamma[i] * Gamma[i].transpose();
    }

    void validate() const {
        if (T < 1 || q < 1) throw DomainError("ConditionalDlm: T and q must be positive");
        const size_t n = static_cast<size_t>(T);
        if (f.size() != n || F.size() != n || gamma.size() != n || g.size() != n ||
            G.size() != n || Gamma.size() != n || W.size() != n)
            throw DomainError("ConditionalDlm: field lengths must equal T (finalize_noise after assembly)");
        for (int t = 0; t < T; ++t) {
            if (F[t].size() != q || g[t].size() != q || G[t].rows() != q || G[t].cols() != q ||
                Gamma[t].rows() != q || Gamma[t].cols() != q)
                throw DomainError("ConditionalDlm: dimension mismatch at t=" + std::to_string(t + 1));
            if (!(gamma[t] >= 0.0) || !std::isfinite(gamma[t]))
                throw DomainError("ConditionalDlm: gamma_t must be finite and nonnegative");
        }
        if (m0.size() != q || V0.rows() != q || V0.cols() != q)
            throw DomainError("ConditionalDlm: initial moments must be q-dimensional");
        if ((V0 - V0.transpose()).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + V0.cwiseAbs().maxCoeff()))
            throw DomainError("ConditionalDlm: V0 must be symmetric");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(V0, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-10 * (1.0 + V0.trace()))
            throw DomainError("ConditionalDlm: V0 must be positive semidefinite");
    }
};

struct FilterStats {
    std::vector<Eigen::VectorXd> m;  // filtered means E(theta_t | y_{1:t})
    std::vector<Eigen::MatrixXd> V;  // filtered covariances
    std::vector<double> R;           // one-step predictive variances of y_t
    std::vector<double> loglik;      // log p(y_t | y_{1:t-1}) per step
    double total_loglik = 0.0;
};

struct StatePath {
    Eigen::MatrixXd theta;  // T x q
};

struct KalmanStepResult {
    Eigen::VectorXd m;
    Eigen::MatrixXd V;
    double R = 0.0;
    double e = 0.0;       // prediction error y_t - f_t - F' a_t
    double loglik = 0.0;  // log N(y_t; predictive mean, R)
};

// Moments of theta_t | y_{1:t-1} from those of theta_{t-1} | y_{1:t-1}.
inline void kalman_predict(const Eigen::VectorXd& m_prev, const Eigen::MatrixXd& V_prev,
                           const Eigen::MatrixXd& G, const Eigen::VectorXd& g,
                           const Eigen::MatrixXd& W, Eigen::VectorXd& a, Eigen::MatrixXd& P) {
    a = g + G * m_prev;
    P = G * V_prev * G.transpose() + W;
    P = 0.5 * (P + P.transpose()).eval();
}

// Absorb y_t into the predicted moments. t is 1-based and only used for
// error messages.
inline KalmanStepResult kalman_absorb(const Eigen::VectorXd& a, const Eigen::MatrixXd& P,
                                      double y, const Eigen::VectorXd& F, double f, double gamma,
                                      int t) {
    KalmanStepResult out;
    const Eigen::VectorXd PF = P * F;
    out.R = F.dot(PF) + gamma * gamma;
    if (!(out.R > 0.0) || !std::isfinite(out.R))
        throw NumericalError("kalman_filter: degenerate predictive variance at t=" + std::to_string(t));
    out.e = y - f - F.dot(a);
    const Eigen::VectorXd J = PF / out.R;
    out.m = a + J * out.e;
    out.V = P - out.R * (J * J.transpose());
    out.V = 0.5 * (out.V + out.V.transpose()).eval();
    out.loglik = -0.5 * (std::log(2.0 * pi * out.R) + out.e * out.e / out.R);
    return out;
}

inline KalmanStepResult kalman_step(const Eigen::VectorXd& m_prev, const Eigen::MatrixXd& V_prev,
                                    double y, const Eigen::VectorXd& F, double f, double gamma,
                                    const Eigen::MatrixXd& G, const Eigen::VectorXd& g,
                                    const Eigen::MatrixXd& W, int t) {
    Eigen::VectorXd a;
    Eigen::MatrixXd P;
    kalman_predict(m_prev, V_prev, G, g, W, a, P);
    return kalman_absorb(a, P, y, F, f, gamma, t);
}

inline FilterStats kalman_filter(const ConditionalDlm& dlm, const Eigen::VectorXd& y) {
    if (y.size() != dlm.T) throw DomainError("kalman_filter: y length must equal T");
    const size_t n = static_cast<size_t>(dlm.T);
    if (dlm.W.size() != n)
        throw DomainError("kalman_filter: dlm missing noise covariances (finalize_noise)");
    if (dlm.F.size() != n || dlm.f.size() != n || dlm.gamma.size() != n || dlm.g.size() != n ||
        dlm.G.size() != n)
        throw DomainError("kalman_filter: dlm field lengths must equal T");
    FilterStats s;
    s.m.resize(dlm.T);
    s.V.resize(dlm.T);
    s.R.resize(dlm.T);
    s.loglik.resize(dlm.T);
    const Eigen::VectorXd* m_prev = &dlm.m0;
    const Eigen::MatrixXd* V_prev = &dlm.V0;
    for (int t = 0; t < dlm.T; ++t) {
        KalmanStepResult st = kalman_step(*m_prev, *V_prev, y[t], dlm.F[t], dlm.f[t],
                                          dlm.gamma[t], dlm.G[t], dlm.g[t], dlm.W[t], t + 1);
        s.m[t] = std::move(st.m);
        s.V[t] = std::move(st.V);
        s.R[t] = st.R;
        s.loglik[t] = st.loglik;
        s.total_loglik += st.loglik;
        m_prev = &s.m[t];
        V_prev = &s.V[t];
    }
    return s;
}

// Rank-revealing square root of a symmetric PSD matrix: returns a q x rank
// factor C with C C' = M up to dropped eigenvalues. Eigenvalues below
// max(1e-12 * trace, abs_floor) are treated as exact zeros, so a matrix that
// is zero up to rounding noise yields an empty factor.
inline Eigen::MatrixXd cov_sqrt_factor(const Eigen::MatrixXd& M, double abs_floor = 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
    if (es.info() != Eigen::Success)
        throw NumericalError("cov_sqrt_factor: eigendecomposition failed");
    const Eigen::VectorXd& lam = es.eigenvalues();
    const double cutoff = std::max(1e-12 * std::max(M.trace(), 0.0), abs_floor);
    int rank = 0;
    for (int i = 0; i < lam.size(); ++i)
        if (lam[i] > cutoff) ++rank;
    Eigen::MatrixXd C(M.rows(), rank);
    int k = 0;
    for (int i = 0; i < lam.size(); ++i)
        if (lam[i] > cutoff) C.col(k++) = std::sqrt(lam[i]) * es.eigenvectors().col(i);
    return C;
}

// Draw from N(mean, cov). Cholesky when cov is comfortably PD, otherwise a
// reduced-rank eigenvalue factor; abs_floor sets the scale below which
// eigenvalues count as zero (pass ~1e-14 * problem scale for conditionals
// that can collapse to a point).
inline Eigen::VectorXd sample_mvn(Rng& rng, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                  double abs_floor = 0.0) {
    const int q = static_cast<int>(mean.size());
    if (cov.trace() <= abs_floor * q) return mean;
    Eigen::LLT<Eigen::MatrixXd> llt;
    if (cov.diagonal().minCoeff() > abs_floor) {
        llt.compute(cov);
        if (llt.info() == Eigen::Success) {
            Eigen::VectorXd z(q);
            for (int i = 0; i < q; ++i) z[i] = rng.normal();
            return mean + llt.matrixL() * z;
        }
    }
    const Eigen::MatrixXd C = cov_sqrt_factor(cov, abs_floor);
    Eigen::VectorXd z(C.cols());
    for (int i = 0; i < C.cols(); ++i) z[i] = rng.normal();
    return mean + C * z;
}

namespace detail {

// Pseudo-inverse solve P X = B for symmetric PSD P, used when the one-step
// state covariance is singular (e.g. degenerate transition noise).
inline Eigen::MatrixXd psd_pinv_apply(const Eigen::MatrixXd& P, const Eigen::MatrixXd& B) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P);
    if (es.info() != Eigen::Success) throw NumericalError("psd_pinv_apply: eigendecomposition failed");
    const Eigen::VectorXd& lam = es.eigenvalues();
    const double cutoff = std::max(1e-12 * std::max(P.trace(), 0.0), 1e-300);
    Eigen::MatrixXd proj = es.eigenvectors().transpose() * B;
    for (int i = 0; i < lam.size(); ++i) {
        if (lam[i] > cutoff)
            proj.row(i) /= lam[i];
        else
            proj.row(i).setZero();
    }
    return es.eigenvectors() * proj;
}

} // namespace detail

// One joint draw of theta_{1:T} from p(theta | y, dlm): sample theta_T from
// the filtered law, then walk backward through the smoothing conditionals
// theta_t | theta_{t+1}, y_{1:t}. stats must come from kalman_filter(dlm, y).
inline StatePath ffbs_sample(const ConditionalDlm& dlm, const Eigen::VectorXd& y,
                             const FilterStats& stats, Rng& rng) {
    if (y.size() != dlm.T || stats.m.size() != static_cast<size_t>(dlm.T))
        throw DomainError("ffbs_sample: dimension mismatch");
    StatePath path;
    path.theta.resize(dlm.T, dlm.q);
    const int T = dlm.T;
    Eigen::VectorXd th = sample_mvn(rng, stats.m[T - 1], stats.V[T - 1]);
    path.theta.row(T - 1) = th.transpose();
    for (int t = T - 2; t >= 0; --t) {
        const Eigen::MatrixXd& G1 = dlm.G[t + 1];
        const Eigen::VectorXd& g1 = dlm.g[t + 1];
        const Eigen::MatrixXd& V = stats.V[t];
        Eigen::MatrixXd P = G1 * V * G1.transpose() + dlm.W[t + 1];
        P = 0.5 * (P + P.transpose()).eval();
        const Eigen::MatrixXd GV = G1 * V;  // rows of P-solve target
        Eigen::MatrixXd PinvGV;
        Eigen::LLT<Eigen::MatrixXd> llt(P);
        if (llt.info() == Eigen::Success && P.diagonal().minCoeff() > 1e-13 * (1.0 + P.trace()))
            PinvGV = llt.solve(GV);
        else
            PinvGV = detail::psd_pinv_apply(P, GV);
        const Eigen::VectorXd resid = th - g1 - G1 * stats.m[t];
        const Eigen::VectorXd mean = stats.m[t] + PinvGV.transpose() * resid;
        Eigen::MatrixXd cov = V - GV.transpose() * PinvGV;
        cov = 0.5 * (cov + cov.transpose()).eval();
        th = sample_mvn(rng, mean, cov, 1e-14 * (1.0 + V.trace()));
        path.theta.row(t) = th.transpose();
    }
    return path;
}

// DLM for the scaled coefficient states given a regime matrix K (entries are
// the variance multipliers: kappa for spike, 1 for slab), per-coefficient
// scales tau2, AR parameters phi, and the observation noise scale sigma.
inline ConditionalDlm build_conditional_dlm(const Eigen::MatrixXd& X, const Eigen::MatrixXd& K,
                                            const Eigen::VectorXd& tau2, const Eigen::VectorXd& phi,
                                            double sigma) {
    const int T = static_cast<int>(X.rows()), q = static_cast<int>(X.cols());
    if (T < 1 || q < 1) throw DomainError("build_conditional_dlm: empty design");
    if (K.rows() != T || K.cols() != q) throw DomainError("build_conditional_dlm: K shape must match X");
    if (tau2.size() != q || phi.size() != q) throw DomainError("build_conditional_dlm: parameter length must be q");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("build_conditional_dlm: sigma must be finite and nonnegative");
    for (int j = 0; j < q; ++j) {
        if (!(tau2[j] > 0.0)) throw DomainError("build_conditional_dlm: tau2 must be positive");
        if (!(phi[j] > 0.0 && phi[j] < 1.0)) throw DomainError("build_conditional_dlm: phi must lie in (0,1)");
    }
    if (!(K.minCoeff() > 0.0)) throw DomainError("build_conditional_dlm: regime multipliers must be positive");

    ConditionalDlm dlm;
    dlm.T = T;
    dlm.q = q;
    Eigen::MatrixXd G = phi.asDiagonal();
    Eigen::MatrixXd Gam = phi.unaryExpr([](double p) { return std::sqrt(1.0 - p * p); }).matrix().asDiagonal();
    dlm.f.assign(T, 0.0);
    dlm.gamma.assign(T, sigma);
    dlm.g.assign(T, Eigen::VectorXd::Zero(q));
    dlm.G.assign(T, G);
    dlm.Gamma.assign(T, Gam);
    dlm.F.resize(T);
    for (int t = 0; t < T; ++t) {
        dlm.F[t].resize(q);
        for (int j = 0; j < q; ++j) dlm.F[t][j] = X(t, j) * std::sqrt(K(t, j) * tau2[j]);
    }
    dlm.m0 = Eigen::VectorXd::Zero(q);
    // AR(1) propagation of N(0,I) through G, Gamma is again N(0,I), so the
    // first scaled state has exactly the standard-normal prior.
    dlm.V0 = Eigen::MatrixXd::Identity(q, q);
    dlm.finalize_noise();
    return dlm;
}

} // namespace dynss
