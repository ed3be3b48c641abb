#pragma once

// Random small state-space systems in general position, shared by the
// filter/sampler test suites.

#include "dynss/dlm.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace testsupport {

inline Eigen::MatrixXd random_psd(dynss::Rng& rng, int q, double jitter) {
    Eigen::MatrixXd A(q, q);
    for (int i = 0; i < q; ++i)
        for (int j = 0; j < q; ++j) A(i, j) = rng.normal() / std::sqrt(static_cast<double>(q));
    return A * A.transpose() + jitter * Eigen::MatrixXd::Identity(q, q);
}

inline dynss::ConditionalDlm random_dlm(dynss::Rng& rng, int T, int q) {
    dynss::ConditionalDlm dlm;
    dlm.T = T;
    dlm.q = q;
    dlm.f.resize(T);
    dlm.gamma.resize(T);
    dlm.F.resize(T);
    dlm.g.resize(T);
    dlm.G.resize(T);
    dlm.Gamma.resize(T);
    for (int t = 0; t < T; ++t) {
        dlm.f[t] = 0.3 * rng.normal();
        dlm.gamma[t] = 0.3 + rng.uniform();
        dlm.F[t] = Eigen::VectorXd::NullaryExpr(q, [&](Eigen::Index) { return rng.normal(); });
        dlm.g[t] = Eigen::VectorXd::NullaryExpr(q, [&](Eigen::Index) { return 0.3 * rng.normal(); });
        dlm.G[t] = Eigen::MatrixXd::NullaryExpr(q, q, [&](Eigen::Index, Eigen::Index) {
            return 0.6 * rng.normal() / std::sqrt(static_cast<double>(q));
        });
        dlm.Gamma[t] = Eigen::MatrixXd::NullaryExpr(q, q, [&](Eigen::Index, Eigen::Index) {
            return rng.normal() / std::sqrt(static_cast<double>(q));
        });
    }
    dlm.m0 = Eigen::VectorXd::NullaryExpr(q, [&](Eigen::Index) { return rng.normal(); });
    dlm.V0 = random_psd(rng, q, 0.1);
    dlm.finalize_noise();
    return dlm;
}

// Forward simulation; any y in general position works for conditioning
// checks, exactness of its distribution is irrelevant.
inline Eigen::VectorXd simulate_y(dynss::Rng& rng, const dynss::ConditionalDlm& dlm) {
    Eigen::VectorXd th = dlm.m0;
    Eigen::VectorXd y(dlm.T);
    for (int t = 0; t < dlm.T; ++t) {
        Eigen::VectorXd noise =
            Eigen::VectorXd::NullaryExpr(dlm.q, [&](Eigen::Index) { return rng.normal(); });
        th = dlm.g[t] + dlm.G[t] * th + dlm.Gamma[t] * noise;
        y[t] = dlm.f[t] + dlm.F[t].dot(th) + dlm.gamma[t] * rng.normal();
    }
    return y;
}

} // namespace testsupport
