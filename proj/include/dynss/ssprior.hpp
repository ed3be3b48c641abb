#pragma once

// Spike-and-slab scale priors for the time-varying coefficients.
//
// Each coefficient path beta_{j,1:T} carries a variance process
// psi_{j,t} = K_{j,t} * tau2_j, where K_{j,t} in {r, 1} selects spike or
// slab. The mixing law placed on tau2_j picks the marginal family:
//
//   kind          tau2_j prior            marginal beta_{j,t}
//   Nmig          IG(nu, Q_j)             two-component scaled-t mixture
//   NormalGamma   Gamma(a_tau, 1/(2Q_j))  normal-gamma mixture
//   LaplaceMix    Exponential(1/(2Q_j))   Laplace mixture
//
// The family constant c makes the component variances comparable across
// kinds: Var_slab = c*Q and Var_spike = c*Q*r.  Q_j gets an inverse-gamma
// prior whose scale is divided by f*(w) = c*((1-w)*r + w) so the marginal
// coefficient variance is calibrated to the same target under every kind.

#include <cmath>
#include <string>

#include <Eigen/Core>

#include "dynss/dists.hpp"
#include "dynss/errors.hpp"

namespace dynss {

enum class PriorKind { Nmig, NormalGamma, LaplaceMix };

inline const char* prior_name(PriorKind kind) {
    switch (kind) {
        case PriorKind::Nmig: return "nmig";
        case PriorKind::NormalGamma: return "ng";
        case PriorKind::LaplaceMix: return "laplace";
    }
    throw DomainError("prior_name: unknown kind");
}

// The LaplaceMix family is the NormalGamma family with the shape pinned to 1
// (an Exponential is a unit-shape Gamma); the a_tau field is ignored for it.
inline double gamma_shape_for(PriorKind kind, double a_tau) {
    return kind == PriorKind::LaplaceMix ? 1.0 : a_tau;
}

// One bag of scalars shared by every prior kind; fields not used by a kind
// (nu outside Nmig, a_tau for LaplaceMix) are simply ignored by it.
// Defaults follow the first simulation profile.
struct Hyperparameters {
    double r = 0.005;      // spike-to-slab variance ratio
    double nu = 5.0;       // tau2 inverse-gamma shape (Nmig)
    double a_tau = 0.5;    // tau2 gamma shape (NormalGamma)
    double c_psi = 51.0;   // Q prior shape
    double C_psi = 5.0;    // Q prior scale before the f* calibration
    double a_sigma = 1e-4; // observation variance IG shape
    double b_sigma = 1e-4; // observation variance IG scale
    double a_phi = 77.6;   // AR coefficient Beta parameters
    double b_phi = 2.4;
    double a_omega = 77.6; // regime stay-probability Beta parameters
    double b_omega = 2.4;
    double alpha = 1000.0; // AR Metropolis proposal concentration

    void validate(PriorKind kind) const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw DomainError(std::string("Hyperparameters: ") + name
                                  + " must be positive and finite");
        };
        positive(r, "r");
        positive(nu, "nu");
        positive(a_tau, "a_tau");
        positive(c_psi, "c_psi");
        positive(C_psi, "C_psi");
        positive(a_sigma, "a_sigma");
        positive(b_sigma, "b_sigma");
        positive(a_phi, "a_phi");
        positive(b_phi, "b_phi");
        positive(a_omega, "a_omega");
        positive(b_omega, "b_omega");
        positive(alpha, "alpha");
        if (!(r < 0.5)) throw DomainError("Hyperparameters: spike ratio r must be < 0.5");
        if (kind == PriorKind::Nmig && !(nu > 1.0))
            throw DomainError("Hyperparameters: inverse-gamma mixing needs nu > 1 "
                              "for a finite slab variance");
    }
};

// Per-predictor scale draws. The variance surface psi is always derived on
// demand from (K, tau2), never stored, so it cannot go stale between the
// Gibbs blocks that update K and tau2 separately.
struct ScaleState {
    Eigen::VectorXd tau2; // q entries, > 0
    Eigen::VectorXd Q;    // q entries, > 0

    void validate() const {
        if (tau2.size() != Q.size() || tau2.size() == 0)
            throw DomainError("ScaleState: tau2 and Q must have equal nonzero length");
        for (Eigen::Index j = 0; j < tau2.size(); ++j) {
            if (!(tau2[j] > 0.0) || !std::isfinite(tau2[j]))
                throw DomainError("ScaleState: tau2 entries must be positive and finite");
            if (!(Q[j] > 0.0) || !std::isfinite(Q[j]))
                throw DomainError("ScaleState: Q entries must be positive and finite");
        }
    }

    // psi_{t,j} = K_{t,j} * tau2_j for a T x q regime-multiplier matrix.
    Eigen::MatrixXd psi(const Eigen::MatrixXd& K) const {
        if (K.cols() != tau2.size())
            throw DomainError("ScaleState::psi: K column count must match tau2");
        return K * tau2.asDiagonal();
    }
};

// Constant c with Var_slab(beta|Q) = c*Q and Var_spike(beta|r,Q) = c*Q*r.
inline double family_constant(PriorKind kind, const Hyperparameters& hp) {
    switch (kind) {
        case PriorKind::Nmig:
            if (!(hp.nu > 1.0))
                throw DomainError("family_constant: slab variance is finite only for nu > 1");
            return 1.0 / (hp.nu - 1.0);
        case PriorKind::NormalGamma: return 2.0 * hp.a_tau;
        case PriorKind::LaplaceMix: return 2.0;
    }
    throw DomainError("family_constant: unknown kind");
}

// Calibration factor f*(w) = c*((1-w)*r + w); dividing the Q prior scale by
// it keeps the marginal coefficient variance equal to C_psi/(c_psi-1)
// regardless of kind and slab weight.
inline double f_star(double c, double slab_prob, double r) {
    if (!(c > 0.0) || !(r > 0.0))
        throw DomainError("f_star: c and r must be positive");
    if (!(slab_prob >= 0.0) || !(slab_prob <= 1.0))
        throw DomainError("f_star: slab_prob must lie in [0,1]");
    return c * ((1.0 - slab_prob) * r + slab_prob);
}

// Which slab weight w enters f*(w). The long-run regime probability is the
// default: it is the only time-index-free choice consistent with holding the
// marginal coefficient variance constant over t. The first-step stay
// probability is kept as an alternative.
enum class SlabWeightPolicy { Stationary, SlabPersistence };

// Long-run slab probability of the two-state chain with stay probabilities
// omega11 (slab) and omega00 (spike).
inline double stationary_slab_prob(double omega11, double omega00) {
    if (!(omega11 > 0.0) || !(omega11 < 1.0) || !(omega00 > 0.0) || !(omega00 < 1.0))
        throw DomainError("stationary_slab_prob: stay probabilities must lie in (0,1)");
    return (1.0 - omega00) / (2.0 - omega00 - omega11);
}

inline double slab_weight(SlabWeightPolicy policy, double omega11, double omega00) {
    switch (policy) {
        case SlabWeightPolicy::Stationary: return stationary_slab_prob(omega11, omega00);
        case SlabWeightPolicy::SlabPersistence:
            if (!(omega11 > 0.0) || !(omega11 < 1.0))
                throw DomainError("slab_weight: stay probability must lie in (0,1)");
            return omega11;
    }
    throw DomainError("slab_weight: unknown policy");
}

// Sum of squares S with p(beta_j | tau2, K, phi) propto tau2^(-T/2) exp(-S/(2 tau2)).
// It comes from the scaled state beta_{j,t}/sqrt(K_{j,t} tau2_j) being a
// stationary AR(1) with unit marginal variance: the t=1 term is the
// unit-variance initial condition (no lag), later terms use the innovation
// variance 1-phi^2.
inline double coefficient_scale_quadratic(Eigen::Ref<const Eigen::VectorXd> beta_path,
                                          Eigen::Ref<const Eigen::VectorXd> K_path,
                                          double phi) {
    const Eigen::Index T = beta_path.size();
    if (T == 0 || K_path.size() != T)
        throw DomainError("coefficient_scale_quadratic: paths must be nonempty and equal length");
    if (!(phi > 0.0) || !(phi < 1.0))
        throw DomainError("coefficient_scale_quadratic: phi must lie in (0,1)");
    for (Eigen::Index t = 0; t < T; ++t)
        if (!(K_path[t] > 0.0))
            throw DomainError("coefficient_scale_quadratic: regime multipliers must be positive");
    double S = beta_path[0] * beta_path[0] / K_path[0];
    const double innov = 1.0 - phi * phi;
    for (Eigen::Index t = 1; t < T; ++t) {
        const double lagged = std::sqrt(K_path[t] / K_path[t - 1]) * phi * beta_path[t - 1];
        const double d = beta_path[t] - lagged;
        S += d * d / (K_path[t] * innov);
    }
    return S;
}

// Exact draw from the tau2_j full conditional given the unscaled coefficient
// path, the regime path and phi_j.  Nmig is conjugate inverse-gamma; the
// gamma-mixing families give a GIG whose order a_tau - T/2 is far negative
// for realistic T.
inline double sample_tau2(PriorKind kind, const Hyperparameters& hp, double Q_j,
                          Eigen::Ref<const Eigen::VectorXd> beta_path,
                          Eigen::Ref<const Eigen::VectorXd> K_path, double phi_j, Rng& rng) {
    hp.validate(kind);
    if (!(Q_j > 0.0) || !std::isfinite(Q_j))
        throw DomainError("sample_tau2: Q_j must be positive and finite");
    const double S = coefficient_scale_quadratic(beta_path, K_path, phi_j);
    if (!std::isfinite(S) || S < 0.0)
        throw NumericalError("sample_tau2: quadratic form is not finite and nonnegative");
    const double half_T = 0.5 * static_cast<double>(beta_path.size());
    switch (kind) {
        case PriorKind::Nmig:
            return sample_inverse_gamma(rng, hp.nu + half_T, Q_j + 0.5 * S);
        case PriorKind::NormalGamma:
        case PriorKind::LaplaceMix: {
            // S = 0 (an exactly zero coefficient path) leaves the GIG
            // conditional improper; it has probability zero under the sampler.
            if (!(S > 0.0))
                throw NumericalError("sample_tau2: zero quadratic form makes the "
                                     "conditional improper");
            GigParams par;
            par.p = gamma_shape_for(kind, hp.a_tau) - half_T;
            par.g = 1.0 / Q_j;
            par.h = S;
            return sample_gig(rng, par);
        }
    }
    throw DomainError("sample_tau2: unknown kind");
}

// Exact draw from the Q_j full conditional given tau2_j and the slab weight
// entering f*.  Nmig gives a GIG (order hits 0 exactly when nu == c_psi);
// the gamma-mixing families are conjugate inverse-gamma.
inline double sample_Q(PriorKind kind, const Hyperparameters& hp, double tau2_j,
                       double slab_prob, Rng& rng) {
    hp.validate(kind);
    if (!(tau2_j > 0.0) || !std::isfinite(tau2_j))
        throw DomainError("sample_Q: tau2_j must be positive and finite");
    const double fs = f_star(family_constant(kind, hp), slab_prob, hp.r);
    switch (kind) {
        case PriorKind::Nmig: {
            GigParams par;
            par.p = hp.nu - hp.c_psi;
            par.g = 2.0 / tau2_j;
            par.h = 2.0 * hp.C_psi / fs;
            return sample_gig(rng, par);
        }
        case PriorKind::NormalGamma:
        case PriorKind::LaplaceMix:
            return sample_inverse_gamma(rng, hp.c_psi + gamma_shape_for(kind, hp.a_tau),
                                        0.5 * tau2_j + hp.C_psi / fs);
    }
    throw DomainError("sample_Q: unknown kind");
}

// Marginal density of one coefficient given Q_j and the slab weight:
// w * slab(x) + (1-w) * spike(x), with the component families induced by the
// tau2 mixing law (scaled-t for Nmig, normal-gamma for NormalGamma, Laplace
// for LaplaceMix) and the spike component scaled by r.
inline double marginal_beta_density(PriorKind kind, const Hyperparameters& hp, double Q_j,
                                    double slab_prob, double x) {
    hp.validate(kind);
    if (!(Q_j > 0.0) || !std::isfinite(Q_j))
        throw DomainError("marginal_beta_density: Q_j must be positive and finite");
    if (!(slab_prob >= 0.0) || !(slab_prob <= 1.0))
        throw DomainError("marginal_beta_density: slab_prob must lie in [0,1]");
    auto component = [&](double mult) -> double { // mult = 1 for slab, r for spike
        switch (kind) {
            case PriorKind::Nmig: return density_scaled_t(x, 2.0 * hp.nu, mult * Q_j / hp.nu);
            case PriorKind::NormalGamma: return density_normal_gamma(x, hp.a_tau, mult * Q_j);
            case PriorKind::LaplaceMix: return laplace_pdf(x, std::sqrt(mult * Q_j));
        }
        throw DomainError("marginal_beta_density: unknown kind");
    };
    // Skip zero-weight components: the normal-gamma density is infinite at
    // x = 0 for shapes <= 1/2 and 0 * inf would poison the sum.
    const double w = slab_prob;
    double dens = 0.0;
    if (w > 0.0) dens += w * component(1.0);
    if (w < 1.0) dens += (1.0 - w) * component(hp.r);
    return dens;
}

// Hybrid family with an exponential spike and an inverse-gamma slab, giving
// a Laplace spike and a scaled-t slab with per-component constants c = 2 and
// c = 1/(nu-1).  Density only; no sampler path uses it.
inline double laplace_t_density(const Hyperparameters& hp, double Q_j, double slab_prob,
                                double x) {
    if (!(hp.nu > 1.0))
        throw DomainError("laplace_t_density: slab variance is finite only for nu > 1");
    if (!(hp.r > 0.0) || !(hp.r < 0.5))
        throw DomainError("laplace_t_density: spike ratio must lie in (0, 0.5)");
    if (!(Q_j > 0.0) || !std::isfinite(Q_j))
        throw DomainError("laplace_t_density: Q_j must be positive and finite");
    if (!(slab_prob >= 0.0) || !(slab_prob <= 1.0))
        throw DomainError("laplace_t_density: slab_prob must lie in [0,1]");
    const double w = slab_prob;
    return w * density_scaled_t(x, 2.0 * hp.nu, Q_j / hp.nu)
         + (1.0 - w) * laplace_pdf(x, std::sqrt(hp.r * Q_j));
}

} // namespace dynss
