#pragma once

// The full Markov chain over states, regimes and parameters: regime sweeps
// (states integrated out), a joint state redraw, and the conjugate / MH
// parameter blocks, plus chain orchestration and posterior summarization.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dynss/datagen.hpp"
#include "dynss/dists.hpp"
#include "dynss/dlm.hpp"
#include "dynss/errors.hpp"
#include "dynss/gck.hpp"
#include "dynss/ssprior.hpp"

namespace dynss {

// Position of the regime sweep relative to the state draw within one cycle.
// The regime conditional integrates the states out, so it is a valid block
// update only when the states are redrawn immediately afterwards;
// CollapsedFirst does exactly that. StatesFirst places the state draw before
// the sweep, which leaves the parameter blocks conditioning on a state path
// drawn under the previous regime path; kept for comparison runs.
enum class UpdateOrder { CollapsedFirst, StatesFirst };

// The transition probabilities feed the slab weight in Q's prior scale, so
// their exact conditional carries that prior factor on top of the transition
// counts. ExactMh runs the conjugate Beta draw as a Metropolis proposal with
// the factor in the acceptance ratio; BetaConjugate keeps the raw draw for
// comparison runs.
enum class OmegaUpdate { ExactMh, BetaConjugate };

struct McmcState {
    Eigen::MatrixXd beta_tilde; // T x q scaled states
    Eigen::MatrixXd K;          // T x q regime multipliers in {r, 1}
    Eigen::VectorXd tau2, Q, phi, omega11, omega00; // per predictor
    double sigma2 = 1.0;

    // Unscaled coefficients beta_{t,j} = sqrt(K_{t,j} tau2_j) * beta_tilde_{t,j}.
    Eigen::MatrixXd beta() const {
        Eigen::MatrixXd b = beta_tilde;
        for (Eigen::Index j = 0; j < b.cols(); ++j)
            b.col(j).array() *= (K.col(j).array() * tau2[j]).sqrt();
        return b;
    }

    void validate(double r) const {
        const Eigen::Index T = beta_tilde.rows(), q = beta_tilde.cols();
        if (T == 0 || q == 0 || K.rows() != T || K.cols() != q)
            throw DomainError("McmcState: state shapes disagree");
        if (tau2.size() != q || Q.size() != q || phi.size() != q || omega11.size() != q
            || omega00.size() != q)
            throw DomainError("McmcState: parameter lengths must equal the predictor count");
        if (!beta_tilde.allFinite()) throw DomainError("McmcState: non-finite states");
        for (Eigen::Index t = 0; t < T; ++t)
            for (Eigen::Index j = 0; j < q; ++j)
                if (K(t, j) != 1.0 && K(t, j) != r)
                    throw DomainError("McmcState: regime entries must be the spike value or 1");
        for (Eigen::Index j = 0; j < q; ++j) {
            if (!(tau2[j] > 0.0) || !(Q[j] > 0.0) || !std::isfinite(tau2[j]) || !std::isfinite(Q[j]))
                throw DomainError("McmcState: scales must be positive and finite");
            if (!(phi[j] > 0.0 && phi[j] < 1.0))
                throw DomainError("McmcState: phi must lie in (0,1)");
            if (!(omega11[j] > 0.0 && omega11[j] < 1.0) || !(omega00[j] > 0.0 && omega00[j] < 1.0))
                throw DomainError("McmcState: stay probabilities must lie in (0,1)");
        }
        if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
            throw DomainError("McmcState: sigma2 must be positive and finite");
    }
};

struct McmcConfig {
    PriorKind kind = PriorKind::Nmig;
    Hyperparameters hp;
    int n_iter = 10000;
    int n_burn = 5000;
    int thin = 1;
    std::uint64_t seed = 1;
    bool save_paths = false;
    UpdateOrder order = UpdateOrder::CollapsedFirst;
    OmegaUpdate omega_update = OmegaUpdate::ExactMh;
    SlabWeightPolicy weight_policy = SlabWeightPolicy::Stationary;
    SweepMode sweep_mode = SweepMode::Gck;
    // MH applications of the AR coefficient block per cycle. The block is
    // cheap next to the state draws, so extra applications buy phi mixing
    // essentially for free.
    int phi_repeats = 1;

    void validate() const {
        hp.validate(kind);
        if (n_iter < 1 || n_burn < 0 || n_burn >= n_iter)
            throw ConfigError("McmcConfig: need 0 <= n_burn < n_iter");
        if (thin < 1) throw ConfigError("McmcConfig: thinning interval must be >= 1");
        if (phi_repeats < 1) throw ConfigError("McmcConfig: phi_repeats must be >= 1");
    }
};

struct ScalarSummary {
    double mean = 0.0, median = 0.0, q025 = 0.0, q975 = 0.0;
};

struct PosteriorSummary {
    Eigen::MatrixXd beta_mean, beta_median, beta_q025, beta_q975; // T x q
    Eigen::MatrixXd inclusion;                                    // T x q slab frequencies
    std::vector<std::pair<std::string, ScalarSummary>> scalars;
    Eigen::VectorXd mh_acceptance; // per predictor, post burn-in
    int n_kept = 0;
};

struct ChainResult {
    PosteriorSummary summary;
    std::vector<Eigen::MatrixXd> beta_draws; // kept draws, one T x q matrix each
    Eigen::MatrixXd scalar_draws;            // n_kept x scalar_names.size()
    std::vector<std::string> scalar_names;
};

namespace detail {

// Order statistic with linear interpolation between adjacent ranks (the
// common "type 7" rule); input must be sorted.
inline double quantile_sorted(const std::vector<double>& s, double p) {
    if (s.empty()) throw DomainError("quantile_sorted: empty sample");
    if (s.size() == 1) return s[0];
    const double h = p * static_cast<double>(s.size() - 1);
    const size_t lo = static_cast<size_t>(h);
    if (lo + 1 >= s.size()) return s.back();
    return s[lo] + (h - static_cast<double>(lo)) * (s[lo + 1] - s[lo]);
}

inline ScalarSummary summarize_sorted(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    ScalarSummary s;
    double total = 0.0;
    for (double x : v) total += x;
    s.mean = total / static_cast<double>(v.size());
    s.median = quantile_sorted(v, 0.5);
    s.q025 = quantile_sorted(v, 0.025);
    s.q975 = quantile_sorted(v, 0.975);
    return s;
}

} // namespace detail

struct IgParams {
    double shape = 1.0;
    double scale = 1.0;
};

// Observation-variance full conditional given the unscaled coefficients:
// IG(a + T/2, b + rss/2) with rss the sum of squared fit residuals.
inline IgParams sigma2_conditional(double a_sigma, double b_sigma, const Eigen::VectorXd& y,
                                   const Eigen::MatrixXd& X, const Eigen::MatrixXd& beta) {
    if (y.size() != X.rows() || beta.rows() != X.rows() || beta.cols() != X.cols())
        throw DomainError("sigma2_conditional: shape mismatch");
    const double rss = (y - X.cwiseProduct(beta).rowwise().sum()).squaredNorm();
    return {a_sigma + 0.5 * static_cast<double>(y.size()), b_sigma + 0.5 * rss};
}

struct TransitionCounts {
    int slab_stay = 0, slab_to_spike = 0, spike_stay = 0, spike_to_slab = 0;
};

inline TransitionCounts count_transitions(Eigen::Ref<const Eigen::VectorXd> K_path,
                                          double spike_value) {
    TransitionCounts c;
    for (Eigen::Index t = 1; t < K_path.size(); ++t) {
        const int from = detail::regime_index(K_path[t - 1], spike_value);
        const int to = detail::regime_index(K_path[t], spike_value);
        if (from == 1)
            ++(to == 1 ? c.slab_stay : c.slab_to_spike);
        else
            ++(to == 0 ? c.spike_stay : c.spike_to_slab);
    }
    return c;
}

// Conjugate Beta draw of the stay probabilities from the regime transition
// counts (t = 2..T; the initial state carries no information about them).
inline std::pair<double, double> update_transition_probs(Eigen::Ref<const Eigen::VectorXd> K_path,
                                                         const Hyperparameters& hp, Rng& rng) {
    const TransitionCounts c = count_transitions(K_path, hp.r);
    const double o11 = sample_beta(rng, hp.a_omega + c.slab_stay, hp.b_omega + c.slab_to_spike);
    const double o00 = sample_beta(rng, hp.a_omega + c.spike_stay, hp.b_omega + c.spike_to_slab);
    return {o11, o00};
}

// Full stay-probability update for one predictor. Under ExactMh the
// conjugate draw above serves as the proposal and everything except the
// IG(Q | c_psi, C_psi/f*(w)) prior factor cancels from the Hastings ratio.
inline std::pair<double, double> update_omega(PriorKind kind, const Hyperparameters& hp,
                                              Eigen::Ref<const Eigen::VectorXd> K_path, double Q_j,
                                              double omega11, double omega00,
                                              SlabWeightPolicy policy, OmegaUpdate mode,
                                              Rng& rng) {
    const std::pair<double, double> prop = update_transition_probs(K_path, hp, rng);
    if (mode == OmegaUpdate::BetaConjugate) return prop;
    if (!(Q_j > 0.0)) throw DomainError("update_omega: Q_j must be positive");
    const double c = family_constant(kind, hp);
    const double s_cur = hp.C_psi / f_star(c, slab_weight(policy, omega11, omega00), hp.r);
    const double s_new = hp.C_psi / f_star(c, slab_weight(policy, prop.first, prop.second), hp.r);
    const double log_acc = hp.c_psi * std::log(s_new / s_cur) - (s_new - s_cur) / Q_j;
    if (std::log(rng.uniform()) < log_acc) return prop;
    return {omega11, omega00};
}

// Metropolis-Hastings update of one AR coefficient with the mean-matched
// Beta(alpha, alpha(1-phi)/phi) proposal. The target is the Beta prior times
// the scaled-state transition density; the innovation variance 1 - phi^2
// depends on phi, so the Gaussian normalizations do not cancel and stay in
// the target. The t = 1 term is the unit-variance initial condition and
// carries no phi. Returns the new value and whether the proposal was taken.
inline std::pair<double, bool> mh_update_phi(double phi,
                                             Eigen::Ref<const Eigen::VectorXd> beta_path,
                                             Eigen::Ref<const Eigen::VectorXd> psi_path,
                                             const Hyperparameters& hp, Rng& rng) {
    if (!(phi > 0.0 && phi < 1.0)) throw DomainError("mh_update_phi: phi outside (0,1)");
    const Eigen::Index T = beta_path.size();
    if (T == 0 || psi_path.size() != T)
        throw DomainError("mh_update_phi: paths must be nonempty and equal length");
    Eigen::VectorXd bt(T);
    for (Eigen::Index t = 0; t < T; ++t) {
        if (!(psi_path[t] > 0.0)) throw DomainError("mh_update_phi: psi must be positive");
        bt[t] = beta_path[t] / std::sqrt(psi_path[t]);
    }
    auto log_target = [&](double p) {
        double lp = beta_logpdf(p, hp.a_phi, hp.b_phi);
        const double innov = 1.0 - p * p;
        for (Eigen::Index t = 1; t < T; ++t) lp += normal_logpdf(bt[t], p * bt[t - 1], innov);
        return lp;
    };
    const double prop = sample_beta(rng, hp.alpha, hp.alpha * (1.0 - phi) / phi);
    if (!(prop > 0.0 && prop < 1.0)) return {phi, false};
    const double log_acc = log_target(prop) - log_target(phi)
        + beta_logpdf(phi, hp.alpha, hp.alpha * (1.0 - prop) / prop)
        - beta_logpdf(prop, hp.alpha, hp.alpha * (1.0 - phi) / phi);
    if (std::log(rng.uniform()) < log_acc) return {prop, true};
    return {phi, false};
}

inline RegimePrior regime_prior_from(double omega11, double omega00) {
    RegimePrior prior;
    prior.initial_slab = 0.5;
    prior.trans << omega00, 1.0 - omega00, 1.0 - omega11, omega11;
    return prior;
}

// Deterministic start: zero states, all-slab regimes, unit tau2, prior-mean
// phi and stay probabilities, Q at its prior mean (prior scale when the
// shape leaves no mean), and the response's sample variance for sigma2.
inline McmcState init_state(const Dataset& data, const McmcConfig& cfg) {
    const int T = static_cast<int>(data.X.rows()), q = static_cast<int>(data.X.cols());
    const Hyperparameters& hp = cfg.hp;
    McmcState st;
    st.beta_tilde = Eigen::MatrixXd::Zero(T, q);
    st.K = Eigen::MatrixXd::Ones(T, q);
    st.tau2 = Eigen::VectorXd::Ones(q);
    st.phi = Eigen::VectorXd::Constant(q, hp.a_phi / (hp.a_phi + hp.b_phi));
    const double omega_mean = hp.a_omega / (hp.a_omega + hp.b_omega);
    st.omega11 = Eigen::VectorXd::Constant(q, omega_mean);
    st.omega00 = Eigen::VectorXd::Constant(q, omega_mean);
    const double w0 = slab_weight(cfg.weight_policy, omega_mean, omega_mean);
    const double scale = hp.C_psi / f_star(family_constant(cfg.kind, hp), w0, hp.r);
    st.Q = Eigen::VectorXd::Constant(q, hp.c_psi > 1.0 ? scale / (hp.c_psi - 1.0) : scale);
    const double mean_y = data.y.mean();
    const double var_y = (data.y.array() - mean_y).square().sum()
                         / std::max(static_cast<double>(T - 1), 1.0);
    if (!(var_y > 0.0)) throw DataError("init_state: response has zero sample variance");
    st.sigma2 = var_y;
    return st;
}

struct MhTally {
    Eigen::VectorXi proposals;
    Eigen::VectorXi accepts;
};

// One full cycle. Regime sweep and state draw run in the configured order;
// the parameter blocks then condition on the unscaled coefficients. The
// tau2 redraw holds the unscaled path fixed and rescales the states after,
// so the chain moves in the parametrization where that conditional is exact.
inline McmcState mcmc_step(McmcState state, const Dataset& data, const McmcConfig& cfg, Rng& rng,
                           MhTally* tally = nullptr) {
    const int q = static_cast<int>(data.X.cols());
    const Hyperparameters& hp = cfg.hp;
    auto builder = [&](const Eigen::MatrixXd& Km) {
        return build_conditional_dlm(data.X, Km, state.tau2, state.phi, std::sqrt(state.sigma2));
    };
    auto guarded = [](const char* step, auto&& fn) {
        try {
            fn();
        } catch (const NumericalError& e) {
            throw NumericalError(std::string(step) + ": " + e.what());
        }
    };

    auto sweep_regimes = [&] {
        SweepOptions opts;
        opts.mode = cfg.sweep_mode;
        for (int j = 0; j < q; ++j)
            sample_regime_path(builder, data.y, state.K, j,
                               regime_prior_from(state.omega11[j], state.omega00[j]), hp.r, rng,
                               opts);
    };
    auto draw_states = [&] {
        const ConditionalDlm dlm = builder(state.K);
        const FilterStats fs = kalman_filter(dlm, data.y);
        state.beta_tilde = ffbs_sample(dlm, data.y, fs, rng).theta;
    };
    if (cfg.order == UpdateOrder::CollapsedFirst) {
        guarded("regime sweep", sweep_regimes);
        guarded("state draw", draw_states);
    } else {
        guarded("state draw", draw_states);
        guarded("regime sweep", sweep_regimes);
    }

    guarded("observation variance update", [&] {
        const IgParams p = sigma2_conditional(hp.a_sigma, hp.b_sigma, data.y, data.X, state.beta());
        state.sigma2 = sample_inverse_gamma(rng, p.shape, p.scale);
    });
    guarded("coefficient scale update", [&] {
        const Eigen::MatrixXd b = state.beta();
        for (int j = 0; j < q; ++j) {
            state.tau2[j] =
                sample_tau2(cfg.kind, hp, state.Q[j], b.col(j), state.K.col(j), state.phi[j], rng);
            state.beta_tilde.col(j) =
                b.col(j).cwiseQuotient((state.K.col(j) * state.tau2[j]).cwiseSqrt());
        }
    });
    guarded("AR coefficient update", [&] {
        const Eigen::MatrixXd b = state.beta();
        for (int j = 0; j < q; ++j) {
            const Eigen::VectorXd psi = state.K.col(j) * state.tau2[j];
            for (int rep = 0; rep < cfg.phi_repeats; ++rep) {
                const auto [value, accepted] = mh_update_phi(state.phi[j], b.col(j), psi, hp, rng);
                state.phi[j] = value;
                if (tally) {
                    ++tally->proposals[j];
                    if (accepted) ++tally->accepts[j];
                }
            }
        }
    });
    guarded("transition probability update", [&] {
        for (int j = 0; j < q; ++j) {
            const auto [o11, o00] =
                update_omega(cfg.kind, hp, state.K.col(j), state.Q[j], state.omega11[j],
                             state.omega00[j], cfg.weight_policy, cfg.omega_update, rng);
            state.omega11[j] = o11;
            state.omega00[j] = o00;
        }
    });
    guarded("scale prior update", [&] {
        for (int j = 0; j < q; ++j) {
            const double w = slab_weight(cfg.weight_policy, state.omega11[j], state.omega00[j]);
            state.Q[j] = sample_Q(cfg.kind, hp, state.tau2[j], w, rng);
        }
    });
    return state;
}

inline std::vector<std::string> scalar_names_for(int q) {
    std::vector<std::string> names{"sigma2"};
    for (const char* block : {"phi", "omega11", "omega00", "tau2", "Q"})
        for (int j = 1; j <= q; ++j) names.push_back(std::string(block) + "_" + std::to_string(j));
    return names;
}

inline ChainResult run_chain(const Dataset& data, const McmcConfig& cfg) {
    cfg.validate();
    data.validate();
    const int T = static_cast<int>(data.X.rows()), q = static_cast<int>(data.X.cols());

    Rng rng(cfg.seed);
    McmcState st = init_state(data, cfg);
    MhTally tally{Eigen::VectorXi::Zero(q), Eigen::VectorXi::Zero(q)};

    const int n_kept = (cfg.n_iter - cfg.n_burn + cfg.thin - 1) / cfg.thin;
    ChainResult out;
    out.scalar_names = scalar_names_for(q);
    out.beta_draws.reserve(static_cast<size_t>(n_kept));
    out.scalar_draws.resize(n_kept, static_cast<Eigen::Index>(out.scalar_names.size()));
    Eigen::MatrixXd inclusion = Eigen::MatrixXd::Zero(T, q);

    int kept = 0;
    for (int m = 1; m <= cfg.n_iter; ++m) {
        const bool post_burn = m > cfg.n_burn;
        try {
            st = mcmc_step(std::move(st), data, cfg, rng, post_burn ? &tally : nullptr);
        } catch (const NumericalError& e) {
            throw NumericalError("iteration " + std::to_string(m) + ", " + e.what());
        }
        if (post_burn && (m - cfg.n_burn - 1) % cfg.thin == 0) {
            out.beta_draws.push_back(st.beta());
            inclusion += (st.K.array() == 1.0).cast<double>().matrix();
            Eigen::Index c = 0;
            out.scalar_draws(kept, c++) = st.sigma2;
            for (int j = 0; j < q; ++j) out.scalar_draws(kept, c++) = st.phi[j];
            for (int j = 0; j < q; ++j) out.scalar_draws(kept, c++) = st.omega11[j];
            for (int j = 0; j < q; ++j) out.scalar_draws(kept, c++) = st.omega00[j];
            for (int j = 0; j < q; ++j) out.scalar_draws(kept, c++) = st.tau2[j];
            for (int j = 0; j < q; ++j) out.scalar_draws(kept, c++) = st.Q[j];
            ++kept;
        }
    }

    PosteriorSummary& s = out.summary;
    s.n_kept = kept;
    s.beta_mean.resize(T, q);
    s.beta_median.resize(T, q);
    s.beta_q025.resize(T, q);
    s.beta_q975.resize(T, q);
    std::vector<double> buf(static_cast<size_t>(kept));
    for (int j = 0; j < q; ++j) {
        for (int t = 0; t < T; ++t) {
            double total = 0.0;
            for (int i = 0; i < kept; ++i) {
                buf[static_cast<size_t>(i)] = out.beta_draws[static_cast<size_t>(i)](t, j);
                total += buf[static_cast<size_t>(i)];
            }
            std::sort(buf.begin(), buf.end());
            s.beta_mean(t, j) = total / kept;
            s.beta_median(t, j) = detail::quantile_sorted(buf, 0.5);
            s.beta_q025(t, j) = detail::quantile_sorted(buf, 0.025);
            s.beta_q975(t, j) = detail::quantile_sorted(buf, 0.975);
        }
    }
    s.inclusion = inclusion / static_cast<double>(kept);
    s.scalars.reserve(out.scalar_names.size());
    for (Eigen::Index c = 0; c < out.scalar_draws.cols(); ++c) {
        std::vector<double> col(out.scalar_draws.col(c).data(),
                                out.scalar_draws.col(c).data() + kept);
        s.scalars.emplace_back(out.scalar_names[static_cast<size_t>(c)],
                               detail::summarize_sorted(std::move(col)));
    }
    s.mh_acceptance = Eigen::VectorXd::Zero(q);
    for (int j = 0; j < q; ++j)
        if (tally.proposals[j] > 0)
            s.mh_acceptance[j] = static_cast<double>(tally.accepts[j]) / tally.proposals[j];
    if (!cfg.save_paths) {
        // summaries retain everything callers need; drop the archive
        out.beta_draws.clear();
        out.beta_draws.shrink_to_fit();
    }
    return out;
}

inline double compute_rmse(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth) {
    if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
        throw DomainError("compute_rmse: shape mismatch");
    return std::sqrt((estimate - truth).squaredNorm() / static_cast<double>(truth.size()));
}

} // namespace dynss
