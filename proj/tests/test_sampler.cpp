#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dynss/datagen.hpp"
#include "dynss/sampler.hpp"
#include "support/geweke.hpp"
#include "support/quadrature.hpp"
#include "support/stats.hpp"

using namespace dynss;
namespace ts = testsupport;
using Catch::Approx;

namespace {

Hyperparameters example1_hypers() {
    Hyperparameters hp;
    hp.r = 0.005;
    hp.nu = 5.0;
    hp.a_tau = 0.5;
    hp.c_psi = 51.0;
    hp.C_psi = 5.0;
    hp.a_sigma = 1e-4;
    hp.b_sigma = 1e-4;
    hp.a_phi = 77.6;
    hp.b_phi = 2.4;
    hp.a_omega = 77.6;
    hp.b_omega = 2.4;
    hp.alpha = 1000.0;
    return hp;
}

// Stationary AR(1) scaled-state path with unit marginal variance.
Eigen::VectorXd ar_path(int T, double phi, Rng& rng) {
    Eigen::VectorXd v(T);
    v[0] = rng.normal();
    const double sd = std::sqrt(1.0 - phi * phi);
    for (int t = 1; t < T; ++t) v[t] = phi * v[t - 1] + sd * rng.normal();
    return v;
}

} // namespace

TEST_CASE("observation variance conditional parameters", "[sampler]") {
    Eigen::VectorXd y(3);
    y << 1.0, 2.0, 3.0;
    Eigen::MatrixXd X(3, 2);
    X << 1.0, 0.0, 0.0, 1.0, 1.0, 1.0;
    Eigen::MatrixXd beta(3, 2);
    beta << 2.0, 3.0, 1.0, 1.0, 0.5, 0.5;
    // Fits are (2, 1, 1), residuals (-1, 1, 2), rss = 6.
    const IgParams p = sigma2_conditional(0.5, 0.25, y, X, beta);
    REQUIRE(p.shape == Approx(0.5 + 1.5).epsilon(0.0));
    REQUIRE(p.scale == Approx(0.25 + 3.0).epsilon(0.0));

    // Shape a + T/2 for the quarterly-length series: 31 + 91 = 122.
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(182);
    const IgParams q = sigma2_conditional(31.0, 4.22, ones, Eigen::MatrixXd::Zero(182, 2),
                                          Eigen::MatrixXd::Zero(182, 2));
    REQUIRE(q.shape == 122.0);
    REQUIRE(q.scale == Approx(4.22 + 91.0));

    REQUIRE_THROWS_AS(sigma2_conditional(1.0, 1.0, y, X, beta.topRows(2)), DomainError);
}

TEST_CASE("regime transition counts and the conjugate stay draw", "[sampler]") {
    const double r = 0.005;
    Hyperparameters hp;
    hp.r = r;
    hp.a_omega = 2.0;
    hp.b_omega = 3.0;

    SECTION("counts on hand-built paths") {
        Eigen::VectorXd all_slab = Eigen::VectorXd::Ones(200);
        TransitionCounts c = count_transitions(all_slab, r);
        REQUIRE(c.slab_stay == 199);
        REQUIRE(c.slab_to_spike == 0);
        REQUIRE(c.spike_stay == 0);
        REQUIRE(c.spike_to_slab == 0);

        Eigen::VectorXd alt(6);
        alt << r, 1.0, r, 1.0, r, 1.0;
        c = count_transitions(alt, r);
        REQUIRE(c.spike_to_slab == 3);
        REQUIRE(c.slab_to_spike == 2);
        REQUIRE(c.slab_stay == 0);
        REQUIRE(c.spike_stay == 0);

        Eigen::VectorXd mixed(8);
        mixed << 1.0, 1.0, r, r, 1.0, 1.0, 1.0, r;
        c = count_transitions(mixed, r);
        REQUIRE(c.slab_stay == 3);
        REQUIRE(c.slab_to_spike == 2);
        REQUIRE(c.spike_stay == 1);
        REQUIRE(c.spike_to_slab == 1);

        Eigen::VectorXd bad(2);
        bad << 1.0, 0.5;
        REQUIRE_THROWS_AS(count_transitions(bad, r), DomainError);
    }

    SECTION("draw follows the count-updated Beta laws") {
        // All-slab path: omega11 | K ~ Beta(201, 3), omega00 | K ~ Beta(2, 3).
        const Eigen::VectorXd all_slab = Eigen::VectorXd::Ones(200);
        Rng rng(101);
        const int n = 30000;
        std::vector<double> o11(n), o00(n);
        for (int i = 0; i < n; ++i) {
            const auto [a, b] = update_transition_probs(all_slab, hp, rng);
            o11[i] = a;
            o00[i] = b;
        }
        const double m11 = 201.0 / 204.0, v11 = 201.0 * 3.0 / (204.0 * 204.0 * 205.0);
        const double m00 = 2.0 / 5.0, v00 = 2.0 * 3.0 / (25.0 * 6.0);
        REQUIRE(ts::mean(o11) == Approx(m11).margin(5.0 * std::sqrt(v11 / n)));
        REQUIRE(ts::mean(o00) == Approx(m00).margin(5.0 * std::sqrt(v00 / n)));
    }
}

TEST_CASE("AR coefficient proposal is mean matched", "[sampler]") {
    // Beta(alpha, alpha(1-phi)/phi) has mean exactly phi; at alpha = 1000 and
    // phi = 0.97 the second parameter is 30.93.
    const double phi = 0.97, alpha = 1000.0;
    const double xi = alpha * (1.0 - phi) / phi;
    REQUIRE(xi == Approx(30.9278350515));

    Rng rng(7);
    const int n = 20000;
    std::vector<double> draws(n);
    for (int i = 0; i < n; ++i) draws[i] = sample_beta(rng, alpha, xi);
    const double sd = std::sqrt(phi * (1.0 - phi) / (alpha + xi + 1.0));
    REQUIRE(ts::mean(draws) == Approx(phi).margin(5.0 * sd / std::sqrt(n)));
}

TEST_CASE("flat-target acceptance matches the Hastings ratio", "[sampler]") {
    // A length-one path contributes no transition terms, so with a Beta(1,1)
    // prior the target is flat and acceptance is driven purely by the
    // proposal asymmetry.
    Hyperparameters hp;
    hp.a_phi = 1.0;
    hp.b_phi = 1.0;
    hp.alpha = 8.0;
    const double phi0 = 0.6;
    auto log_q = [&](double to, double from) {
        return beta_logpdf(to, hp.alpha, hp.alpha * (1.0 - from) / from);
    };
    const double oracle = ts::integrate(
        [&](double p) {
            return std::exp(log_q(p, phi0)) * std::min(1.0, std::exp(log_q(phi0, p) - log_q(p, phi0)));
        },
        1e-12, 1.0 - 1e-12);

    Eigen::VectorXd beta_path(1), psi(1);
    beta_path << 0.3;
    psi << 1.0;
    Rng rng(19);
    const int n = 40000;
    int accepted = 0;
    bool in_range = true, consistent = true;
    for (int i = 0; i < n; ++i) {
        const auto [value, took] = mh_update_phi(phi0, beta_path, psi, hp, rng);
        in_range = in_range && value > 0.0 && value < 1.0;
        consistent = consistent && (took ? value != phi0 : value == phi0);
        if (took) ++accepted;
    }
    REQUIRE(in_range);
    REQUIRE(consistent);
    const double rate = static_cast<double>(accepted) / n;
    REQUIRE(rate == Approx(oracle).margin(4.0 * std::sqrt(oracle * (1.0 - oracle) / n)));
}

TEST_CASE("AR coefficient chain reaches the grid-normalized target", "[sampler]") {
    Hyperparameters hp;
    hp.a_phi = 5.0;
    hp.b_phi = 2.0;
    hp.alpha = 20.0;

    // Fixed scaled-state path; the update sees it through beta = sqrt(psi) *
    // state with a mixed regime/scale pattern, which it must undo exactly.
    const int T = 40;
    Rng rng(23);
    const Eigen::VectorXd bt = ar_path(T, 0.9, rng);
    Eigen::VectorXd psi(T);
    for (int t = 0; t < T; ++t) psi[t] = (t % 3 == 0 ? 0.1 : 1.0) * 4.0;
    const Eigen::VectorXd beta_path = bt.cwiseProduct(psi.cwiseSqrt());

    auto log_target = [&](double p) {
        double lp = beta_logpdf(p, hp.a_phi, hp.b_phi);
        for (int t = 1; t < T; ++t) lp += normal_logpdf(bt[t], p * bt[t - 1], 1.0 - p * p);
        return lp;
    };
    const ts::CdfTable target(log_target, 1e-6, 1.0 - 1e-6, 2000);

    const int n = 200000;
    std::vector<double> chain(n);
    double phi = 0.5;
    int accepted = 0;
    for (int i = 0; i < n; ++i) {
        const auto [value, took] = mh_update_phi(phi, beta_path, psi, hp, rng);
        phi = value;
        if (took) ++accepted;
        chain[i] = phi;
    }
    REQUIRE(accepted > n / 10);
    REQUIRE(ts::ks_statistic(chain, [&](double x) { return target(x); }) < 0.02);
}

TEST_CASE("stay-probability update respects the scale-prior edge", "[sampler]") {
    // The slab weight enters Q's prior scale, so the exact conditional of the
    // stay probabilities is the count-updated Beta pair times an extra
    // IG(Q; c_psi, C_psi/f*(w)) factor.
    const PriorKind kind = PriorKind::Nmig;
    Hyperparameters hp;
    hp.r = 0.1;
    hp.nu = 5.0;
    hp.c_psi = 3.0;
    hp.C_psi = 0.5;
    hp.a_omega = 2.0;
    hp.b_omega = 2.0;
    const SlabWeightPolicy policy = SlabWeightPolicy::Stationary;
    const double Q = 0.75;

    Eigen::VectorXd K(31);
    for (int t = 0; t < 31; ++t) K[t] = (t < 10 || (t >= 15 && t < 23)) ? 1.0 : hp.r;
    const TransitionCounts c = count_transitions(K, hp.r);
    const double cst = family_constant(kind, hp);
    auto log_factor = [&](double w11, double w00) {
        const double s = hp.C_psi / f_star(cst, stationary_slab_prob(w11, w00), hp.r);
        return hp.c_psi * std::log(s) - s / Q;
    };
    auto marginal11 = [&](double w11) {
        const double inner = ts::integrate(
            [&](double w00) {
                return std::exp(beta_logpdf(w00, hp.a_omega + c.spike_stay,
                                            hp.b_omega + c.spike_to_slab)
                                + log_factor(w11, w00));
            },
            1e-9, 1.0 - 1e-9);
        return beta_logpdf(w11, hp.a_omega + c.slab_stay, hp.b_omega + c.slab_to_spike)
               + std::log(inner);
    };
    auto marginal00 = [&](double w00) {
        const double inner = ts::integrate(
            [&](double w11) {
                return std::exp(beta_logpdf(w11, hp.a_omega + c.slab_stay,
                                            hp.b_omega + c.slab_to_spike)
                                + log_factor(w11, w00));
            },
            1e-9, 1.0 - 1e-9);
        return beta_logpdf(w00, hp.a_omega + c.spike_stay, hp.b_omega + c.spike_to_slab)
               + std::log(inner);
    };
    const ts::CdfTable cdf11(marginal11, 1e-4, 1.0 - 1e-4, 400);
    const ts::CdfTable cdf00(marginal00, 1e-4, 1.0 - 1e-4, 400);

    // Dropping the factor leaves the plain count-updated Beta, which sits a
    // fixed distance from the exact marginal here; the corrected chain must
    // land on the exact one.
    double gap = 0.0;
    for (int i = 1; i < 200; ++i) {
        const double x = i / 200.0;
        gap = std::max(gap, std::abs(ts::beta_cdf(hp.a_omega + c.slab_stay,
                                                  hp.b_omega + c.slab_to_spike, x)
                                     - cdf11(x)));
    }
    REQUIRE(gap > 0.05);

    Rng rng(31);
    const int n = 150000;
    std::vector<double> s11(n), s00(n);
    double w11 = 0.5, w00 = 0.5;
    for (int i = 0; i < n; ++i) {
        const auto [a, b] = update_omega(kind, hp, K, Q, w11, w00, policy,
                                         OmegaUpdate::ExactMh, rng);
        w11 = a;
        w00 = b;
        s11[i] = w11;
        s00[i] = w00;
    }
    REQUIRE(ts::ks_statistic(s11, [&](double x) { return cdf11(x); }) < 0.02);
    REQUIRE(ts::ks_statistic(s00, [&](double x) { return cdf00(x); }) < 0.02);
}

TEST_CASE("static regression composed from chain pieces matches quadrature", "[sampler]") {
    // Zero state noise with G = I freezes the coefficient, so FFBS plus the
    // variance draw is a two-block Gibbs for y = x beta + eps with
    // beta ~ N(0,1) and sigma2 ~ IG(3,2). The sigma2 marginal posterior is a
    // one-dimensional integral against the Sherman-Morrison marginal
    // likelihood, which pins both posterior means.
    const int T = 25;
    Rng rng(11);
    Eigen::VectorXd x(T), y(T);
    for (int t = 0; t < T; ++t) x[t] = rng.normal();
    for (int t = 0; t < T; ++t) y[t] = 0.7 * x[t] + 0.8 * rng.normal();

    const double xx = x.squaredNorm(), xy = x.dot(y), yy = y.squaredNorm();
    auto log_post = [&](double s2) {
        const double quad = (yy - xy * xy / (s2 + xx)) / s2;
        const double logdet = (T - 1) * std::log(s2) + std::log(s2 + xx);
        return inverse_gamma_logpdf(s2, 3.0, 2.0) - 0.5 * (logdet + quad);
    };
    double peak = -1e300;
    for (double s2 = 0.05; s2 < 20.0; s2 *= 1.05) peak = std::max(peak, log_post(s2));
    auto dens = [&](double s2) { return std::exp(log_post(s2) - peak); };
    const double mass = ts::integrate(dens, 1e-6, 80.0);
    const double sigma2_mean =
        ts::integrate([&](double s2) { return s2 * dens(s2); }, 1e-6, 80.0) / mass;
    const double beta_mean =
        ts::integrate([&](double s2) { return xy / (s2 + xx) * dens(s2); }, 1e-6, 80.0) / mass;

    ConditionalDlm dlm;
    dlm.T = T;
    dlm.q = 1;
    dlm.f.assign(T, 0.0);
    dlm.g.assign(T, Eigen::VectorXd::Zero(1));
    dlm.G.assign(T, Eigen::MatrixXd::Identity(1, 1));
    dlm.Gamma.assign(T, Eigen::MatrixXd::Zero(1, 1));
    dlm.F.resize(T);
    for (int t = 0; t < T; ++t) dlm.F[t] = x.segment(t, 1);
    dlm.m0 = Eigen::VectorXd::Zero(1);
    dlm.V0 = Eigen::MatrixXd::Identity(1, 1);

    const int burn = 2000, keep = 20000;
    double sigma2 = 1.0;
    std::vector<double> s2_draws, beta_draws;
    for (int m = 0; m < burn + keep; ++m) {
        dlm.gamma.assign(T, std::sqrt(sigma2));
        dlm.finalize_noise();
        const FilterStats fs = kalman_filter(dlm, y);
        const Eigen::MatrixXd path = ffbs_sample(dlm, y, fs, rng).theta;
        const IgParams p = sigma2_conditional(3.0, 2.0, y, x, path);
        sigma2 = sample_inverse_gamma(rng, p.shape, p.scale);
        if (m >= burn) {
            s2_draws.push_back(sigma2);
            beta_draws.push_back(path(0, 0));
        }
    }
    REQUIRE(ts::mean(s2_draws) == Approx(sigma2_mean).margin(4.0 * ts::batch_se(s2_draws)));
    REQUIRE(ts::mean(beta_draws) == Approx(beta_mean).margin(4.0 * ts::batch_se(beta_draws)));
}

TEST_CASE("state and config containers validate", "[sampler]") {
    const double r = 0.25;
    McmcState st;
    st.beta_tilde.resize(2, 2);
    st.beta_tilde << 1.0, 2.0, 3.0, 4.0;
    st.K.resize(2, 2);
    st.K << 1.0, r, r, 1.0;
    st.tau2 = Eigen::Vector2d(4.0, 9.0);
    st.Q = Eigen::Vector2d(1.0, 1.0);
    st.phi = Eigen::Vector2d(0.5, 0.5);
    st.omega11 = Eigen::Vector2d(0.9, 0.9);
    st.omega00 = Eigen::Vector2d(0.9, 0.9);
    st.sigma2 = 1.0;
    REQUIRE_NOTHROW(st.validate(r));

    const Eigen::MatrixXd b = st.beta();
    REQUIRE(b(0, 0) == Approx(2.0));
    REQUIRE(b(0, 1) == Approx(3.0));
    REQUIRE(b(1, 0) == Approx(3.0));
    REQUIRE(b(1, 1) == Approx(12.0));

    McmcState bad = st;
    bad.K(0, 0) = 0.5;
    REQUIRE_THROWS_AS(bad.validate(r), DomainError);
    bad = st;
    bad.phi[0] = 1.0;
    REQUIRE_THROWS_AS(bad.validate(r), DomainError);
    bad = st;
    bad.tau2[1] = 0.0;
    REQUIRE_THROWS_AS(bad.validate(r), DomainError);

    McmcConfig cfg;
    cfg.n_iter = 10;
    cfg.n_burn = 10;
    REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
    cfg.n_burn = 5;
    cfg.thin = 0;
    REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
    cfg.thin = 1;
    REQUIRE_NOTHROW(cfg.validate());
    cfg.hp.r = 0.7;
    REQUIRE_THROWS_AS(cfg.validate(), DomainError);
}

TEST_CASE("initial state sits at prior centers", "[sampler]") {
    const Dataset d = generate_example1(1);
    McmcConfig cfg;
    cfg.kind = PriorKind::Nmig;
    cfg.hp = example1_hypers();
    const McmcState st = init_state(d, cfg);
    REQUIRE(st.beta_tilde.isZero(0.0));
    REQUIRE(st.K.isOnes());
    REQUIRE(st.tau2.isOnes());
    REQUIRE(st.phi[0] == Approx(77.6 / 80.0));
    REQUIRE(st.omega11[2] == Approx(77.6 / 80.0));
    // Stationary slab weight at equal stay probabilities is 1/2, so the Q
    // prior scale is C_psi / (c [(1-w) r + w]) and the mean divides by
    // c_psi - 1.
    const double scale = 5.0 / (0.25 * (0.5 * 0.005 + 0.5));
    REQUIRE(st.Q[0] == Approx(scale / 50.0));
    const double my = d.y.mean();
    REQUIRE(st.sigma2 == Approx((d.y.array() - my).square().sum() / (d.y.size() - 1)));

    Dataset flat;
    flat.X = Eigen::MatrixXd::Ones(5, 1);
    flat.y = Eigen::VectorXd::Ones(5);
    flat.generator = "flat";
    REQUIRE_THROWS_AS(init_state(flat, cfg), DataError);
}

TEST_CASE("chain is deterministic and a single kept draw is its own summary", "[sampler]") {
    const Dataset d = generate_example1(7);
    McmcConfig cfg;
    cfg.kind = PriorKind::Nmig;
    cfg.hp = example1_hypers();
    cfg.n_iter = 40;
    cfg.n_burn = 20;
    cfg.seed = 99;

    const ChainResult a = run_chain(d, cfg);
    const ChainResult b = run_chain(d, cfg);
    REQUIRE((a.summary.beta_median.array() == b.summary.beta_median.array()).all());
    REQUIRE((a.summary.inclusion.array() == b.summary.inclusion.array()).all());
    REQUIRE((a.scalar_draws.array() == b.scalar_draws.array()).all());

    cfg.seed = 100;
    const ChainResult c = run_chain(d, cfg);
    REQUIRE(!(a.scalar_draws.array() == c.scalar_draws.array()).all());

    cfg.seed = 99;
    cfg.n_iter = 21;
    cfg.n_burn = 20;
    cfg.save_paths = true;
    const ChainResult single = run_chain(d, cfg);
    REQUIRE(single.summary.n_kept == 1);
    REQUIRE(single.beta_draws.size() == 1);
    const Eigen::MatrixXd& draw = single.beta_draws[0];
    REQUIRE((single.summary.beta_mean.array() == draw.array()).all());
    REQUIRE((single.summary.beta_median.array() == draw.array()).all());
    REQUIRE((single.summary.beta_q025.array() == draw.array()).all());
    REQUIRE((single.summary.beta_q975.array() == draw.array()).all());
    REQUIRE(((single.summary.inclusion.array() == 0.0) || (single.summary.inclusion.array() == 1.0))
                .all());
    for (const auto& [name, s] : single.summary.scalars) {
        REQUIRE(s.mean == s.median);
        REQUIRE(s.q025 == s.q975);
    }
}

TEST_CASE("kept-draw bookkeeping and summary ordering", "[sampler]") {
    const Dataset d = generate_example1(4);
    McmcConfig cfg;
    cfg.kind = PriorKind::LaplaceMix;
    cfg.hp = example1_hypers();
    cfg.n_iter = 30;
    cfg.n_burn = 10;
    cfg.thin = 3;
    cfg.seed = 5;
    const ChainResult r = run_chain(d, cfg);
    REQUIRE(r.summary.n_kept == 7);
    REQUIRE(r.scalar_draws.rows() == 7);
    REQUIRE(r.scalar_names.size() == 1 + 5 * 5);
    REQUIRE(r.scalar_names.front() == "sigma2");
    REQUIRE(r.scalar_names.back() == "Q_5");
    REQUIRE(r.beta_draws.empty()); // save_paths off drops the archive
    REQUIRE((r.summary.beta_q025.array() <= r.summary.beta_median.array()).all());
    REQUIRE((r.summary.beta_median.array() <= r.summary.beta_q975.array()).all());
    REQUIRE((r.summary.inclusion.array() >= 0.0).all());
    REQUIRE((r.summary.inclusion.array() <= 1.0).all());
    REQUIRE((r.summary.mh_acceptance.array() >= 0.0).all());
    REQUIRE((r.summary.mh_acceptance.array() <= 1.0).all());
}

TEST_CASE("planted sparse signal is recovered at sign level", "[sampler]") {
    const Dataset d = generate_example1(3);
    McmcConfig cfg;
    cfg.kind = PriorKind::Nmig;
    cfg.hp = example1_hypers();
    cfg.n_iter = 700;
    cfg.n_burn = 350;
    cfg.seed = 17;
    const ChainResult r = run_chain(d, cfg);

    // The persistent coefficient must be flagged in and the fit must clearly
    // beat the all-zero estimate. Inclusion for the never-active columns
    // decays too slowly under the sticky stay priors to pin down here; the
    // full-length benchmark runs assert the below-1/2 side.
    REQUIRE(r.summary.inclusion.col(0).mean() > 0.9);
    const double fit_rmse = compute_rmse(r.summary.beta_median, *d.truth);
    const double zero_rmse = compute_rmse(Eigen::MatrixXd::Zero(200, 5), *d.truth);
    REQUIRE(fit_rmse < 0.5 * zero_rmse);

    const double sigma2_mean = r.summary.scalars[0].second.mean;
    REQUIRE(sigma2_mean > 0.5);
    REQUIRE(sigma2_mean < 2.0);
}

TEST_CASE("rmse helper", "[sampler]") {
    Eigen::MatrixXd est(2, 2), truth = Eigen::MatrixXd::Zero(2, 2);
    est << 1.0, 2.0, 3.0, 4.0;
    REQUIRE(compute_rmse(est, truth) == Approx(std::sqrt(7.5)));
    REQUIRE(compute_rmse(truth, truth) == 0.0);
    REQUIRE_THROWS_AS(compute_rmse(est, Eigen::MatrixXd::Zero(2, 3)), DomainError);
}

TEST_CASE("successive-conditional cycles keep the prior marginals", "[sampler][geweke]") {
    // Light version of the calibration check: parameters drawn from the
    // prior, then data simulation alternating with one kernel cycle. Each
    // recorded marginal must stay at its prior.
    McmcConfig cfg = ts::geweke_config(PriorKind::Nmig);
    const int T = 20, q = 2, cycles = 20000;
    Rng rng(202);
    Eigen::MatrixXd X(T, q);
    for (int t = 0; t < T; ++t)
        for (int j = 0; j < q; ++j) X(t, j) = rng.normal();

    const ts::GewekeStreams g = ts::run_geweke(X, cfg, cycles, rng);
    const Hyperparameters& hp = cfg.hp;
    const double ks_phi =
        ts::ks_statistic(g.phi, [&](double x) { return ts::beta_cdf(hp.a_phi, hp.b_phi, x); });
    const double ks_o11 = ts::ks_statistic(
        g.omega11, [&](double x) { return ts::beta_cdf(hp.a_omega, hp.b_omega, x); });
    const double ks_o00 = ts::ks_statistic(
        g.omega00, [&](double x) { return ts::beta_cdf(hp.a_omega, hp.b_omega, x); });
    const double ks_s2 = ts::ks_statistic(
        g.sigma2, [&](double x) { return ts::inverse_gamma_cdf(hp.a_sigma, hp.b_sigma, x); });
    INFO("phi " << ks_phi << " o11 " << ks_o11 << " o00 " << ks_o00 << " sigma2 " << ks_s2);
    REQUIRE(ks_phi < 0.025);
    REQUIRE(ks_o11 < 0.025);
    REQUIRE(ks_o00 < 0.025);
    REQUIRE(ks_s2 < 0.025);

    // tau2 and Q have no fixed-form prior marginals (they mix over omega), so
    // compare against fresh prior draws.
    Rng prior_rng(404);
    std::vector<double> tau2_prior, q_prior;
    for (int i = 0; i < 2 * cycles; ++i) {
        const McmcState st = ts::sample_prior_state(cfg, 2, q, prior_rng);
        for (int j = 0; j < q; ++j) {
            tau2_prior.push_back(st.tau2[j]);
            q_prior.push_back(st.Q[j]);
        }
    }
    REQUIRE(ts::ks_two_sample(g.tau2, tau2_prior) < 0.03);
    REQUIRE(ts::ks_two_sample(g.Q, q_prior) < 0.03);
}

TEST_CASE("cycle variant calibration comparison", "[.][variants]") {
    // Manual A/B harness: runs the successive-conditional check under the
    // alternative update order and the uncorrected stay-probability draw and
    // prints the statistics side by side.
    const int T = 20, q = 2, cycles = 10000;

    auto run_variant = [&](UpdateOrder order, OmegaUpdate omega, std::uint64_t seed) {
        McmcConfig cfg = ts::geweke_config(PriorKind::Nmig);
        cfg.order = order;
        cfg.omega_update = omega;
        Rng rng(seed);
        Eigen::MatrixXd X(T, q);
        for (int t = 0; t < T; ++t)
            for (int j = 0; j < q; ++j) X(t, j) = rng.normal();
        const ts::GewekeStreams g = ts::run_geweke(X, cfg, cycles, rng);
        const Hyperparameters& hp = cfg.hp;
        Rng prior_rng(seed + 1);
        std::vector<double> tau2_prior, q_prior;
        for (int i = 0; i < cycles; ++i) {
            const McmcState st = ts::sample_prior_state(cfg, 2, q, prior_rng);
            for (int j = 0; j < q; ++j) {
                tau2_prior.push_back(st.tau2[j]);
                q_prior.push_back(st.Q[j]);
            }
        }
        std::printf("order=%s omega=%s: phi %.4f o11 %.4f o00 %.4f sigma2 %.4f tau2 %.4f Q %.4f\n",
                    order == UpdateOrder::CollapsedFirst ? "collapsed" : "states-first",
                    omega == OmegaUpdate::ExactMh ? "exact" : "conjugate",
                    ts::ks_statistic(g.phi,
                                     [&](double x) { return ts::beta_cdf(hp.a_phi, hp.b_phi, x); }),
                    ts::ks_statistic(
                        g.omega11,
                        [&](double x) { return ts::beta_cdf(hp.a_omega, hp.b_omega, x); }),
                    ts::ks_statistic(
                        g.omega00,
                        [&](double x) { return ts::beta_cdf(hp.a_omega, hp.b_omega, x); }),
                    ts::ks_statistic(
                        g.sigma2,
                        [&](double x) { return ts::inverse_gamma_cdf(hp.a_sigma, hp.b_sigma, x); }),
                    ts::ks_two_sample(g.tau2, tau2_prior), ts::ks_two_sample(g.Q, q_prior));
    };

    run_variant(UpdateOrder::CollapsedFirst, OmegaUpdate::ExactMh, 501);
    run_variant(UpdateOrder::StatesFirst, OmegaUpdate::ExactMh, 501);
    run_variant(UpdateOrder::CollapsedFirst, OmegaUpdate::BetaConjugate, 501);
    SUCCEED();
}
