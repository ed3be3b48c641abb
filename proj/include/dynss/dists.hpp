#pragma once

// Random draws and density evaluations used throughout the sampler.
//
// Parametrization contract (applies to the whole library):
//   Gamma(shape, rate)          mean = shape/rate
//   InverseGamma(shape, scale)  mean = scale/(shape-1)
//   Exponential(rate)           mean = 1/rate
//   GIG(p, g, h)                density ~ x^(p-1) exp(-(g*x + h/x)/2), x > 0

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>

#include <boost/math/special_functions/bessel.hpp>

#include "dynss/errors.hpp"

namespace dynss {

inline constexpr double pi = 3.14159265358979323846;

// Deterministic draw stream: a fixed seed reproduces the exact sequence.
// Primitive draws are hand-rolled on top of mt19937_64 so results do not
// depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // Standard normal via the Marsaglia polar method, one spare cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Derive a well-separated child seed (splitmix64 step); used for replications.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline double sample_exponential(Rng& rng, double rate) {
    if (!(rate > 0.0)) throw DomainError("sample_exponential: rate must be positive");
    return -std::log1p(-rng.uniform()) / rate;
}

// Marsaglia-Tsang squeeze method; shape < 1 handled by the boost trick
// Gamma(a) = Gamma(a+1) * U^(1/a).
inline double sample_gamma(Rng& rng, double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0))
        throw DomainError("sample_gamma: shape and rate must be positive");
    if (shape < 1.0) {
        double u = rng.uniform();
        while (u == 0.0) u = rng.uniform();
        return sample_gamma(rng, shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = rng.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v / rate;
        if (u > 0.0 && std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
}

inline double sample_inverse_gamma(Rng& rng, double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0))
        throw DomainError("sample_inverse_gamma: shape and scale must be positive");
    return 1.0 / sample_gamma(rng, shape, scale);
}

inline double sample_beta(Rng& rng, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw DomainError("sample_beta: parameters must be positive");
    for (;;) {
        const double x = sample_gamma(rng, a, 1.0);
        const double y = sample_gamma(rng, b, 1.0);
        if (x + y > 0.0) return x / (x + y);
    }
}

// Generalized inverse Gaussian parameters; density ~ x^(p-1) exp(-(g*x + h/x)/2).
struct GigParams {
    double p = 0.0; // order, any real
    double g = 1.0; // coefficient on x, > 0
    double h = 1.0; // coefficient on 1/x, > 0

    void validate() const {
        if (!std::isfinite(p) || !(g > 0.0) || !(h > 0.0))
            throw DomainError("GigParams: need finite p and g > 0, h > 0");
    }
};

// GIG draw via ratio-of-uniforms with the region shifted to the density mode
// (Hormann & Leydold 2014). One algorithm covers the whole parameter range
// this model produces, including very negative orders like p = -99.5: after
// rescaling x = sqrt(h/g) * z the quasi-density z^(p-1) exp(-w/2 (z + 1/z))
// is evaluated relative to its mode in log scale, so nothing over- or
// underflows. The u-bounds come from the cubic satisfied by the extrema of
// (z - m) sqrt(density); all three roots are evaluated and the widest
// bracket is used, which keeps the envelope valid for p < 1 as well.
inline double sample_gig(Rng& rng, const GigParams& par) {
    par.validate();
    // X ~ GIG(p, g, h) iff 1/X ~ GIG(-p, h, g). Strongly negative orders put
    // the mass at tiny z where the envelope cubic mixes root scales twenty
    // orders of magnitude apart and its closed-form solution loses them;
    // sampling the reciprocal keeps all three roots at a common scale.
    if (par.p <= -1.0) return 1.0 / sample_gig(rng, GigParams{-par.p, par.h, par.g});
    const double omega = std::sqrt(par.g * par.h);
    const double alpha = std::sqrt(par.h / par.g);
    const double lm1 = par.p - 1.0;
    const double m = (lm1 + std::sqrt(lm1 * lm1 + omega * omega)) / omega; // mode

    auto logq = [&](double z) { return lm1 * std::log(z) - 0.5 * omega * (z + 1.0 / z); };
    const double logqm = logq(m);

    // z^3 + a z^2 + b z + c = 0 holds at the extrema of (z - m) sqrt(q(z)).
    const double a = -(2.0 * (par.p + 1.0) / omega + m);
    const double b = 2.0 * lm1 * m / omega - 1.0;
    const double c = m;
    const double pp = b - a * a / 3.0;
    const double qq = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    double arg = -qq / (2.0 * std::sqrt(std::max(-pp * pp * pp / 27.0, 0.0)));
    if (!std::isfinite(arg)) arg = 0.0;
    arg = std::min(1.0, std::max(-1.0, arg));
    const double fi = std::acos(arg);
    const double fak = 2.0 * std::sqrt(std::max(-pp / 3.0, 0.0));

    double uplus = 0.0, uminus = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double root = fak * std::cos(fi / 3.0 + 2.0 * pi * k / 3.0) - a / 3.0;
        if (!(root > 0.0)) continue;
        const double u = (root - m) * std::exp(0.5 * (logq(root) - logqm));
        uplus = std::max(uplus, u);
        uminus = std::min(uminus, u);
    }
    if (!(uplus > 0.0) || !(uminus < 0.0) || !std::isfinite(uplus) || !std::isfinite(uminus))
        throw NumericalError("sample_gig: degenerate ratio-of-uniforms envelope");

    for (long attempt = 0; attempt < 1000000L; ++attempt) {
        const double u = uminus + rng.uniform() * (uplus - uminus);
        const double v = rng.uniform();
        if (v == 0.0) continue;
        const double z = u / v + m;
        if (z > 0.0 && 2.0 * std::log(v) <= logq(z) - logqm) return alpha * z;
    }
    throw NumericalError("sample_gig: acceptance loop failed to terminate");
}

// ---- log densities (unnormalized where noted) ----

inline double gamma_logpdf(double x, double shape, double rate) {
    if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

inline double inverse_gamma_logpdf(double x, double shape, double scale) {
    if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
    return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

inline double beta_logpdf(double x, double a, double b) {
    if (!(x > 0.0) || !(x < 1.0)) return -std::numeric_limits<double>::infinity();
    return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b)
         + (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x);
}

inline double normal_logpdf(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * (std::log(2.0 * pi * var) + d * d / var);
}

// Unnormalized; normalization needs a Bessel K and is never required here.
inline double gig_logpdf_unnorm(double x, const GigParams& par) {
    if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
    return (par.p - 1.0) * std::log(x) - 0.5 * (par.g * x + par.h / x);
}

inline double laplace_pdf(double x, double scale) {
    if (!(scale > 0.0)) throw DomainError("laplace_pdf: scale must be positive");
    return std::exp(-std::abs(x) / scale) / (2.0 * scale);
}

// Normal-Gamma density: the marginal of beta when beta | psi ~ N(0, psi) and
// psi ~ Gamma(shape, 1/(2*gamma_sq)).  Variance 2*shape*gamma_sq, excess
// kurtosis 3/shape.  Closed form via the modified Bessel function:
//   f(x) = |x|^(shape-1/2) K_(shape-1/2)(|x|/gamma)
//          / (sqrt(pi) 2^(shape-1/2) gamma^(shape+1/2) Gamma(shape))
// Unbounded at 0 for shape <= 1/2 (still integrable).
inline double density_normal_gamma(double x, double shape, double gamma_sq) {
    if (!(shape > 0.0) || !(gamma_sq > 0.0))
        throw DomainError("density_normal_gamma: shape and gamma_sq must be positive");
    const double gam = std::sqrt(gamma_sq);
    const double ax = std::abs(x);
    const double ord = shape - 0.5;
    if (ax == 0.0) {
        if (ord > 0.0)
            return std::exp(std::lgamma(ord) - std::lgamma(shape)) / (2.0 * std::sqrt(pi) * gam);
        return std::numeric_limits<double>::infinity();
    }
    const double z = ax / gam;
    if (z > 700.0) return 0.0; // Bessel K underflows; density is below 1e-300 here
    const double logk = std::log(boost::math::cyl_bessel_k(std::abs(ord), z));
    const double logf = ord * std::log(ax) + logk
        - (0.5 * std::log(pi) + ord * std::log(2.0) + (shape + 0.5) * std::log(gam) + std::lgamma(shape));
    return std::exp(logf);
}

// Student t with dof degrees of freedom, location 0 and squared scale
// scale_sq (variance = scale_sq * dof/(dof-2) for dof > 2).
inline double density_scaled_t(double x, double dof, double scale_sq) {
    if (!(dof > 0.0) || !(scale_sq > 0.0))
        throw DomainError("density_scaled_t: dof and scale_sq must be positive");
    const double lognorm = std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof)
        - 0.5 * std::log(dof * pi * scale_sq);
    return std::exp(lognorm - 0.5 * (dof + 1.0) * std::log1p(x * x / (dof * scale_sq)));
}

} // namespace dynss
