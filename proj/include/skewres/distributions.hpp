#pragma once

// Random-variate generators and log-density kernels for every law that appears
// in the full conditionals of the skew scale-mixture sampler.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "skewres/error.hpp"
#include "skewres/random.hpp"

namespace skewres {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace detail {

inline void require_positive(double v, const char* what) {
    if (!(v > 0.0) || std::isnan(v)) {
        throw NumericError(std::string(what) + " must be > 0 (got " + std::to_string(v) + ")");
    }
}

// Marsaglia & Tsang (2000); shape < 1 handled by the U^{1/a} boost in log space.
inline double standard_gamma(Rng& rng, double shape) {
    if (shape < 1.0) {
        const double g = standard_gamma(rng, shape + 1.0);
        return std::exp(std::log(g) + std::log(rng.uniform()) / shape);
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
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

inline double sample_normal(Rng& rng, double mean, double variance) {
    detail::require_positive(variance, "normal variance");
    return mean + std::sqrt(variance) * rng.normal();
}

/// Gaussian restricted to [lower, inf).
///
/// Standardized bound below 0.5 uses plain rejection from the parent normal;
/// at or above it, Robert's (1995) translated-exponential proposal with the
/// optimal rate.
inline double sample_truncated_normal_lower(Rng& rng, double mean, double variance, double lower) {
    detail::require_positive(variance, "truncated normal variance");
    const double sd = std::sqrt(variance);
    const double a = (lower - mean) / sd;
    double z;
    if (a < 0.5) {
        do {
            z = rng.normal();
        } while (z < a);
    } else {
        const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
        for (;;) {
            z = a + rng.exponential() / rate;
            const double d = z - rate;
            if (rng.uniform() <= std::exp(-0.5 * d * d)) break;
        }
    }
    const double x = mean + sd * z;
    return x < lower ? lower : x;
}

/// Gamma with shape/rate parameterization (mean shape/rate).
inline double sample_gamma(Rng& rng, double shape, double rate) {
    detail::require_positive(shape, "gamma shape");
    detail::require_positive(rate, "gamma rate");
    return detail::standard_gamma(rng, shape) / rate;
}

/// Inverse gamma: 1/X with X ~ Gamma(shape, rate); mean rate/(shape-1).
inline double sample_inverse_gamma(Rng& rng, double shape, double rate) {
    detail::require_positive(shape, "inverse gamma shape");
    detail::require_positive(rate, "inverse gamma rate");
    return rate / detail::standard_gamma(rng, shape);
}

inline double sample_beta(Rng& rng, double a, double b) {
    detail::require_positive(a, "beta a");
    detail::require_positive(b, "beta b");
    const double x = detail::standard_gamma(rng, a);
    const double y = detail::standard_gamma(rng, b);
    return x / (x + y);
}

/// Gamma(shape, rate) restricted to (0, upper).
///
/// When the untruncated mean lies inside the interval, plain rejection accepts
/// with probability above 1/2. Otherwise the Philippe (1997) representation is
/// used: with y = x/upper the density is proportional to y^{a-1} e^{-c y},
/// c = rate*upper, which expands into a mixture of Beta(a, k+1) laws with
/// weights prod_{m<=k} c/(a+m). Since c < a there, the weights decay
/// geometrically from k = 0 and the series is summed to machine precision.
inline double sample_gamma_right_truncated(Rng& rng, double shape, double rate, double upper) {
    detail::require_positive(shape, "truncated gamma shape");
    detail::require_positive(rate, "truncated gamma rate");
    detail::require_positive(upper, "truncated gamma upper bound");
    if (std::isinf(upper)) return sample_gamma(rng, shape, rate);

    const double c = rate * upper;
    if (c >= shape) {
        for (;;) {
            const double x = detail::standard_gamma(rng, shape) / rate;
            if (x < upper && x > 0.0) return x;
        }
    }

    // Normalizing sum of the mixture weights (w_0 = 1).
    double total = 0.0;
    double w = 1.0;
    for (int k = 0;; ++k) {
        total += w;
        w *= c / (shape + k + 1);
        if (w < 1e-17 * total) break;
    }
    for (;;) {
        const double target = rng.uniform() * total;
        double acc = 0.0;
        w = 1.0;
        int k = 0;
        for (;; ++k) {
            acc += w;
            if (acc >= target) break;
            w *= c / (shape + k + 1);
            if (w < 1e-17 * total) break;
        }
        const double y = sample_beta(rng, shape, static_cast<double>(k) + 1.0);
        const double x = upper * y;
        if (x > 0.0 && x < upper) return x;
    }
}

/// Gamma(shape, rate) restricted to [lower, inf).
inline double sample_gamma_left_truncated(Rng& rng, double shape, double rate, double lower) {
    detail::require_positive(shape, "truncated gamma shape");
    detail::require_positive(rate, "truncated gamma rate");
    if (!(lower >= 0.0)) throw NumericError("truncated gamma lower bound must be >= 0");
    if (lower == 0.0) return sample_gamma(rng, shape, rate);

    // Work on the unit-rate scale: Y = rate * X truncated to [c, inf).
    const double c = rate * lower;
    const bool naive = shape >= 1.0 ? c <= shape : c < 1.0;
    double y;
    if (naive) {
        do {
            y = detail::standard_gamma(rng, shape);
        } while (y < c);
    } else if (shape >= 1.0) {
        // Log-concave: tangent line at c is an exponential envelope.
        const double r = 1.0 - (shape - 1.0) / c;
        for (;;) {
            y = c + rng.exponential() / r;
            const double log_accept = (shape - 1.0) * (std::log(y / c) - (y - c) / c);
            if (std::log(rng.uniform()) <= log_accept) break;
        }
    } else {
        for (;;) {
            y = c + rng.exponential();
            if (std::log(rng.uniform()) <= (shape - 1.0) * std::log(y / c)) break;
        }
    }
    const double x = y / rate;
    return x < lower ? lower : x;
}

/// Parameters of the generalized inverse Gaussian law with density
/// proportional to x^{omega-1} exp(-(chi/x + psi*x)/2).
struct GigParams {
    double omega;
    double chi;
    double psi;
};

/// GIG variate via Devroye (2014), which is uniformly fast in the parameters.
///
/// The sampler works on the log-concave density of a log-transformed variable
/// and maps back in log space, so chi or psi spanning many orders of
/// magnitude does not overflow intermediate quantities.
inline double sample_gig(Rng& rng, const GigParams& p) {
    detail::require_positive(p.chi, "GIG chi");
    detail::require_positive(p.psi, "GIG psi");
    if (!std::isfinite(p.omega)) throw NumericError("GIG omega must be finite");

    const double w = std::sqrt(p.chi * p.psi);        // concentration
    const double log_eta = 0.5 * (std::log(p.chi) - std::log(p.psi));  // scale
    const bool negative = p.omega < 0.0;
    const double lam = std::fabs(p.omega);
    const double root = std::hypot(w, lam);
    const double alpha = w * w / (root + lam);  // sqrt(w^2 + lam^2) - lam without cancellation

    auto psi_fn = [&](double x) {
        return -alpha * (std::cosh(x) - 1.0) - lam * (std::expm1(x) - x);
    };
    auto psi_deriv = [&](double x) { return -alpha * std::sinh(x) - lam * std::expm1(x); };

    double t;
    double tmp = -psi_fn(1.0);
    if (tmp < 0.5) {
        t = std::log(4.0 / (alpha + 2.0 * lam));
    } else if (tmp <= 2.0) {
        t = 1.0;
    } else {
        t = std::sqrt(2.0 / (alpha + lam));
    }
    double s;
    tmp = -psi_fn(-1.0);
    if (tmp < 0.5) {
        const double inv_a = 1.0 / alpha;
        s = std::log(1.0 + inv_a + std::sqrt(inv_a * (inv_a + 2.0)));
        if (lam > 0.0) s = std::fmin(s, 1.0 / lam);
    } else if (tmp <= 2.0) {
        s = 1.0;
    } else {
        s = std::sqrt(4.0 / (alpha * std::cosh(1.0) + lam));
    }

    const double eta = -psi_fn(t);
    const double zeta = -psi_deriv(t);
    const double theta = -psi_fn(-s);
    const double xi = psi_deriv(-s);
    const double pp = 1.0 / xi;
    const double r = 1.0 / zeta;
    const double t1 = t - r * eta;
    const double s1 = s - pp * theta;
    const double q = t1 + s1;
    const double total = pp + q + r;
    const double fq = q / total;
    const double fqr = (q + r) / total;

    double x;
    for (;;) {
        const double u = rng.uniform();
        const double v = rng.uniform();
        const double wu = rng.uniform();
        if (u < fq) {
            x = -s1 + q * v;
        } else if (u < fqr) {
            x = t1 - r * std::log(v);
        } else {
            x = -s1 + pp * std::log(v);
        }
        double log_env;
        if (x < -s1) {
            log_env = -theta + xi * (x + s);
        } else if (x <= t1) {
            log_env = 0.0;
        } else {
            log_env = -eta - zeta * (x - t);
        }
        if (std::log(wu) + log_env <= psi_fn(x)) break;
    }
    // Mode-centering shift: log((lam + sqrt(lam^2 + w^2)) / w).
    const double shift = std::asinh(lam / w);
    const double log_y = negative ? -(shift + x) : (shift + x);
    return std::exp(log_eta + log_y);
}

// ---------------------------------------------------------------------------
// Densities
// ---------------------------------------------------------------------------

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

inline double normal_logpdf(double x, double mean, double variance) {
    const double d = x - mean;
    return -kLogSqrt2Pi - 0.5 * std::log(variance) - 0.5 * d * d / variance;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double gamma_logpdf(double x, double shape, double rate) {
    if (!(x > 0.0)) return -kInf;
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

inline double inverse_gamma_logpdf(double x, double shape, double rate) {
    if (!(x > 0.0)) return -kInf;
    return shape * std::log(rate) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - rate / x;
}

inline double beta_logpdf(double x, double a, double b) {
    if (!(x > 0.0 && x < 1.0)) return -kInf;
    return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * std::log(x) +
           (b - 1.0) * std::log1p(-x);
}

/// Unnormalized GIG log density.
inline double gig_log_kernel(double x, const GigParams& p) {
    if (!(x > 0.0)) return -kInf;
    return (p.omega - 1.0) * std::log(x) - 0.5 * (p.chi / x + p.psi * x);
}

/// Azzalini skew-normal density 2 phi(z; mu, sigma2) Phi(kappa (z - mu) / sigma).
inline double skew_normal_pdf(double z, double mu, double sigma2, double kappa) {
    detail::require_positive(sigma2, "skew-normal sigma2");
    const double sigma = std::sqrt(sigma2);
    return 2.0 * std::exp(normal_logpdf(z, mu, sigma2)) * normal_cdf(kappa * (z - mu) / sigma);
}

}  // namespace skewres
