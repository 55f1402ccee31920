#pragma once

// Synthetic triangles from the generative hierarchy, plus the prior and data
// simulators used by the joint-distribution test of the sampler.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "skewres/distributions.hpp"
#include "skewres/error.hpp"
#include "skewres/model.hpp"
#include "skewres/random.hpp"
#include "skewres/triangle.hpp"

namespace skewres {

struct TruthConfig {
    int n = 16;
    double mu = 9.0;
    double rho = -0.89;
    double sigma2 = 0.14;
    double nu = 3.0;
    double sigma2_alpha = 0.13;
    double sigma2_beta = 0.05;
    double sigma2_gamma = 0.13;
    std::uint64_t seed = 1;

    /// 16 x 16 skew-t reference design.
    static TruthConfig sec31() { return {}; }

    /// Variances may be 0 (deterministic collapse); everything else must be in range.
    void validate(const ModelSpec& spec) const {
        if (n < 1) throw ConfigError("n must be >= 1");
        if (!std::isfinite(mu)) throw ConfigError("mu must be finite");
        if (!(rho > -1.0 && rho < 1.0)) throw ConfigError("rho must lie in (-1,1)");
        for (double v : {sigma2, sigma2_alpha, sigma2_beta, sigma2_gamma}) {
            if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("variances must be finite and >= 0");
        }
        if (spec.has_nu() && !(nu > nu_lower_bound(spec.mixing))) throw ConfigError("nu outside its support");
    }
};

struct TruthRecord {
    TruthConfig config;
    std::string model;
    std::vector<double> alpha;               // [i-1]
    std::vector<double> gamma;               // [t-1], t = 1..2n-1
    std::vector<std::vector<double>> beta;   // [i-1][j-1]
    std::vector<std::vector<double>> z;      // full square
    std::vector<std::vector<double>> y;      // exp(z)
    double future_total = 0.0;               // sum of y over the lower wedge
};

struct Simulation {
    Triangle triangle;
    TruthRecord truth;
};

inline Simulation simulate_triangle(const TruthConfig& cfg, const ModelSpec& spec, Rng& rng) {
    cfg.validate(spec);
    const int n = cfg.n;
    auto step = [&](double prev, double var) { return var > 0.0 ? prev + std::sqrt(var) * rng.normal() : prev; };

    TruthRecord tr;
    tr.config = cfg;
    tr.model = spec.code();
    tr.alpha.assign(n, 0.0);
    for (int i = 2; i <= n; ++i) tr.alpha[i - 1] = step(tr.alpha[i - 2], cfg.sigma2_alpha);
    tr.gamma.assign(2 * n - 1, 0.0);
    for (int t = 2; t <= 2 * n - 1; ++t) tr.gamma[t - 1] = step(tr.gamma[t - 2], cfg.sigma2_gamma);
    tr.beta.assign(n, std::vector<double>(n, 0.0));
    for (int i = 2; i <= n; ++i) {
        for (int j = 2; j <= n; ++j) tr.beta[i - 1][j - 1] = step(tr.beta[i - 2][j - 1], cfg.sigma2_beta);
    }

    const double rho = spec.skew ? cfg.rho : 0.0;
    const double delta = std::sqrt((1.0 - rho) * (1.0 + rho));
    const double sigma = std::sqrt(cfg.sigma2);
    tr.z.assign(n, std::vector<double>(n));
    tr.y.assign(n, std::vector<double>(n));
    Triangle tri(n);
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= n; ++j) {
            const double lam = sample_mixing(rng, spec.mixing, cfg.nu);
            double eps = delta * rng.normal();
            if (spec.skew) eps += rho * std::fabs(rng.normal());
            const double loc = cfg.mu + tr.alpha[i - 1] + tr.beta[i - 1][j - 1] + tr.gamma[i + j - 2];
            const double z = loc + sigma * eps / std::sqrt(lam);
            tr.z[i - 1][j - 1] = z;
            tr.y[i - 1][j - 1] = std::exp(z);
            if (tri.is_upper(i, j)) {
                tri.set_amount(i, j, tr.y[i - 1][j - 1]);
            } else {
                tr.future_total += tr.y[i - 1][j - 1];
            }
        }
    }
    return {std::move(tri), std::move(tr)};
}

// ---------------------------------------------------------------------------
// Prior and data simulators for the sampler's joint-distribution test
// ---------------------------------------------------------------------------

/// Draw every unknown (statics, effects, latent T and lambda) from the prior.
inline ParameterState draw_from_prior(const ModelSpec& spec, const ModelData& d, Rng& rng) {
    const Priors& p = spec.priors;
    ParameterState s;
    s.mu = sample_normal(rng, 0.0, p.s2_mu);
    s.rho = spec.skew ? 2.0 * sample_beta(rng, p.rho_c, p.rho_d) - 1.0 : 0.0;
    s.sigma2 = sample_inverse_gamma(rng, p.var_a, p.var_b);
    s.sigma2_alpha = sample_inverse_gamma(rng, p.var_a, p.var_b);
    s.sigma2_beta = sample_inverse_gamma(rng, p.var_a, p.var_b);
    s.sigma2_gamma = sample_inverse_gamma(rng, p.var_a, p.var_b);
    if (spec.has_nu()) s.nu = p.nu.sample(rng, nu_lower_bound(spec.mixing));
    const auto& L = d.layout;
    s.alpha.assign(L.n_alpha, 0.0);
    for (int i = 1; i < L.n_alpha; ++i) s.alpha[i] = sample_normal(rng, s.alpha[i - 1], s.sigma2_alpha);
    s.beta.assign(L.beta_cells.size(), 0.0);
    for (std::size_t b = 0; b < s.beta.size(); ++b) {
        s.beta[b] = sample_normal(rng, s.beta_value(L.beta_parent[b]), s.sigma2_beta);
    }
    s.gamma.assign(L.n_gamma, 0.0);
    for (int t = 1; t < L.n_gamma; ++t) s.gamma[t] = sample_normal(rng, s.gamma[t - 1], s.sigma2_gamma);
    s.lambda.resize(d.size());
    s.T.resize(d.size());
    for (std::size_t k = 0; k < d.size(); ++k) {
        s.lambda[k] = sample_mixing(rng, spec.mixing, s.nu);
        s.T[k] = spec.skew ? std::fabs(rng.normal()) * std::sqrt(s.sigma2 / s.lambda[k]) : 0.0;
    }
    return s;
}

/// Redraw every z_ij from its conditional given the full state.
inline void draw_data(const ModelSpec& spec, ModelData& d, const ParameterState& s, Rng& rng) {
    const double rho = spec.skew ? s.rho : 0.0;
    const double d2 = (1.0 - rho) * (1.0 + rho);
    for (std::size_t k = 0; k < d.size(); ++k) {
        CellData& c = d.cells[k];
        c.z = sample_normal(rng, s.location(c) + rho * s.T[k], s.sigma2 * d2 / s.lambda[k]);
    }
}

}  // namespace skewres
