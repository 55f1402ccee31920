#pragma once

// Posterior-predictive simulation of unobserved cells and the chain-ladder
// baseline.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "skewres/distributions.hpp"
#include "skewres/error.hpp"
#include "skewres/mcmc.hpp"
#include "skewres/model.hpp"
#include "skewres/stats.hpp"
#include "skewres/triangle.hpp"

namespace skewres {

enum class PredictionTarget { lower_triangle, holdout, both };

inline PredictionTarget parse_target(const std::string& s) {
    if (s == "holdout") return PredictionTarget::holdout;
    if (s == "lower" || s == "lower_triangle" || s == "future") return PredictionTarget::lower_triangle;
    if (s == "both") return PredictionTarget::both;
    throw ConfigError("unknown prediction target '" + s + "' (holdout, lower, both)");
}

inline const char* target_name(PredictionTarget t) {
    switch (t) {
        case PredictionTarget::lower_triangle: return "lower_triangle";
        case PredictionTarget::holdout: return "holdout";
        case PredictionTarget::both: return "both";
    }
    return "?";
}

inline std::vector<Cell> target_cells(const Triangle& tri, PredictionTarget target) {
    std::vector<Cell> out;
    for (int i = 1; i <= tri.n(); ++i) {
        for (int j = 1; j <= tri.n(); ++j) {
            const CellMask m = tri.mask(i, j);
            const bool take = (m == CellMask::holdout && target != PredictionTarget::lower_triangle) ||
                              (m == CellMask::future && target != PredictionTarget::holdout);
            if (take) out.push_back({i, j});
        }
    }
    return out;
}

struct PredictiveDraws {
    std::vector<Cell> cells;
    std::vector<std::vector<double>> log_samples;  // [cell][draw]
    std::vector<std::vector<double>> samples;      // exp(log_samples)
    std::vector<double> reserve_totals;            // [draw]
    PredictionTarget target = PredictionTarget::holdout;

    [[nodiscard]] std::size_t draw_count() const { return reserve_totals.size(); }
};

/// Composition sampling from posterior draws: per draw, extend the dynamic
/// effects by their random walks where the chain has none, then draw lambda,
/// T and z for each prediction cell.
inline PredictiveDraws predictive_draws(const ModelSpec& spec, const EffectLayout& layout,
                                        const std::vector<ParameterState>& draws, const Triangle& tri,
                                        PredictionTarget target, Rng& rng) {
    if (layout.n != tri.n()) throw InputError("chain was fitted on a triangle of a different size");
    PredictiveDraws out;
    out.target = target;
    out.cells = target_cells(tri, target);
    if (out.cells.empty()) throw InputError("empty prediction set for target " + std::string(target_name(target)));
    for (const Cell& c : out.cells) {
        if (layout.beta_at(c.i, c.j) >= 0) {
            throw InputError("prediction cell (" + std::to_string(c.i) + "," + std::to_string(c.j) +
                             ") overlaps the chain's training cells");
        }
    }
    if (draws.empty()) throw InputError("no posterior draws");

    const int n = tri.n();
    const std::size_t K = draws.size();
    out.log_samples.assign(out.cells.size(), std::vector<double>(K));
    out.samples.assign(out.cells.size(), std::vector<double>(K));
    out.reserve_totals.assign(K, 0.0);

    std::vector<double> alpha(n), gamma(2 * n - 1);
    std::vector<double> beta(static_cast<std::size_t>(n) * n);
    auto rw = [&](double prev, double var) { return var > 0.0 ? prev + std::sqrt(var) * rng.normal() : prev; };

    for (std::size_t k = 0; k < K; ++k) {
        const ParameterState& s = draws[k];
        if (s.alpha.size() != static_cast<std::size_t>(layout.n_alpha) || s.beta.size() != layout.beta_cells.size() ||
            s.gamma.size() != static_cast<std::size_t>(layout.n_gamma)) {
            throw InputError("posterior draw does not match the effect layout");
        }
        for (int i = 1; i <= n; ++i) {
            alpha[i - 1] = i <= layout.n_alpha ? s.alpha[i - 1] : rw(alpha[i - 2], s.sigma2_alpha);
        }
        for (int t = 1; t <= 2 * n - 1; ++t) {
            gamma[t - 1] = t <= layout.n_gamma ? s.gamma[t - 1] : rw(gamma[t - 2], s.sigma2_gamma);
        }
        for (int i = 1; i <= n; ++i) {
            for (int j = 1; j <= n; ++j) {
                double& b = beta[static_cast<std::size_t>(i - 1) * n + (j - 1)];
                if (i == 1 || j == 1) {
                    b = 0.0;
                } else if (const int idx = layout.beta_at(i, j); idx >= 0) {
                    b = s.beta[idx];
                } else {
                    b = rw(beta[static_cast<std::size_t>(i - 2) * n + (j - 1)], s.sigma2_beta);
                }
            }
        }
        const double rho = spec.skew ? s.rho : 0.0;
        const double d2 = (1.0 - rho) * (1.0 + rho);
        for (std::size_t c = 0; c < out.cells.size(); ++c) {
            const auto [i, j] = out.cells[c];
            const double loc = s.mu + alpha[i - 1] + beta[static_cast<std::size_t>(i - 1) * n + (j - 1)] +
                               gamma[i + j - 2];
            const double lam = sample_mixing(rng, spec.mixing, s.nu);
            double z = loc;
            if (spec.skew) {
                const double T = std::fabs(rng.normal()) * std::sqrt(s.sigma2 / lam);
                z += rho * T;
            }
            z += std::sqrt(s.sigma2 * d2 / lam) * rng.normal();
            if (!std::isfinite(z)) throw NumericError("non-finite predictive draw");
            out.log_samples[c][k] = z;
            out.samples[c][k] = std::exp(z);
            out.reserve_totals[k] += out.samples[c][k];
        }
    }
    return out;
}

inline const std::vector<double>& default_reserve_probs() {
    static const std::vector<double> p = {0.20, 0.35, 0.50, 0.65, 0.80};
    return p;
}

inline std::vector<double> reserve_quantiles(const PredictiveDraws& p, const std::vector<double>& probs) {
    if (p.reserve_totals.empty()) throw InputError("no reserve totals");
    std::vector<double> sorted = p.reserve_totals;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> out;
    for (double q : probs) {
        if (!(q > 0.0 && q < 1.0)) throw ConfigError("quantile probability must lie in (0,1)");
        out.push_back(quantile_sorted(sorted, q));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Chain ladder
// ---------------------------------------------------------------------------

struct CellProjection {
    int i;
    int j;
    double amount;  // incremental
};

struct ChainLadderResult {
    std::vector<std::optional<double>> factors;  // f_j, j = 1..n-1 (index j-1)
    std::vector<CellProjection> cells;
    std::vector<Cell> unprojectable;             // beyond the last estimable factor
    std::vector<double> row_reserves;            // per accident year
    double total = 0.0;
};

/// Volume-weighted development factors from observed cells, projected onto
/// the target cells. Cells that need a factor no row can estimate are
/// reported as unprojectable and left out of the total.
inline ChainLadderResult chain_ladder(const Triangle& tri, PredictionTarget target) {
    const int n = tri.n();
    // Observed cumulative per row; rows must be observed as a prefix.
    std::vector<std::vector<double>> C(n);
    int rows_observed = 0;
    for (int i = 1; i <= n; ++i) {
        double acc = 0.0;
        for (int j = 1; j <= n; ++j) {
            if (tri.mask(i, j) != CellMask::observed) break;
            acc += tri.at(i, j);
            C[i - 1].push_back(acc);
        }
        if (!C[i - 1].empty()) ++rows_observed;
    }
    if (rows_observed < 2) throw InputError("chain ladder needs at least two observed accident years");

    ChainLadderResult res;
    res.factors.assign(std::max(n - 1, 0), std::nullopt);
    for (int j = 1; j < n; ++j) {
        double num = 0.0, den = 0.0;
        int rows = 0;
        for (int i = 0; i < n; ++i) {
            if (static_cast<int>(C[i].size()) >= j + 1) {
                num += C[i][j];
                den += C[i][j - 1];
                ++rows;
            }
        }
        if (rows == 0) continue;
        if (den == 0.0) throw InputError("chain ladder: zero cumulative total in development column " + std::to_string(j));
        res.factors[j - 1] = num / den;
    }

    std::vector<bool> wanted(static_cast<std::size_t>(n) * n, false);
    for (const Cell& c : target_cells(tri, target)) wanted[static_cast<std::size_t>(c.i - 1) * n + (c.j - 1)] = true;

    res.row_reserves.assign(n, 0.0);
    for (int i = 1; i <= n; ++i) {
        const int last = static_cast<int>(C[i - 1].size());
        double prev = last > 0 ? C[i - 1].back() : 0.0;
        bool ok = last > 0;
        for (int j = last + 1; j <= n; ++j) {
            const bool want = wanted[static_cast<std::size_t>(i - 1) * n + (j - 1)];
            if (ok && !res.factors[j - 2]) ok = false;
            if (!ok) {
                if (want) res.unprojectable.push_back({i, j});
                continue;
            }
            const double cur = prev * *res.factors[j - 2];
            if (want) {
                res.cells.push_back({i, j, cur - prev});
                res.row_reserves[i - 1] += cur - prev;
                res.total += cur - prev;
            }
            prev = cur;
        }
    }
    return res;
}

}  // namespace skewres
