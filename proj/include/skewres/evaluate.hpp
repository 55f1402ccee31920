#pragma once

// Forecast scoring (RMSPE, interval score, interval width, CRPS), standardized
// Bayesian residuals and chain diagnostics (Geweke CD, effective sample size).

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skewres/error.hpp"
#include "skewres/mcmc.hpp"
#include "skewres/model.hpp"
#include "skewres/reserving.hpp"
#include "skewres/stats.hpp"

namespace skewres {

inline double rmspe(const std::vector<double>& predicted, const std::vector<double>& actual) {
    if (predicted.size() != actual.size()) throw InputError("rmspe: cell sets differ in size");
    if (predicted.empty()) throw InputError("rmspe: no scored cells");
    double s = 0.0;
    for (std::size_t k = 0; k < predicted.size(); ++k) s += std::pow(actual[k] - predicted[k], 2);
    return std::sqrt(s / static_cast<double>(predicted.size()));
}

inline double wci(double l, double u) {
    if (l > u) throw InputError("interval lower bound exceeds upper bound");
    return u - l;
}

inline double interval_score(double l, double u, double z, double psi) {
    if (!(psi > 0.0 && psi < 1.0)) throw ConfigError("interval level psi must lie in (0,1)");
    double s = wci(l, u);
    if (z < l) s += 2.0 / psi * (l - z);
    if (z > u) s += 2.0 / psi * (z - u);
    return s;
}

enum class CrpsOrientation {
    standard,  // E|X - z| - E|X - X'| / 2
    printed    // E|X - X'| - E|X - z| / 2 (not a proper score)
};

/// Kernel-form CRPS; E|X - X'| is the all-pairs U-statistic over the draws.
inline double crps_from_draws(std::vector<double> x, double z,
                              CrpsOrientation orientation = CrpsOrientation::standard) {
    const std::size_t m = x.size();
    if (m < 2) throw InputError("CRPS needs at least two draws");
    double abs_err = 0.0;
    for (double v : x) abs_err += std::fabs(v - z);
    abs_err /= static_cast<double>(m);
    std::sort(x.begin(), x.end());
    double pair = 0.0;  // sum_{i<j} (x_(j) - x_(i))
    for (std::size_t k = 0; k < m; ++k) {
        pair += x[k] * (2.0 * static_cast<double>(k) + 1.0 - static_cast<double>(m));
    }
    const double spread = 2.0 * pair / (static_cast<double>(m) * static_cast<double>(m - 1));
    return orientation == CrpsOrientation::standard ? abs_err - 0.5 * spread : spread - 0.5 * abs_err;
}

// ---------------------------------------------------------------------------
// Score reports
// ---------------------------------------------------------------------------

struct CellScore {
    Cell cell;
    double actual;
    double median;
    double lower;
    double upper;
    double is;
    double wci;
    double crps;
};

struct ScoreReport {
    std::vector<CellScore> cells;
    double psi = 0.05;
    double average_is = 0.0;
    double average_wci = 0.0;
    double rmspe = 0.0;
    double average_crps = 0.0;
};

/// Score forecast draws against actual values; both already on the scoring scale.
inline ScoreReport score_forecasts(const std::vector<Cell>& cells, const std::vector<std::vector<double>>& draws,
                                   const std::vector<double>& actual, double psi,
                                   CrpsOrientation orientation = CrpsOrientation::standard) {
    if (cells.size() != draws.size() || cells.size() != actual.size()) throw InputError("score: cell sets differ");
    if (cells.empty()) throw InputError("score: no cells to score");
    if (!(psi > 0.0 && psi < 1.0)) throw ConfigError("interval level psi must lie in (0,1)");
    ScoreReport r;
    r.psi = psi;
    std::vector<double> med, act;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        std::vector<double> sorted = draws[c];
        std::sort(sorted.begin(), sorted.end());
        CellScore s;
        s.cell = cells[c];
        s.actual = actual[c];
        s.median = quantile_sorted(sorted, 0.5);
        s.lower = quantile_sorted(sorted, 0.5 * psi);
        s.upper = quantile_sorted(sorted, 1.0 - 0.5 * psi);
        s.is = interval_score(s.lower, s.upper, s.actual, psi);
        s.wci = wci(s.lower, s.upper);
        s.crps = crps_from_draws(draws[c], s.actual, orientation);
        r.average_is += s.is;
        r.average_wci += s.wci;
        r.average_crps += s.crps;
        med.push_back(s.median);
        act.push_back(s.actual);
        r.cells.push_back(s);
    }
    const double n = static_cast<double>(cells.size());
    r.average_is /= n;
    r.average_wci /= n;
    r.average_crps /= n;
    r.rmspe = rmspe(med, act);
    return r;
}

// ---------------------------------------------------------------------------
// Residuals
// ---------------------------------------------------------------------------

struct ResidualSummary {
    std::vector<Cell> cells;
    std::vector<std::vector<double>> draws;  // [cell][draw]
    std::vector<double> medians;
    double fraction_outside = 0.0;            // of medians outside [-2, 2]
};

/// r_ij = (z_ij - mu_ij - rho T_ij) / sqrt(sigma2 (1 - rho^2) / lambda_ij) per stored draw.
inline ResidualSummary bayesian_residuals(const ChainOutput& chain, const ModelData& d) {
    ResidualSummary out;
    for (const auto& c : d.cells) out.cells.push_back({c.i, c.j});
    out.draws.assign(d.size(), {});
    for (const auto& s : chain.draws) {
        if (s.lambda.size() != d.size() || s.T.size() != d.size()) {
            throw InputError("residuals need latent fields; re-run the fit with latent storage enabled");
        }
        const double d2 = (1.0 - s.rho) * (1.0 + s.rho);
        for (std::size_t k = 0; k < d.size(); ++k) {
            const double e = d.cells[k].z - s.location(d.cells[k]) - s.rho * s.T[k];
            out.draws[k].push_back(e / std::sqrt(s.sigma2 * d2 / s.lambda[k]));
        }
    }
    if (chain.draws.empty()) throw InputError("no posterior draws");
    std::size_t outside = 0;
    for (const auto& r : out.draws) {
        out.medians.push_back(median(r));
        if (std::fabs(out.medians.back()) > 2.0) ++outside;
    }
    out.fraction_outside = static_cast<double>(outside) / static_cast<double>(d.size());
    return out;
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

namespace detail {

inline void require_draws(const std::vector<double>& x) {
    if (x.size() < 100) throw InputError("diagnostics need at least 100 draws (got " + std::to_string(x.size()) + ")");
}

/// Spectral density at frequency zero from an AR(p) Yule-Walker fit with the
/// order chosen by AIC, as in coda's spectrum0.ar. nullopt for a constant series.
inline std::optional<double> spectrum0_ar(const std::vector<double>& x) {
    const std::size_t n = x.size();
    const double m = mean(x);
    const int max_order = std::min<int>(static_cast<int>(n) - 1,
                                        static_cast<int>(std::floor(10.0 * std::log10(static_cast<double>(n)))));
    std::vector<double> acov(max_order + 1, 0.0);
    for (int lag = 0; lag <= max_order; ++lag) {
        double s = 0.0;
        for (std::size_t t = lag; t < n; ++t) s += (x[t] - m) * (x[t - lag] - m);
        acov[lag] = s / static_cast<double>(n);
    }
    if (!(acov[0] > 0.0)) return std::nullopt;

    // Levinson-Durbin recursion, keeping the AIC-best order.
    std::vector<double> phi, best_phi;
    double v = acov[0];
    double best_aic = static_cast<double>(n) * std::log(v);
    double best_v = v;
    for (int k = 1; k <= max_order; ++k) {
        double num = acov[k];
        for (int j = 1; j < k; ++j) num -= phi[j - 1] * acov[k - j];
        const double refl = num / v;
        std::vector<double> next(k);
        for (int j = 1; j < k; ++j) next[j - 1] = phi[j - 1] - refl * phi[k - j - 1];
        next[k - 1] = refl;
        phi = std::move(next);
        v *= (1.0 - refl * refl);
        if (!(v > 0.0)) break;
        const double aic = static_cast<double>(n) * std::log(v) + 2.0 * k;
        if (aic < best_aic) {
            best_aic = aic;
            best_phi = phi;
            best_v = v;
        }
    }
    const double order = static_cast<double>(best_phi.size());
    const double var_pred = best_v * static_cast<double>(n) / (static_cast<double>(n) - (order + 1.0));
    double s = 1.0;
    for (double p : best_phi) s -= p;
    return var_pred / (s * s);
}

}  // namespace detail

/// Geweke convergence diagnostic: z-score of the difference between the means
/// of the first 10% and the last 50% of the chain.
inline std::optional<double> geweke_cd(const std::vector<double>& x, double first = 0.1, double last = 0.5) {
    detail::require_draws(x);
    const std::size_t n = x.size();
    const auto na = static_cast<std::size_t>(std::floor(first * static_cast<double>(n)));
    const auto nb = static_cast<std::size_t>(std::floor(last * static_cast<double>(n)));
    std::vector<double> a(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(na));
    std::vector<double> b(x.end() - static_cast<std::ptrdiff_t>(nb), x.end());
    const auto sa = detail::spectrum0_ar(a);
    const auto sb = detail::spectrum0_ar(b);
    if (!sa || !sb) return std::nullopt;
    const double se = std::sqrt(*sa / static_cast<double>(na) + *sb / static_cast<double>(nb));
    if (!(se > 0.0)) return std::nullopt;
    return (mean(a) - mean(b)) / se;
}

/// Effective sample size with Geyer's initial monotone positive sequence.
inline std::optional<double> ess(const std::vector<double>& x) {
    detail::require_draws(x);
    const std::size_t n = x.size();
    const double m = mean(x);
    std::vector<double> c(n);
    for (std::size_t t = 0; t < n; ++t) c[t] = x[t] - m;
    auto acov = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t t = lag; t < n; ++t) s += c[t] * c[t - lag];
        return s / static_cast<double>(n);
    };
    const double g0 = acov(0);
    if (!(g0 > 0.0)) return std::nullopt;
    double sum = 0.0;  // sum of Gamma_m = rho_{2m} + rho_{2m+1}
    double prev = kInf;
    for (std::size_t lag = 0; lag + 1 < n; lag += 2) {
        double pair = (acov(lag) + acov(lag + 1)) / g0;
        if (pair <= 0.0) break;
        pair = std::min(pair, prev);
        sum += pair;
        prev = pair;
    }
    const double tau = std::max(-1.0 + 2.0 * sum, 1.0 / std::log10(static_cast<double>(n)));
    return static_cast<double>(n) / tau;
}

}  // namespace skewres
