#pragma once

// Model family, priors, parameter state, effect layout and the moment
// formulas of the skew scale-mixture observation model
//
//   z_ij = mu_ij + sigma * lambda_ij^{-1/2} * (rho |T1| + sqrt(1 - rho^2) T2),
//   mu_ij = mu + alpha_i + beta_ij + gamma_{i+j-1}.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "skewres/distributions.hpp"
#include "skewres/error.hpp"
#include "skewres/triangle.hpp"

namespace skewres {

enum class MixingFamily { point, gamma_t, beta_slash, invgamma_vg };

inline const char* family_name(MixingFamily f) {
    switch (f) {
        case MixingFamily::point: return "point";
        case MixingFamily::gamma_t: return "gamma_t";
        case MixingFamily::beta_slash: return "beta_slash";
        case MixingFamily::invgamma_vg: return "invgamma_vg";
    }
    return "?";
}

/// Lower bound of the nu support (slash needs nu > 1).
inline double nu_lower_bound(MixingFamily f) { return f == MixingFamily::beta_slash ? 1.0 : 0.0; }

struct NuPrior {
    enum class Kind { gamma, uniform, exponential, jeffreys };
    Kind kind = Kind::gamma;
    double a = 12.0;  // gamma shape | uniform lower | exponential rate
    double b = 0.8;   // gamma rate  | uniform upper

    static NuPrior gamma(double shape, double rate) { return {Kind::gamma, shape, rate}; }
    static NuPrior uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
    static NuPrior exponential(double rate) { return {Kind::exponential, rate, 0.0}; }

    /// Unnormalized when truncated to (lower, inf); -inf outside the support.
    [[nodiscard]] double logpdf(double nu, double lower = 0.0) const {
        if (!(nu > lower)) return -kInf;
        switch (kind) {
            case Kind::gamma: return gamma_logpdf(nu, a, b);
            case Kind::uniform: return (nu >= a && nu <= b) ? -std::log(b - a) : -kInf;
            case Kind::exponential: return std::log(a) - a * nu;
            case Kind::jeffreys: break;
        }
        throw ConfigError("the Jeffreys prior for nu is not implemented");
    }

    [[nodiscard]] double sample(Rng& rng, double lower = 0.0) const {
        switch (kind) {
            case Kind::gamma: return sample_gamma_left_truncated(rng, a, b, lower);
            case Kind::uniform: {
                const double lo = std::max(a, lower);
                return lo + (b - lo) * rng.uniform();
            }
            case Kind::exponential: return lower + rng.exponential() / a;
            case Kind::jeffreys: break;
        }
        throw ConfigError("the Jeffreys prior for nu is not implemented");
    }

    [[nodiscard]] double mean() const {
        switch (kind) {
            case Kind::gamma: return a / b;
            case Kind::uniform: return 0.5 * (a + b);
            case Kind::exponential: return 1.0 / a;
            case Kind::jeffreys: break;
        }
        throw ConfigError("the Jeffreys prior for nu is not implemented");
    }

    [[nodiscard]] std::string describe() const {
        switch (kind) {
            case Kind::gamma: return "gamma(" + format_double(a) + "," + format_double(b) + ")";
            case Kind::uniform: return "uniform(" + format_double(a) + "," + format_double(b) + ")";
            case Kind::exponential: return "exponential(" + format_double(a) + ")";
            case Kind::jeffreys: return "jeffreys";
        }
        return "?";
    }
};

/// Hyperparameters. The four variance parameters share one inverse-gamma
/// (shape, rate) pair; (1 + rho)/2 has a Beta(c, d) prior.
struct Priors {
    double s2_mu = 100.0;
    double rho_c = 1.0;
    double rho_d = 1.0;
    double var_a = 0.001;
    double var_b = 0.001;
    NuPrior nu;

    static Priors defaults(MixingFamily f) {
        Priors p;
        if (f == MixingFamily::beta_slash) p.nu = NuPrior::gamma(0.2, 0.05);
        return p;
    }

    /// Prior-sensitivity scenarios 1-5; scenario 6 (Jeffreys on nu) is a stub.
    static Priors scenario(int k, MixingFamily f) {
        Priors p = defaults(f);
        switch (k) {
            case 1: p.var_a = p.var_b = 0.01; break;
            case 2: break;
            case 3: p.rho_c = p.rho_d = 0.5; break;
            case 4: p.nu = NuPrior::uniform(2.0, 40.0); break;
            case 5: p.nu = NuPrior::exponential(0.3); break;
            case 6: throw ConfigError("prior scenario 6 (Jeffreys prior on nu) is not implemented");
            default: throw ConfigError("unknown prior scenario " + std::to_string(k));
        }
        return p;
    }

    void validate() const {
        auto pos = [](double v, const char* what) {
            if (!(v > 0.0)) throw ConfigError(std::string(what) + " must be > 0");
        };
        pos(s2_mu, "s2_mu");
        pos(rho_c, "rho prior c");
        pos(rho_d, "rho prior d");
        pos(var_a, "variance prior shape");
        pos(var_b, "variance prior rate");
        if (nu.kind == NuPrior::Kind::jeffreys) throw ConfigError("the Jeffreys prior for nu is not implemented");
        pos(nu.a, "nu prior first parameter");
        if (nu.kind != NuPrior::Kind::exponential) pos(nu.b, "nu prior second parameter");
        if (nu.kind == NuPrior::Kind::uniform && !(nu.b > nu.a)) throw ConfigError("uniform nu prior needs lo < hi");
    }
};

struct ModelSpec {
    bool skew = true;
    MixingFamily mixing = MixingFamily::gamma_t;
    Priors priors = Priors::defaults(MixingFamily::gamma_t);

    [[nodiscard]] bool has_nu() const { return mixing != MixingFamily::point; }

    [[nodiscard]] std::string code() const {
        std::string c = skew ? "s" : "";
        switch (mixing) {
            case MixingFamily::point: return skew ? "sn" : "n";
            case MixingFamily::gamma_t: return c + "st";
            case MixingFamily::beta_slash: return c + "s";
            case MixingFamily::invgamma_vg: return c + "vg";
        }
        return c;
    }

    static ModelSpec from_code(const std::string& code) {
        ModelSpec s;
        if (code == "n") s = {false, MixingFamily::point, {}};
        else if (code == "st") s = {false, MixingFamily::gamma_t, {}};
        else if (code == "s") s = {false, MixingFamily::beta_slash, {}};
        else if (code == "vg") s = {false, MixingFamily::invgamma_vg, {}};
        else if (code == "sn") s = {true, MixingFamily::point, {}};
        else if (code == "sst") s = {true, MixingFamily::gamma_t, {}};
        else if (code == "ss") s = {true, MixingFamily::beta_slash, {}};
        else if (code == "svg") s = {true, MixingFamily::invgamma_vg, {}};
        else throw ConfigError("unknown model code '" + code + "' (n, st, s, vg, sn, sst, ss, svg)");
        s.priors = Priors::defaults(s.mixing);
        return s;
    }
};

inline const std::vector<std::string>& all_model_codes() {
    static const std::vector<std::string> codes = {"n", "st", "s", "vg", "sn", "sst", "ss", "svg"};
    return codes;
}

// ---------------------------------------------------------------------------
// Mixing law and moments
// ---------------------------------------------------------------------------

inline double mixing_prior_logdensity(MixingFamily f, double nu, double lambda) {
    switch (f) {
        case MixingFamily::point:
            if (lambda != 1.0) throw NumericError("point mixing family requires lambda = 1");
            return 0.0;
        case MixingFamily::gamma_t:
            if (!(lambda > 0.0)) throw NumericError("lambda must be > 0");
            return gamma_logpdf(lambda, 0.5 * nu, 0.5 * nu);
        case MixingFamily::beta_slash:
            if (!(lambda > 0.0 && lambda < 1.0)) throw NumericError("slash lambda must lie in (0,1)");
            return std::log(nu) + (nu - 1.0) * std::log(lambda);
        case MixingFamily::invgamma_vg:
            if (!(lambda > 0.0)) throw NumericError("lambda must be > 0");
            return inverse_gamma_logpdf(lambda, 0.5 * nu, 0.5 * nu);
    }
    return 0.0;
}

inline double sample_mixing(Rng& rng, MixingFamily f, double nu) {
    switch (f) {
        case MixingFamily::point: return 1.0;
        case MixingFamily::gamma_t: return sample_gamma(rng, 0.5 * nu, 0.5 * nu);
        case MixingFamily::beta_slash: {
            // Beta(nu, 1) by inversion; reject the (measure-zero) endpoints.
            for (;;) {
                const double x = std::exp(std::log(rng.uniform()) / nu);
                if (x > 0.0 && x < 1.0) return x;
            }
        }
        case MixingFamily::invgamma_vg: return sample_inverse_gamma(rng, 0.5 * nu, 0.5 * nu);
    }
    return 1.0;
}

/// E(lambda^k) for k in {-1/2, -1, -3/2, -2}; nullopt when the moment is infinite.
inline std::optional<double> e_lambda_pow(MixingFamily f, double nu, double k) {
    if (!(k < 0.0)) throw ConfigError("e_lambda_pow expects a negative power");
    const double s = -k;
    switch (f) {
        case MixingFamily::point: return 1.0;
        case MixingFamily::gamma_t:
            if (!(nu > 2.0 * s)) return std::nullopt;
            return std::exp(std::lgamma(0.5 * nu - s) - std::lgamma(0.5 * nu) + s * std::log(0.5 * nu));
        case MixingFamily::beta_slash:
            if (!(nu > s)) return std::nullopt;
            return nu / (nu - s);
        case MixingFamily::invgamma_vg:
            return std::exp(std::lgamma(0.5 * nu + s) - std::lgamma(0.5 * nu) - s * std::log(0.5 * nu));
    }
    return std::nullopt;
}

inline double kappa_from_rho(double rho) { return rho / std::sqrt(1.0 - rho * rho); }
inline double rho_from_kappa(double kappa) { return kappa / std::sqrt(1.0 + kappa * kappa); }

namespace detail {

inline constexpr double kHalfNormalMean = 0.79788456080286535588;  // sqrt(2/pi)

/// Raw moments E W^r, r = 1..order, of W = lambda^{-1/2} (rho|T1| + sqrt(1-rho^2) T2).
inline std::optional<std::vector<double>> standardized_raw_moments(const ModelSpec& spec, double rho,
                                                                   double nu, int order) {
    if (!spec.skew) rho = 0.0;
    const double b = kHalfNormalMean;
    const double eps[5] = {1.0, rho * b, 1.0, b * (3.0 * rho - rho * rho * rho), 3.0};
    std::vector<double> out(order + 1, 1.0);
    for (int r = 1; r <= order; ++r) {
        auto m = e_lambda_pow(spec.mixing, nu, -0.5 * r);
        if (!m) return std::nullopt;
        out[r] = *m * eps[r];
    }
    return out;
}

}  // namespace detail

inline std::optional<double> marginal_mean(const ModelSpec& spec, double mu_ij, double sigma2, double rho, double nu) {
    auto m = detail::standardized_raw_moments(spec, rho, nu, 1);
    if (!m) return std::nullopt;
    return mu_ij + std::sqrt(sigma2) * (*m)[1];
}

inline std::optional<double> marginal_variance(const ModelSpec& spec, double sigma2, double rho, double nu) {
    auto m = detail::standardized_raw_moments(spec, rho, nu, 2);
    if (!m) return std::nullopt;
    const auto& w = *m;
    return sigma2 * (w[2] - w[1] * w[1]);
}

inline std::optional<double> marginal_skewness(const ModelSpec& spec, double rho, double nu) {
    auto m = detail::standardized_raw_moments(spec, rho, nu, 3);
    if (!m) return std::nullopt;
    const auto& w = *m;
    const double var = w[2] - w[1] * w[1];
    const double c3 = w[3] - 3.0 * w[1] * w[2] + 2.0 * w[1] * w[1] * w[1];
    return c3 / std::pow(var, 1.5);
}

/// Standardized fourth moment (3 for a Gaussian).
inline std::optional<double> marginal_kurtosis(const ModelSpec& spec, double rho, double nu) {
    auto m = detail::standardized_raw_moments(spec, rho, nu, 4);
    if (!m) return std::nullopt;
    const auto& w = *m;
    const double m1 = w[1];
    const double var = w[2] - m1 * m1;
    const double c4 = w[4] - 4.0 * m1 * w[3] + 6.0 * m1 * m1 * w[2] - 3.0 * m1 * m1 * m1 * m1;
    return c4 / (var * var);
}

// ---------------------------------------------------------------------------
// Effect layout and parameter state
// ---------------------------------------------------------------------------

/// Which dynamic effects exist for a set of training cells.
///
/// alpha_i for i = 1..n_alpha and gamma_t for t = 1..n_gamma, with the first
/// of each pinned to zero. beta_ij exists for training cells with i >= 2 and
/// j >= 2; its random-walk parent is beta_{i-1,j} (zero when i - 1 = 1).
struct EffectLayout {
    int n = 0;
    int n_alpha = 0;
    int n_gamma = 0;
    std::vector<Cell> beta_cells;
    std::vector<int> beta_parent;  // index into beta, -1 = fixed zero
    std::vector<int> beta_child;   // index of beta_{i+1,j}, -1 = none
    std::vector<int> beta_index;   // n*n grid, -1 = not instantiated

    [[nodiscard]] int beta_at(int i, int j) const {
        if (i < 1 || j < 1 || i > n || j > n) return -1;
        return beta_index[static_cast<std::size_t>(i - 1) * n + (j - 1)];
    }

    static EffectLayout from_cells(int n, const std::vector<Cell>& training) {
        EffectLayout L;
        L.n = n;
        L.beta_index.assign(static_cast<std::size_t>(n) * n, -1);
        std::vector<Cell> sorted = training;
        std::sort(sorted.begin(), sorted.end());
        for (const Cell& c : sorted) {
            L.n_alpha = std::max(L.n_alpha, c.i);
            L.n_gamma = std::max(L.n_gamma, c.i + c.j - 1);
            if (c.i >= 2 && c.j >= 2) {
                L.beta_index[static_cast<std::size_t>(c.i - 1) * n + (c.j - 1)] =
                    static_cast<int>(L.beta_cells.size());
                L.beta_cells.push_back(c);
            }
        }
        L.beta_parent.assign(L.beta_cells.size(), -1);
        L.beta_child.assign(L.beta_cells.size(), -1);
        for (std::size_t b = 0; b < L.beta_cells.size(); ++b) {
            const auto [i, j] = L.beta_cells[b];
            L.beta_parent[b] = L.beta_at(i - 1, j);
            L.beta_child[b] = L.beta_at(i + 1, j);
        }
        return L;
    }
};

/// Likelihood cell with precomputed effect indices (0-based).
struct CellData {
    int i = 0;
    int j = 0;
    int t = 0;
    int beta = -1;
    double z = 0.0;
};

/// Everything the sampler needs about the data, indexed for the sweeps.
struct ModelData {
    EffectLayout layout;
    std::vector<CellData> cells;
    std::vector<std::vector<int>> cells_by_alpha;  // [i-1] -> cell indices
    std::vector<std::vector<int>> cells_by_gamma;  // [t-1] -> cell indices
    std::vector<int> cell_of_beta;                 // beta index -> cell index or -1
    ZeroPolicy policy;

    static ModelData build(const LogTriangle& lt) {
        if (lt.cells.empty()) throw InputError("no likelihood cells to fit");
        ModelData d;
        d.policy = lt.policy;
        d.layout = EffectLayout::from_cells(lt.n, lt.training.empty() ? cells_of(lt) : lt.training);
        d.cells_by_alpha.assign(d.layout.n_alpha, {});
        d.cells_by_gamma.assign(d.layout.n_gamma, {});
        d.cell_of_beta.assign(d.layout.beta_cells.size(), -1);
        for (const LogCell& c : lt.cells) {
            const int k = static_cast<int>(d.cells.size());
            CellData cd{c.i, c.j, c.i + c.j - 1, d.layout.beta_at(c.i, c.j), c.z};
            d.cells.push_back(cd);
            d.cells_by_alpha[c.i - 1].push_back(k);
            d.cells_by_gamma[cd.t - 1].push_back(k);
            if (cd.beta >= 0) d.cell_of_beta[cd.beta] = k;
        }
        return d;
    }

    [[nodiscard]] std::size_t size() const { return cells.size(); }

private:
    static std::vector<Cell> cells_of(const LogTriangle& lt) {
        std::vector<Cell> out;
        for (const auto& c : lt.cells) out.push_back({c.i, c.j});
        return out;
    }
};

struct ParameterState {
    double mu = 0.0;
    double rho = 0.0;
    double sigma2 = 1.0;
    double sigma2_alpha = 1.0;
    double sigma2_beta = 1.0;
    double sigma2_gamma = 1.0;
    double nu = 0.0;                 // unused for the point family
    std::vector<double> alpha;       // [i-1], alpha[0] = 0
    std::vector<double> beta;        // per EffectLayout::beta_cells
    std::vector<double> gamma;       // [t-1], gamma[0] = 0
    std::vector<double> T;           // per likelihood cell
    std::vector<double> lambda;      // per likelihood cell

    [[nodiscard]] double beta_value(int b) const { return b < 0 ? 0.0 : beta[b]; }

    /// mu + alpha_i + beta_ij + gamma_t for a likelihood cell.
    [[nodiscard]] double location(const CellData& c) const {
        return mu + alpha[c.i - 1] + beta_value(c.beta) + gamma[c.t - 1];
    }
};

/// Empty when the state satisfies every invariant, else a description.
inline std::optional<std::string> check_state(const ModelSpec& spec, const ModelData& d, const ParameterState& s) {
    auto bad = [](double v) { return !std::isfinite(v); };
    if (bad(s.mu)) return "mu not finite";
    if (!(s.rho > -1.0 && s.rho < 1.0)) return "rho outside (-1,1)";
    if (!spec.skew && s.rho != 0.0) return "rho must be 0 for a non-skew model";
    for (double v : {s.sigma2, s.sigma2_alpha, s.sigma2_beta, s.sigma2_gamma}) {
        if (!(v > 0.0) || bad(v)) return "variance parameter not positive and finite";
    }
    if (spec.has_nu()) {
        if (!(s.nu > nu_lower_bound(spec.mixing)) || bad(s.nu)) return "nu outside its support";
    }
    if (s.alpha.size() != static_cast<std::size_t>(d.layout.n_alpha) || s.alpha.empty() || s.alpha[0] != 0.0) {
        return "alpha layout broken";
    }
    if (s.gamma.size() != static_cast<std::size_t>(d.layout.n_gamma) || s.gamma.empty() || s.gamma[0] != 0.0) {
        return "gamma layout broken";
    }
    if (s.beta.size() != d.layout.beta_cells.size()) return "beta layout broken";
    for (double v : s.alpha) if (bad(v)) return "alpha not finite";
    for (double v : s.beta) if (bad(v)) return "beta not finite";
    for (double v : s.gamma) if (bad(v)) return "gamma not finite";
    if (s.T.size() != d.size() || s.lambda.size() != d.size()) return "latent field size mismatch";
    for (std::size_t k = 0; k < d.size(); ++k) {
        if (!(s.T[k] >= 0.0) || bad(s.T[k])) return "T negative or not finite";
        if (!spec.skew && s.T[k] != 0.0) return "T must be 0 for a non-skew model";
        const double l = s.lambda[k];
        if (!(l > 0.0) || bad(l)) return "lambda not positive";
        if (spec.mixing == MixingFamily::point && l != 1.0) return "lambda must be 1 for the point family";
        if (spec.mixing == MixingFamily::beta_slash && !(l < 1.0)) return "slash lambda outside (0,1)";
    }
    return std::nullopt;
}

inline ParameterState init_state(const ModelSpec& spec, const ModelData& d) {
    if (d.cells.empty()) throw InputError("no likelihood cells to fit");
    const double N = static_cast<double>(d.size());
    double mean = 0.0;
    for (const auto& c : d.cells) mean += c.z;
    mean /= N;
    double ss = 0.0;
    for (const auto& c : d.cells) ss += (c.z - mean) * (c.z - mean);
    const double var = d.size() > 1 ? ss / (N - 1.0) : 0.0;

    ParameterState s;
    s.mu = mean;
    s.sigma2 = std::max(var, 1e-6);
    s.sigma2_alpha = s.sigma2_beta = s.sigma2_gamma = std::max(0.1 * var, 1e-6);
    s.rho = 0.0;
    if (spec.has_nu()) {
        const double lo = nu_lower_bound(spec.mixing);
        s.nu = spec.priors.nu.mean();
        if (!(s.nu > lo + 0.5)) s.nu = lo + 1.0;
    }
    s.alpha.assign(d.layout.n_alpha, 0.0);
    s.gamma.assign(d.layout.n_gamma, 0.0);
    s.beta.assign(d.layout.beta_cells.size(), 0.0);
    s.lambda.assign(d.size(), spec.mixing == MixingFamily::beta_slash ? 0.99 : 1.0);
    s.T.assign(d.size(), spec.skew ? detail::kHalfNormalMean * std::sqrt(s.sigma2) : 0.0);
    return s;
}

/// Unnormalized log posterior of the full hierarchy (data, latent T and
/// lambda, dynamic effects, static parameters) on the natural parameter scale.
inline double log_joint(const ModelSpec& spec, const ModelData& d, const ParameterState& s) {
    const Priors& p = spec.priors;
    const double d2 = 1.0 - s.rho * s.rho;
    double lp = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) {
        const CellData& c = d.cells[k];
        const double lam = s.lambda[k];
        if (spec.skew) {
            lp += normal_logpdf(c.z, s.location(c) + s.rho * s.T[k], s.sigma2 * d2 / lam);
            lp += std::log(2.0) + normal_logpdf(s.T[k], 0.0, s.sigma2 / lam);
        } else {
            lp += normal_logpdf(c.z, s.location(c), s.sigma2 / lam);
        }
        if (spec.has_nu()) lp += mixing_prior_logdensity(spec.mixing, s.nu, lam);
    }
    for (int i = 1; i < d.layout.n_alpha; ++i) lp += normal_logpdf(s.alpha[i], s.alpha[i - 1], s.sigma2_alpha);
    for (int t = 1; t < d.layout.n_gamma; ++t) lp += normal_logpdf(s.gamma[t], s.gamma[t - 1], s.sigma2_gamma);
    for (std::size_t b = 0; b < s.beta.size(); ++b) {
        lp += normal_logpdf(s.beta[b], s.beta_value(d.layout.beta_parent[b]), s.sigma2_beta);
    }
    lp += normal_logpdf(s.mu, 0.0, p.s2_mu);
    if (spec.skew) lp += beta_logpdf(0.5 * (1.0 + s.rho), p.rho_c, p.rho_d) - std::log(2.0);
    for (double v : {s.sigma2, s.sigma2_alpha, s.sigma2_beta, s.sigma2_gamma}) {
        lp += inverse_gamma_logpdf(v, p.var_a, p.var_b);
    }
    if (spec.has_nu()) lp += p.nu.logpdf(s.nu, nu_lower_bound(spec.mixing));
    return lp;
}

}  // namespace skewres
