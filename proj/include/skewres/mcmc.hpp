#pragma once

// Gibbs sampler with adaptive random-walk Metropolis steps for rho and nu.
//
// Sweep order per iteration: alpha, beta, gamma; then mu, sigma2, rho,
// sigma2_alpha, sigma2_beta, sigma2_gamma, nu; then T; then lambda.

#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "skewres/distributions.hpp"
#include "skewres/error.hpp"
#include "skewres/format.hpp"
#include "skewres/model.hpp"
#include "skewres/random.hpp"

namespace skewres {

/// Robbins-Monro tuned random-walk proposal (global adaptive scaling).
struct AdaptiveState {
    double mu_a = 0.0;
    double sigma2_a = 1.0;
    double kappa_a = 2.38;
    long iter = 0;
    double a_decay = 0.8;
    double alpha_star = 0.234;

    [[nodiscard]] double proposal_sd() const { return std::sqrt(kappa_a * sigma2_a); }

    /// Update after one MH step with acceptance probability `accept_prob`
    /// that left the chain at `x`.
    void update(double accept_prob, double x) {
        ++iter;
        const double g = std::pow(static_cast<double>(iter + 1), -a_decay);
        kappa_a = std::exp(std::log(kappa_a) + g * (accept_prob - alpha_star));
        const double mu_old = mu_a;
        mu_a += g * (x - mu_old);
        sigma2_a += g * ((x - mu_old) * (x - mu_old) - sigma2_a);
        if (!(sigma2_a > 1e-12)) sigma2_a = 1e-12;
    }
};

struct MhResult {
    double x;
    double accept_prob;
    bool accepted;
};

/// One adaptive random-walk MH step on an unconstrained scalar.
template <class LogTarget>
MhResult adaptive_mh_step(Rng& rng, AdaptiveState& ad, double x, LogTarget&& log_target, bool adapt) {
    const double lp = log_target(x);
    const double y = x + ad.proposal_sd() * rng.normal();
    const double lq = log_target(y);
    double a = 0.0;
    if (std::isfinite(lq)) a = lq >= lp ? 1.0 : std::exp(lq - lp);
    const bool accept = rng.uniform() < a;
    const double next = accept ? y : x;
    if (adapt) ad.update(a, next);
    return {next, a, accept};
}

enum class Effect { alpha, beta, gamma };

struct NormalParams {
    double mean;
    double var;
};

struct GammaParams {
    double shape;
    double rate;
};

/// lambda full conditional: Gamma(shape, rate) on (0, upper) or GIG.
struct LambdaConditional {
    bool gig = false;
    double shape = 0.0;
    double rate = 0.0;
    double upper = kInf;
    GigParams gig_params{};
};

namespace detail {

inline double one_minus_rho2(double rho) { return (1.0 - rho) * (1.0 + rho); }

inline void ensure_finite(double v, const char* block) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value in block ") + block);
}

/// Likelihood precision weight lambda / (sigma2 (1 - rho^2)) of a cell.
inline double weight(const ParameterState& s, std::size_t k) {
    return s.lambda[k] / (s.sigma2 * one_minus_rho2(s.rho));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Full conditionals
// ---------------------------------------------------------------------------

inline NormalParams mu_conditional(const ModelSpec& spec, const ModelData& d, const ParameterState& s) {
    double prec = 1.0 / spec.priors.s2_mu;
    double num = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) {
        const CellData& c = d.cells[k];
        const double w = detail::weight(s, k);
        prec += w;
        num += w * (c.z - s.alpha[c.i - 1] - s.beta_value(c.beta) - s.gamma[c.t - 1] - s.rho * s.T[k]);
    }
    return {num / prec, 1.0 / prec};
}

inline GammaParams sigma2_conditional(const ModelSpec& spec, const ModelData& d, const ParameterState& s) {
    const double d2 = detail::one_minus_rho2(s.rho);
    double q = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) {
        const double r = d.cells[k].z - s.location(d.cells[k]) - s.rho * s.T[k];
        q += s.lambda[k] * (spec.skew ? r * r / d2 + s.T[k] * s.T[k] : r * r);
    }
    const double N = static_cast<double>(d.size());
    return {spec.priors.var_a + (spec.skew ? N : 0.5 * N), spec.priors.var_b + 0.5 * q};
}

/// Sufficient statistics of the rho conditional: lambda-weighted sums of
/// e = z - mu_ij and T.
struct RhoStats {
    double see = 0.0;
    double set = 0.0;
    double stt = 0.0;
    double n = 0.0;
};

inline RhoStats rho_stats(const ModelData& d, const ParameterState& s) {
    RhoStats r;
    r.n = static_cast<double>(d.size());
    for (std::size_t k = 0; k < d.size(); ++k) {
        const double e = d.cells[k].z - s.location(d.cells[k]);
        const double l = s.lambda[k];
        r.see += l * e * e;
        r.set += l * e * s.T[k];
        r.stt += l * s.T[k] * s.T[k];
    }
    return r;
}

/// Unnormalized log p(rho | rest) on the rho scale.
inline double rho_log_target(const ModelSpec& spec, const RhoStats& st, double sigma2, double rho) {
    if (!(rho > -1.0 && rho < 1.0)) return -kInf;
    const double d2 = detail::one_minus_rho2(rho);
    const double quad = st.see - 2.0 * rho * st.set + rho * rho * st.stt;
    return -0.5 * st.n * std::log(d2) - quad / (2.0 * sigma2 * d2) +
           beta_logpdf(0.5 * (1.0 + rho), spec.priors.rho_c, spec.priors.rho_d);
}

inline GammaParams variance_hyper_conditional(const ModelSpec& spec, const ModelData& d, const ParameterState& s,
                                              Effect which) {
    double ss = 0.0;
    double count = 0.0;
    switch (which) {
        case Effect::alpha:
            for (std::size_t i = 1; i < s.alpha.size(); ++i) ss += std::pow(s.alpha[i] - s.alpha[i - 1], 2);
            count = static_cast<double>(s.alpha.size()) - 1.0;
            break;
        case Effect::gamma:
            for (std::size_t t = 1; t < s.gamma.size(); ++t) ss += std::pow(s.gamma[t] - s.gamma[t - 1], 2);
            count = static_cast<double>(s.gamma.size()) - 1.0;
            break;
        case Effect::beta:
            for (std::size_t b = 0; b < s.beta.size(); ++b) {
                ss += std::pow(s.beta[b] - s.beta_value(d.layout.beta_parent[b]), 2);
            }
            count = static_cast<double>(s.beta.size());
            break;
    }
    return {spec.priors.var_a + 0.5 * count, spec.priors.var_b + 0.5 * ss};
}

/// Normal conditional of alpha_i (index = i - 1), beta_b or gamma_t (index = t - 1).
inline NormalParams dynamic_conditional(const ModelData& d, const ParameterState& s, Effect which, int index) {
    double prior_prec = 0.0;
    double prior_num = 0.0;
    const std::vector<int>* cells = nullptr;
    int single_cell = -1;
    switch (which) {
        case Effect::alpha: {
            const double v = s.sigma2_alpha;
            prior_prec = 1.0 / v;
            prior_num = s.alpha[index - 1] / v;
            if (index + 1 < static_cast<int>(s.alpha.size())) {
                prior_prec += 1.0 / v;
                prior_num += s.alpha[index + 1] / v;
            }
            cells = &d.cells_by_alpha[index];
            break;
        }
        case Effect::gamma: {
            const double v = s.sigma2_gamma;
            prior_prec = 1.0 / v;
            prior_num = s.gamma[index - 1] / v;
            if (index + 1 < static_cast<int>(s.gamma.size())) {
                prior_prec += 1.0 / v;
                prior_num += s.gamma[index + 1] / v;
            }
            cells = &d.cells_by_gamma[index];
            break;
        }
        case Effect::beta: {
            const double v = s.sigma2_beta;
            prior_prec = 1.0 / v;
            prior_num = s.beta_value(d.layout.beta_parent[index]) / v;
            const int child = d.layout.beta_child[index];
            if (child >= 0) {
                prior_prec += 1.0 / v;
                prior_num += s.beta[child] / v;
            }
            single_cell = d.cell_of_beta[index];
            break;
        }
    }
    double prec = prior_prec;
    double num = prior_num;
    auto add = [&](int k) {
        const CellData& c = d.cells[k];
        const double w = detail::weight(s, k);
        double rest = c.z - s.mu - s.rho * s.T[k];
        if (which != Effect::alpha) rest -= s.alpha[c.i - 1];
        if (which != Effect::beta) rest -= s.beta_value(c.beta);
        if (which != Effect::gamma) rest -= s.gamma[c.t - 1];
        prec += w;
        num += w * rest;
    };
    if (cells) {
        for (int k : *cells) add(k);
    } else if (single_cell >= 0) {
        add(single_cell);
    }
    return {num / prec, 1.0 / prec};
}

inline NormalParams T_conditional(const ModelData& d, const ParameterState& s, std::size_t k) {
    const double e = d.cells[k].z - s.location(d.cells[k]);
    return {s.rho * e, s.sigma2 * detail::one_minus_rho2(s.rho) / s.lambda[k]};
}

inline LambdaConditional lambda_conditional(const ModelSpec& spec, const ModelData& d, const ParameterState& s,
                                            std::size_t k) {
    const double r = d.cells[k].z - s.location(d.cells[k]) - s.rho * s.T[k];
    const double T = s.T[k];
    double q = spec.skew ? (r * r / detail::one_minus_rho2(s.rho) + T * T) / s.sigma2 : r * r / s.sigma2;
    q = std::max(q, 1e-300);
    const double bonus = spec.skew ? 1.0 : 0.5;
    LambdaConditional out;
    switch (spec.mixing) {
        case MixingFamily::point: out.shape = 0.0; break;
        case MixingFamily::gamma_t:
            out.shape = 0.5 * s.nu + bonus;
            out.rate = 0.5 * s.nu + 0.5 * q;
            break;
        case MixingFamily::beta_slash:
            out.shape = s.nu + bonus;
            out.rate = 0.5 * q;
            out.upper = 1.0;
            break;
        case MixingFamily::invgamma_vg:
            out.gig = true;
            out.gig_params = {bonus - 0.5 * s.nu, s.nu, q};
            break;
    }
    return out;
}

/// Sufficient statistics of the nu conditional.
struct NuStats {
    double n = 0.0;
    double sum_log = 0.0;
    double sum = 0.0;
    double sum_inv = 0.0;
};

inline NuStats nu_stats(const ParameterState& s) {
    NuStats st;
    st.n = static_cast<double>(s.lambda.size());
    for (double l : s.lambda) {
        st.sum_log += std::log(l);
        st.sum += l;
        st.sum_inv += 1.0 / l;
    }
    return st;
}

/// Unnormalized log p(nu | rest) on the nu scale.
inline double nu_log_target(const ModelSpec& spec, const NuStats& st, double nu) {
    const double lo = nu_lower_bound(spec.mixing);
    if (!(nu > lo) || !std::isfinite(nu)) return -kInf;
    const double prior = spec.priors.nu.logpdf(nu, lo);
    if (!std::isfinite(prior)) return -kInf;
    const double h = 0.5 * nu;
    switch (spec.mixing) {
        case MixingFamily::gamma_t:
            return prior + st.n * (h * std::log(h) - std::lgamma(h)) + (h - 1.0) * st.sum_log - h * st.sum;
        case MixingFamily::invgamma_vg:
            return prior + st.n * (h * std::log(h) - std::lgamma(h)) - (h + 1.0) * st.sum_log - h * st.sum_inv;
        case MixingFamily::beta_slash:
            return prior + st.n * std::log(nu) + (nu - 1.0) * st.sum_log;
        case MixingFamily::point: break;
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Gibbs / MH steps
// ---------------------------------------------------------------------------

inline void step_mu(const ModelSpec& spec, const ModelData& d, ParameterState& s, Rng& rng) {
    const auto c = mu_conditional(spec, d, s);
    s.mu = sample_normal(rng, c.mean, c.var);
    detail::ensure_finite(s.mu, "mu");
}

inline void step_sigma2(const ModelSpec& spec, const ModelData& d, ParameterState& s, Rng& rng) {
    const auto c = sigma2_conditional(spec, d, s);
    s.sigma2 = sample_inverse_gamma(rng, c.shape, c.rate);
    detail::ensure_finite(s.sigma2, "sigma2");
}

/// Random-walk MH on zeta = atanh(rho) with the sech^2 Jacobian.
inline MhResult step_rho(const ModelSpec& spec, const ModelData& d, ParameterState& s, AdaptiveState& ad,
                         Rng& rng, bool adapt = true) {
    const RhoStats st = rho_stats(d, s);
    auto target = [&](double zeta) {
        const double rho = std::tanh(zeta);
        if (!(std::fabs(rho) < 1.0)) return -kInf;
        return rho_log_target(spec, st, s.sigma2, rho) + std::log(detail::one_minus_rho2(rho));
    };
    const auto r = adaptive_mh_step(rng, ad, std::atanh(s.rho), target, adapt);
    s.rho = std::tanh(r.x);
    detail::ensure_finite(s.rho, "rho");
    return r;
}

/// An effect with no free components leaves its variance out of the
/// likelihood; that variance is then left where it is rather than drawn from
/// the (possibly overflowing) vague prior.
inline void step_variance_hyper(const ModelSpec& spec, const ModelData& d, ParameterState& s, Effect which,
                                Rng& rng) {
    const std::size_t free = which == Effect::alpha  ? s.alpha.size() - 1
                             : which == Effect::gamma ? s.gamma.size() - 1
                                                      : s.beta.size();
    if (free == 0) return;
    const auto c = variance_hyper_conditional(spec, d, s, which);
    const double v = sample_inverse_gamma(rng, c.shape, c.rate);
    detail::ensure_finite(v, "effect variance");
    switch (which) {
        case Effect::alpha: s.sigma2_alpha = v; break;
        case Effect::beta: s.sigma2_beta = v; break;
        case Effect::gamma: s.sigma2_gamma = v; break;
    }
}

inline void step_dynamic(const ModelData& d, ParameterState& s, Effect which, Rng& rng) {
    switch (which) {
        case Effect::alpha:
            for (int i = 1; i < static_cast<int>(s.alpha.size()); ++i) {
                const auto c = dynamic_conditional(d, s, which, i);
                s.alpha[i] = sample_normal(rng, c.mean, c.var);
                detail::ensure_finite(s.alpha[i], "alpha");
            }
            break;
        case Effect::beta:
            for (int b = 0; b < static_cast<int>(s.beta.size()); ++b) {
                const auto c = dynamic_conditional(d, s, which, b);
                s.beta[b] = sample_normal(rng, c.mean, c.var);
                detail::ensure_finite(s.beta[b], "beta");
            }
            break;
        case Effect::gamma:
            for (int t = 1; t < static_cast<int>(s.gamma.size()); ++t) {
                const auto c = dynamic_conditional(d, s, which, t);
                s.gamma[t] = sample_normal(rng, c.mean, c.var);
                detail::ensure_finite(s.gamma[t], "gamma");
            }
            break;
    }
}

inline void step_T(const ModelSpec& spec, const ModelData& d, ParameterState& s, Rng& rng) {
    if (!spec.skew) return;
    for (std::size_t k = 0; k < d.size(); ++k) {
        const auto c = T_conditional(d, s, k);
        s.T[k] = sample_truncated_normal_lower(rng, c.mean, c.var, 0.0);
        detail::ensure_finite(s.T[k], "T");
    }
}

inline void step_lambda(const ModelSpec& spec, const ModelData& d, ParameterState& s, Rng& rng) {
    if (spec.mixing == MixingFamily::point) return;
    for (std::size_t k = 0; k < d.size(); ++k) {
        const auto c = lambda_conditional(spec, d, s, k);
        double l;
        if (c.gig) {
            l = sample_gig(rng, c.gig_params);
        } else if (std::isinf(c.upper)) {
            l = sample_gamma(rng, c.shape, c.rate);
        } else {
            l = sample_gamma_right_truncated(rng, c.shape, c.rate, c.upper);
        }
        if (!(l > 0.0) || !std::isfinite(l)) throw NumericError("non-finite or zero value in block lambda");
        s.lambda[k] = l;
    }
}

/// Slash with a gamma prior is drawn exactly from its truncated-gamma
/// conditional; every other case uses adaptive MH on log(nu).
inline std::optional<MhResult> step_nu(const ModelSpec& spec, const ModelData& d, ParameterState& s,
                                       AdaptiveState& ad, Rng& rng, bool adapt = true) {
    (void)d;
    if (!spec.has_nu()) return std::nullopt;
    const NuStats st = nu_stats(s);
    if (spec.mixing == MixingFamily::beta_slash && spec.priors.nu.kind == NuPrior::Kind::gamma) {
        s.nu = sample_gamma_left_truncated(rng, spec.priors.nu.a + st.n, spec.priors.nu.b - st.sum_log, 1.0);
        if (!(s.nu > 1.0)) s.nu = std::nextafter(1.0, 2.0);
        detail::ensure_finite(s.nu, "nu");
        return std::nullopt;
    }
    auto target = [&](double xi) { return nu_log_target(spec, st, std::exp(xi)) + xi; };
    const auto r = adaptive_mh_step(rng, ad, std::log(s.nu), target, adapt);
    s.nu = std::exp(r.x);
    detail::ensure_finite(s.nu, "nu");
    return r;
}

// ---------------------------------------------------------------------------
// Chains
// ---------------------------------------------------------------------------

struct ChainConfig {
    long n_iter = 3'000'000;
    long burn_in = 500'000;
    long thin = 250;
    std::uint64_t seed = 1;
    std::optional<long> target_ess = 5000;
    bool store_latent = false;
    long adapt_until = -1;  // iteration after which adaptation freezes; -1 = never

    [[nodiscard]] long draw_count() const { return (n_iter - burn_in) / thin; }

    void validate() const {
        if (n_iter < 1) throw ConfigError("n_iter must be >= 1");
        if (burn_in < 0 || burn_in >= n_iter) throw ConfigError("burn_in must satisfy 0 <= burn_in < n_iter");
        if (thin < 1) throw ConfigError("thin must be >= 1");
    }
};

struct AcceptanceRates {
    double pre_burn = 0.0;
    double post_burn = 0.0;
};

struct ChainOutput {
    ModelSpec spec;
    ChainConfig config;
    EffectLayout layout;
    ZeroPolicy policy;
    std::vector<ParameterState> draws;              // latent fields empty unless stored
    std::map<std::string, AcceptanceRates> acceptance;
    std::map<std::string, std::vector<double>> adaptation;  // kappa_a at stored draws
    AdaptiveState final_rho;
    AdaptiveState final_nu;
};

inline std::vector<std::string> static_parameter_names(const ModelSpec& spec) {
    std::vector<std::string> names = {"mu"};
    if (spec.skew) names.push_back("rho");
    for (const char* n : {"sigma2", "sigma2_alpha", "sigma2_beta", "sigma2_gamma"}) names.emplace_back(n);
    if (spec.has_nu()) names.push_back("nu");
    return names;
}

inline double static_value(const ParameterState& s, const std::string& name) {
    if (name == "mu") return s.mu;
    if (name == "rho") return s.rho;
    if (name == "sigma2") return s.sigma2;
    if (name == "sigma2_alpha") return s.sigma2_alpha;
    if (name == "sigma2_beta") return s.sigma2_beta;
    if (name == "sigma2_gamma") return s.sigma2_gamma;
    if (name == "nu") return s.nu;
    throw ConfigError("unknown parameter '" + name + "'");
}

inline std::vector<double> series(const ChainOutput& out, const std::string& name) {
    std::vector<double> v;
    v.reserve(out.draws.size());
    for (const auto& s : out.draws) v.push_back(static_value(s, name));
    return v;
}

/// One full sweep of the sampler over every block.
class Sampler {
public:
    Sampler(const ModelSpec& spec, const ModelData& data, ParameterState init, Rng rng)
        : spec_(spec), data_(data), state_(std::move(init)), rng_(rng) {
        spec_.priors.validate();
        if (auto err = check_state(spec_, data_, state_)) throw NumericError("invalid initial state: " + *err);
    }

    struct SweepStats {
        std::optional<MhResult> rho;
        std::optional<MhResult> nu;
    };

    SweepStats sweep(bool adapt = true) {
        SweepStats st;
        step_dynamic(data_, state_, Effect::alpha, rng_);
        step_dynamic(data_, state_, Effect::beta, rng_);
        step_dynamic(data_, state_, Effect::gamma, rng_);
        step_mu(spec_, data_, state_, rng_);
        step_sigma2(spec_, data_, state_, rng_);
        if (spec_.skew) st.rho = step_rho(spec_, data_, state_, rho_ad_, rng_, adapt);
        step_variance_hyper(spec_, data_, state_, Effect::alpha, rng_);
        step_variance_hyper(spec_, data_, state_, Effect::beta, rng_);
        step_variance_hyper(spec_, data_, state_, Effect::gamma, rng_);
        st.nu = step_nu(spec_, data_, state_, nu_ad_, rng_, adapt);
        step_T(spec_, data_, state_, rng_);
        step_lambda(spec_, data_, state_, rng_);
        return st;
    }

    [[nodiscard]] ParameterState& state() { return state_; }
    [[nodiscard]] const ParameterState& state() const { return state_; }
    [[nodiscard]] const ModelData& data() const { return data_; }
    [[nodiscard]] const ModelSpec& spec() const { return spec_; }
    [[nodiscard]] AdaptiveState& rho_adaptive() { return rho_ad_; }
    [[nodiscard]] AdaptiveState& nu_adaptive() { return nu_ad_; }
    [[nodiscard]] Rng& rng() { return rng_; }

    /// Swap in new data (same layout), used by the joint-distribution test.
    void set_data(ModelData d) { data_ = std::move(d); }

private:
    ModelSpec spec_;
    ModelData data_;
    ParameterState state_;
    Rng rng_;
    AdaptiveState rho_ad_;
    AdaptiveState nu_ad_;
};

inline ChainOutput run_chain(const ModelSpec& spec, const ModelData& data, const ChainConfig& cfg, Rng rng,
                             std::optional<ParameterState> init = std::nullopt) {
    cfg.validate();
    Sampler sampler(spec, data, init ? *init : init_state(spec, data), rng);
    ChainOutput out;
    out.spec = spec;
    out.config = cfg;
    out.layout = data.layout;
    out.policy = data.policy;
    out.draws.reserve(static_cast<std::size_t>(cfg.draw_count()));

    double rho_acc[2] = {0, 0}, nu_acc[2] = {0, 0};
    long rho_n[2] = {0, 0}, nu_n[2] = {0, 0};
    for (long it = 1; it <= cfg.n_iter; ++it) {
        const bool adapt = cfg.adapt_until < 0 || it <= cfg.adapt_until;
        Sampler::SweepStats st;
        try {
            st = sampler.sweep(adapt);
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " at iteration " + std::to_string(it));
        }
        const int phase = it > cfg.burn_in ? 1 : 0;
        if (st.rho) {
            rho_acc[phase] += st.rho->accepted ? 1.0 : 0.0;
            ++rho_n[phase];
        }
        if (st.nu) {
            nu_acc[phase] += st.nu->accepted ? 1.0 : 0.0;
            ++nu_n[phase];
        }
        if (it > cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0) {
            ParameterState snap = sampler.state();
            if (!cfg.store_latent) {
                snap.T.clear();
                snap.lambda.clear();
                snap.T.shrink_to_fit();
                snap.lambda.shrink_to_fit();
            }
            out.draws.push_back(std::move(snap));
            if (spec.skew) out.adaptation["rho"].push_back(sampler.rho_adaptive().kappa_a);
            if (nu_n[0] + nu_n[1] > 0) out.adaptation["nu"].push_back(sampler.nu_adaptive().kappa_a);
        }
    }
    auto rate = [](double a, long n) { return n > 0 ? a / static_cast<double>(n) : 0.0; };
    if (rho_n[0] + rho_n[1] > 0) out.acceptance["rho"] = {rate(rho_acc[0], rho_n[0]), rate(rho_acc[1], rho_n[1])};
    if (nu_n[0] + nu_n[1] > 0) out.acceptance["nu"] = {rate(nu_acc[0], nu_n[0]), rate(nu_acc[1], nu_n[1])};
    out.final_rho = sampler.rho_adaptive();
    out.final_nu = sampler.nu_adaptive();
    return out;
}

/// Independent chains on separate threads; chain c uses the seed's c-th jump stream.
inline std::vector<ChainOutput> run_chains(const ModelSpec& spec, const ModelData& data, const ChainConfig& cfg,
                                           int k) {
    if (k < 1) throw ConfigError("chain count must be >= 1");
    std::vector<ChainOutput> outs(k);
    std::vector<std::string> errors(k);
    std::vector<int> codes(k, 0);
    std::vector<std::thread> threads;
    const Rng base(cfg.seed);
    for (int c = 0; c < k; ++c) {
        threads.emplace_back([&, c] {
            try {
                outs[c] = run_chain(spec, data, cfg, base.stream(static_cast<unsigned>(c)));
            } catch (const Error& e) {
                errors[c] = e.what();
                codes[c] = e.exit_code();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (int c = 0; c < k; ++c) {
        if (codes[c] != 0) {
            const std::string msg = "chain " + std::to_string(c) + ": " + errors[c];
            if (codes[c] == static_cast<int>(ErrorKind::numeric)) throw NumericError(msg);
            if (codes[c] == static_cast<int>(ErrorKind::input)) throw InputError(msg);
            throw ConfigError(msg);
        }
    }
    return outs;
}

// ---------------------------------------------------------------------------
// Draw export / import
// ---------------------------------------------------------------------------

inline std::vector<std::string> draw_column_names(const ModelSpec& spec, const EffectLayout& L) {
    auto names = static_parameter_names(spec);
    for (int i = 2; i <= L.n_alpha; ++i) names.push_back("alpha[" + std::to_string(i) + "]");
    for (const Cell& c : L.beta_cells) {
        names.push_back("beta[" + std::to_string(c.i) + "," + std::to_string(c.j) + "]");
    }
    for (int t = 2; t <= L.n_gamma; ++t) names.push_back("gamma[" + std::to_string(t) + "]");
    return names;
}

namespace detail {

inline void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k) {
        if (k) out << ',';
        out << fields[k];
    }
    out << '\n';
}

/// CSV field holding a comma-containing name like beta[2,3] is quoted.
inline std::string csv_name(const std::string& name) {
    return name.find(',') == std::string::npos ? name : "\"" + name + "\"";
}

inline std::vector<std::string> split_quoted(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
        } else if (ch == ',' && !quoted) {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace detail

inline void write_draws_csv(const ChainOutput& chain, std::ostream& out) {
    const auto names = draw_column_names(chain.spec, chain.layout);
    std::vector<std::string> header = {"draw"};
    for (const auto& n : names) header.push_back(detail::csv_name(n));
    detail::write_csv_row(out, header);
    const auto stat = static_parameter_names(chain.spec);
    for (std::size_t k = 0; k < chain.draws.size(); ++k) {
        const auto& s = chain.draws[k];
        std::vector<std::string> row = {std::to_string(k)};
        for (const auto& n : stat) row.push_back(format_double(static_value(s, n)));
        for (std::size_t i = 1; i < s.alpha.size(); ++i) row.push_back(format_double(s.alpha[i]));
        for (double b : s.beta) row.push_back(format_double(b));
        for (std::size_t t = 1; t < s.gamma.size(); ++t) row.push_back(format_double(s.gamma[t]));
        detail::write_csv_row(out, row);
    }
}

/// Latent fields per stored draw: columns T[i,j] (skew only) and lambda[i,j].
inline void write_latent_csv(const ChainOutput& chain, const ModelData& d, std::ostream& out) {
    std::vector<std::string> header = {"draw"};
    for (const auto& c : d.cells) {
        if (chain.spec.skew) header.push_back(detail::csv_name("T[" + std::to_string(c.i) + "," + std::to_string(c.j) + "]"));
    }
    for (const auto& c : d.cells) {
        header.push_back(detail::csv_name("lambda[" + std::to_string(c.i) + "," + std::to_string(c.j) + "]"));
    }
    detail::write_csv_row(out, header);
    for (std::size_t k = 0; k < chain.draws.size(); ++k) {
        const auto& s = chain.draws[k];
        if (s.lambda.size() != d.size()) throw InputError("latent fields were not stored for this chain");
        std::vector<std::string> row = {std::to_string(k)};
        if (chain.spec.skew) for (double v : s.T) row.push_back(format_double(v));
        for (double v : s.lambda) row.push_back(format_double(v));
        detail::write_csv_row(out, row);
    }
}

/// Inverse of write_draws_csv; the column set must match spec and layout exactly.
inline std::vector<ParameterState> read_draws_csv(std::istream& in, const ModelSpec& spec, const EffectLayout& L) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("draws file is empty");
    const auto header = detail::split_quoted(line);
    const auto names = draw_column_names(spec, L);
    if (header.size() != names.size() + 1 || header[0] != "draw" ||
        !std::equal(names.begin(), names.end(), header.begin() + 1)) {
        throw InputError("draws file columns do not match model '" + spec.code() + "' on this triangle");
    }
    const auto stat = static_parameter_names(spec);
    std::vector<ParameterState> draws;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto f = detail::split_quoted(line);
        if (f.size() != header.size()) throw InputError("draws file line " + std::to_string(lineno) + ": wrong field count");
        const std::string ctx = "draws file line " + std::to_string(lineno);
        std::size_t col = 1;
        ParameterState s;
        s.rho = 0.0;
        for (const auto& n : stat) {
            const double v = parse_double(f[col++], ctx);
            if (n == "mu") s.mu = v;
            else if (n == "rho") s.rho = v;
            else if (n == "sigma2") s.sigma2 = v;
            else if (n == "sigma2_alpha") s.sigma2_alpha = v;
            else if (n == "sigma2_beta") s.sigma2_beta = v;
            else if (n == "sigma2_gamma") s.sigma2_gamma = v;
            else if (n == "nu") s.nu = v;
        }
        s.alpha.assign(L.n_alpha, 0.0);
        for (int i = 1; i < L.n_alpha; ++i) s.alpha[i] = parse_double(f[col++], ctx);
        s.beta.resize(L.beta_cells.size());
        for (auto& b : s.beta) b = parse_double(f[col++], ctx);
        s.gamma.assign(L.n_gamma, 0.0);
        for (int t = 1; t < L.n_gamma; ++t) s.gamma[t] = parse_double(f[col++], ctx);
        draws.push_back(std::move(s));
    }
    return draws;
}

}  // namespace skewres
