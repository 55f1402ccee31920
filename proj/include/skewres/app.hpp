#pragma once

// Command implementations behind the skewres executable. Each command reads
// its inputs completely before writing anything, so a failing run leaves no
// partial outputs.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "skewres/evaluate.hpp"
#include "skewres/mcmc.hpp"
#include "skewres/model.hpp"
#include "skewres/reserving.hpp"
#include "skewres/simulate.hpp"
#include "skewres/stats.hpp"
#include "skewres/triangle.hpp"

#ifndef SKEWRES_VERSION
#define SKEWRES_VERSION "unknown"
#endif

namespace skewres {

using Json = nlohmann::ordered_json;

inline const char* version() { return SKEWRES_VERSION; }

struct RunConfig {
    std::string command;
    std::string model = "sst";
    std::string data;
    TriangleFormat format = TriangleFormat::long_csv;
    int holdout = 0;
    ZeroPolicy zero_policy;
    ChainConfig chain;
    int chains = 1;
    int prior_scenario = 0;  // 0 = family defaults
    std::string out_dir = ".";
    std::string draws;
    std::string latent;
    PredictionTarget target = PredictionTarget::holdout;
    bool target_set = false;
    double psi = 0.05;
    bool currency_scale = false;
    CrpsOrientation crps = CrpsOrientation::standard;
    std::vector<std::string> predictive;
    std::vector<std::string> labels;
    std::string truth;
    std::string preset;
    TruthConfig truth_config = TruthConfig::sec31();
};

namespace detail {

inline long to_long(const std::string& v, const std::string& key) {
    try {
        return parse_long(v, key);
    } catch (const InputError&) {
        throw ConfigError("setting '" + key + "' expects an integer, got '" + v + "'");
    }
}

inline double to_double(const std::string& v, const std::string& key) {
    try {
        return parse_double(v, key);
    } catch (const InputError&) {
        throw ConfigError("setting '" + key + "' expects a number, got '" + v + "'");
    }
}

inline bool to_bool(const std::string& v, const std::string& key) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError("setting '" + key + "' expects a boolean, got '" + v + "'");
}

}  // namespace detail

/// Apply one `key = value` setting; keys are the long flag names.
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
    using detail::to_double;
    using detail::to_long;
    if (key == "model") {
        ModelSpec::from_code(value);
        cfg.model = value;
    } else if (key == "data") cfg.data = value;
    else if (key == "format") {
        if (value == "long") cfg.format = TriangleFormat::long_csv;
        else if (value == "wide") cfg.format = TriangleFormat::wide_csv;
        else throw ConfigError("format must be long or wide");
    } else if (key == "holdout") cfg.holdout = static_cast<int>(to_long(value, key));
    else if (key == "zero-policy") cfg.zero_policy = parse_zero_policy(value);
    else if (key == "iters") cfg.chain.n_iter = to_long(value, key);
    else if (key == "burnin") cfg.chain.burn_in = to_long(value, key);
    else if (key == "thin") cfg.chain.thin = to_long(value, key);
    else if (key == "seed") {
        cfg.chain.seed = static_cast<std::uint64_t>(to_long(value, key));
        cfg.truth_config.seed = cfg.chain.seed;
    } else if (key == "chains") cfg.chains = static_cast<int>(to_long(value, key));
    else if (key == "prior-scenario") cfg.prior_scenario = static_cast<int>(to_long(value, key));
    else if (key == "store-latent") cfg.chain.store_latent = detail::to_bool(value, key);
    else if (key == "out") cfg.out_dir = value;
    else if (key == "draws") cfg.draws = value;
    else if (key == "latent") cfg.latent = value;
    else if (key == "target") {
        cfg.target = parse_target(value);
        cfg.target_set = true;
    } else if (key == "psi") cfg.psi = to_double(value, key);
    else if (key == "scale") {
        if (value == "log") cfg.currency_scale = false;
        else if (value == "currency") cfg.currency_scale = true;
        else throw ConfigError("scale must be log or currency");
    } else if (key == "crps-orientation") {
        if (value == "standard") cfg.crps = CrpsOrientation::standard;
        else if (value == "printed") cfg.crps = CrpsOrientation::printed;
        else throw ConfigError("crps-orientation must be standard or printed");
    } else if (key == "predictive") cfg.predictive.push_back(value);
    else if (key == "label") cfg.labels.push_back(value);
    else if (key == "truth") cfg.truth = value;
    else if (key == "preset") {
        if (value != "sec31") throw ConfigError("unknown simulation preset '" + value + "' (sec31)");
        const auto seed = cfg.truth_config.seed;
        cfg.truth_config = TruthConfig::sec31();
        cfg.truth_config.seed = seed;
        cfg.preset = value;
    } else if (key == "n") cfg.truth_config.n = static_cast<int>(to_long(value, key));
    else if (key == "mu") cfg.truth_config.mu = to_double(value, key);
    else if (key == "rho") cfg.truth_config.rho = to_double(value, key);
    else if (key == "sigma2") cfg.truth_config.sigma2 = to_double(value, key);
    else if (key == "nu") cfg.truth_config.nu = to_double(value, key);
    else if (key == "sigma2-alpha") cfg.truth_config.sigma2_alpha = to_double(value, key);
    else if (key == "sigma2-beta") cfg.truth_config.sigma2_beta = to_double(value, key);
    else if (key == "sigma2-gamma") cfg.truth_config.sigma2_gamma = to_double(value, key);
    else throw ConfigError("unknown setting '" + key + "'");
}

/// Parse a line-based `key = value` file; '#' starts a comment.
inline std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file '" + path + "'");
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        const auto t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        }
        out.emplace_back(std::string(trim(t.substr(0, eq))), std::string(trim(t.substr(eq + 1))));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

namespace detail {

inline Triangle load_triangle(const RunConfig& cfg) {
    if (cfg.data.empty()) throw ConfigError("--data is required");
    std::ifstream in(cfg.data);
    if (!in) throw InputError("cannot open data file '" + cfg.data + "'");
    return parse_triangle(in, cfg.format);
}

inline ModelSpec make_spec(const RunConfig& cfg) {
    ModelSpec spec = ModelSpec::from_code(cfg.model);
    if (cfg.prior_scenario != 0) spec.priors = Priors::scenario(cfg.prior_scenario, spec.mixing);
    spec.priors.validate();
    return spec;
}

inline std::filesystem::path out_path(const RunConfig& cfg, const std::string& name) {
    return std::filesystem::path(cfg.out_dir) / name;
}

inline void ensure_out_dir(const RunConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw InputError("cannot create output directory '" + cfg.out_dir + "': " + ec.message());
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw InputError("cannot write '" + p.string() + "'");
    out << text;
}

inline Json cells_json(const std::vector<Cell>& cells) {
    Json a = Json::array();
    for (const auto& c : cells) a.push_back({c.i, c.j});
    return a;
}

inline Json zero_policy_json(const ZeroPolicy& p, const std::vector<Cell>& dropped) {
    return Json{{"policy", p.describe()}, {"dropped_cells", cells_json(dropped)}};
}

inline Json provenance(const RunConfig& cfg, const std::string& command) {
    return Json{{"version", version()}, {"command", command}, {"seed", cfg.chain.seed}};
}

inline Json priors_json(const Priors& p) {
    return Json{{"s2_mu", p.s2_mu},       {"rho_beta", {p.rho_c, p.rho_d}},
                {"variance_ig", {p.var_a, p.var_b}}, {"nu", p.nu.describe()}};
}

inline Json number_or_null(const std::optional<double>& v) {
    if (!v || !std::isfinite(*v)) return nullptr;
    return *v;
}

inline Json parameter_summary(const std::vector<double>& x) {
    std::vector<double> s = x;
    std::sort(s.begin(), s.end());
    Json j{{"mean", mean(x)},
           {"median", quantile_sorted(s, 0.5)},
           {"q025", quantile_sorted(s, 0.025)},
           {"q975", quantile_sorted(s, 0.975)}};
    if (x.size() >= 100) {
        j["ess"] = number_or_null(ess(x));
        j["geweke_cd"] = number_or_null(geweke_cd(x));
    } else {
        j["ess"] = nullptr;
        j["geweke_cd"] = nullptr;
    }
    return j;
}

struct Prepared {
    Triangle raw;
    Triangle split;
    LogTriangle logtri;
    ModelData data;
};

inline Prepared prepare(const RunConfig& cfg) {
    Prepared p;
    p.raw = load_triangle(cfg);
    p.split = holdout_split(p.raw, cfg.holdout);
    p.logtri = log_transform(p.split, cfg.zero_policy);
    p.data = ModelData::build(p.logtri);
    return p;
}

inline Json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const std::exception& e) {
        throw InputError("malformed JSON in '" + path + "': " + e.what());
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline int cmd_fit(const RunConfig& cfg, std::ostream& log = std::cout) {
    const ModelSpec spec = detail::make_spec(cfg);
    cfg.chain.validate();
    const auto prep = detail::prepare(cfg);
    const auto chains = run_chains(spec, prep.data, cfg.chain, cfg.chains);

    Json diag = detail::provenance(cfg, "fit");
    diag["model"] = spec.code();
    diag["data"] = cfg.data;
    diag["n"] = prep.raw.n();
    diag["holdout"] = cfg.holdout;
    diag["likelihood_cells"] = prep.data.size();
    diag["zero_policy"] = detail::zero_policy_json(cfg.zero_policy, prep.logtri.dropped);
    diag["priors"] = detail::priors_json(spec.priors);
    diag["chain"] = {{"n_iter", cfg.chain.n_iter},
                     {"burn_in", cfg.chain.burn_in},
                     {"thin", cfg.chain.thin},
                     {"draws", cfg.chain.draw_count()},
                     {"chains", cfg.chains},
                     {"target_ess", cfg.chain.target_ess ? Json(*cfg.chain.target_ess) : Json(nullptr)}};

    const auto names = static_parameter_names(spec);
    Json per_chain = Json::array();
    for (const auto& ch : chains) {
        Json c;
        Json params;
        for (const auto& n : names) params[n] = detail::parameter_summary(series(ch, n));
        c["parameters"] = params;
        Json acc;
        for (const auto& [block, r] : ch.acceptance) acc[block] = {{"pre_burn", r.pre_burn}, {"post_burn", r.post_burn}};
        c["acceptance"] = acc;
        c["final_kappa"] = {{"rho", ch.final_rho.kappa_a}, {"nu", ch.final_nu.kappa_a}};
        per_chain.push_back(c);
    }
    if (chains.size() == 1) {
        diag["parameters"] = per_chain[0]["parameters"];
        diag["acceptance"] = per_chain[0]["acceptance"];
    } else {
        Json pooled;
        for (const auto& n : names) {
            std::vector<double> all;
            double ess_sum = 0.0;
            bool ess_ok = true;
            for (const auto& ch : chains) {
                auto s = series(ch, n);
                all.insert(all.end(), s.begin(), s.end());
                auto e = s.size() >= 100 ? ess(s) : std::nullopt;
                if (e) ess_sum += *e;
                else ess_ok = false;
            }
            Json p = detail::parameter_summary(all);
            p.erase("geweke_cd");
            p["ess"] = ess_ok ? Json(ess_sum) : Json(nullptr);
            pooled[n] = p;
        }
        diag["parameters"] = pooled;
        diag["chains_detail"] = per_chain;
    }

    Json below = Json::array();
    if (cfg.chain.target_ess) {
        for (const auto& n : names) {
            const Json& e = diag["parameters"][n]["ess"];
            if (!e.is_number() || e.get<double>() < static_cast<double>(*cfg.chain.target_ess)) below.push_back(n);
        }
    }
    diag["ess_below_target"] = below;

    detail::ensure_out_dir(cfg);
    for (std::size_t c = 0; c < chains.size(); ++c) {
        const std::string suffix = chains.size() == 1 ? "" : "_chain" + std::to_string(c);
        std::ostringstream draws;
        write_draws_csv(chains[c], draws);
        detail::write_text(detail::out_path(cfg, "draws" + suffix + ".csv"), draws.str());
        if (cfg.chain.store_latent) {
            std::ostringstream lat;
            write_latent_csv(chains[c], prep.data, lat);
            detail::write_text(detail::out_path(cfg, "latent" + suffix + ".csv"), lat.str());
        }
    }
    detail::write_text(detail::out_path(cfg, "diagnostics.json"), diag.dump(2) + "\n");
    log << "fit " << spec.code() << ": " << chains.size() << " chain(s), " << cfg.chain.draw_count()
        << " draws each -> " << cfg.out_dir << "\n";
    if (!below.empty()) log << "warning: ESS below target for " << below.dump() << "\n";
    return 0;
}

inline int cmd_predict(const RunConfig& cfg, std::ostream& log = std::cout) {
    const ModelSpec spec = detail::make_spec(cfg);
    const auto prep = detail::prepare(cfg);
    const std::string draws_path = cfg.draws.empty() ? detail::out_path(cfg, "draws.csv").string() : cfg.draws;
    const auto meta_path = std::filesystem::path(draws_path).parent_path() / "diagnostics.json";
    if (std::filesystem::exists(meta_path)) {
        const Json meta = detail::read_json(meta_path.string());
        if (meta.value("model", "") != spec.code()) {
            throw InputError("chain/model mismatch: draws were fitted with model '" + meta.value("model", "") +
                             "', requested '" + spec.code() + "'");
        }
        if (meta.value("holdout", -1) != cfg.holdout || meta["zero_policy"].value("policy", "") != cfg.zero_policy.describe()) {
            throw InputError("chain/data mismatch: holdout or zero policy differ from the fit");
        }
    }
    std::ifstream in(draws_path);
    if (!in) throw InputError("cannot open draws file '" + draws_path + "'");
    const auto draws = read_draws_csv(in, spec, prep.data.layout);

    Rng rng(cfg.chain.seed);
    const auto pred = predictive_draws(spec, prep.data.layout, draws, prep.split, cfg.target, rng);
    const auto q = reserve_quantiles(pred, default_reserve_probs());

    std::ostringstream csv;
    csv << "i,j,draw,amount\n";
    for (std::size_t c = 0; c < pred.cells.size(); ++c) {
        for (std::size_t k = 0; k < pred.draw_count(); ++k) {
            csv << pred.cells[c].i << ',' << pred.cells[c].j << ',' << k << ',' << format_double(pred.samples[c][k])
                << '\n';
        }
    }
    std::vector<double> sorted = pred.reserve_totals;
    std::sort(sorted.begin(), sorted.end());
    Json rep = detail::provenance(cfg, "predict");
    rep["model"] = spec.code();
    rep["target"] = target_name(cfg.target);
    rep["zero_policy"] = detail::zero_policy_json(cfg.zero_policy, prep.logtri.dropped);
    rep["cells"] = pred.cells.size();
    rep["draws"] = pred.draw_count();
    rep["mean"] = mean(pred.reserve_totals);
    rep["median"] = quantile_sorted(sorted, 0.5);
    rep["interval95"] = {quantile_sorted(sorted, 0.025), quantile_sorted(sorted, 0.975)};
    Json qs = Json::array();
    for (std::size_t k = 0; k < q.size(); ++k) qs.push_back({{"p", default_reserve_probs()[k]}, {"total", q[k]}});
    rep["quantiles"] = qs;

    detail::ensure_out_dir(cfg);
    detail::write_text(detail::out_path(cfg, "predictive.csv"), csv.str());
    detail::write_text(detail::out_path(cfg, "reserve.json"), rep.dump(2) + "\n");
    log << "predict " << spec.code() << ": " << pred.cells.size() << " cells, median total "
        << format_double(quantile_sorted(sorted, 0.5)) << "\n";
    return 0;
}

inline int cmd_baseline(const RunConfig& cfg, std::ostream& log = std::cout) {
    const Triangle raw = detail::load_triangle(cfg);
    const Triangle split = holdout_split(raw, cfg.holdout);
    const PredictionTarget target = cfg.target_set ? cfg.target : PredictionTarget::both;
    const auto res = chain_ladder(split, target);

    Json rep = detail::provenance(cfg, "baseline");
    rep["method"] = "chain_ladder";
    rep["holdout"] = cfg.holdout;
    rep["target"] = target_name(target);
    Json f = Json::array();
    for (std::size_t j = 0; j < res.factors.size(); ++j) {
        f.push_back({{"dev", j + 1}, {"factor", detail::number_or_null(res.factors[j])}});
    }
    rep["factors"] = f;
    rep["row_reserves"] = res.row_reserves;
    rep["total"] = res.total;
    rep["projected_cells"] = res.cells.size();
    rep["unprojectable_cells"] = detail::cells_json(res.unprojectable);

    std::ostringstream csv;
    csv << "i,j,amount\n";
    for (const auto& c : res.cells) csv << c.i << ',' << c.j << ',' << format_double(c.amount) << '\n';
    detail::ensure_out_dir(cfg);
    detail::write_text(detail::out_path(cfg, "baseline.json"), rep.dump(2) + "\n");
    detail::write_text(detail::out_path(cfg, "baseline_cells.csv"), csv.str());
    log << "chain ladder total reserve " << format_double(res.total) << " over " << res.cells.size() << " cells\n";
    return 0;
}

namespace detail {

inline std::map<Cell, std::vector<double>> read_predictive_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open predictive file '" + path + "'");
    std::map<Cell, std::vector<double>> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto f = split_csv(line);
        if (lineno == 1 && f[0] == "i") continue;
        if (f.size() != 4) throw InputError(path + ":" + std::to_string(lineno) + ": expected i,j,draw,amount");
        const std::string ctx = path + ":" + std::to_string(lineno);
        const Cell c{static_cast<int>(parse_long(f[0], ctx)), static_cast<int>(parse_long(f[1], ctx))};
        out[c].push_back(parse_double(f[3], ctx));
    }
    if (out.empty()) throw InputError("predictive file '" + path + "' holds no draws");
    return out;
}

/// Actual amounts by cell, from a simulation truth record or the triangle's holdout cells.
inline std::map<Cell, double> load_actuals(const RunConfig& cfg) {
    std::map<Cell, double> out;
    if (!cfg.truth.empty()) {
        const Json t = read_json(cfg.truth);
        const auto& y = t.at("y");
        const int n = static_cast<int>(y.size());
        for (int i = 1; i <= n; ++i) {
            for (int j = 1; j <= n; ++j) out[{i, j}] = y[i - 1][j - 1].get<double>();
        }
        return out;
    }
    const Triangle split = holdout_split(load_triangle(cfg), cfg.holdout);
    for (const Cell& c : split.cells(CellMask::holdout)) out[c] = split.at(c.i, c.j);
    return out;
}

}  // namespace detail

inline int cmd_score(const RunConfig& cfg, std::ostream& log = std::cout) {
    if (cfg.predictive.empty()) throw ConfigError("--predictive is required");
    if (!cfg.labels.empty() && cfg.labels.size() != cfg.predictive.size()) {
        throw ConfigError("give one --label per --predictive file");
    }
    const auto actuals = detail::load_actuals(cfg);
    const ZeroPolicy& zp = cfg.zero_policy;
    const double shift = zp.kind == ZeroPolicy::Kind::offset ? zp.c : 0.0;

    struct Run {
        std::string label;
        ScoreReport report;
        std::vector<Cell> excluded;
    };
    std::vector<Run> runs;
    for (std::size_t r = 0; r < cfg.predictive.size(); ++r) {
        const auto pred = detail::read_predictive_csv(cfg.predictive[r]);
        Run run;
        run.label = cfg.labels.empty() ? std::filesystem::path(cfg.predictive[r]).parent_path().filename().string()
                                       : cfg.labels[r];
        if (run.label.empty()) run.label = "run" + std::to_string(r + 1);
        std::vector<Cell> missing;
        for (const auto& [c, v] : pred) {
            if (!actuals.count(c)) missing.push_back(c);
        }
        if (!missing.empty()) {
            std::string list;
            for (const auto& c : missing) list += " (" + std::to_string(c.i) + "," + std::to_string(c.j) + ")";
            throw InputError("cell-set mismatch: no actual value for" + list);
        }
        std::vector<Cell> cells;
        std::vector<std::vector<double>> draws;
        std::vector<double> act;
        for (const auto& [c, v] : pred) {
            const double y = actuals.at(c);
            if (cfg.currency_scale) {
                std::vector<double> d = v;
                for (auto& x : d) x -= shift;
                draws.push_back(std::move(d));
                act.push_back(y);
            } else {
                const auto z = zp.apply(y);
                if (!z) {
                    run.excluded.push_back(c);
                    continue;
                }
                std::vector<double> d = v;
                for (auto& x : d) x = std::log(x);
                draws.push_back(std::move(d));
                act.push_back(*z);
            }
            cells.push_back(c);
        }
        run.report = score_forecasts(cells, draws, act, cfg.psi, cfg.crps);
        runs.push_back(std::move(run));
    }
    if (runs.size() > 1 && runs.front().report.cells.size() > 0) {
        for (const auto& r : runs) {
            if (r.report.cells.size() != runs.front().report.cells.size()) {
                throw InputError("cell-set mismatch between runs '" + runs.front().label + "' and '" + r.label + "'");
            }
        }
    }
    std::vector<std::size_t> order(runs.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return runs[a].report.average_crps < runs[b].report.average_crps;
    });
    std::vector<int> rank(runs.size());
    for (std::size_t k = 0; k < order.size(); ++k) rank[order[k]] = static_cast<int>(k) + 1;

    Json rep = detail::provenance(cfg, "score");
    rep["psi"] = cfg.psi;
    rep["scale"] = cfg.currency_scale ? "currency" : "log";
    rep["crps_orientation"] = cfg.crps == CrpsOrientation::standard ? "standard" : "printed";
    rep["zero_policy"] = zp.describe();
    Json arr = Json::array();
    std::ostringstream ranking;
    ranking << "label,average_is,average_wci,rmspe,average_crps,rank\n";
    detail::ensure_out_dir(cfg);
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const auto& rr = runs[r].report;
        arr.push_back({{"label", runs[r].label},
                       {"cells", rr.cells.size()},
                       {"excluded_cells", detail::cells_json(runs[r].excluded)},
                       {"average_is", rr.average_is},
                       {"average_wci", rr.average_wci},
                       {"rmspe", rr.rmspe},
                       {"average_crps", rr.average_crps},
                       {"rank", rank[r]}});
        ranking << runs[r].label << ',' << format_double(rr.average_is) << ',' << format_double(rr.average_wci) << ','
                << format_double(rr.rmspe) << ',' << format_double(rr.average_crps) << ',' << rank[r] << '\n';
        std::ostringstream csv;
        csv << "i,j,is,wci,crps,residual_median\n";
        for (const auto& c : rr.cells) {
            csv << c.cell.i << ',' << c.cell.j << ',' << format_double(c.is) << ',' << format_double(c.wci) << ','
                << format_double(c.crps) << ',' << format_double(c.actual - c.median) << '\n';
        }
        const std::string name = runs.size() == 1 ? "score_cells.csv" : "score_cells_" + runs[r].label + ".csv";
        detail::write_text(detail::out_path(cfg, name), csv.str());
        log << runs[r].label << ": IS " << format_double(rr.average_is) << "  WCI " << format_double(rr.average_wci)
            << "  RMSPE " << format_double(rr.rmspe) << "  CRPS " << format_double(rr.average_crps) << "  rank "
            << rank[r] << "\n";
    }
    rep["runs"] = arr;
    detail::write_text(detail::out_path(cfg, "score.json"), rep.dump(2) + "\n");
    detail::write_text(detail::out_path(cfg, "ranking.csv"), ranking.str());
    return 0;
}

inline Json truth_json(const TruthRecord& t) {
    const auto& c = t.config;
    return Json{{"model", t.model},
                {"config",
                 {{"n", c.n},
                  {"mu", c.mu},
                  {"rho", c.rho},
                  {"sigma2", c.sigma2},
                  {"nu", c.nu},
                  {"sigma2_alpha", c.sigma2_alpha},
                  {"sigma2_beta", c.sigma2_beta},
                  {"sigma2_gamma", c.sigma2_gamma},
                  {"seed", c.seed}}},
                {"future_total", t.future_total},
                {"alpha", t.alpha},
                {"beta", t.beta},
                {"gamma", t.gamma},
                {"z", t.z},
                {"y", t.y}};
}

inline int cmd_simulate(const RunConfig& cfg, std::ostream& log = std::cout) {
    const ModelSpec spec = ModelSpec::from_code(cfg.model);
    TruthConfig tc = cfg.truth_config;
    tc.seed = cfg.chain.seed;
    Rng rng(tc.seed);
    const auto sim = simulate_triangle(tc, spec, rng);
    Json truth = detail::provenance(cfg, "simulate");
    truth["preset"] = cfg.preset.empty() ? Json(nullptr) : Json(cfg.preset);
    const Json record = truth_json(sim.truth);
    for (const auto& [k, v] : record.items()) truth[k] = v;
    detail::ensure_out_dir(cfg);
    detail::write_text(detail::out_path(cfg, "triangle.csv"), serialize_triangle(sim.triangle, TriangleFormat::long_csv));
    detail::write_text(detail::out_path(cfg, "truth.json"), truth.dump(2) + "\n");
    log << "simulated " << tc.n << "x" << tc.n << " " << spec.code() << " triangle, future total "
        << format_double(sim.truth.future_total) << "\n";
    return 0;
}

/// Data summary of the training cells, chain-ladder total, and (when a chain
/// with latent fields is given) standardized residuals.
inline int cmd_report(const RunConfig& cfg, std::ostream& log = std::cout) {
    const auto prep = detail::prepare(cfg);
    std::vector<double> z;
    for (const auto& c : prep.logtri.cells) z.push_back(c.z);
    Json rep = detail::provenance(cfg, "report");
    rep["data"] = cfg.data;
    rep["n"] = prep.raw.n();
    rep["holdout"] = cfg.holdout;
    rep["zero_policy"] = detail::zero_policy_json(cfg.zero_policy, prep.logtri.dropped);
    auto summary_json = [](const Summary& s) {
        return Json{{"cells", s.n},          {"mean", s.mean},         {"median", s.median},
                    {"sd", s.sd},            {"skewness", s.skewness}, {"excess_kurtosis", s.excess_kurtosis}};
    };
    const Summary s = summarize(z);
    rep["log_claims"] = summary_json(s);
    try {
        rep["chain_ladder_total"] = chain_ladder(prep.split, PredictionTarget::both).total;
    } catch (const InputError&) {
        rep["chain_ladder_total"] = nullptr;
    }
    log << "log claims (" << s.n << " cells, zero policy " << cfg.zero_policy.describe() << "): mean "
        << format_double(s.mean) << " median " << format_double(s.median) << " sd " << format_double(s.sd)
        << " skewness " << format_double(s.skewness) << " excess kurtosis " << format_double(s.excess_kurtosis)
        << "\n";

    if (!cfg.draws.empty()) {
        const ModelSpec spec = detail::make_spec(cfg);
        std::ifstream din(cfg.draws);
        if (!din) throw InputError("cannot open draws file '" + cfg.draws + "'");
        ChainOutput chain;
        chain.spec = spec;
        chain.layout = prep.data.layout;
        chain.draws = read_draws_csv(din, spec, prep.data.layout);
        Json params;
        for (const auto& n : static_parameter_names(spec)) params[n] = detail::parameter_summary(series(chain, n));
        rep["model"] = spec.code();
        rep["parameters"] = params;
        if (!cfg.latent.empty()) {
            std::ifstream lin(cfg.latent);
            if (!lin) throw InputError("cannot open latent file '" + cfg.latent + "'");
            std::string line;
            std::getline(lin, line);
            const std::size_t N = prep.data.size();
            std::size_t k = 0;
            while (std::getline(lin, line) && k < chain.draws.size()) {
                if (trim(line).empty()) continue;
                const auto f = detail::split_quoted(line);
                const std::size_t expect = 1 + (spec.skew ? 2 * N : N);
                if (f.size() != expect) throw InputError("latent file does not match the data");
                auto& st = chain.draws[k++];
                st.T.assign(N, 0.0);
                st.lambda.assign(N, 1.0);
                std::size_t col = 1;
                if (spec.skew) for (auto& v : st.T) v = parse_double(f[col++], "latent file");
                for (auto& v : st.lambda) v = parse_double(f[col++], "latent file");
            }
            const auto res = bayesian_residuals(chain, prep.data);
            Json cells = Json::array();
            for (std::size_t c = 0; c < res.cells.size(); ++c) {
                cells.push_back({{"i", res.cells[c].i}, {"j", res.cells[c].j}, {"median", res.medians[c]}});
            }
            rep["residuals"] = {{"fraction_outside_2", res.fraction_outside}, {"cells", cells}};
            log << "residual medians outside [-2,2]: " << format_double(res.fraction_outside) << "\n";
        }
    }
    detail::ensure_out_dir(cfg);
    detail::write_text(detail::out_path(cfg, "report.json"), rep.dump(2) + "\n");
    return 0;
}

inline int run_command(const RunConfig& cfg, std::ostream& log = std::cout) {
    if (cfg.command == "fit") return cmd_fit(cfg, log);
    if (cfg.command == "predict") return cmd_predict(cfg, log);
    if (cfg.command == "baseline") return cmd_baseline(cfg, log);
    if (cfg.command == "score") return cmd_score(cfg, log);
    if (cfg.command == "simulate") return cmd_simulate(cfg, log);
    if (cfg.command == "report") return cmd_report(cfg, log);
    throw ConfigError("unknown command '" + cfg.command + "'");
}

}  // namespace skewres
