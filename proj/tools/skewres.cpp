// skewres: fit, predict, baseline, score, simulate and report on run-off triangles.
//
// Settings resolve in order: built-in defaults, --config file, SKEWRES_OUT_DIR
// (output directory only), then command-line flags.

#include <cstdlib>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "skewres/app.hpp"

namespace {

using Settings = std::vector<std::pair<std::string, std::string>>;

struct OptionDef {
    const char* key;
    const char* help;
    bool multi = false;
};

const std::vector<OptionDef> kCommon = {
    {"data", "triangle CSV file"},
    {"format", "triangle file layout: long | wide"},
    {"holdout", "number of most recent calendar diagonals held out"},
    {"zero-policy", "zero claims: drop | offset[:c]"},
    {"seed", "random seed"},
    {"out", "output directory"},
};

const std::vector<std::pair<std::string, std::vector<OptionDef>>> kCommands = {
    {"fit",
     {{"model", "model code: n st s vg sn sst ss svg"},
      {"iters", "total iterations"},
      {"burnin", "burn-in iterations"},
      {"thin", "thinning interval"},
      {"chains", "independent chains run concurrently"},
      {"prior-scenario", "prior preset 1-5 (0 = defaults)"}}},
    {"predict",
     {{"model", "model code of the fitted chain"},
      {"draws", "draws CSV from fit"},
      {"target", "prediction cells: holdout | lower | both"},
      {"prior-scenario", "prior preset used for the fit"}}},
    {"baseline", {{"target", "projected cells: holdout | lower | both (default both)"}}},
    {"score",
     {{"predictive", "predictive CSV (repeatable)", true},
      {"label", "run label per predictive file (repeatable)", true},
      {"truth", "truth.json from simulate (actuals for every cell)"},
      {"psi", "interval level; 0.05 gives 95% intervals"},
      {"scale", "scoring scale: log | currency"},
      {"crps-orientation", "standard | printed"}}},
    {"simulate",
     {{"model", "generating model code"},
      {"preset", "named truth configuration: sec31"},
      {"n", "triangle size"},
      {"mu", "grand mean"},
      {"rho", "skewness parameter"},
      {"sigma2", "scale"},
      {"nu", "mixing parameter"},
      {"sigma2-alpha", "accident-year random-walk variance"},
      {"sigma2-beta", "development random-walk variance"},
      {"sigma2-gamma", "calendar-year random-walk variance"}}},
    {"report",
     {{"model", "model code of the chain (with --draws)"},
      {"draws", "draws CSV to summarize"},
      {"latent", "latent CSV for standardized residuals"},
      {"prior-scenario", "prior preset used for the fit"}}},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian loss reserving with skew scale-mixture models"};
    app.set_version_flag("--version", std::string(skewres::version()));
    app.require_subcommand(1);

    Settings flags;
    std::string config_file;
    bool store_latent = false;
    for (const auto& [name, opts] : kCommands) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_file, "line-based key = value settings file");
        auto add = [&](const OptionDef& o) {
            auto* opt = sub->add_option_function<std::vector<std::string>>(
                std::string("--") + o.key,
                [&flags, key = std::string(o.key)](const std::vector<std::string>& vs) {
                    for (const auto& v : vs) flags.emplace_back(key, v);
                },
                o.help);
            if (o.multi) opt->expected(1, -1)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
            else opt->expected(1);
        };
        for (const auto& o : kCommon) add(o);
        for (const auto& o : opts) add(o);
        if (name == "fit") sub->add_flag("--store-latent", store_latent, "also write per-draw T and lambda");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(skewres::ErrorKind::config);
    }

    try {
        skewres::RunConfig cfg;
        cfg.command = app.get_subcommands().front()->get_name();
        if (!config_file.empty()) {
            for (const auto& [k, v] : skewres::read_config_file(config_file)) skewres::apply_setting(cfg, k, v);
        }
        if (const char* env = std::getenv("SKEWRES_OUT_DIR"); env && *env) cfg.out_dir = env;
        for (const auto& [k, v] : flags) skewres::apply_setting(cfg, k, v);
        if (store_latent) cfg.chain.store_latent = true;
        return skewres::run_command(cfg);
    } catch (const skewres::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(skewres::ErrorKind::numeric);
    }
}
