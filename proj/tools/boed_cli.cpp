#include "boed/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNumerical = 4;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Expected information gain estimation and tuning"};
    app.require_subcommand(1);

    std::string config_path;
    boed::CommandOverrides overrides;
    std::uint64_t seed = 0;
    std::string out_dir, estimator;
    int replicates = 0, jobs = 0;

    const char* commands[][2] = {
        {"estimate", "tune, then run one estimate (JSON)"},
        {"consistency", "error vs TOL over replicates against the oracle (CSV)"},
        {"work-study", "work vs TOL with fitted log-log slopes (CSV + JSON)"},
        {"eig-curve", "tuned estimate at every point of the design grid (CSV)"},
        {"tune", "pilot constants and optimal settings only (CSV + JSON)"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "config file")->required();
        sub->add_option("--seed", seed, "root seed (overrides run.seed)");
        sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
        sub->add_option("--estimator", estimator, "dlmc, mcla or dlmcis (overrides run.estimator)");
        sub->add_flag("--force-kappa1", overrides.force_kappa1, "mcla: kappa = 1, bias constraint off");
        sub->add_option("--replicates", replicates, "replicates per TOL");
        sub->add_option("--jobs", jobs, "worker threads");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }
    CLI::App* sub = app.get_subcommands().front();

    try {
        boed::RunConfig config = boed::load_run_config(config_path);
        if (sub->count("--seed")) overrides.seed = seed;
        if (sub->count("--out")) overrides.out = out_dir;
        if (sub->count("--estimator")) overrides.estimator = boed::parse_estimator(estimator);
        if (sub->count("--replicates")) overrides.replicates = replicates;
        if (sub->count("--jobs")) overrides.jobs = jobs;
        boed::apply_overrides(config, overrides);
        for (const std::string& path : boed::run_command(sub->get_name(), config)) std::cout << path << '\n';
    } catch (const boed::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const boed::InfeasibleToleranceError& e) {
        std::cerr << "infeasible tolerance: " << e.what() << '\n';
        return kExitInfeasible;
    } catch (const boed::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return 0;
}
