// fakediff: inspect, simulate and verify fake versions of Brownian and
// exponential Brownian motion.

#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fakediff/cli.hpp"

namespace fc = fakediff::cli;

int main(int argc, char** argv) {
    CLI::App app{"Fake diffusions: mixtures of a time-changed diffusion and a local-volatility residual"};
    app.require_subcommand(1);

    fc::RunConfig flags;
    std::string config_path;
    // Flags are applied on top of the config file, so remember which were given.
    std::map<std::string, std::vector<CLI::Option*>> opts;

    auto add_common = [&](CLI::App* sub) {
        opts["law"].push_back(sub->add_option("--law", flags.law, "Reference law: bm or ebm (default ebm)"));
        opts["K"].push_back(sub->add_option("--K", flags.K, "Clock ratio bound K in (0,1) (default 0.5)"));
        opts["c"].push_back(sub->add_option("--c", flags.c, "Mixing weight c in (0,K) (default 0.25)"));
        opts["T"].push_back(sub->add_option("--T", flags.T, "Horizon (default 1)"));
        opts["n_paths"].push_back(sub->add_option("--paths", flags.n_paths, "Number of paths (default 50000)"));
        opts["n_steps"].push_back(sub->add_option("--steps", flags.n_steps, "Time steps on [0,T] (default 1000)"));
        opts["seed"].push_back(sub->add_option("--seed", flags.seed, "Master seed (default 42)"));
        opts["out"].push_back(sub->add_option("--out", flags.out, "Output directory (default .)"));
        opts["threads"].push_back(sub->add_option("--threads", flags.threads, "Worker threads, 0 = all cores"));
        sub->add_option("--config", config_path, "JSON file of settings; flags override it");
    };

    auto* inspect = app.add_subcommand("inspect", "Write clock.csv, eta_surface.csv and h_density.csv");
    add_common(inspect);
    opts["inspect_times"].push_back(
        inspect->add_option("--times", flags.inspect_times, "Time nodes i*T/n (default 100)"));
    opts["inspect_states"].push_back(
        inspect->add_option("--states", flags.inspect_states, "State nodes per time (default 201)"));

    auto* simulate = app.add_subcommand("simulate", "Write paths.csv and qv.csv for the fake process");
    add_common(simulate);
    opts["export_paths"].push_back(
        simulate->add_option("--export-paths", flags.export_paths, "Paths written to paths.csv (default 100)"));

    auto* verify = app.add_subcommand("verify", "Run the verification battery and write report.json");
    add_common(verify);
    opts["madan_yor"].push_back(
        verify->add_flag("--madan-yor", flags.madan_yor, "Also run the Madan-Yor embedding checks"));
    opts["bm_step"].push_back(
        verify->add_option("--bm-step", flags.bm_step, "Brownian step of the embedding (default 1e-4)"));

    auto* madan_yor = app.add_subcommand("madan-yor", "Write embedded.csv and merge embedding checks into report.json");
    add_common(madan_yor);
    opts["bm_step"].push_back(madan_yor->add_option("--bm-step", flags.bm_step, "Brownian step (default 1e-4)"));
    // Hidden negative control: barycentres that decrease in t break the nesting of stopping times.
    opts["decreasing_barycentre"].push_back(
        madan_yor->add_flag("--decreasing-barycentre", flags.decreasing_barycentre)->group(""));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : fc::exit_config_error;
    }

    try {
        fc::RunConfig cfg;
        if (!config_path.empty()) fc::apply_json(cfg, fc::load_json_file(config_path));
        const nlohmann::json given = fc::to_json(flags);
        nlohmann::json overrides = nlohmann::json::object();
        for (const auto& [key, list] : opts)
            for (const auto* opt : list)
                if (opt->count() > 0) overrides[key] = given.at(key);
        fc::apply_json(cfg, overrides);

        if (inspect->parsed()) return fc::cmd_inspect(cfg);
        if (simulate->parsed()) return fc::cmd_simulate(cfg);
        if (verify->parsed()) return fc::cmd_verify(cfg);
        return fc::cmd_madan_yor(cfg);
    } catch (const fakediff::ValidationError& e) {
        std::cerr << "fakediff: invalid configuration: " << e.what() << '\n';
        return fc::exit_config_error;
    } catch (const fakediff::DomainError& e) {
        std::cerr << "fakediff: invalid configuration: " << e.what() << '\n';
        return fc::exit_config_error;
    } catch (const std::exception& e) {
        std::cerr << "fakediff: " << e.what() << '\n';
        return fc::exit_check_failed;
    }
}
