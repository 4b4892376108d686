#include <CLI11.hpp>

#include <iostream>

#include "epigmrf/commands.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Stratified SEIR model with a GMRF transmission field: simulate, fit, forecast, score, diagnose"};
    app.set_version_flag("--version", EPIGMRF_VERSION);
    app.require_subcommand(1, 1);

    epigmrf::CommandOptions opts;
    std::uint64_t seed = 0;
    int chains = 0;
    int replicates = 0;

    const auto common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config, "Run config (JSON); for simulate, an optional scenario file");
        sub->add_option("--seed", seed, "Master seed (u64)");
        sub->add_option("--out", opts.out, "Output directory")->capture_default_str();
        sub->add_option("--chains", chains, "Number of chains (overrides the config)");
        sub->add_option("--profile", opts.profile, "Scenario scale")
            ->check(CLI::IsMember({"desk", "paper"}))
            ->capture_default_str();
    };

    auto* simulate = app.add_subcommand("simulate", "Generate synthetic replicates with truth and fit configs");
    common(simulate);
    simulate->add_option("--scenario", opts.scenario, "Scenario id")->check(CLI::IsMember({"A", "B"}));
    simulate->add_option("--replicates", replicates, "Number of replicates");

    auto* fit = app.add_subcommand("fit", "Run MCMC chains");
    common(fit);
    fit->add_flag("--resume", opts.resume, "Continue from checkpoints in --out");
    fit->add_option("--max-iterations", opts.max_iterations, "Stop each chain after this many iterations");

    auto* fc = app.add_subcommand("forecast", "Posterior predictive deaths over the horizon");
    common(fc);
    fc->add_option("--draws", opts.draws, "Directory holding draws_chain<c>.csv (default: --out)");

    auto* score = app.add_subcommand("score", "Score a forecast against held-out deaths");
    common(score);
    score->add_option("--forecast", opts.forecast, "Forecast file (default: <out>/forecast.csv)");
    score->add_flag("--per-age", opts.per_age, "Also score each age group under <out>/age_<i>");

    auto* diagnose = app.add_subcommand("diagnose", "ESS and split R-hat from saved draws");
    common(diagnose);
    diagnose->add_option("--draws", opts.draws, "Directory holding draws_chain<c>.csv (default: --out)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    CLI::App* chosen = app.get_subcommands().front();
    const auto given = [&](const char* name) {
        const CLI::Option* opt = chosen->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    };
    if (given("--seed")) {
        opts.seed = seed;
    }
    if (given("--chains")) {
        opts.chains = chains;
    }
    if (given("--replicates")) {
        opts.replicates = replicates;
    }
    return epigmrf::run_command(chosen->get_name(), opts);
}
