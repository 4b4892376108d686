#include "epigmrf/commands.hpp"

#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>

#include <json.hpp>

#include "epigmrf/chain.hpp"
#include "epigmrf/config.hpp"
#include "epigmrf/csv_io.hpp"
#include "epigmrf/diagnostics.hpp"
#include "epigmrf/errors.hpp"
#include "epigmrf/forecast.hpp"
#include "epigmrf/scenario.hpp"
#include "epigmrf/scoring.hpp"

namespace epigmrf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kForecastStream = 1 << 20;

RunConfig load_config(const CommandOptions& opts)
{
    if (opts.config.empty()) {
        throw InputError("--config is required");
    }
    RunConfig c = RunConfig::load(opts.config);
    if (opts.seed) {
        c.mcmc.seed = *opts.seed;
    }
    if (opts.chains) {
        c.mcmc.chains = *opts.chains;
    }
    return c;
}

fs::path chain_dir(const fs::path& out, int c)
{
    return out / ("chain_" + std::to_string(c));
}

fs::path draws_file(const fs::path& dir, int c)
{
    return dir / ("draws_chain" + std::to_string(c) + ".csv");
}

json read_json(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const json& j)
{
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << j.dump() << '\n';
}

std::vector<DrawStore> load_draws(const fs::path& dir, int chains)
{
    std::vector<DrawStore> out;
    for (int c = 0; c < chains; ++c) {
        const fs::path p = draws_file(dir, c);
        if (!fs::exists(p)) {
            throw InputError("missing draws file " + p.string());
        }
        out.push_back(read_draws_wide(p));
    }
    return out;
}

} // namespace

void cmd_simulate(const CommandOptions& opts)
{
    ScenarioSpec spec;
    if (!opts.config.empty()) {
        std::ifstream in(opts.config);
        if (!in) {
            throw InputError("cannot open scenario " + opts.config.string());
        }
        try {
            spec = ScenarioSpec::from_json(json::parse(in));
        } catch (const json::exception& e) {
            throw InputError(opts.config.string() + ": " + e.what());
        }
    } else {
        spec = ScenarioSpec::profile(opts.profile);
    }
    if (!opts.scenario.empty()) {
        spec.id = opts.scenario;
    }
    if (opts.replicates) {
        spec.replicates = *opts.replicates;
    }
    try {
        spec.validate();
    } catch (const DomainError& e) {
        throw InputError(e.what());
    }
    const std::uint64_t seed = opts.seed.value_or(1);
    const std::string hash = fnv1a_hex(spec.to_json().dump());
    for (int r = 0; r < spec.replicates; ++r) {
        const std::uint64_t rep_seed = seed + static_cast<std::uint64_t>(r);
        const SimulatedDataset ds = simulate_dataset(spec, rep_seed);
        char name[32];
        std::snprintf(name, sizeof name, "replicate_%02d", r);
        write_dataset(opts.out / name, Metadata{EPIGMRF_VERSION, rep_seed, hash}, spec, ds, rep_seed);
    }
}

void cmd_fit(const CommandOptions& opts)
{
    const RunConfig config = load_config(opts);
    const ModelDefinition model = build_model(config);
    const Metadata meta{EPIGMRF_VERSION, config.mcmc.seed, config.hash()};
    const int n_chains = config.mcmc.chains;

    const auto run_one = [&](int c) {
        const fs::path ckpt = chain_dir(opts.out, c) / "checkpoint.json";
        std::optional<Chain> chain;
        if (opts.resume && fs::exists(ckpt)) {
            const json state = read_json(ckpt);
            if (state.value("config_hash", std::string()) != meta.config_hash) {
                throw InputError(ckpt.string() + ": checkpoint was written for a different config");
            }
            chain.emplace(Chain::restore(model, state.at("chain")));
        } else {
            chain.emplace(model, config.mcmc.sampler, config.mcmc.seed, c);
        }
        chain->run(opts.max_iterations < 0 ? -1 : opts.max_iterations);
        json state = {{"metadata", meta.line()}, {"config_hash", meta.config_hash}, {"chain", chain->checkpoint()}};
        write_json(ckpt, state);
        if (chain->finished()) {
            write_draws_wide(draws_file(opts.out, c), meta, chain->draws());
            write_draws_long(opts.out / ("draws_long_chain" + std::to_string(c) + ".csv"), meta, chain->draws());
        }
        return std::make_tuple(chain->finished(), chain->counters(), chain->c(), chain->draws());
    };

    std::vector<std::future<decltype(run_one(0))>> jobs;
    for (int c = 0; c < n_chains; ++c) {
        jobs.push_back(std::async(n_chains > 1 ? std::launch::async : std::launch::deferred, run_one, c));
    }
    std::vector<DrawStore> draws;
    std::vector<AcceptanceCounters> acceptance;
    bool all_finished = true;
    fs::create_directories(opts.out);
    CsvWriter acc(opts.out / "acceptance.csv", meta,
                  {"chain", "theta_rate", "field_rate", "field_step", "non_finite"});
    for (int c = 0; c < n_chains; ++c) {
        auto [finished, counters, step, chain_draws] = jobs[c].get();
        all_finished = all_finished && finished;
        acc << c << counters.theta_rate() << counters.field_rate() << step << counters.non_finite;
        acc.end_row();
        acceptance.push_back(counters);
        draws.push_back(std::move(chain_draws));
    }
    acc.close();
    if (all_finished) {
        if (draws.front().size() >= kMinDiagnosticDraws) {
            write_diagnostics(opts.out / "diagnostics.csv", meta, diagnose(draws, acceptance));
        } else {
            std::cerr << "fit: fewer than " << kMinDiagnosticDraws << " draws per chain, diagnostics skipped\n";
        }
    }
}

void cmd_forecast(const CommandOptions& opts)
{
    const RunConfig config = load_config(opts);
    const ModelDefinition model = build_model(config);
    const Metadata meta{EPIGMRF_VERSION, config.mcmc.seed, config.hash()};
    const fs::path dir = opts.draws.empty() ? opts.out : opts.draws;
    std::vector<PosteriorDraw> pooled;
    for (const auto& store : load_draws(dir, config.mcmc.chains)) {
        auto d = posterior_draws(store, model.params, model.n_strata(), model.n_knots());
        pooled.insert(pooled.end(), d.begin(), d.end());
    }
    if (pooled.empty()) {
        throw InputError("forecast: no posterior draws in " + dir.string());
    }
    const ForecastSetup setup{model.pop, model.schedule, model.delay, model.grid, model.field_prior};
    Rng rng(chain_seed(config.mcmc.seed, kForecastStream));
    const ForecastDraws fc = forecast(pooled, setup, config.forecast.horizon, rng);
    write_forecast(opts.out / "forecast.csv", meta, fc);

    CsvWriter w(opts.out / "forecast_summary.csv", meta, {"region", "day", "mean", "lower", "upper"});
    for (int m = 0; m < fc.n_regions; ++m) {
        for (int h = 0; h < fc.horizon; ++h) {
            std::vector<double> totals;
            for (int d = 0; d < fc.n_draws; ++d) {
                totals.push_back(fc.region_total(d, m, h));
            }
            std::sort(totals.begin(), totals.end());
            double mean = 0.0;
            for (double v : totals) {
                mean += v;
            }
            mean /= static_cast<double>(totals.size());
            w << m << fc.first_day + h << mean << quantile_sorted(totals, config.forecast.alpha / 2.0)
              << quantile_sorted(totals, 1.0 - config.forecast.alpha / 2.0);
            w.end_row();
        }
    }
    w.close();
}

void cmd_score(const CommandOptions& opts)
{
    const RunConfig config = load_config(opts);
    const Metadata meta{EPIGMRF_VERSION, config.mcmc.seed, config.hash()};
    const fs::path fc_path = opts.forecast.empty() ? opts.out / "forecast.csv" : opts.forecast;
    if (!fs::exists(fc_path)) {
        throw InputError("missing forecast file " + fc_path.string());
    }
    const ForecastDraws fc = read_forecast(fc_path);
    if (config.forecast.truth.empty()) {
        throw InputError("config: forecast.truth is required for scoring");
    }
    const fs::path truth_path = config.resolve(config.forecast.truth);
    if (!fs::exists(truth_path)) {
        throw InputError("missing truth file " + truth_path.string());
    }
    const SurveillanceData truth = read_deaths(truth_path, fc.n_regions, fc.n_ages, -1);
    ScoreReport report;
    try {
        report = score_forecasts(fc, truth, config.forecast.alpha);
    } catch (const DomainError& e) {
        throw InputError(std::string(e.what()) + " (" + fc_path.string() + " vs " + truth_path.string() + ")");
    }
    write_scores(opts.out, meta, report);
    if (opts.per_age) {
        for (int a = 0; a < fc.n_ages; ++a) {
            const fs::path dir = opts.out / ("age_" + std::to_string(a));
            fs::create_directories(dir);
            write_scores(dir, meta, score_forecasts_age(fc, truth, a, config.forecast.alpha));
        }
    }
}

void cmd_diagnose(const CommandOptions& opts)
{
    const RunConfig config = load_config(opts);
    const Metadata meta{EPIGMRF_VERSION, config.mcmc.seed, config.hash()};
    const fs::path dir = opts.draws.empty() ? opts.out : opts.draws;
    const DiagnosticsReport report = diagnose(load_draws(dir, config.mcmc.chains));
    write_diagnostics(opts.out / "diagnostics.csv", meta, report);
}

int run_command(const std::string& name, const CommandOptions& opts)
{
    try {
        if (name == "simulate") {
            cmd_simulate(opts);
        } else if (name == "fit") {
            cmd_fit(opts);
        } else if (name == "forecast") {
            cmd_forecast(opts);
        } else if (name == "score") {
            cmd_score(opts);
        } else if (name == "diagnose") {
            cmd_diagnose(opts);
        } else {
            std::cerr << "unknown command '" << name << "'\n";
            return 2;
        }
        return 0;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 1;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace epigmrf
