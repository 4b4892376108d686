#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace epigmrf {

struct CommandOptions {
    std::filesystem::path config;
    std::optional<std::uint64_t> seed;
    std::filesystem::path out = ".";
    std::optional<int> chains;
    std::string profile = "desk";
    std::string scenario;            // simulate: A or B, overrides the profile
    std::optional<int> replicates;   // simulate
    std::filesystem::path draws;     // forecast/diagnose: directory with draws_chain<c>.csv (default: out)
    std::filesystem::path forecast;  // score: forecast file (default: out/forecast.csv)
    bool per_age = false;            // score: also write scores per age group
    bool resume = false;             // fit: continue from chain checkpoints in out
    long max_iterations = -1;        // fit: stop after this many iterations per chain
};

/// Writes one directory per replicate with data, truth and fit configs.
void cmd_simulate(const CommandOptions& opts);
/// Runs the configured chains; writes draws, checkpoints, acceptance rates and diagnostics.
void cmd_fit(const CommandOptions& opts);
/// Posterior predictive death counts over the configured horizon.
void cmd_forecast(const CommandOptions& opts);
/// Scores a saved forecast against the truth file named in the config.
void cmd_score(const CommandOptions& opts);
/// ESS and split R-hat per parameter from saved draws.
void cmd_diagnose(const CommandOptions& opts);

/// Dispatches by name and maps failures to exit codes: 0 ok, 1 numerical, 2 input/config.
int run_command(const std::string& name, const CommandOptions& opts);

} // namespace epigmrf
