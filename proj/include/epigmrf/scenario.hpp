#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "epigmrf/config.hpp"
#include "epigmrf/csv_io.hpp"
#include "epigmrf/gmrf_field.hpp"
#include "epigmrf/observation_model.hpp"
#include "epigmrf/seir_dynamics.hpp"

namespace epigmrf {

/// Fitting model variants compared on simulated data.
enum class FitModel {
    DailyCorrelated,   ///< (a): daily knots, random-walk coupling between neighbouring regions
    DailyIndependent,  ///< (b): daily knots, independent regions
    BiweeklyIndependent ///< (c): 14-day knots, independent regions
};

std::string fit_model_name(FitModel m); // "model_a", "model_b", "model_c"

/// Synthetic-data generator settings. Every truth value is explicit and written to disk.
struct ScenarioSpec {
    std::string id = "A"; // A: random-walk coupling across regions; B: independent regions
    int n_days = 40;
    int n_regions = 3;
    int n_ages = 2;
    int train_days = 30;
    int test_days = 10;
    int replicates = 10;

    double delta = 0.5;
    double delta_beta = 0.5;
    double tau = 150.0;
    double rho_m = 0.5;
    double rho_time = 1.5;
    StaticParams truth;

    std::vector<double> region_sizes;
    double contact_rate = 0.55;       // dominant eigenvalue of the base contact matrix, per day
    std::vector<int> period_starts;   // contact periods; period j uses multiplier slot j
    double delay_mean = 14.0;
    double delay_sd = 6.0;
    int delay_max_lag = 40;
    int sero_interval = 7;
    int sero_samples = 500;

    // Settings written into the generated fit configs.
    long fit_iterations = 300000;
    long fit_burn_in = 100000;
    long fit_thin = 100;
    double fit_tau_shape = 2.0;
    double fit_tau_rate = 0.02;

    static ScenarioSpec desk();
    static ScenarioSpec paper();
    static ScenarioSpec profile(const std::string& name);

    nlohmann::json to_json() const;
    static ScenarioSpec from_json(const nlohmann::json& j);
    void validate() const;

    StructureKind strata_kind() const;
    TimeGrid grid() const { return TimeGrid::from_spacing(delta, delta_beta, n_days); }
};

/// One simulated dataset with its generating truth.
struct SimulatedDataset {
    PopulationStructure pop;
    ContactSchedule schedule;
    DelayDistribution delay;
    TransmissionField field; // truth on the generating grid
    SurveillanceData data;   // all n_days of deaths; serology within the training window
    EpidemicTrajectory trajectory;
    std::vector<double> death_means;
};

/// Discretised gamma infection-to-death delay.
DelayDistribution gamma_delay(double mean, double sd, int max_lag);

/// Draws the truth field from the scenario prior. Intrinsic priors are sampled with a
/// small ridge and then centred, so the unidentified level is zero.
TransmissionField sample_scenario_field(const ScenarioSpec& spec, Rng& rng);

SimulatedDataset simulate_dataset(const ScenarioSpec& spec, std::uint64_t seed);

/// Fit config for one model variant, pointing at the files written by write_dataset.
RunConfig fit_config(const ScenarioSpec& spec, FitModel model, std::uint64_t seed);

/// Writes data, truth and the three fit configs into `dir`.
void write_dataset(const std::filesystem::path& dir, const Metadata& meta, const ScenarioSpec& spec,
                   const SimulatedDataset& ds, std::uint64_t seed);

} // namespace epigmrf
