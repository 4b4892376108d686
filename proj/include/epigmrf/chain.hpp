#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "epigmrf/gmrf_field.hpp"
#include "epigmrf/observation_model.hpp"
#include "epigmrf/params.hpp"
#include "epigmrf/samplers.hpp"
#include "epigmrf/seir_dynamics.hpp"

namespace epigmrf {

enum class TauMode { Fixed, Sampled };

struct GammaPrior {
    double shape = 1.0;
    double rate = 0.01;
    bool operator==(const GammaPrior&) const = default;
};

/// Structure and hyperparameters of the field prior as used by the sampler.
struct FieldPrior {
    StructureKind strata_kind = StructureKind::Rw1Tridiagonal;
    StructureKind time_kind = StructureKind::Rw1Tridiagonal;
    double rho_m = 0.5;
    double rho_time = 1.5;
    double tau = 1.0; // fixed value, or the initial value when sampled
    TauMode tau_mode = TauMode::Fixed;
    GammaPrior tau_prior;
    ExponentConvention exponent = ExponentConvention::Rank;

    PrecisionSpec spec(double tau_value, int n_strata, int n_knots, double delta_beta) const;
    bool operator==(const FieldPrior&) const = default;
};

struct SamplerSettings {
    long iterations = 20000;
    long burn_in = 10000;
    long thin = 10;
    int blocks = 3;
    double target_acceptance = 0.234;
    double initial_theta_sd = 0.1;
    double initial_c = 0.1;
    bool adapt_c = true;
    bool check_caches = false;

    void validate() const;
    bool operator==(const SamplerSettings&) const = default;
};

/// Everything the posterior depends on.
struct ModelDefinition {
    PopulationStructure pop;
    ContactSchedule schedule;
    DelayDistribution delay;
    SurveillanceData data;
    TimeGrid grid;
    Parameterisation params;
    FieldPrior field_prior;
    Eigen::VectorXd initial_field; // stratum-major; empty means all zeros

    int n_knots() const { return grid.n_knots(); }
    int n_strata() const { return pop.n_regions(); }
};

/// Thinned post-burn-in draws in wide form: one row per recorded iteration.
class DrawStore {
public:
    DrawStore() = default;
    explicit DrawStore(std::vector<std::string> names)
        : names_(std::move(names))
    {
    }

    void add(long iteration, std::vector<double> row);
    const std::vector<std::string>& names() const { return names_; }
    const std::vector<long>& iterations() const { return iterations_; }
    const std::vector<std::vector<double>>& rows() const { return rows_; }
    std::size_t size() const { return rows_.size(); }
    int column_index(const std::string& name) const;
    std::vector<double> column(const std::string& name) const;
    std::vector<double> column(int index) const;

    bool operator==(const DrawStore&) const = default;

private:
    std::vector<std::string> names_;
    std::vector<long> iterations_;
    std::vector<std::vector<double>> rows_;
};

struct AcceptanceCounters {
    long theta_proposed = 0;
    long theta_accepted = 0;
    long field_proposed = 0;
    long field_accepted = 0;
    long non_finite = 0;

    double theta_rate() const { return theta_proposed ? double(theta_accepted) / theta_proposed : 0.0; }
    double field_rate() const { return field_proposed ? double(field_accepted) / field_proposed : 0.0; }
    bool operator==(const AcceptanceCounters&) const = default;
};

/// One MCMC chain over (theta, field, tau) for a fixed model.
///
/// Each iteration runs the randomised-block theta update, the auxiliary-variable
/// field update, the optional Gibbs tau update and, during burn-in, the
/// adaptation of the theta proposal and of the field step size c.
class Chain {
public:
    Chain(const ModelDefinition& model, SamplerSettings settings, std::uint64_t seed, int chain_id = 0);

    /// Runs until `until` iterations (default: settings.iterations) have been completed.
    void run(long until = -1);
    void iterate();

    std::vector<bool> update_theta();
    bool update_field();
    void update_tau();
    void adapt(const std::vector<bool>& theta_accepted, bool field_accepted);

    long iteration() const { return iteration_; }
    bool finished() const { return iteration_ >= settings_.iterations; }
    const SamplerSettings& settings() const { return settings_; }
    const DrawStore& draws() const { return draws_; }
    const AcceptanceCounters& counters() const { return counters_; }
    const Adaptation& adaptation() const { return adaptation_; }
    const Parameterisation& params() const { return model_.params; }

    const Eigen::VectorXd& unconstrained() const { return u_; }
    StaticParams theta() const { return model_.params.to_params(u_); }
    TransmissionField field() const;
    double tau() const { return tau_; }
    double c() const { return sampler_.c(); }
    double log_likelihood() const { return g_; }
    double log_prior() const { return log_prior_theta_ + log_prior_field_; }

    /// Recomputes likelihood and prior and throws if the caches differ by more than 1e-10.
    void verify_caches();

    std::vector<std::string> draw_names() const;

    nlohmann::json checkpoint() const;
    static Chain restore(const ModelDefinition& model, const nlohmann::json& state);

    /// Log-likelihood g(theta, field); non-finite or invalid states map to -inf.
    double evaluate_likelihood(const StaticParams& theta, const Eigen::VectorXd& field_flat);

private:
    void rebuild_precision();
    void record();
    double field_log_prior(const Eigen::VectorXd& field_flat) const;

    ModelDefinition model_;
    SamplerSettings settings_;
    LikelihoodModel likelihood_;
    Rng rng_;
    long iteration_ = 0;

    Eigen::VectorXd u_;
    Eigen::VectorXd field_; // stratum-major flat
    double tau_ = 1.0;
    double g_ = 0.0;
    double log_prior_theta_ = 0.0;
    double log_prior_field_ = 0.0;

    SparsePrecision unit_precision_; // Q / tau
    SparsePrecision precision_;
    AuxiliaryFieldSampler sampler_;
    double log_c_ = 0.0;
    Adaptation adaptation_;
    AcceptanceCounters counters_;
    DrawStore draws_;
};

/// Seed for chain `chain_id` derived from the master seed.
std::uint64_t chain_seed(std::uint64_t master, int chain_id);

struct ChainResult {
    DrawStore draws;
    AcceptanceCounters counters;
    double final_c = 0.0;
    double final_log_scale = 0.0;
};

ChainResult run_chain(const ModelDefinition& model, const SamplerSettings& settings, std::uint64_t seed,
                      int chain_id = 0);

/// Plain joint random-walk Metropolis over (u, field) with fixed tau; the efficiency baseline.
ChainResult run_joint_random_walk(const ModelDefinition& model, const SamplerSettings& settings, std::uint64_t seed);

} // namespace epigmrf
