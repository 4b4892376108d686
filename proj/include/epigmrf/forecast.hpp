#pragma once

#include <vector>

#include "epigmrf/chain.hpp"
#include "epigmrf/gmrf_field.hpp"
#include "epigmrf/observation_model.hpp"
#include "epigmrf/seir_dynamics.hpp"

namespace epigmrf {

struct PosteriorDraw {
    StaticParams theta;
    TransmissionField field;
    double tau = 1.0;
};

/// Converts a draw table back into parameter values and fields.
std::vector<PosteriorDraw> posterior_draws(const DrawStore& draws, const Parameterisation& params, int n_strata,
                                           int n_knots);

/// Model ingredients needed to push draws forward; deliberately excludes observed data.
struct ForecastSetup {
    PopulationStructure pop;
    ContactSchedule schedule;
    DelayDistribution delay;
    TimeGrid grid; // training window
    FieldPrior field_prior;
};

/// Sampled death counts for days [first_day, first_day + horizon), per draw x region x day x age.
struct ForecastDraws {
    int n_draws = 0;
    int n_regions = 0;
    int n_ages = 0;
    int first_day = 0;
    int horizon = 0;
    int future_knots = 0;
    std::vector<int> counts;
    std::vector<double> means;
    std::vector<TransmissionField> fields; // extended fields, one per draw

    std::size_t index(int draw, int region, int day, int age) const
    {
        return ((static_cast<std::size_t>(draw) * n_regions + region) * horizon + day) * n_ages + age;
    }
    int count(int draw, int region, int day, int age) const { return counts[index(draw, region, day, age)]; }
    double mean(int draw, int region, int day, int age) const { return means[index(draw, region, day, age)]; }
    /// Region total over ages for draw d and horizon day h (0-based).
    int region_total(int draw, int region, int day) const;
    bool empty() const { return horizon == 0 || n_draws == 0; }
};

/// Schedule restricted to periods starting before `n_days`, so the last fitted period
/// persists over the horizon.
ContactSchedule truncate_schedule(const ContactSchedule& schedule, int n_days);

/// Posterior predictive deaths over `horizon` days after the training window.
///
/// Each draw extends its field with a sample from the Gaussian conditional of the
/// future knots given the fitted ones, runs the dynamics over the extended window
/// and draws negative-binomial counts from the resulting death means.
ForecastDraws forecast(const std::vector<PosteriorDraw>& draws, const ForecastSetup& setup, int horizon, Rng& rng);

} // namespace epigmrf
