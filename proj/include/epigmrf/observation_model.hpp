#pragma once

#include <Eigen/Dense>

#include <limits>
#include <vector>

#include "epigmrf/gmrf_field.hpp"
#include "epigmrf/seir_dynamics.hpp"
#include "epigmrf/time_grid.hpp"

namespace epigmrf {

/// Log-probability returned for outcomes that are impossible under the model
/// (deaths observed where the expected count is exactly zero).
inline constexpr double kImpossibleLogProb = -1e10;

/// Infection-to-death delay pmf over lags 0..L_max days.
class DelayDistribution {
public:
    DelayDistribution() = default;

    /// Differences a non-decreasing CDF in [0,1] into a pmf.
    static DelayDistribution from_cdf(const std::vector<double>& cdf);
    static DelayDistribution from_pmf(std::vector<double> pmf);

    const std::vector<double>& pmf() const { return pmf_; }
    int max_lag() const { return static_cast<int>(pmf_.size()) - 1; }
    double operator[](int lag) const { return lag >= 0 && lag < static_cast<int>(pmf_.size()) ? pmf_[lag] : 0.0; }

private:
    std::vector<double> pmf_;
};

struct SeroObservation {
    int region = 0;
    int day = 0;
    int age = 0;
    int positives = 0;
    int samples = 0;
};

/// Death counts (dense, -1 where missing) and serosurveys (sparse) per region, day, age.
struct SurveillanceData {
    int n_regions = 0;
    int n_days = 0;
    int n_ages = 0;
    std::vector<int> deaths;
    std::vector<SeroObservation> serology;

    static SurveillanceData empty(int n_regions, int n_days, int n_ages);

    std::size_t index(int region, int day, int age) const
    {
        return (static_cast<std::size_t>(region) * n_days + day) * n_ages + age;
    }
    int death(int region, int day, int age) const { return deaths[index(region, day, age)]; }
    int& death(int region, int day, int age) { return deaths[index(region, day, age)]; }

    /// Days [first, first + count) only; serology filtered likewise and re-indexed from 0 when rebase is set.
    SurveillanceData slice_days(int first, int count, bool rebase) const;
    void validate() const;
};

struct LogLikelihood {
    double total = 0.0;
    double deaths = 0.0;
    double serology = 0.0;
    std::vector<double> per_region;
};

/// Daily new infections summed over the steps of each day, region x day x age.
std::vector<double> daily_infections(const EpidemicTrajectory& traj, int steps_per_day);

/// Expected deaths mu[m][day][i] = p_i * sum_l f_{day-l} * infections[m][l][i] for days 0..n_days-1.
std::vector<double> death_mean(const EpidemicTrajectory& traj, const DelayDistribution& delay,
                               const Eigen::VectorXd& ifr, int steps_per_day);

/// Negative binomial with mean mu and variance mu*(1+eta): size mu/eta, success probability 1/(1+eta).
double negbin_logpmf(int y, double mu, double eta);
double binomial_logpmf(int y, int n, double prob);

/// Probability that a sample tests positive given S susceptible out of N.
double sero_prob(double susceptible, double population, double k_sens, double k_spec);

int sample_negbin(double mu, double eta, Rng& rng);

/// Reusable likelihood evaluator. Holds scratch buffers, so one instance per thread.
class LikelihoodModel {
public:
    LikelihoodModel(PopulationStructure pop, ContactSchedule schedule, DelayDistribution delay,
                    SurveillanceData data, TimeGrid grid);

    LogLikelihood evaluate(const StaticParams& theta, const TransmissionField& field);
    /// Contribution of one region; the total is the sum over regions.
    LogLikelihood evaluate_region(const StaticParams& theta, const TransmissionField& field, int region);

    const PopulationStructure& population() const { return pop_; }
    const ContactSchedule& schedule() const { return schedule_; }
    const DelayDistribution& delay() const { return delay_; }
    const SurveillanceData& data() const { return data_; }
    const TimeGrid& grid() const { return grid_; }

private:
    void accumulate_region(const StaticParams& theta, const TransmissionField& field, int region,
                           LogLikelihood& out);
    /// Re-simulates a region only when its dynamics inputs changed since the last call.
    void refresh_region(const StaticParams& theta, const TransmissionField& field, int region);

    PopulationStructure pop_;
    ContactSchedule schedule_;
    DelayDistribution delay_;
    SurveillanceData data_;
    TimeGrid grid_;
    std::vector<std::vector<SeroObservation>> sero_by_region_;
    EpidemicTrajectory scratch_;
    std::vector<std::vector<double>> daily_;
    std::vector<std::vector<double>> dynamics_key_;
};

LogLikelihood log_likelihood(const StaticParams& theta, const TransmissionField& field, const SurveillanceData& data,
                             const ContactSchedule& schedule, const PopulationStructure& pop,
                             const DelayDistribution& delay, const TimeGrid& grid);

} // namespace epigmrf
