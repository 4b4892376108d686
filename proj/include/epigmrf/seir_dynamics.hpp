#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "epigmrf/gmrf_field.hpp"
#include "epigmrf/time_grid.hpp"

namespace epigmrf {

/// Persons per (region, age).
struct PopulationStructure {
    Eigen::MatrixXd counts; // regions x ages

    int n_regions() const { return static_cast<int>(counts.rows()); }
    int n_ages() const { return static_cast<int>(counts.cols()); }
    double operator()(int region, int age) const { return counts(region, age); }
    void validate() const;
};

struct ContactPeriod {
    int start_day = 0;
    int multiplier_slot = 0; // which of z_{m,1..3} scales this period
    Eigen::MatrixXd matrix;  // ages x ages, contacts per day
};

/// Piecewise-constant contact matrices per region. The last period of a
/// region extends indefinitely.
struct ContactSchedule {
    static constexpr int kMultiplierSlots = 3;

    std::vector<std::vector<ContactPeriod>> periods; // [region][period], sorted by start_day

    int n_regions() const { return static_cast<int>(periods.size()); }
    /// Period in effect for 1-based step k, i.e. latest start_day <= t_{k-1}.
    const ContactPeriod& period_for_step(int region, int step, int steps_per_day) const;
    void validate(int n_regions, int n_ages) const;
};

struct StaticParams {
    double eta = 0.25;     // negative-binomial dispersion
    double d_L = 3.0;      // latent period, days
    double d_I = 4.0;      // infectious period, days
    double k_sens = 0.85;
    double k_spec = 0.98;
    Eigen::VectorXd p;     // infection-fatality ratio per age
    Eigen::MatrixXd z;     // regions x 3 contact multipliers
    Eigen::VectorXd psi;   // initial growth per region
    Eigen::VectorXd ell0;  // log initial infectious mass per region

    void validate(int n_regions, int n_ages) const;
};

/// Compartment sizes for one region at one time.
struct RegionState {
    Eigen::VectorXd S, E, I, R;

    double total() const { return S.sum() + E.sum() + I.sum() + R.sum(); }
};

struct StepResult {
    RegionState state;
    Eigen::VectorXd new_infections;
};

/// Region x time x age arrays. Time index 0 is the initial state; new
/// infections at index k are those during step k (index 0 holds zero).
class EpidemicTrajectory {
public:
    EpidemicTrajectory() = default;
    EpidemicTrajectory(int n_regions, int n_steps, int n_ages);

    int n_regions() const { return n_regions_; }
    int n_steps() const { return n_steps_; }
    int n_ages() const { return n_ages_; }

    std::size_t index(int region, int step, int age) const
    {
        return (static_cast<std::size_t>(region) * (n_steps_ + 1) + step) * n_ages_ + age;
    }

    double S(int m, int k, int i) const { return s_[index(m, k, i)]; }
    double E(int m, int k, int i) const { return e_[index(m, k, i)]; }
    double I(int m, int k, int i) const { return i_[index(m, k, i)]; }
    double R(int m, int k, int i) const { return r_[index(m, k, i)]; }
    double new_infections(int m, int k, int i) const { return delta_[index(m, k, i)]; }

    std::span<double> S_row(int m, int k) { return {&s_[index(m, k, 0)], std::size_t(n_ages_)}; }
    std::span<double> E_row(int m, int k) { return {&e_[index(m, k, 0)], std::size_t(n_ages_)}; }
    std::span<double> I_row(int m, int k) { return {&i_[index(m, k, 0)], std::size_t(n_ages_)}; }
    std::span<double> R_row(int m, int k) { return {&r_[index(m, k, 0)], std::size_t(n_ages_)}; }
    std::span<double> new_infections_row(int m, int k)
    {
        return {&delta_[index(m, k, 0)], std::size_t(n_ages_)};
    }

    RegionState state(int region, int step) const;

    bool operator==(const EpidemicTrajectory& other) const = default;

private:
    int n_regions_ = 0;
    int n_steps_ = 0;
    int n_ages_ = 0;
    std::vector<double> s_, e_, i_, r_, delta_;
};

/// Per-age infection probability over one step:
/// lambda_i = 1 - exp(-delta * sum_j exp(beta) * z * C_ij * I_frac_j).
Eigen::VectorXd infection_rate(double field_value, const Eigen::MatrixXd& contacts, double multiplier,
                               const Eigen::VectorXd& infectious_fraction, double delta);

/// Exact-exponential exit fractions for the E and I compartments.
struct ExitFractions {
    double latent;
    double infectious;
    static ExitFractions make(const StaticParams& theta, double delta);
};

/// Advances one region by one step, returning the new state and the new infections.
StepResult step(const RegionState& state, const Eigen::VectorXd& lambda, const StaticParams& theta, double delta);

RegionState initial_state(const StaticParams& theta, const PopulationStructure& pop, int region);

/// Deterministic trajectory over grid.n_steps() steps.
EpidemicTrajectory simulate(const StaticParams& theta, const TransmissionField& field,
                            const ContactSchedule& schedule, const PopulationStructure& pop, const TimeGrid& grid);

/// Simulates a single region into `out` (which must be sized for the grid).
void simulate_region(const StaticParams& theta, const TransmissionField& field, const ContactSchedule& schedule,
                     const PopulationStructure& pop, const TimeGrid& grid, int region, EpidemicTrajectory& out);

/// d_I times the dominant eigenvalue of exp(beta) * z * C_ij * S_frac_i.
double reproduction_number(const StaticParams& theta, double field_value, const Eigen::MatrixXd& contacts,
                           double multiplier, const Eigen::VectorXd& susceptible_fraction);

} // namespace epigmrf
