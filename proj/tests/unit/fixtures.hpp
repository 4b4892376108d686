#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "epigmrf/chain.hpp"
#include "epigmrf/observation_model.hpp"
#include "epigmrf/params.hpp"
#include "epigmrf/seir_dynamics.hpp"

namespace testing {

using namespace epigmrf;

inline StaticParams small_params(int regions, int ages)
{
    StaticParams t;
    t.eta = 0.3;
    t.d_L = 3.0;
    t.d_I = 4.0;
    t.k_sens = 0.85;
    t.k_spec = 0.98;
    t.p = Eigen::VectorXd::LinSpaced(ages, 0.002, 0.02);
    t.z = Eigen::MatrixXd::Constant(regions, 3, 1.0);
    for (int m = 0; m < regions; ++m) {
        t.z(m, 1) = 0.6;
        t.z(m, 2) = 0.8;
    }
    t.psi = Eigen::VectorXd::Constant(regions, 0.1);
    t.ell0 = Eigen::VectorXd::Constant(regions, std::log(50.0));
    return t;
}

inline PopulationStructure small_population(int regions, int ages)
{
    PopulationStructure pop;
    pop.counts.resize(regions, ages);
    for (int m = 0; m < regions; ++m) {
        for (int i = 0; i < ages; ++i) {
            pop.counts(m, i) = 1e5 * (1.0 + 0.5 * m) * (1.0 + 0.25 * i);
        }
    }
    return pop;
}

/// Two periods per region: day 0 uses slot 0, `switch_day` uses slot 1.
inline ContactSchedule small_schedule(int regions, int ages, int switch_day = 5)
{
    ContactSchedule s;
    Eigen::MatrixXd c(ages, ages);
    for (int i = 0; i < ages; ++i) {
        for (int j = 0; j < ages; ++j) {
            c(i, j) = (i == j ? 0.4 : 0.15) / std::max(1, ages / 2);
        }
    }
    s.periods.resize(regions);
    for (int m = 0; m < regions; ++m) {
        s.periods[m].push_back({0, 0, c});
        s.periods[m].push_back({switch_day, 1, 0.8 * c});
    }
    return s;
}

inline DelayDistribution short_delay()
{
    std::vector<double> pmf = {0.0, 0.05, 0.15, 0.3, 0.25, 0.15, 0.1};
    return DelayDistribution::from_pmf(pmf);
}

/// Parameters drawn uniformly over a wide, valid box.
inline StaticParams random_params(int regions, int ages, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    StaticParams t = small_params(regions, ages);
    t.eta = 0.01 + 2.0 * u(rng);
    t.d_L = 0.5 + 8.0 * u(rng);
    t.d_I = 0.5 + 10.0 * u(rng);
    for (int i = 0; i < ages; ++i) {
        t.p(i) = 1e-5 + 0.5 * u(rng);
    }
    for (int m = 0; m < regions; ++m) {
        for (int s = 0; s < 3; ++s) {
            t.z(m, s) = 0.05 + 5.0 * u(rng);
        }
        t.psi(m) = -0.5 + 0.8 * u(rng);
        t.ell0(m) = std::log(1.0 + 50.0 * u(rng));
    }
    return t;
}

} // namespace testing

namespace testing {

/// One region, one age group, ten days, five knots; only eta and the IFR are free.
struct TinySetup {
    StaticParams truth;
    TransmissionField field;
    ModelDefinition model;
};

inline TinySetup tiny_setup(std::uint64_t data_seed, double tau = 4.0, bool draw_field = false)
{
    TinySetup s;
    StaticParams t = small_params(1, 1);
    t.eta = 0.2;
    t.p = Eigen::VectorXd::Constant(1, 0.01);
    t.psi(0) = 0.15;
    t.ell0(0) = std::log(3000.0);
    s.truth = t;

    ModelDefinition& m = s.model;
    m.pop.counts = Eigen::MatrixXd::Constant(1, 1, 2e6);
    m.schedule.periods.resize(1);
    m.schedule.periods[0].push_back({0, 0, Eigen::MatrixXd::Constant(1, 1, 0.35)});
    m.delay = DelayDistribution::from_pmf({0.05, 0.15, 0.25, 0.25, 0.15, 0.1, 0.05});
    m.grid = TimeGrid::from_spacing(0.5, 2.0, 10);
    m.field_prior.strata_kind = StructureKind::Identity;
    m.field_prior.rho_m = 0.5;
    m.field_prior.rho_time = 1.5;
    m.field_prior.tau = tau;

    Rng rng(data_seed);
    s.field = TransmissionField(m.grid.n_knots(), 1);
    if (draw_field) {
        s.field = sample_field(m.field_prior.spec(tau, 1, m.grid.n_knots(), 2.0), 1e-12, rng);
    } else {
        s.field.values() << 0.1, 0.2, 0.0, -0.2, -0.1;
    }
    const EpidemicTrajectory traj = simulate(t, s.field, m.schedule, m.pop, m.grid);
    const std::vector<double> mu = death_mean(traj, m.delay, t.p, m.grid.steps_per_day);
    m.data = SurveillanceData::empty(1, 10, 1);
    for (int d = 0; d < 10; ++d) {
        m.data.death(0, d, 0) = sample_negbin(mu[d], t.eta, rng);
    }

    m.params = Parameterisation::with_defaults(t);
    for (auto& e : m.params.entries()) {
        e.fixed = !(e.name == "eta" || e.name == "p[0]");
    }
    m.params.entries()[m.params.find("eta")].prior = {PriorKind::LogNormal, std::log(0.2), 0.5};
    m.params.entries()[m.params.find("p[0]")].prior = {PriorKind::LogitNormal, std::log(0.01 / 0.99), 0.5};
    m.params.refresh_free();
    return s;
}

inline SamplerSettings quick_settings(long iterations, long burn_in, long thin = 1)
{
    SamplerSettings s;
    s.iterations = iterations;
    s.burn_in = burn_in;
    s.thin = thin;
    return s;
}

} // namespace testing
