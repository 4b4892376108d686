#include <doctest.h>

#include "epigmrf/errors.hpp"
#include "epigmrf/seir_dynamics.hpp"
#include "fixtures.hpp"

using namespace epigmrf;

namespace {

TransmissionField random_field(int knots, int strata, std::mt19937_64& rng, double sd = 0.5)
{
    std::normal_distribution<double> n(0.0, sd);
    TransmissionField f(knots, strata);
    for (int m = 0; m < strata; ++m) {
        for (int k = 0; k < knots; ++k) {
            f(k, m) = n(rng);
        }
    }
    return f;
}

double total_infections(const EpidemicTrajectory& t)
{
    double s = 0.0;
    for (int m = 0; m < t.n_regions(); ++m) {
        for (int k = 0; k <= t.n_steps(); ++k) {
            for (int i = 0; i < t.n_ages(); ++i) {
                s += t.new_infections(m, k, i);
            }
        }
    }
    return s;
}

} // namespace

TEST_SUITE("seir-dynamics")
{
    TEST_CASE("infection rate examples")
    {
        Eigen::MatrixXd c = Eigen::MatrixXd::Ones(1, 1);
        CHECK(infection_rate(0.0, c, 1.0, Eigen::VectorXd::Constant(1, 0.1), 0.5)(0) ==
              doctest::Approx(1.0 - std::exp(-0.05)).epsilon(1e-14));
        CHECK(infection_rate(0.0, c, 1.0, Eigen::VectorXd::Constant(1, 0.1), 0.5)(0) ==
              doctest::Approx(0.04877).epsilon(1e-4));

        Eigen::MatrixXd c2(2, 2);
        c2 << 1.0, 0.5, 0.5, 2.0;
        CHECK(infection_rate(0.3, c2, 1.2, Eigen::VectorXd::Zero(2), 0.5).norm() == 0.0);
        CHECK(infection_rate(-800.0, c2, 1.2, Eigen::VectorXd::Constant(2, 0.5), 0.5).norm() == 0.0);

        Eigen::MatrixXd neg = c2;
        neg(0, 1) = -0.1;
        CHECK_THROWS_AS(infection_rate(0.0, neg, 1.0, Eigen::VectorXd::Zero(2), 0.5), DomainError);
    }

    TEST_CASE("infection probability stays below one")
    {
        Eigen::MatrixXd c = Eigen::MatrixXd::Constant(3, 3, 50.0);
        const Eigen::VectorXd l = infection_rate(3.0, c, 5.0, Eigen::VectorXd::Constant(3, 1.0), 1.0);
        CHECK((l.array() >= 0.0).all());
        CHECK((l.array() <= 1.0).all());
    }

    TEST_CASE("one step by hand")
    {
        StaticParams t = testing::small_params(1, 1);
        RegionState s;
        s.S = Eigen::VectorXd::Constant(1, 1000.0);
        s.E = Eigen::VectorXd::Zero(1);
        s.I = Eigen::VectorXd::Constant(1, 10.0);
        s.R = Eigen::VectorXd::Zero(1);
        const StepResult r = step(s, Eigen::VectorXd::Constant(1, 0.1), t, 0.5);
        CHECK(r.new_infections(0) == doctest::Approx(100.0));
        CHECK(r.state.E(0) == doctest::Approx(100.0));
        CHECK(r.state.S(0) == doctest::Approx(900.0));
        const double out_i = 10.0 * (1.0 - std::exp(-0.5 / t.d_I));
        CHECK(r.state.I(0) == doctest::Approx(10.0 - out_i));
        CHECK(r.state.R(0) == doctest::Approx(out_i));
    }

    TEST_CASE("disease-free state is a fixed point")
    {
        StaticParams t = testing::small_params(1, 2);
        RegionState s;
        s.S = Eigen::Vector2d(500.0, 700.0);
        s.E = Eigen::VectorXd::Zero(2);
        s.I = Eigen::VectorXd::Zero(2);
        s.R = Eigen::Vector2d(3.0, 4.0);
        const StepResult r = step(s, Eigen::VectorXd::Zero(2), t, 0.5);
        CHECK(r.state.S == s.S);
        CHECK(r.state.E == s.E);
        CHECK(r.state.I == s.I);
        CHECK(r.state.R == s.R);
    }

    TEST_CASE("initial state examples")
    {
        StaticParams t = testing::small_params(1, 2);
        t.ell0(0) = std::log(100.0);
        t.psi(0) = 0.0;
        t.d_L = t.d_I = 4.0;
        PopulationStructure pop;
        pop.counts.resize(1, 2);
        pop.counts << 3000.0, 1000.0;
        const RegionState s = initial_state(t, pop, 0);
        CHECK(s.I(0) == doctest::Approx(75.0));
        CHECK(s.I(1) == doctest::Approx(25.0));
        CHECK(s.E(0) == doctest::Approx(s.I(0)));
        CHECK(s.E(1) == doctest::Approx(s.I(1)));
        CHECK(s.R.norm() == 0.0);
        CHECK(s.total() == doctest::Approx(4000.0));

        t.ell0(0) = -1e3;
        const RegionState free = initial_state(t, pop, 0);
        CHECK(free.I.norm() == 0.0);
        CHECK(free.E.norm() == 0.0);

        t.ell0(0) = std::log(1e5);
        CHECK_THROWS_AS(initial_state(t, pop, 0), DomainError);
    }

    TEST_CASE("knot-to-step mapping")
    {
        const TimeGrid g = TimeGrid::from_spacing(0.5, 1.0, 10);
        CHECK(g.n_steps() == 20);
        CHECK(g.n_knots() == 10);
        // Step k reads knot ceil(k*delta/delta_beta), 1-based.
        for (int k = 1; k <= g.n_steps(); ++k) {
            CHECK(g.knot_of_step(k) + 1 == static_cast<int>(std::ceil(k * 0.5 / 1.0)));
        }
        const TimeGrid biweekly = TimeGrid::from_spacing(0.5, 14.0, 40);
        CHECK(biweekly.n_knots() == 3);
        CHECK(biweekly.knot_of_step(56) == 1);
        CHECK(biweekly.knot_of_step(57) == 2);
        CHECK_THROWS_AS(TimeGrid::from_spacing(0.3, 1.0, 10), DomainError);
    }

    TEST_CASE("conservation and nonnegativity over random parameter draws")
    {
        std::mt19937_64 rng(2024);
        const int regions = 2, ages = 3;
        const PopulationStructure pop = testing::small_population(regions, ages);
        const ContactSchedule sched = testing::small_schedule(regions, ages);
        const TimeGrid grid = TimeGrid::from_spacing(0.5, 1.0, 30);
        for (int draw = 0; draw < 100; ++draw) {
            const StaticParams t = testing::random_params(regions, ages, rng);
            const TransmissionField f = random_field(grid.n_knots(), regions, rng, 1.0);
            const EpidemicTrajectory traj = simulate(t, f, sched, pop, grid);
            bool ok = true;
            for (int m = 0; m < regions; ++m) {
                for (int k = 0; k <= grid.n_steps(); ++k) {
                    for (int i = 0; i < ages; ++i) {
                        const double sum = traj.S(m, k, i) + traj.E(m, k, i) + traj.I(m, k, i) + traj.R(m, k, i);
                        ok = ok && std::abs(sum - pop(m, i)) <= 1e-9 * pop(m, i);
                        ok = ok && traj.S(m, k, i) >= 0.0 && traj.E(m, k, i) >= 0.0 && traj.I(m, k, i) >= 0.0 &&
                             traj.R(m, k, i) >= 0.0 && traj.new_infections(m, k, i) >= 0.0;
                        if (k > 0) {
                            ok = ok && traj.S(m, k, i) <= traj.S(m, k - 1, i);
                            ok = ok && traj.R(m, k, i) >= traj.R(m, k - 1, i);
                            // New infections are S at the previous step times the step probability.
                            ok = ok && std::abs(traj.new_infections(m, k, i) -
                                                (traj.S(m, k - 1, i) - traj.S(m, k, i))) <=
                                           1e-9 * pop(m, i);
                        }
                    }
                }
            }
            CHECK(ok);
        }
    }

    TEST_CASE("zero seeds give no infections")
    {
        const int regions = 2, ages = 2;
        StaticParams t = testing::small_params(regions, ages);
        t.ell0.setConstant(-1e3);
        const TimeGrid grid = TimeGrid::from_spacing(0.5, 1.0, 20);
        const EpidemicTrajectory traj = simulate(t, TransmissionField(grid.n_knots(), regions),
                                                 testing::small_schedule(regions, ages),
                                                 testing::small_population(regions, ages), grid);
        CHECK(total_infections(traj) == 0.0);
    }

    TEST_CASE("doubling populations and seeds doubles infections")
    {
        const int regions = 2, ages = 2;
        StaticParams t = testing::small_params(regions, ages);
        PopulationStructure pop = testing::small_population(regions, ages);
        const ContactSchedule sched = testing::small_schedule(regions, ages);
        const TimeGrid grid = TimeGrid::from_spacing(0.5, 1.0, 25);
        std::mt19937_64 rng(5);
        const TransmissionField f = random_field(grid.n_knots(), regions, rng, 0.3);
        const EpidemicTrajectory base = simulate(t, f, sched, pop, grid);

        pop.counts *= 2.0;
        t.ell0.array() += std::log(2.0);
        const EpidemicTrajectory twice = simulate(t, f, sched, pop, grid);
        for (int m = 0; m < regions; ++m) {
            for (int k = 1; k <= grid.n_steps(); ++k) {
                for (int i = 0; i < ages; ++i) {
                    CHECK(twice.new_infections(m, k, i) ==
                          doctest::Approx(2.0 * base.new_infections(m, k, i)).epsilon(1e-12));
                }
            }
        }
    }

    TEST_CASE("simulation is reproducible and region-separable")
    {
        const int regions = 3, ages = 2;
        const StaticParams t = testing::small_params(regions, ages);
        const PopulationStructure pop = testing::small_population(regions, ages);
        const ContactSchedule sched = testing::small_schedule(regions, ages);
        const TimeGrid grid = TimeGrid::from_spacing(0.5, 0.5, 15);
        std::mt19937_64 rng(9);
        const TransmissionField f = random_field(grid.n_knots(), regions, rng);
        const EpidemicTrajectory a = simulate(t, f, sched, pop, grid);
        CHECK(a == simulate(t, f, sched, pop, grid));

        EpidemicTrajectory one(regions, grid.n_steps(), ages);
        simulate_region(t, f, sched, pop, grid, 1, one);
        for (int k = 0; k <= grid.n_steps(); ++k) {
            CHECK(one.S(1, k, 0) == a.S(1, k, 0));
            CHECK(one.new_infections(1, k, 1) == a.new_infections(1, k, 1));
        }

        const TransmissionField short_field(grid.n_knots() - 1, regions);
        CHECK_THROWS_AS(simulate(t, short_field, sched, pop, grid), DomainError);
    }

    TEST_CASE("contact periods switch at their start day")
    {
        const ContactSchedule s = testing::small_schedule(1, 2, 5);
        CHECK(s.period_for_step(0, 1, 2).multiplier_slot == 0);
        CHECK(s.period_for_step(0, 10, 2).multiplier_slot == 0);
        CHECK(s.period_for_step(0, 11, 2).multiplier_slot == 1);
        CHECK_NOTHROW(s.validate(1, 2));
        CHECK_THROWS_AS(s.validate(2, 2), DomainError);
        CHECK_THROWS_AS(s.validate(1, 3), DomainError);
    }

    TEST_CASE("final size converges as the step shrinks")
    {
        const int regions = 1, ages = 2;
        const StaticParams t = testing::small_params(regions, ages);
        const PopulationStructure pop = testing::small_population(regions, ages);
        const ContactSchedule sched = testing::small_schedule(regions, ages);
        std::vector<double> sizes;
        for (double delta : {1.0, 0.5, 0.25, 0.125}) {
            const TimeGrid grid = TimeGrid::from_spacing(delta, 1.0, 40);
            TransmissionField f(grid.n_knots(), regions);
            f.values().setConstant(0.4);
            sizes.push_back(total_infections(simulate(t, f, sched, pop, grid)));
        }
        const double d1 = std::abs(sizes[0] - sizes[1]);
        const double d2 = std::abs(sizes[1] - sizes[2]);
        const double d3 = std::abs(sizes[2] - sizes[3]);
        CHECK(d2 < d1);
        CHECK(d3 < d2);
    }

    TEST_CASE("reproduction number examples")
    {
        StaticParams t = testing::small_params(1, 1);
        t.d_I = 2.0;
        Eigen::MatrixXd one = Eigen::MatrixXd::Constant(1, 1, 1.5);
        CHECK(reproduction_number(t, 0.2, one, 0.7, Eigen::VectorXd::Constant(1, 0.9)) ==
              doctest::Approx(2.0 * std::exp(0.2) * 0.7 * 1.5 * 0.9).epsilon(1e-9));

        Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(2, 2);
        CHECK(reproduction_number(t, 0.0, ones, 1.0, Eigen::VectorXd::Ones(2)) == doctest::Approx(4.0).epsilon(1e-9));
        CHECK(reproduction_number(t, 0.0, ones, 1.0, Eigen::VectorXd::Zero(2)) == 0.0);

        // Bipartite contacts have eigenvalues +-1; the dominant positive one is returned.
        Eigen::MatrixXd swap(2, 2);
        swap << 0.0, 1.0, 1.0, 0.0;
        CHECK(reproduction_number(t, 0.0, swap, 1.0, Eigen::VectorXd::Ones(2)) == doctest::Approx(2.0).epsilon(1e-8));
    }

    TEST_CASE("growth sign follows the reproduction number")
    {
        StaticParams t = testing::small_params(1, 1);
        t.psi(0) = 0.0;
        t.d_L = 2.0;
        t.d_I = 4.0;
        PopulationStructure pop;
        pop.counts = Eigen::MatrixXd::Constant(1, 1, 1e9);
        ContactSchedule sched;
        sched.periods.resize(1);
        sched.periods[0].push_back({0, 0, Eigen::MatrixXd::Constant(1, 1, 0.5)});
        const TimeGrid grid = TimeGrid::from_spacing(0.25, 1.0, 30);
        for (double beta : {-1.5, -1.0, 0.0, 0.4}) {
            TransmissionField f(grid.n_knots(), 1);
            f.values().setConstant(beta);
            const double r = reproduction_number(t, beta, sched.periods[0][0].matrix, 1.0,
                                                 Eigen::VectorXd::Constant(1, 1.0));
            const EpidemicTrajectory traj = simulate(t, f, sched, pop, grid);
            // Compare daily incidence well after the initial transient.
            double early = 0.0, late = 0.0;
            for (int k = 4 * 15 + 1; k <= 4 * 16; ++k) {
                early += traj.new_infections(0, k, 0);
            }
            for (int k = 4 * 25 + 1; k <= 4 * 26; ++k) {
                late += traj.new_infections(0, k, 0);
            }
            CAPTURE(beta);
            CAPTURE(r);
            CHECK((late > early) == (r > 1.0));
        }
    }
}
