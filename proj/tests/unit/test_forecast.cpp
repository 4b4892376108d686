#include <doctest.h>

#include <type_traits>

#include "epigmrf/errors.hpp"
#include "epigmrf/forecast.hpp"
#include "epigmrf/scoring.hpp"
#include "fixtures.hpp"

using namespace epigmrf;

namespace {

// Future sampling sees only the model ingredients, never observed counts.
template <typename T>
concept HasDataMember = requires(T t) { t.data; };
static_assert(!HasDataMember<ForecastSetup>);

ForecastSetup two_region_setup(double tau, double rho_m)
{
    ForecastSetup s;
    s.pop = testing::small_population(2, 2);
    s.schedule = testing::small_schedule(2, 2, 6);
    s.delay = testing::short_delay();
    s.grid = TimeGrid::from_spacing(0.5, 2.0, 12);
    s.field_prior.strata_kind = StructureKind::Identity;
    s.field_prior.rho_m = rho_m;
    s.field_prior.rho_time = 1.5;
    s.field_prior.tau = tau;
    return s;
}

PosteriorDraw fitted_draw(const ForecastSetup& s, double tau)
{
    PosteriorDraw d;
    d.theta = testing::small_params(2, 2);
    d.theta.ell0 = Eigen::VectorXd::Constant(2, std::log(400.0));
    d.field = TransmissionField(s.grid.n_knots(), 2);
    for (int k = 0; k < s.grid.n_knots(); ++k) {
        d.field(k, 0) = 0.05 * k;
        d.field(k, 1) = -0.1 + 0.02 * k;
    }
    d.tau = tau;
    return d;
}

} // namespace

TEST_SUITE("forecast")
{
    TEST_CASE("a zero horizon gives an empty forecast")
    {
        const ForecastSetup s = two_region_setup(2.0, 0.5);
        Rng rng(1);
        const ForecastDraws fc = forecast({fitted_draw(s, 2.0)}, s, 0, rng);
        CHECK(fc.empty());
        CHECK(fc.future_knots == 0);
        CHECK(fc.counts.empty());
        CHECK_THROWS_AS(forecast({}, s, -1, rng), DomainError);
    }

    TEST_CASE("a horizon inside the last knot needs no new knots")
    {
        // 13 days on a 2-day knot grid share the knot that covers day 12.
        ForecastSetup s = two_region_setup(2.0, 0.5);
        s.grid = TimeGrid::from_spacing(0.5, 2.0, 13);
        PosteriorDraw d = fitted_draw(s, 2.0);
        Rng rng(2);
        const ForecastDraws fc = forecast({d}, s, 1, rng);
        CHECK(fc.future_knots == 0);
        CHECK(fc.fields.front() == d.field);
    }

    TEST_CASE("a tight prior continues the last knot value")
    {
        const double tau = 1e12;
        const ForecastSetup s = two_region_setup(tau, 0.0);
        const PosteriorDraw d = fitted_draw(s, tau);
        const int horizon = 8;
        Rng rng(3);
        const ForecastDraws fc = forecast({d}, s, horizon, rng);
        REQUIRE(fc.future_knots == 4);

        const int fit_knots = s.grid.n_knots();
        TransmissionField frozen(fit_knots + 4, 2);
        frozen.values().topRows(fit_knots) = d.field.values();
        for (int j = 0; j < 4; ++j) {
            frozen.values().row(fit_knots + j) = d.field.values().row(fit_knots - 1);
        }
        const TimeGrid ext = s.grid.with_days(12 + horizon);
        ContactSchedule held;
        held.periods.resize(2);
        for (int m = 0; m < 2; ++m) {
            held.periods[m] = {s.schedule.periods[m][0], s.schedule.periods[m][1]};
        }
        const auto traj = simulate(d.theta, frozen, held, s.pop, ext);
        const auto mu = death_mean(traj, s.delay, d.theta.p, ext.steps_per_day);
        for (int m = 0; m < 2; ++m) {
            for (int h = 0; h < horizon; ++h) {
                for (int a = 0; a < 2; ++a) {
                    const double expected = mu[(static_cast<std::size_t>(m) * (12 + horizon) + 12 + h) * 2 + a];
                    CHECK(fc.mean(0, m, h, a) == doctest::Approx(expected).epsilon(1e-4));
                }
            }
        }
    }

    TEST_CASE("contact periods after the training window are dropped")
    {
        ContactSchedule s = testing::small_schedule(1, 1, 20);
        const ContactSchedule t = truncate_schedule(s, 12);
        CHECK(t.periods[0].size() == 1);
        CHECK(truncate_schedule(s, 21).periods[0].size() == 2);
    }

    TEST_CASE("predictive spread grows with the horizon")
    {
        // Without cross-region coupling each region's future knots follow a random walk.
        const ForecastSetup s = two_region_setup(2.0, 0.0);
        const std::vector<PosteriorDraw> draws(800, fitted_draw(s, 2.0));
        Rng rng(4);
        const ForecastDraws fc = forecast(draws, s, 10, rng);
        const int fit_knots = s.grid.n_knots();
        for (int m = 0; m < 2; ++m) {
            double previous = 0.0;
            for (int j = 0; j < fc.future_knots; ++j) {
                std::vector<double> values;
                for (const auto& f : fc.fields) {
                    values.push_back(f(fit_knots + j, m));
                }
                const double width = quantile_type7(values, 0.975) - quantile_type7(values, 0.025);
                CHECK(width >= previous);
                previous = width;
            }
            // Log death means inherit the spread once the delay has passed the new knots.
            double prev_log_width = 0.0;
            for (int h = 0; h < 10; ++h) {
                std::vector<double> logs;
                for (int d = 0; d < fc.n_draws; ++d) {
                    logs.push_back(std::log(fc.mean(d, m, h, 0) + fc.mean(d, m, h, 1)));
                }
                const double width = quantile_type7(logs, 0.975) - quantile_type7(logs, 0.025);
                CHECK(width >= prev_log_width);
                prev_log_width = width;
            }
        }
    }

    TEST_CASE("draws round-trip through the draw table")
    {
        const auto setup = testing::tiny_setup(2);
        const ChainResult r = run_chain(setup.model, testing::quick_settings(300, 100, 10), 8, 0);
        const auto draws = posterior_draws(r.draws, setup.model.params, 1, setup.model.n_knots());
        REQUIRE(draws.size() == r.draws.size());
        CHECK(draws.back().theta.eta == r.draws.rows().back()[r.draws.column_index("eta")]);
        CHECK(draws.back().field(4, 0) == r.draws.rows().back()[r.draws.column_index("beta[0][4]")]);

        DrawStore missing({"tau", "eta"});
        CHECK_THROWS_AS(posterior_draws(missing, setup.model.params, 1, 5), InputError);
    }

    TEST_CASE("counts are nonnegative and match the draw count")
    {
        const ForecastSetup s = two_region_setup(2.0, 0.5);
        Rng rng(5);
        const ForecastDraws fc = forecast(std::vector<PosteriorDraw>(30, fitted_draw(s, 2.0)), s, 6, rng);
        CHECK(fc.n_draws == 30);
        CHECK(fc.fields.size() == 30);
        CHECK(*std::min_element(fc.counts.begin(), fc.counts.end()) >= 0);
    }
}
