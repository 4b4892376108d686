#include "epigmrf/forecast.hpp"

#include "epigmrf/errors.hpp"

namespace epigmrf {

std::vector<PosteriorDraw> posterior_draws(const DrawStore& draws, const Parameterisation& params, int n_strata,
                                           int n_knots)
{
    const int tau_col = draws.column_index("tau");
    if (tau_col < 0) {
        throw InputError("draws: missing column 'tau'");
    }
    std::vector<int> theta_cols;
    for (const auto& e : params.entries()) {
        const int c = draws.column_index(e.name);
        if (c < 0) {
            throw InputError("draws: missing column '" + e.name + "'");
        }
        theta_cols.push_back(c);
    }
    std::vector<int> field_cols;
    for (int m = 0; m < n_strata; ++m) {
        for (int k = 0; k < n_knots; ++k) {
            const std::string name = "beta[" + std::to_string(m) + "][" + std::to_string(k) + "]";
            const int c = draws.column_index(name);
            if (c < 0) {
                throw InputError("draws: missing column '" + name + "'");
            }
            field_cols.push_back(c);
        }
    }
    std::vector<PosteriorDraw> out;
    out.reserve(draws.size());
    for (const auto& row : draws.rows()) {
        Eigen::VectorXd natural(static_cast<Eigen::Index>(theta_cols.size()));
        for (std::size_t j = 0; j < theta_cols.size(); ++j) {
            natural(static_cast<Eigen::Index>(j)) = row[theta_cols[j]];
        }
        Eigen::VectorXd flat(static_cast<Eigen::Index>(field_cols.size()));
        for (std::size_t j = 0; j < field_cols.size(); ++j) {
            flat(static_cast<Eigen::Index>(j)) = row[field_cols[j]];
        }
        out.push_back({params.from_natural(natural), TransmissionField::unflatten(flat, n_knots, n_strata),
                       row[tau_col]});
    }
    return out;
}

int ForecastDraws::region_total(int draw, int region, int day) const
{
    int total = 0;
    for (int a = 0; a < n_ages; ++a) {
        total += count(draw, region, day, a);
    }
    return total;
}

ContactSchedule truncate_schedule(const ContactSchedule& schedule, int n_days)
{
    ContactSchedule out = schedule;
    for (auto& periods : out.periods) {
        std::erase_if(periods, [&](const ContactPeriod& p) { return p.start_day >= n_days && p.start_day > 0; });
    }
    return out;
}

ForecastDraws forecast(const std::vector<PosteriorDraw>& draws, const ForecastSetup& setup, int horizon, Rng& rng)
{
    if (horizon < 0) {
        throw DomainError("forecast: horizon must be nonnegative");
    }
    const int n_days = setup.grid.n_days;
    const int n_strata = setup.pop.n_regions();
    const int n_ages = setup.pop.n_ages();
    const TimeGrid ext_grid = setup.grid.with_days(n_days + horizon);
    const int fit_knots = setup.grid.n_knots();
    const int ext_knots = ext_grid.n_knots();

    ForecastDraws fc;
    fc.n_draws = static_cast<int>(draws.size());
    fc.n_regions = n_strata;
    fc.n_ages = n_ages;
    fc.first_day = n_days;
    fc.horizon = horizon;
    fc.future_knots = ext_knots - fit_knots;
    if (horizon == 0) {
        return fc;
    }
    fc.counts.resize(static_cast<std::size_t>(fc.n_draws) * n_strata * horizon * n_ages);
    fc.means.resize(fc.counts.size());

    const ContactSchedule schedule = truncate_schedule(setup.schedule, n_days);
    SparsePrecision unit;
    if (fc.future_knots > 0) {
        unit = build_precision(setup.field_prior.spec(1.0, n_strata, ext_knots, setup.grid.delta_beta()));
    }

    for (int d = 0; d < fc.n_draws; ++d) {
        const PosteriorDraw& draw = draws[d];
        if (draw.field.n_knots() != fit_knots || draw.field.n_strata() != n_strata) {
            throw DomainError("forecast: draw " + std::to_string(d) + " has a field of the wrong shape");
        }
        TransmissionField extended(ext_knots, n_strata);
        extended.values().topRows(fit_knots) = draw.field.values();
        if (fc.future_knots > 0) {
            SparsePrecision q{draw.tau * unit.matrix, unit.rank, draw.tau};
            const ConditionalGaussian cond = conditional_forecast_distribution(q, draw.field);
            extended.values().bottomRows(fc.future_knots) = cond.sample(rng).values();
        }
        const EpidemicTrajectory traj = simulate(draw.theta, extended, schedule, setup.pop, ext_grid);
        const std::vector<double> mu = death_mean(traj, setup.delay, draw.theta.p, ext_grid.steps_per_day);
        for (int m = 0; m < n_strata; ++m) {
            for (int h = 0; h < horizon; ++h) {
                for (int a = 0; a < n_ages; ++a) {
                    const double mean =
                        mu[(static_cast<std::size_t>(m) * (n_days + horizon) + n_days + h) * n_ages + a];
                    const std::size_t i = fc.index(d, m, h, a);
                    fc.means[i] = mean;
                    fc.counts[i] = sample_negbin(mean, draw.theta.eta, rng);
                }
            }
        }
        fc.fields.push_back(std::move(extended));
    }
    return fc;
}

} // namespace epigmrf
