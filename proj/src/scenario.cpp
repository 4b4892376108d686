#include "epigmrf/scenario.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <fstream>

#include "epigmrf/errors.hpp"

namespace epigmrf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v)
{
    return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd to_eigen(const std::vector<double>& v)
{
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

StaticParams scenario_truth(int n_regions, int n_ages)
{
    StaticParams t;
    t.eta = 0.25;
    t.d_L = 3.0;
    t.d_I = 4.0;
    t.k_sens = 0.85;
    t.k_spec = 0.98;
    t.p.resize(n_ages);
    for (int i = 0; i < n_ages; ++i) {
        const double frac = n_ages == 1 ? 1.0 : static_cast<double>(i) / (n_ages - 1);
        t.p(i) = std::exp(std::log(1e-5) + frac * (std::log(0.1) - std::log(1e-5)));
    }
    t.z.resize(n_regions, ContactSchedule::kMultiplierSlots);
    for (int m = 0; m < n_regions; ++m) {
        t.z.row(m) << 1.0, 0.45, 0.7;
    }
    t.psi = Eigen::VectorXd::Constant(n_regions, 0.15);
    t.ell0 = Eigen::VectorXd::Constant(n_regions, std::log(100.0));
    return t;
}

Eigen::MatrixXd base_contacts(int n_ages, double dominant_rate)
{
    Eigen::MatrixXd c(n_ages, n_ages);
    const double range = std::max(1.0, n_ages / 2.0);
    for (int i = 0; i < n_ages; ++i) {
        for (int j = 0; j < n_ages; ++j) {
            c(i, j) = (i == j ? 2.0 : 1.0) * std::exp(-std::abs(i - j) / range);
        }
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
    return c * (dominant_rate / eig.eigenvalues().maxCoeff());
}

void write_json(const fs::path& path, const json& j)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

} // namespace

std::string fit_model_name(FitModel m)
{
    switch (m) {
    case FitModel::DailyCorrelated:
        return "model_a";
    case FitModel::DailyIndependent:
        return "model_b";
    case FitModel::BiweeklyIndependent:
        return "model_c";
    }
    return "model";
}

ScenarioSpec ScenarioSpec::desk()
{
    ScenarioSpec s;
    s.truth = scenario_truth(s.n_regions, s.n_ages);
    s.region_sizes = {1.2e6, 2.0e6, 0.8e6};
    s.period_starts = {0, 14, 28};
    return s;
}

ScenarioSpec ScenarioSpec::paper()
{
    ScenarioSpec s;
    s.n_days = 100;
    s.n_regions = 7;
    s.n_ages = 8;
    s.train_days = 86;
    s.test_days = 14;
    s.truth = scenario_truth(s.n_regions, s.n_ages);
    s.region_sizes = {2.5e6, 5.5e6, 6.0e6, 8.9e6, 7.3e6, 5.6e6, 9.2e6};
    s.period_starts = {0, 35, 70};
    s.fit_iterations = 300000;
    s.fit_burn_in = 100000;
    s.fit_thin = 200;
    return s;
}

ScenarioSpec ScenarioSpec::profile(const std::string& name)
{
    if (name == "desk") {
        return desk();
    }
    if (name == "paper") {
        return paper();
    }
    throw InputError("unknown profile '" + name + "' (expected desk or paper)");
}

StructureKind ScenarioSpec::strata_kind() const
{
    return id == "A" ? StructureKind::Rw1Tridiagonal : StructureKind::Identity;
}

void ScenarioSpec::validate() const
{
    if (id != "A" && id != "B") {
        throw DomainError("scenario: id must be A or B");
    }
    if (n_days < 1 || n_regions < 1 || n_ages < 1 || replicates < 1) {
        throw DomainError("scenario: dimensions and replicate count must be positive");
    }
    if (train_days < 1 || test_days < 0 || train_days + test_days != n_days) {
        throw DomainError("scenario: train and test days must sum to the number of days");
    }
    if (static_cast<int>(region_sizes.size()) != n_regions) {
        throw DomainError("scenario: need one size per region");
    }
    if (period_starts.empty() || period_starts.front() != 0 ||
        static_cast<int>(period_starts.size()) > ContactSchedule::kMultiplierSlots) {
        throw DomainError("scenario: contact periods must start on day 0 and use at most 3 slots");
    }
    if (!(tau > 0.0) || rho_m < 0.0 || rho_time < 0.0) {
        throw DomainError("scenario: tau must be positive and rho nonnegative");
    }
    if (sero_interval < 1 || sero_samples < 0 || delay_max_lag < 1 || !(delay_mean > 0.0 && delay_sd > 0.0)) {
        throw DomainError("scenario: invalid serology or delay settings");
    }
    truth.validate(n_regions, n_ages);
    (void)grid();
}

json ScenarioSpec::to_json() const
{
    std::vector<std::vector<double>> z;
    for (Eigen::Index m = 0; m < truth.z.rows(); ++m) {
        z.push_back(to_std(truth.z.row(m).transpose()));
    }
    return {{"id", id},
            {"n_days", n_days},
            {"n_regions", n_regions},
            {"n_ages", n_ages},
            {"train_days", train_days},
            {"test_days", test_days},
            {"replicates", replicates},
            {"delta", delta},
            {"delta_beta", delta_beta},
            {"tau", tau},
            {"rho_m", rho_m},
            {"rho_time", rho_time},
            {"truth",
             {{"eta", truth.eta},
              {"d_L", truth.d_L},
              {"d_I", truth.d_I},
              {"k_sens", truth.k_sens},
              {"k_spec", truth.k_spec},
              {"p", to_std(truth.p)},
              {"z", z},
              {"psi", to_std(truth.psi)},
              {"ell0", to_std(truth.ell0)}}},
            {"region_sizes", region_sizes},
            {"contact_rate", contact_rate},
            {"period_starts", period_starts},
            {"delay_mean", delay_mean},
            {"delay_sd", delay_sd},
            {"delay_max_lag", delay_max_lag},
            {"sero_interval", sero_interval},
            {"sero_samples", sero_samples},
            {"fit_iterations", fit_iterations},
            {"fit_burn_in", fit_burn_in},
            {"fit_thin", fit_thin},
            {"fit_tau_shape", fit_tau_shape},
            {"fit_tau_rate", fit_tau_rate}};
}

ScenarioSpec ScenarioSpec::from_json(const json& j)
{
    try {
        // Start from the profile matching the dimensions so omitted keys have sensible values.
        ScenarioSpec s = j.value("n_regions", 3) == 7 ? paper() : desk();
        for (const auto& [key, value] : j.items()) {
            if (key == "id") {
                s.id = value.get<std::string>();
            } else if (key == "n_days") {
                s.n_days = value.get<int>();
            } else if (key == "n_regions") {
                s.n_regions = value.get<int>();
            } else if (key == "n_ages") {
                s.n_ages = value.get<int>();
            } else if (key == "train_days") {
                s.train_days = value.get<int>();
            } else if (key == "test_days") {
                s.test_days = value.get<int>();
            } else if (key == "replicates") {
                s.replicates = value.get<int>();
            } else if (key == "delta") {
                s.delta = value.get<double>();
            } else if (key == "delta_beta") {
                s.delta_beta = value.get<double>();
            } else if (key == "tau") {
                s.tau = value.get<double>();
            } else if (key == "rho_m") {
                s.rho_m = value.get<double>();
            } else if (key == "rho_time") {
                s.rho_time = value.get<double>();
            } else if (key == "region_sizes") {
                s.region_sizes = value.get<std::vector<double>>();
            } else if (key == "contact_rate") {
                s.contact_rate = value.get<double>();
            } else if (key == "period_starts") {
                s.period_starts = value.get<std::vector<int>>();
            } else if (key == "delay_mean") {
                s.delay_mean = value.get<double>();
            } else if (key == "delay_sd") {
                s.delay_sd = value.get<double>();
            } else if (key == "delay_max_lag") {
                s.delay_max_lag = value.get<int>();
            } else if (key == "sero_interval") {
                s.sero_interval = value.get<int>();
            } else if (key == "sero_samples") {
                s.sero_samples = value.get<int>();
            } else if (key == "fit_iterations") {
                s.fit_iterations = value.get<long>();
            } else if (key == "fit_burn_in") {
                s.fit_burn_in = value.get<long>();
            } else if (key == "fit_thin") {
                s.fit_thin = value.get<long>();
            } else if (key == "fit_tau_shape") {
                s.fit_tau_shape = value.get<double>();
            } else if (key == "fit_tau_rate") {
                s.fit_tau_rate = value.get<double>();
            } else if (key != "truth" && key != "metadata") {
                throw InputError("scenario: unknown key '" + key + "'");
            }
        }
        s.truth = scenario_truth(s.n_regions, s.n_ages);
        if (j.contains("truth")) {
            const json& t = j.at("truth");
            for (const auto& [key, value] : t.items()) {
                if (key == "eta") {
                    s.truth.eta = value.get<double>();
                } else if (key == "d_L") {
                    s.truth.d_L = value.get<double>();
                } else if (key == "d_I") {
                    s.truth.d_I = value.get<double>();
                } else if (key == "k_sens") {
                    s.truth.k_sens = value.get<double>();
                } else if (key == "k_spec") {
                    s.truth.k_spec = value.get<double>();
                } else if (key == "p") {
                    s.truth.p = to_eigen(value.get<std::vector<double>>());
                } else if (key == "psi") {
                    s.truth.psi = to_eigen(value.get<std::vector<double>>());
                } else if (key == "ell0") {
                    s.truth.ell0 = to_eigen(value.get<std::vector<double>>());
                } else if (key == "z") {
                    const auto rows = value.get<std::vector<std::vector<double>>>();
                    s.truth.z.resize(static_cast<Eigen::Index>(rows.size()), ContactSchedule::kMultiplierSlots);
                    for (std::size_t m = 0; m < rows.size(); ++m) {
                        if (rows[m].size() != ContactSchedule::kMultiplierSlots) {
                            throw InputError("scenario: truth.z rows need 3 entries");
                        }
                        for (int k = 0; k < ContactSchedule::kMultiplierSlots; ++k) {
                            s.truth.z(static_cast<Eigen::Index>(m), k) = rows[m][k];
                        }
                    }
                } else {
                    throw InputError("scenario: unknown truth key '" + key + "'");
                }
            }
        }
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw InputError(std::string("scenario: ") + e.what());
    } catch (const DomainError& e) {
        throw InputError(e.what());
    }
}

DelayDistribution gamma_delay(double mean, double sd, int max_lag)
{
    const double shape = (mean / sd) * (mean / sd);
    const double scale = sd * sd / mean;
    std::vector<double> cdf(static_cast<std::size_t>(max_lag) + 1);
    const double total = boost::math::gamma_p(shape, (max_lag + 1) / scale);
    for (int l = 0; l <= max_lag; ++l) {
        cdf[l] = boost::math::gamma_p(shape, (l + 1) / scale) / total;
    }
    cdf.back() = 1.0;
    return DelayDistribution::from_cdf(cdf);
}

TransmissionField sample_scenario_field(const ScenarioSpec& spec, Rng& rng)
{
    PrecisionSpec ps;
    ps.tau = spec.tau;
    ps.rho_m = spec.rho_m;
    ps.rho_time = spec.rho_time;
    ps.strata_kind = spec.strata_kind();
    ps.time_kind = StructureKind::Rw1Tridiagonal;
    ps.n_strata = spec.n_regions;
    ps.n_knots = spec.grid().n_knots();
    ps.delta_beta = spec.delta_beta;
    TransmissionField f = sample_field(ps, 1e-6 * spec.tau, rng);
    if (analytic_rank(ps) < ps.n_strata * ps.n_knots) {
        f.values().array() -= f.values().mean();
    }
    return f;
}

SimulatedDataset simulate_dataset(const ScenarioSpec& spec, std::uint64_t seed)
{
    spec.validate();
    Rng rng(seed);
    SimulatedDataset ds;
    ds.pop.counts.resize(spec.n_regions, spec.n_ages);
    for (int m = 0; m < spec.n_regions; ++m) {
        for (int a = 0; a < spec.n_ages; ++a) {
            ds.pop.counts(m, a) = std::round(spec.region_sizes[m] / spec.n_ages);
        }
    }
    const Eigen::MatrixXd contacts = base_contacts(spec.n_ages, spec.contact_rate);
    ds.schedule.periods.resize(spec.n_regions);
    for (int m = 0; m < spec.n_regions; ++m) {
        for (std::size_t j = 0; j < spec.period_starts.size(); ++j) {
            ds.schedule.periods[m].push_back({spec.period_starts[j], static_cast<int>(j), contacts});
        }
    }
    ds.delay = gamma_delay(spec.delay_mean, spec.delay_sd, spec.delay_max_lag);
    ds.field = sample_scenario_field(spec, rng);

    const TimeGrid grid = spec.grid();
    ds.trajectory = simulate(spec.truth, ds.field, ds.schedule, ds.pop, grid);
    ds.death_means = death_mean(ds.trajectory, ds.delay, spec.truth.p, grid.steps_per_day);

    ds.data = SurveillanceData::empty(spec.n_regions, spec.n_days, spec.n_ages);
    for (int m = 0; m < spec.n_regions; ++m) {
        for (int d = 0; d < spec.n_days; ++d) {
            for (int a = 0; a < spec.n_ages; ++a) {
                const double mu = ds.death_means[ds.data.index(m, d, a)];
                ds.data.death(m, d, a) = sample_negbin(mu, spec.truth.eta, rng);
            }
        }
    }
    for (int d = spec.sero_interval - 1; d < spec.train_days; d += spec.sero_interval) {
        for (int m = 0; m < spec.n_regions; ++m) {
            for (int a = 0; a < spec.n_ages; ++a) {
                const double s = ds.trajectory.S(m, (d + 1) * grid.steps_per_day, a);
                const double prob = sero_prob(s, ds.pop(m, a), spec.truth.k_sens, spec.truth.k_spec);
                const int positives = std::binomial_distribution<int>(spec.sero_samples, prob)(rng);
                ds.data.serology.push_back({m, d, a, positives, spec.sero_samples});
            }
        }
    }
    return ds;
}

RunConfig fit_config(const ScenarioSpec& spec, FitModel model, std::uint64_t seed)
{
    RunConfig c;
    c.model.delta = spec.delta;
    c.model.delta_beta = model == FitModel::BiweeklyIndependent ? 14.0 : 1.0;
    c.model.d_latent = spec.truth.d_L;
    auto& fp = c.model.field_prior;
    fp.strata_kind = model == FitModel::DailyCorrelated ? StructureKind::Rw1Tridiagonal : StructureKind::Identity;
    fp.time_kind = StructureKind::Rw1Tridiagonal;
    fp.rho_m = spec.rho_m;
    fp.rho_time = spec.rho_time;
    fp.tau_mode = TauMode::Sampled;
    fp.tau = spec.fit_tau_shape / spec.fit_tau_rate;
    fp.tau_prior = {spec.fit_tau_shape, spec.fit_tau_rate};
    fp.exponent = ExponentConvention::Rank;
    c.model.params = Parameterisation::with_defaults(spec.truth).entries();

    c.mcmc.sampler.iterations = spec.fit_iterations;
    c.mcmc.sampler.burn_in = spec.fit_burn_in;
    c.mcmc.sampler.thin = spec.fit_thin;
    c.mcmc.chains = 1;
    c.mcmc.seed = seed;

    c.data.n_days = spec.train_days;
    c.data.deaths = "deaths_train.csv";
    c.data.serology = "serology_train.csv";
    c.data.contacts = "contacts.csv";
    c.data.populations = "populations.csv";
    c.data.delay = "delay.csv";

    c.forecast.horizon = spec.test_days;
    c.forecast.alpha = 0.05;
    c.forecast.truth = "deaths_test.csv";
    return c;
}

void write_dataset(const fs::path& dir, const Metadata& meta, const ScenarioSpec& spec, const SimulatedDataset& ds,
                   std::uint64_t seed)
{
    fs::create_directories(dir);
    write_populations(dir / "populations.csv", meta, ds.pop);
    write_contacts(dir / "contacts.csv", meta, ds.schedule);
    write_delay(dir / "delay.csv", meta, ds.delay);

    SurveillanceData train = ds.data.slice_days(0, spec.train_days, false);
    write_deaths(dir / "deaths_train.csv", meta, train);
    write_serology(dir / "serology_train.csv", meta, train);
    SurveillanceData test = ds.data;
    for (int m = 0; m < test.n_regions; ++m) {
        for (int d = 0; d < spec.train_days; ++d) {
            for (int a = 0; a < test.n_ages; ++a) {
                test.death(m, d, a) = -1;
            }
        }
    }
    test.serology.clear();
    write_deaths(dir / "deaths_test.csv", meta, test);
    write_field(dir / "truth_field.csv", meta, ds.field, spec.delta_beta);

    {
        CsvWriter w(dir / "truth_params.csv", meta, {"parameter", "value"});
        Parameterisation params = Parameterisation::with_defaults(spec.truth);
        const Eigen::VectorXd values = params.natural_of(spec.truth);
        for (std::size_t i = 0; i < params.entries().size(); ++i) {
            w << params.entries()[i].name << values(static_cast<Eigen::Index>(i));
            w.end_row();
        }
        w << "d_L" << spec.truth.d_L;
        w.end_row();
        w << "tau" << spec.tau;
        w.end_row();
        w << "rho_m" << spec.rho_m;
        w.end_row();
        w << "rho_time" << spec.rho_time;
        w.end_row();
        w.close();
    }
    {
        CsvWriter w(dir / "death_means.csv", meta, {"region", "day", "age", "mean"});
        for (int m = 0; m < ds.data.n_regions; ++m) {
            for (int d = 0; d < ds.data.n_days; ++d) {
                for (int a = 0; a < ds.data.n_ages; ++a) {
                    w << m << d << a << ds.death_means[ds.data.index(m, d, a)];
                    w.end_row();
                }
            }
        }
        w.close();
    }
    json scenario = spec.to_json();
    scenario["metadata"] = meta.line();
    write_json(dir / "scenario.json", scenario);
    for (FitModel m : {FitModel::DailyCorrelated, FitModel::DailyIndependent, FitModel::BiweeklyIndependent}) {
        fit_config(spec, m, seed).save(dir / (fit_model_name(m) + ".json"), meta.line());
    }
}

} // namespace epigmrf
