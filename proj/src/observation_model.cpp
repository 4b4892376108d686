#include "epigmrf/observation_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "epigmrf/errors.hpp"

namespace epigmrf {

namespace {

std::string where(int region, int day, int age)
{
    return "region " + std::to_string(region) + ", day " + std::to_string(day) + ", age " + std::to_string(age);
}

} // namespace

DelayDistribution DelayDistribution::from_cdf(const std::vector<double>& cdf)
{
    if (cdf.empty()) {
        throw DomainError("delay: empty CDF");
    }
    std::vector<double> pmf(cdf.size());
    double previous = 0.0;
    for (std::size_t lag = 0; lag < cdf.size(); ++lag) {
        if (!(cdf[lag] >= previous) || cdf[lag] > 1.0 + 1e-12) {
            throw DomainError("delay: CDF must be non-decreasing in [0,1] (lag " + std::to_string(lag) + ")");
        }
        pmf[lag] = cdf[lag] - previous;
        previous = cdf[lag];
    }
    DelayDistribution d;
    d.pmf_ = std::move(pmf);
    return d;
}

DelayDistribution DelayDistribution::from_pmf(std::vector<double> pmf)
{
    double total = 0.0;
    for (double v : pmf) {
        if (!(v >= 0.0)) {
            throw DomainError("delay: pmf entries must be non-negative");
        }
        total += v;
    }
    if (pmf.empty() || total > 1.0 + 1e-12) {
        throw DomainError("delay: pmf must be non-empty and sum to at most 1");
    }
    DelayDistribution d;
    d.pmf_ = std::move(pmf);
    return d;
}

SurveillanceData SurveillanceData::empty(int n_regions, int n_days, int n_ages)
{
    SurveillanceData d;
    d.n_regions = n_regions;
    d.n_days = n_days;
    d.n_ages = n_ages;
    d.deaths.assign(static_cast<std::size_t>(n_regions) * n_days * n_ages, -1);
    return d;
}

SurveillanceData SurveillanceData::slice_days(int first, int count, bool rebase) const
{
    if (first < 0 || count < 0 || first + count > n_days) {
        throw DomainError("surveillance: day slice out of range");
    }
    const int offset = rebase ? first : 0;
    SurveillanceData out = empty(n_regions, rebase ? count : first + count, n_ages);
    for (int m = 0; m < n_regions; ++m) {
        for (int d = first; d < first + count; ++d) {
            for (int a = 0; a < n_ages; ++a) {
                out.death(m, d - offset, a) = death(m, d, a);
            }
        }
    }
    for (const auto& s : serology) {
        if (s.day >= first && s.day < first + count) {
            SeroObservation copy = s;
            copy.day -= offset;
            out.serology.push_back(copy);
        }
    }
    return out;
}

void SurveillanceData::validate() const
{
    if (deaths.size() != static_cast<std::size_t>(n_regions) * n_days * n_ages) {
        throw DomainError("surveillance: death array has the wrong size");
    }
    for (std::size_t i = 0; i < deaths.size(); ++i) {
        if (deaths[i] < -1) {
            throw DomainError("surveillance: negative death count");
        }
    }
    for (const auto& s : serology) {
        if (s.region < 0 || s.region >= n_regions || s.day < 0 || s.day >= n_days || s.age < 0 ||
            s.age >= n_ages) {
            throw DomainError("surveillance: serology index out of range at " + where(s.region, s.day, s.age));
        }
        if (s.positives < 0 || s.samples < 0 || s.positives > s.samples) {
            throw DomainError("surveillance: serology needs 0 <= positives <= samples at " +
                              where(s.region, s.day, s.age));
        }
    }
}

std::vector<double> daily_infections(const EpidemicTrajectory& traj, int steps_per_day)
{
    if (traj.n_steps() % steps_per_day != 0) {
        throw DomainError("daily_infections: trajectory does not cover whole days");
    }
    const int n_days = traj.n_steps() / steps_per_day;
    const int n_ages = traj.n_ages();
    std::vector<double> out(static_cast<std::size_t>(traj.n_regions()) * n_days * n_ages, 0.0);
    for (int m = 0; m < traj.n_regions(); ++m) {
        for (int d = 0; d < n_days; ++d) {
            for (int s = 1; s <= steps_per_day; ++s) {
                const int k = d * steps_per_day + s;
                for (int a = 0; a < n_ages; ++a) {
                    out[(static_cast<std::size_t>(m) * n_days + d) * n_ages + a] += traj.new_infections(m, k, a);
                }
            }
        }
    }
    return out;
}

std::vector<double> death_mean(const EpidemicTrajectory& traj, const DelayDistribution& delay,
                               const Eigen::VectorXd& ifr, int steps_per_day)
{
    if (ifr.size() != traj.n_ages()) {
        throw DomainError("death_mean: IFR vector does not match the age groups");
    }
    const std::vector<double> daily = daily_infections(traj, steps_per_day);
    const int n_days = traj.n_steps() / steps_per_day;
    const int n_ages = traj.n_ages();
    std::vector<double> mu(daily.size(), 0.0);
    for (int m = 0; m < traj.n_regions(); ++m) {
        const std::size_t base = static_cast<std::size_t>(m) * n_days * n_ages;
        for (int d = 0; d < n_days; ++d) {
            const int first = std::max(0, d - delay.max_lag());
            for (int a = 0; a < n_ages; ++a) {
                double sum = 0.0;
                for (int l = first; l <= d; ++l) {
                    sum += delay[d - l] * daily[base + static_cast<std::size_t>(l) * n_ages + a];
                }
                mu[base + static_cast<std::size_t>(d) * n_ages + a] = ifr(a) * sum;
            }
        }
    }
    return mu;
}

double negbin_logpmf(int y, double mu, double eta)
{
    if (y < 0) {
        return kImpossibleLogProb;
    }
    if (mu <= 0.0) {
        return y == 0 ? 0.0 : kImpossibleLogProb;
    }
    const double size = mu / eta;
    const double yd = static_cast<double>(y);
    return std::lgamma(yd + size) - std::lgamma(size) - std::lgamma(yd + 1.0) - size * std::log1p(eta) +
           yd * (std::log(eta) - std::log1p(eta));
}

double binomial_logpmf(int y, int n, double prob)
{
    if (y < 0 || y > n) {
        return kImpossibleLogProb;
    }
    const double yd = static_cast<double>(y);
    const double nd = static_cast<double>(n);
    return std::lgamma(nd + 1.0) - std::lgamma(yd + 1.0) - std::lgamma(nd - yd + 1.0) + yd * std::log(prob) +
           (nd - yd) * std::log1p(-prob);
}

double sero_prob(double susceptible, double population, double k_sens, double k_spec)
{
    if (!(population > 0.0) || susceptible < 0.0 || susceptible > population * (1.0 + 1e-12)) {
        throw DomainError("sero_prob: need 0 <= S <= N");
    }
    constexpr double eps = 1e-12;
    const double frac = std::min(susceptible / population, 1.0);
    const double prob = k_sens * (1.0 - frac) + (1.0 - k_spec) * frac;
    return std::clamp(prob, eps, 1.0 - eps);
}

int sample_negbin(double mu, double eta, Rng& rng)
{
    if (mu <= 0.0) {
        return 0;
    }
    // Gamma-Poisson mixture: rate ~ Gamma(mu/eta, scale eta), mean mu, variance mu(1+eta).
    std::gamma_distribution<double> gamma(mu / eta, eta);
    const double rate = gamma(rng);
    if (!(rate > 0.0)) {
        return 0;
    }
    std::poisson_distribution<int> poisson(rate);
    return poisson(rng);
}

LikelihoodModel::LikelihoodModel(PopulationStructure pop, ContactSchedule schedule, DelayDistribution delay,
                                 SurveillanceData data, TimeGrid grid)
    : pop_(std::move(pop))
    , schedule_(std::move(schedule))
    , delay_(std::move(delay))
    , data_(std::move(data))
    , grid_(grid)
{
    pop_.validate();
    schedule_.validate(pop_.n_regions(), pop_.n_ages());
    data_.validate();
    if (data_.n_regions != pop_.n_regions() || data_.n_ages != pop_.n_ages()) {
        throw DomainError("likelihood: data dimensions do not match the population");
    }
    if (data_.n_days > grid_.n_days) {
        throw DomainError("likelihood: data cover " + std::to_string(data_.n_days) + " days but the grid only " +
                          std::to_string(grid_.n_days));
    }
    sero_by_region_.resize(pop_.n_regions());
    for (const auto& s : data_.serology) {
        if (s.samples > 0) {
            sero_by_region_[s.region].push_back(s);
        }
    }
    scratch_ = EpidemicTrajectory(pop_.n_regions(), grid_.n_steps(), pop_.n_ages());
    daily_.assign(pop_.n_regions(), std::vector<double>(static_cast<std::size_t>(data_.n_days) * pop_.n_ages()));
    dynamics_key_.resize(pop_.n_regions());
}

void LikelihoodModel::refresh_region(const StaticParams& theta, const TransmissionField& field, int m)
{
    // Everything simulate_region reads for region m.
    std::vector<double> key{theta.d_L, theta.d_I, theta.psi(m), theta.ell0(m)};
    for (Eigen::Index j = 0; j < theta.z.cols(); ++j) {
        key.push_back(theta.z(m, j));
    }
    for (int k = 0; k < field.n_knots(); ++k) {
        key.push_back(field(k, m));
    }
    if (key == dynamics_key_[m]) {
        return;
    }
    dynamics_key_[m].clear();
    simulate_region(theta, field, schedule_, pop_, grid_, m, scratch_);

    const int n_ages = pop_.n_ages();
    const int spd = grid_.steps_per_day;
    auto& daily = daily_[m];
    std::fill(daily.begin(), daily.end(), 0.0);
    for (int d = 0; d < data_.n_days; ++d) {
        for (int s = 1; s <= spd; ++s) {
            const int k = d * spd + s;
            for (int a = 0; a < n_ages; ++a) {
                daily[static_cast<std::size_t>(d) * n_ages + a] += scratch_.new_infections(m, k, a);
            }
        }
    }
    dynamics_key_[m] = std::move(key);
}

void LikelihoodModel::accumulate_region(const StaticParams& theta, const TransmissionField& field, int m,
                                        LogLikelihood& out)
{
    refresh_region(theta, field, m);

    const int n_ages = pop_.n_ages();
    const int spd = grid_.steps_per_day;
    const auto& daily = daily_[m];

    double deaths = 0.0;
    for (int d = 0; d < data_.n_days; ++d) {
        const int first = std::max(0, d - delay_.max_lag());
        for (int a = 0; a < n_ages; ++a) {
            const int y = data_.death(m, d, a);
            if (y < 0) {
                continue;
            }
            double sum = 0.0;
            for (int l = first; l <= d; ++l) {
                sum += delay_[d - l] * daily[static_cast<std::size_t>(l) * n_ages + a];
            }
            const double term = negbin_logpmf(y, theta.p(a) * sum, theta.eta);
            if (!std::isfinite(term)) {
                throw NumericalError("log_likelihood: non-finite deaths term at " + where(m, d, a));
            }
            deaths += term;
        }
    }

    double sero = 0.0;
    for (const auto& s : sero_by_region_[m]) {
        const double susceptible = scratch_.S(m, (s.day + 1) * spd, s.age);
        const double prob = sero_prob(susceptible, pop_(m, s.age), theta.k_sens, theta.k_spec);
        const double term = binomial_logpmf(s.positives, s.samples, prob);
        if (!std::isfinite(term)) {
            throw NumericalError("log_likelihood: non-finite serology term at " + where(m, s.day, s.age));
        }
        sero += term;
    }

    out.deaths += deaths;
    out.serology += sero;
    out.per_region[m] = deaths + sero;
}

LogLikelihood LikelihoodModel::evaluate_region(const StaticParams& theta, const TransmissionField& field,
                                               int region)
{
    LogLikelihood out;
    out.per_region.assign(pop_.n_regions(), 0.0);
    accumulate_region(theta, field, region, out);
    out.total = out.deaths + out.serology;
    return out;
}

LogLikelihood LikelihoodModel::evaluate(const StaticParams& theta, const TransmissionField& field)
{
    LogLikelihood out;
    out.per_region.assign(pop_.n_regions(), 0.0);
    for (int m = 0; m < pop_.n_regions(); ++m) {
        accumulate_region(theta, field, m, out);
    }
    // Fixed summation order over regions keeps the total reproducible.
    out.total = 0.0;
    for (double v : out.per_region) {
        out.total += v;
    }
    return out;
}

LogLikelihood log_likelihood(const StaticParams& theta, const TransmissionField& field, const SurveillanceData& data,
                             const ContactSchedule& schedule, const PopulationStructure& pop,
                             const DelayDistribution& delay, const TimeGrid& grid)
{
    LikelihoodModel model(pop, schedule, delay, data, grid);
    return model.evaluate(theta, field);
}

} // namespace epigmrf
