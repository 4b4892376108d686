#include "epigmrf/params.hpp"

#include <cmath>
#include <limits>

#include "epigmrf/errors.hpp"

namespace epigmrf {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double normal_logpdf(double x, double mean, double sd)
{
    const double z = (x - mean) / sd;
    return -0.5 * z * z - std::log(sd) - kLogSqrt2Pi;
}

double logit(double x)
{
    return std::log(x) - std::log1p(-x);
}

double inv_logit(double u)
{
    return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
}

} // namespace

double Prior::log_density(double x) const
{
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    switch (kind) {
    case PriorKind::Normal:
        return normal_logpdf(x, a, b);
    case PriorKind::LogNormal:
        return x > 0.0 ? normal_logpdf(std::log(x), a, b) - std::log(x) : neg_inf;
    case PriorKind::LogitNormal:
        return (x > 0.0 && x < 1.0) ? normal_logpdf(logit(x), a, b) - std::log(x) - std::log1p(-x) : neg_inf;
    case PriorKind::Gamma:
        return x > 0.0 ? a * std::log(b) - std::lgamma(a) + (a - 1.0) * std::log(x) - b * x : neg_inf;
    case PriorKind::Beta:
        return (x > 0.0 && x < 1.0) ? std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                          (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x)
                                    : neg_inf;
    case PriorKind::Uniform:
        return (x >= a && x <= b) ? -std::log(b - a) : neg_inf;
    }
    return neg_inf;
}

double Prior::sample(Rng& rng) const
{
    switch (kind) {
    case PriorKind::Normal:
        return std::normal_distribution<double>(a, b)(rng);
    case PriorKind::LogNormal:
        return std::exp(std::normal_distribution<double>(a, b)(rng));
    case PriorKind::LogitNormal:
        return inv_logit(std::normal_distribution<double>(a, b)(rng));
    case PriorKind::Gamma:
        return std::gamma_distribution<double>(a, 1.0 / b)(rng);
    case PriorKind::Beta: {
        const double x = std::gamma_distribution<double>(a, 1.0)(rng);
        const double y = std::gamma_distribution<double>(b, 1.0)(rng);
        return x / (x + y);
    }
    case PriorKind::Uniform:
        return std::uniform_real_distribution<double>(a, b)(rng);
    }
    return 0.0;
}

double to_unconstrained(Transform t, double x)
{
    switch (t) {
    case Transform::Log:
        return std::log(x);
    case Transform::Logit:
        return logit(x);
    case Transform::Identity:
        return x;
    }
    return x;
}

double from_unconstrained(Transform t, double u)
{
    switch (t) {
    case Transform::Log:
        return std::exp(u);
    case Transform::Logit:
        return inv_logit(u);
    case Transform::Identity:
        return u;
    }
    return u;
}

double log_jacobian(Transform t, double u)
{
    switch (t) {
    case Transform::Log:
        return u;
    case Transform::Logit:
        // log(x(1-x)) with x = inv_logit(u)
        return -std::abs(u) - 2.0 * std::log1p(std::exp(-std::abs(u)));
    case Transform::Identity:
        return 0.0;
    }
    return 0.0;
}

Parameterisation::Parameterisation(int n_regions, int n_ages, std::vector<ParamEntry> entries, double d_latent)
    : n_regions_(n_regions)
    , n_ages_(n_ages)
    , d_latent_(d_latent)
    , entries_(std::move(entries))
{
    const auto names = canonical_names(n_regions, n_ages);
    if (entries_.size() != names.size()) {
        throw DomainError("params: expected " + std::to_string(names.size()) + " entries, got " +
                          std::to_string(entries_.size()));
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (entries_[i].name != names[i]) {
            throw DomainError("params: entry " + std::to_string(i) + " is '" + entries_[i].name + "', expected '" +
                              names[i] + "'");
        }
    }
    if (!(d_latent > 0.0)) {
        throw DomainError("params: latent period must be positive");
    }
    refresh_free();
}

void Parameterisation::refresh_free()
{
    free_.clear();
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (!entries_[i].fixed) {
            free_.push_back(static_cast<int>(i));
        }
    }
}

std::vector<std::string> Parameterisation::canonical_names(int n_regions, int n_ages)
{
    std::vector<std::string> names = {"eta", "d_I", "k_sens", "k_spec"};
    for (int i = 0; i < n_ages; ++i) {
        names.push_back("p[" + std::to_string(i) + "]");
    }
    for (int m = 0; m < n_regions; ++m) {
        for (int s = 0; s < ContactSchedule::kMultiplierSlots; ++s) {
            names.push_back("z[" + std::to_string(m) + "][" + std::to_string(s) + "]");
        }
    }
    for (int m = 0; m < n_regions; ++m) {
        names.push_back("psi[" + std::to_string(m) + "]");
    }
    for (int m = 0; m < n_regions; ++m) {
        names.push_back("ell0[" + std::to_string(m) + "]");
    }
    return names;
}

Transform Parameterisation::canonical_transform(const std::string& name)
{
    if (name == "eta" || name == "d_I" || name.rfind("z[", 0) == 0) {
        return Transform::Log;
    }
    if (name == "k_sens" || name == "k_spec" || name.rfind("p[", 0) == 0) {
        return Transform::Logit;
    }
    return Transform::Identity;
}

Parameterisation Parameterisation::with_defaults(const StaticParams& centre)
{
    const int n_regions = static_cast<int>(centre.z.rows());
    const int n_ages = static_cast<int>(centre.p.size());
    const auto names = canonical_names(n_regions, n_ages);
    Parameterisation tmp;
    tmp.n_regions_ = n_regions;
    tmp.n_ages_ = n_ages;
    tmp.d_latent_ = centre.d_L;
    const Eigen::VectorXd values = tmp.natural_of(centre);

    std::vector<ParamEntry> entries;
    for (std::size_t i = 0; i < names.size(); ++i) {
        ParamEntry e;
        e.name = names[i];
        e.transform = canonical_transform(e.name);
        e.value = values(static_cast<Eigen::Index>(i));
        switch (e.transform) {
        case Transform::Log:
            e.prior = {PriorKind::LogNormal, std::log(e.value), e.name == "d_I" ? 0.25 : 0.5};
            break;
        case Transform::Logit:
            e.prior = {PriorKind::LogitNormal, logit(e.value), 1.5};
            break;
        case Transform::Identity:
            e.prior = {PriorKind::Normal, e.value, 1.0};
            break;
        }
        entries.push_back(e);
    }
    return Parameterisation(n_regions, n_ages, std::move(entries), centre.d_L);
}

std::vector<std::string> Parameterisation::free_names() const
{
    std::vector<std::string> out;
    for (int i : free_) {
        out.push_back(entries_[i].name);
    }
    return out;
}

int Parameterisation::find(const std::string& name) const
{
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name == name) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

Eigen::VectorXd Parameterisation::natural_values(const Eigen::VectorXd& u) const
{
    if (u.size() != dim()) {
        throw DomainError("params: unconstrained vector has length " + std::to_string(u.size()) + ", expected " +
                          std::to_string(dim()));
    }
    Eigen::VectorXd values(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        values(static_cast<Eigen::Index>(i)) = entries_[i].value;
    }
    for (std::size_t j = 0; j < free_.size(); ++j) {
        const int i = free_[j];
        values(i) = from_unconstrained(entries_[i].transform, u(static_cast<Eigen::Index>(j)));
    }
    return values;
}

StaticParams Parameterisation::from_natural(const Eigen::VectorXd& values) const
{
    StaticParams theta;
    Eigen::Index i = 0;
    theta.eta = values(i++);
    theta.d_I = values(i++);
    theta.k_sens = values(i++);
    theta.k_spec = values(i++);
    theta.d_L = d_latent_;
    theta.p.resize(n_ages_);
    for (int a = 0; a < n_ages_; ++a) {
        theta.p(a) = values(i++);
    }
    theta.z.resize(n_regions_, ContactSchedule::kMultiplierSlots);
    for (int m = 0; m < n_regions_; ++m) {
        for (int s = 0; s < ContactSchedule::kMultiplierSlots; ++s) {
            theta.z(m, s) = values(i++);
        }
    }
    theta.psi.resize(n_regions_);
    for (int m = 0; m < n_regions_; ++m) {
        theta.psi(m) = values(i++);
    }
    theta.ell0.resize(n_regions_);
    for (int m = 0; m < n_regions_; ++m) {
        theta.ell0(m) = values(i++);
    }
    return theta;
}

Eigen::VectorXd Parameterisation::natural_of(const StaticParams& theta) const
{
    Eigen::VectorXd values(4 + n_ages_ + n_regions_ * (ContactSchedule::kMultiplierSlots + 2));
    Eigen::Index i = 0;
    values(i++) = theta.eta;
    values(i++) = theta.d_I;
    values(i++) = theta.k_sens;
    values(i++) = theta.k_spec;
    for (int a = 0; a < n_ages_; ++a) {
        values(i++) = theta.p(a);
    }
    for (int m = 0; m < n_regions_; ++m) {
        for (int s = 0; s < ContactSchedule::kMultiplierSlots; ++s) {
            values(i++) = theta.z(m, s);
        }
    }
    for (int m = 0; m < n_regions_; ++m) {
        values(i++) = theta.psi(m);
    }
    for (int m = 0; m < n_regions_; ++m) {
        values(i++) = theta.ell0(m);
    }
    return values;
}

StaticParams Parameterisation::to_params(const Eigen::VectorXd& u) const
{
    return from_natural(natural_values(u));
}

Eigen::VectorXd Parameterisation::initial_unconstrained() const
{
    Eigen::VectorXd u(dim());
    for (std::size_t j = 0; j < free_.size(); ++j) {
        const auto& e = entries_[free_[j]];
        u(static_cast<Eigen::Index>(j)) = epigmrf::to_unconstrained(e.transform, e.value);
    }
    return u;
}

Eigen::VectorXd Parameterisation::to_unconstrained(const StaticParams& theta) const
{
    const Eigen::VectorXd values = natural_of(theta);
    Eigen::VectorXd u(dim());
    for (std::size_t j = 0; j < free_.size(); ++j) {
        const int i = free_[j];
        u(static_cast<Eigen::Index>(j)) = epigmrf::to_unconstrained(entries_[i].transform, values(i));
    }
    return u;
}

double Parameterisation::log_jacobian(const Eigen::VectorXd& u) const
{
    double total = 0.0;
    for (std::size_t j = 0; j < free_.size(); ++j) {
        total += epigmrf::log_jacobian(entries_[free_[j]].transform, u(static_cast<Eigen::Index>(j)));
    }
    return total;
}

double Parameterisation::log_prior(const Eigen::VectorXd& u) const
{
    double total = 0.0;
    for (std::size_t j = 0; j < free_.size(); ++j) {
        const auto& e = entries_[free_[j]];
        const double uj = u(static_cast<Eigen::Index>(j));
        total += e.prior.log_density(from_unconstrained(e.transform, uj)) + epigmrf::log_jacobian(e.transform, uj);
    }
    return total;
}

Eigen::VectorXd Parameterisation::sample_prior(Rng& rng) const
{
    Eigen::VectorXd u(dim());
    for (std::size_t j = 0; j < free_.size(); ++j) {
        const auto& e = entries_[free_[j]];
        u(static_cast<Eigen::Index>(j)) = epigmrf::to_unconstrained(e.transform, e.prior.sample(rng));
    }
    return u;
}

} // namespace epigmrf
