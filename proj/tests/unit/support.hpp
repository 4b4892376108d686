#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "epigmrf/gmrf_field.hpp"

namespace testing {

inline Eigen::MatrixXd dense(const epigmrf::SparseMatrix& m)
{
    return Eigen::MatrixXd(m);
}

/// Sample mean and covariance of row-stacked draws.
struct Moments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

inline Moments moments(const std::vector<Eigen::VectorXd>& xs)
{
    const Eigen::Index d = xs.front().size();
    Moments out{Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d)};
    for (const auto& x : xs) {
        out.mean += x;
    }
    out.mean /= static_cast<double>(xs.size());
    for (const auto& x : xs) {
        const Eigen::VectorXd c = x - out.mean;
        out.cov += c * c.transpose();
    }
    out.cov /= static_cast<double>(xs.size() - 1);
    return out;
}

/// Standard error of an empirical covariance entry for Gaussian draws with true covariance s
/// and `n_eff` effective samples.
inline double covariance_se(const Eigen::MatrixXd& s, Eigen::Index i, Eigen::Index j, double n_eff)
{
    return std::sqrt((s(i, i) * s(j, j) + s(i, j) * s(i, j)) / n_eff);
}

inline double mean(const std::vector<double>& x)
{
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double variance(const std::vector<double>& x)
{
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) {
        s += (v - m) * (v - m);
    }
    return s / static_cast<double>(x.size() - 1);
}

/// Two-sided one-sample Kolmogorov-Smirnov p-value (asymptotic series).
template <class Cdf>
double ks_pvalue(std::vector<double> x, Cdf cdf)
{
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) {
        p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    }
    return std::clamp(p, 0.0, 1.0);
}

/// Two-sample Kolmogorov-Smirnov p-value (asymptotic series).
inline double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b)
{
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) {
            ++i;
        }
        while (j < b.size() && b[j] <= v) {
            ++j;
        }
        d = std::max(d, std::abs(i / na - j / nb));
    }
    const double ne = na * nb / (na + nb);
    const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) {
        p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    }
    return std::clamp(p, 0.0, 1.0);
}

} // namespace testing
