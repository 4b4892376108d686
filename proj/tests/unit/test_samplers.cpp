#include <doctest.h>

#include <map>
#include <type_traits>

#include "epigmrf/diagnostics.hpp"
#include "epigmrf/errors.hpp"
#include "epigmrf/observation_model.hpp"
#include "epigmrf/samplers.hpp"
#include "support.hpp"

using namespace epigmrf;

namespace {

// Independent adaptive Metropolis (single block): Haario-style empirical covariance from the
// stored history, recomputed in batch, with the same scale schedule.
std::vector<Eigen::VectorXd> reference_am(const LogTarget& target, Eigen::VectorXd x, long n, long burn_in,
                                          std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int d = static_cast<int>(x.size());
    double log_scale = std::log(2.38 * 2.38 / d);
    double lp = target(x);
    std::vector<Eigen::VectorXd> history, out;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(d, d);
    for (long it = 1; it <= n; ++it) {
        Eigen::MatrixXd cov = 0.01 * Eigen::MatrixXd::Identity(d, d);
        const double h = static_cast<double>(history.size());
        if (history.size() >= static_cast<std::size_t>(2 * d)) {
            const Eigen::VectorXd mean = sum / h;
            cov = (sum_sq - h * mean * mean.transpose()) / (h - 1.0) + 1e-10 * Eigen::MatrixXd::Identity(d, d);
        }
        const Eigen::MatrixXd l = (std::exp(log_scale) * cov).llt().matrixL();
        Eigen::VectorXd z(d);
        for (int i = 0; i < d; ++i) {
            z(i) = normal(rng);
        }
        const Eigen::VectorXd y = x + l * z;
        const double ly = target(y);
        const bool acc = std::log(unif(rng)) < ly - lp;
        if (acc) {
            x = y;
            lp = ly;
        }
        if (it <= burn_in) {
            history.push_back(x);
            sum += x;
            sum_sq += x * x.transpose();
            log_scale += std::pow(static_cast<double>(it), -0.6) * ((acc ? 1.0 : 0.0) - 0.234);
        } else {
            out.push_back(x);
        }
    }
    return out;
}

// The library's randomised-block kernel with P blocks driven by Adaptation.
std::vector<Eigen::VectorXd> block_am(const LogTarget& target, Eigen::VectorXd u, long n, long burn_in, int blocks,
                                      std::uint64_t seed)
{
    Rng rng(seed);
    Adaptation adapt(static_cast<int>(u.size()), burn_in, 0.234, 0.1);
    double lp = target(u);
    std::vector<Eigen::VectorXd> out;
    for (long it = 1; it <= n; ++it) {
        const auto stats =
            randomised_block_update(u, lp, target, adapt.proposal_covariance(), adapt.log_scale(), blocks, rng);
        adapt.update(stats.accepted, u, it);
        if (it > burn_in) {
            out.push_back(u);
        }
    }
    return out;
}

std::vector<double> coordinate(const std::vector<Eigen::VectorXd>& xs, int i, std::size_t thin)
{
    std::vector<double> out;
    for (std::size_t k = 0; k < xs.size(); k += thin) {
        out.push_back(xs[k](i));
    }
    return out;
}

double normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

} // namespace

TEST_SUITE("samplers")
{
    TEST_CASE("adaptation covariance equals the batch covariance")
    {
        Rng rng(1);
        Adaptation a(3, 1000);
        std::vector<Eigen::VectorXd> xs;
        for (int i = 1; i <= 500; ++i) {
            Eigen::VectorXd x = standard_normal_vector(3, rng);
            x(1) += 0.5 * x(0) + 10.0;
            xs.push_back(x);
            a.update({true}, x, i);
        }
        const auto m = testing::moments(xs);
        CHECK((a.mean() - m.mean).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((a.covariance() - m.cov).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((a.proposal_covariance() - m.cov).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(a.covariance() == a.covariance().transpose());
    }

    TEST_CASE("initial proposal covariance until enough samples")
    {
        Adaptation a(2, 100, 0.234, 0.3);
        CHECK((a.proposal_covariance() - 0.09 * Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-15);
        a.update({true}, Eigen::Vector2d(1.0, 2.0), 1);
        a.update({true}, Eigen::Vector2d(2.0, 1.0), 2);
        a.update({true}, Eigen::Vector2d(0.0, 0.0), 3);
        CHECK((a.proposal_covariance() - 0.09 * Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-15);
        a.update({true}, Eigen::Vector2d(1.0, 1.0), 4);
        CHECK((a.proposal_covariance() - 0.09 * Eigen::MatrixXd::Identity(2, 2)).norm() > 1e-3);
    }

    TEST_CASE("acceptance at the target leaves the scale unchanged")
    {
        Adaptation a(2, 100);
        const double before = a.log_scale();
        std::vector<bool> flags(1000, false);
        std::fill(flags.begin(), flags.begin() + 234, true);
        a.update(flags, Eigen::Vector2d(0.1, 0.2), 5);
        CHECK(a.log_scale() == before);
        a.update({true}, Eigen::Vector2d(0.1, 0.2), 6);
        CHECK(a.log_scale() == doctest::Approx(before + std::pow(6.0, -0.6) * (1.0 - 0.234)));
        a.update({false}, Eigen::Vector2d(0.1, 0.2), 7);
        CHECK(a.log_scale() < before + std::pow(6.0, -0.6) * (1.0 - 0.234));
    }

    TEST_CASE("adaptation is frozen after burn-in")
    {
        Adaptation a(2, 10);
        for (int i = 1; i <= 10; ++i) {
            a.update({i % 2 == 0}, Eigen::Vector2d(i, -i), i);
        }
        const Adaptation::State frozen = a.state();
        for (int i = 11; i <= 50; ++i) {
            a.update({true}, Eigen::Vector2d(100.0, 3.0), i);
        }
        CHECK(a.state().samples == frozen.samples);
        CHECK(a.state().mean == frozen.mean);
        CHECK(a.state().scatter == frozen.scatter);
        CHECK(a.state().log_scale == frozen.log_scale);
    }

    TEST_CASE("random partition covers every index once")
    {
        Rng rng(5);
        for (int trial = 0; trial < 50; ++trial) {
            const auto blocks = random_partition(11, 3, rng);
            CHECK(blocks.size() == 3);
            std::vector<int> seen(11, 0);
            for (const auto& b : blocks) {
                for (int i : b) {
                    ++seen[i];
                }
            }
            CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
        }
        CHECK_THROWS_AS(random_partition(3, 0, rng), DomainError);
    }

    TEST_CASE("partition assignment is uniform")
    {
        Rng rng(6);
        std::vector<int> counts(3, 0);
        const int n = 30000;
        for (int t = 0; t < n; ++t) {
            const auto blocks = random_partition(1, 3, rng);
            for (int b = 0; b < 3; ++b) {
                counts[b] += static_cast<int>(blocks[b].size());
            }
        }
        for (int c : counts) {
            CHECK(std::abs(c - n / 3.0) < 5.0 * std::sqrt(n * (1.0 / 3.0) * (2.0 / 3.0)));
        }
    }

    TEST_CASE("constant target accepts every block")
    {
        Rng rng(2);
        Eigen::VectorXd u = Eigen::VectorXd::Zero(5);
        double lp = 0.0;
        const LogTarget flat = [](const Eigen::VectorXd&) { return 0.0; };
        long accepted = 0, proposed = 0;
        for (int it = 0; it < 500; ++it) {
            const auto s = randomised_block_update(u, lp, flat, Eigen::MatrixXd::Identity(5, 5), 0.0, 3, rng);
            for (bool a : s.accepted) {
                accepted += a;
                ++proposed;
            }
        }
        CHECK(accepted == proposed);
    }

    TEST_CASE("non-finite proposals are rejected and counted")
    {
        Rng rng(2);
        Eigen::VectorXd u = Eigen::VectorXd::Zero(2);
        double lp = 0.0;
        const LogTarget wall = [](const Eigen::VectorXd& x) {
            return x(0) > 0.0 ? std::numeric_limits<double>::quiet_NaN() : 0.0;
        };
        int bad = 0;
        for (int it = 0; it < 200; ++it) {
            bad += randomised_block_update(u, lp, wall, Eigen::MatrixXd::Identity(2, 2), 0.0, 1, rng).non_finite;
            CHECK(u(0) <= 0.0);
        }
        CHECK(bad > 0);
    }

    TEST_CASE("single block matches an independent adaptive Metropolis")
    {
        Eigen::Matrix2d s;
        s << 1.0, 0.8, 0.8, 2.0;
        const Eigen::Matrix2d prec = s.inverse();
        const LogTarget gauss = [&](const Eigen::VectorXd& x) { return -0.5 * x.dot(prec * x); };
        const long n = 100000, burn = 5000;
        const auto ours = block_am(gauss, Eigen::Vector2d(1.0, -1.0), n + burn, burn, 1, 31);
        const auto ref = reference_am(gauss, Eigen::Vector2d(1.0, -1.0), n + burn, burn, 32);
        for (int i = 0; i < 2; ++i) {
            // Thinning makes the retained draws close to independent for the KS statistic.
            const auto a = coordinate(ours, i, 25);
            const auto b = coordinate(ref, i, 25);
            CAPTURE(i);
            CHECK(testing::ks_two_sample_pvalue(a, b) > 0.01);
            const double sd = std::sqrt(s(i, i));
            CHECK(testing::ks_pvalue(a, [&](double x) { return normal_cdf(x / sd); }) > 0.01);
        }
    }

    TEST_CASE("negative-binomial posterior mean matches grid integration")
    {
        // Counts with unknown mean and dispersion, normal priors on their logs.
        const std::vector<int> y = {3, 7, 0, 12, 5, 4, 9, 2, 6, 15, 1, 8};
        const auto log_post = [&](double lm, double le) {
            double s = -0.5 * (lm - 1.5) * (lm - 1.5) / 4.0 - 0.5 * (le + 0.5) * (le + 0.5) / 1.0;
            for (int v : y) {
                s += negbin_logpmf(v, std::exp(lm), std::exp(le));
            }
            return s;
        };

        // Grid oracle on (log mu, log eta).
        const int g = 600;
        const double lm0 = 0.0, lm1 = 3.5, le0 = -5.0, le1 = 2.5;
        double z = 0.0, m_mu = 0.0, m_eta = 0.0, peak = -1e300;
        std::vector<double> lp(static_cast<std::size_t>(g) * g);
        for (int i = 0; i < g; ++i) {
            for (int j = 0; j < g; ++j) {
                const double lm = lm0 + (lm1 - lm0) * (i + 0.5) / g;
                const double le = le0 + (le1 - le0) * (j + 0.5) / g;
                lp[i * g + j] = log_post(lm, le);
                peak = std::max(peak, lp[i * g + j]);
            }
        }
        for (int i = 0; i < g; ++i) {
            for (int j = 0; j < g; ++j) {
                const double lm = lm0 + (lm1 - lm0) * (i + 0.5) / g;
                const double le = le0 + (le1 - le0) * (j + 0.5) / g;
                const double w = std::exp(lp[i * g + j] - peak);
                z += w;
                m_mu += w * lm;
                m_eta += w * le;
            }
        }
        m_mu /= z;
        m_eta /= z;

        const LogTarget target = [&](const Eigen::VectorXd& u) { return log_post(u(0), u(1)); };
        const auto draws = block_am(target, Eigen::Vector2d(1.0, 0.0), 60000, 10000, 2, 17);
        for (int i = 0; i < 2; ++i) {
            const auto xs = coordinate(draws, i, 1);
            const double se = std::sqrt(testing::variance(xs) / effective_sample_size(xs));
            CAPTURE(i);
            CHECK(std::abs(testing::mean(xs) - (i == 0 ? m_mu : m_eta)) < 3.0 * se);
        }
    }

    TEST_CASE("field acceptance depends on likelihood values only")
    {
        static_assert(std::is_same_v<decltype(&accept_field_proposal), bool (*)(double, double, double)>);
        CHECK(accept_field_proposal(1.0, 1.0, std::log(0.999999)));
        CHECK_FALSE(accept_field_proposal(std::numeric_limits<double>::quiet_NaN(), 0.0, -10.0));
        CHECK_FALSE(accept_field_proposal(-std::numeric_limits<double>::infinity(), 0.0, -10.0));
    }

    TEST_CASE("constant likelihood accepts every field proposal")
    {
        PrecisionSpec spec;
        spec.n_strata = 2;
        spec.n_knots = 3;
        const AuxiliaryFieldSampler sampler(build_precision(spec), 0.5);
        Rng rng(4);
        Eigen::VectorXd x = Eigen::VectorXd::Zero(6);
        double g = 3.0;
        const LogTarget flat = [](const Eigen::VectorXd&) { return 3.0; };
        for (int i = 0; i < 200; ++i) {
            CHECK(sampler.step(x, g, flat, rng));
        }
    }

    TEST_CASE("field proposals shrink towards the current state as c decreases")
    {
        PrecisionSpec spec;
        spec.n_strata = 2;
        spec.n_knots = 4;
        spec.tau = 2.0;
        const SparsePrecision q = build_precision(spec);
        Eigen::VectorXd x(8);
        x << 0.3, -0.2, 0.5, 0.1, -0.4, 0.0, 0.2, 0.6;
        double previous = std::numeric_limits<double>::infinity();
        for (double c : {1.0, 0.3, 0.1, 0.03, 0.01}) {
            const AuxiliaryFieldSampler sampler(q, c);
            Rng rng(12);
            double dist = 0.0;
            for (int i = 0; i < 200; ++i) {
                dist += (sampler.propose(x, rng) - x).norm();
            }
            dist /= 200.0;
            CHECK(dist < previous);
            previous = dist;
        }
        CHECK(previous < 0.05);
    }

    TEST_CASE("field kernel leaves a proper Gaussian prior invariant")
    {
        PrecisionSpec spec;
        spec.n_strata = 2;
        spec.n_knots = 2;
        SparsePrecision q = build_precision(spec);
        for (int i = 0; i < 4; ++i) {
            q.matrix.coeffRef(i, i) += 0.5;
        }
        const Eigen::MatrixXd sigma = testing::dense(q.matrix).inverse();
        const AuxiliaryFieldSampler sampler(q, 0.9);
        Rng rng(21);
        Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
        double g = 0.0;
        const LogTarget flat = [](const Eigen::VectorXd&) { return 0.0; };
        std::vector<Eigen::VectorXd> xs;
        const int n = 50000;
        for (int i = 0; i < n; ++i) {
            sampler.step(x, g, flat, rng);
            xs.push_back(x);
        }
        std::vector<double> first;
        for (const auto& v : xs) {
            first.push_back(v(0));
        }
        const double n_eff = effective_sample_size(first);
        const auto mom = testing::moments(xs);
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                CHECK(std::abs(mom.cov(i, j) - sigma(i, j)) < 5.0 * testing::covariance_se(sigma, i, j, n_eff));
            }
        }
    }

    TEST_CASE("field kernel is reversible under a piecewise-constant likelihood")
    {
        // Two knots, one stratum; the likelihood takes one value per grid cell.
        PrecisionSpec spec;
        spec.strata_kind = StructureKind::Identity;
        spec.n_strata = 1;
        spec.n_knots = 2;
        spec.rho_m = 0.5;
        const AuxiliaryFieldSampler sampler(build_precision(spec), 1.2);
        const auto cell = [](const Eigen::VectorXd& x) {
            const int a = std::clamp(static_cast<int>(std::floor(x(0) / 0.75)) + 2, 0, 3);
            const int b = std::clamp(static_cast<int>(std::floor(x(1) / 0.75)) + 2, 0, 3);
            return a * 4 + b;
        };
        const std::vector<double> heights = {0.0, 0.4, -0.3, 0.9, 0.2, -0.6, 0.7, 0.1,
                                             -0.2, 0.5, 0.0, -0.8, 0.3, 0.6, -0.1, 0.4};
        const LogTarget g_fn = [&](const Eigen::VectorXd& x) { return heights[cell(x)]; };

        Rng rng(33);
        Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
        double g = g_fn(x);
        std::map<std::pair<int, int>, long> flows;
        int current = cell(x);
        for (int i = 0; i < 400000; ++i) {
            sampler.step(x, g, g_fn, rng);
            const int next = cell(x);
            if (next != current) {
                ++flows[{current, next}];
            }
            current = next;
        }
        int checked = 0;
        for (const auto& [key, forward] : flows) {
            if (key.first > key.second) {
                continue;
            }
            const long backward = flows.count({key.second, key.first}) ? flows.at({key.second, key.first}) : 0;
            if (forward + backward < 400) {
                continue;
            }
            ++checked;
            CAPTURE(key.first);
            CAPTURE(key.second);
            // Flow counts are correlated through the chain, so allow a wider band than iid.
            CHECK(std::abs(forward - backward) < 6.0 * std::sqrt(static_cast<double>(forward + backward)));
        }
        CHECK(checked >= 10);
    }

    TEST_CASE("random-walk baseline tunes its scale during burn-in only")
    {
        RandomWalkSampler rw(2, 200, 0.1);
        Rng rng(3);
        Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
        const LogTarget gauss = [](const Eigen::VectorXd& v) { return -0.5 * v.squaredNorm(); };
        double lp = gauss(x);
        for (long it = 1; it <= 200; ++it) {
            rw.step(x, lp, gauss, rng, it);
        }
        const double tuned = rw.scale();
        CHECK(tuned > 0.1);
        for (long it = 201; it <= 400; ++it) {
            rw.step(x, lp, gauss, rng, it);
        }
        CHECK(rw.scale() == tuned);
    }
}
