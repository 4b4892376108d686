#include <doctest.h>

#include <random>

#include "epigmrf/diagnostics.hpp"
#include "epigmrf/errors.hpp"
#include "support.hpp"

using namespace epigmrf;

namespace {

std::vector<double> ar1(std::size_t n, double rho, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> x(n);
    x[0] = z(rng) / std::sqrt(1.0 - rho * rho);
    for (std::size_t i = 1; i < n; ++i) {
        x[i] = rho * x[i - 1] + z(rng);
    }
    return x;
}

// Gelman et al. split-R̂ written from the textbook definition.
double rhat_reference(const std::vector<std::vector<double>>& chains)
{
    std::vector<std::vector<double>> parts;
    for (const auto& c : chains) {
        const std::size_t h = c.size() / 2;
        parts.emplace_back(c.begin(), c.begin() + h);
        parts.emplace_back(c.end() - h, c.end());
    }
    const double n = static_cast<double>(parts.front().size());
    const double m = static_cast<double>(parts.size());
    std::vector<double> means;
    double w = 0.0;
    for (const auto& p : parts) {
        means.push_back(testing::mean(p));
        w += testing::variance(p) / m;
    }
    const double b = n * testing::variance(means);
    const double var_plus = (n - 1.0) / n * w + b / n;
    return std::sqrt(var_plus / w);
}

DrawStore store_from(const std::vector<double>& a, const std::vector<double>& b)
{
    DrawStore s({"a", "b"});
    for (std::size_t i = 0; i < a.size(); ++i) {
        s.add(static_cast<long>(i), {a[i], b[i]});
    }
    return s;
}

} // namespace

TEST_SUITE("diagnostics")
{
    TEST_CASE("iid draws have ESS close to n")
    {
        std::mt19937_64 rng(1);
        std::normal_distribution<double> z(0.0, 1.0);
        std::vector<double> x(20000);
        for (double& v : x) {
            v = z(rng);
        }
        CHECK(effective_sample_size(x) == doctest::Approx(20000.0).epsilon(0.1));
    }

    TEST_CASE("AR(1) ESS matches the analytic value")
    {
        const double rho = 0.9;
        const std::size_t n = 100000;
        const auto x = ar1(n, rho, 2);
        CHECK(effective_sample_size(x) == doctest::Approx(n * (1.0 - rho) / (1.0 + rho)).epsilon(0.2));
        CHECK(autocorrelation(x, 1) == doctest::Approx(rho).epsilon(0.02));
    }

    TEST_CASE("constant series report ESS 1")
    {
        CHECK(effective_sample_size(std::vector<double>(500, 3.25)) == 1.0);
        CHECK(effective_sample_size(std::vector<double>(500, 0.0)) == 1.0);
        CHECK_THROWS_AS(effective_sample_size({1.0}), DomainError);
    }

    TEST_CASE("split R-hat against the textbook formula")
    {
        const auto a = ar1(2000, 0.5, 3), b = ar1(2000, 0.5, 4);
        CHECK(split_rhat({a, b}) == doctest::Approx(rhat_reference({a, b})).epsilon(1e-12));
        CHECK(split_rhat({a, b}) < 1.02);

        std::vector<double> shifted = b;
        for (double& v : shifted) {
            v += 3.0;
        }
        CHECK(split_rhat({a, shifted}) > 1.3);

        // A trend inside a single chain is caught by splitting.
        std::vector<double> trend = a;
        for (std::size_t i = 0; i < trend.size(); ++i) {
            trend[i] += 6.0 * static_cast<double>(i) / trend.size();
        }
        CHECK(split_rhat({trend}) > 1.3);
        CHECK_THROWS_AS(split_rhat({a, std::vector<double>(10, 0.0)}), DomainError);
    }

    TEST_CASE("report over chains")
    {
        const auto a1 = ar1(400, 0.3, 5), b1 = ar1(400, 0.3, 6);
        const auto a2 = ar1(400, 0.3, 7), b2 = ar1(400, 0.3, 8);
        const DiagnosticsReport r = diagnose({store_from(a1, b1), store_from(a2, b2)});
        CHECK(r.n_chains == 2);
        CHECK(r.draws_per_chain == 400);
        const auto& pa = r.find("a");
        CHECK(pa.ess == doctest::Approx(effective_sample_size(a1) + effective_sample_size(a2)));
        CHECK(pa.rhat == doctest::Approx(split_rhat({a1, a2})));
        CHECK_THROWS_AS(r.find("c"), DomainError);
    }

    TEST_CASE("too few draws or mismatched chains are rejected")
    {
        const auto a = ar1(99, 0.1, 9);
        CHECK_THROWS_AS(diagnose({store_from(a, a)}), DomainError);
        const auto b = ar1(200, 0.1, 10), c = ar1(150, 0.1, 11);
        CHECK_THROWS_AS(diagnose({store_from(b, b), store_from(c, c)}), DomainError);
        CHECK_THROWS_AS(diagnose({}), DomainError);
    }
}
