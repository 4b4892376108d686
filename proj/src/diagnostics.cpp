#include "epigmrf/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "epigmrf/errors.hpp"

namespace epigmrf {

namespace {

double mean_of(const std::vector<double>& x)
{
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(const std::vector<double>& x, double mean)
{
    double ss = 0.0;
    for (double v : x) {
        ss += (v - mean) * (v - mean);
    }
    return ss / static_cast<double>(x.size() - 1);
}

} // namespace

double autocorrelation(const std::vector<double>& x, std::size_t lag)
{
    const std::size_t n = x.size();
    if (n < 2 || lag >= n) {
        return 0.0;
    }
    const double m = mean_of(x);
    double c0 = 0.0;
    double ct = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        c0 += (x[i] - m) * (x[i] - m);
    }
    for (std::size_t i = 0; i + lag < n; ++i) {
        ct += (x[i] - m) * (x[i + lag] - m);
    }
    return c0 > 0.0 ? ct / c0 : 0.0;
}

double effective_sample_size(const std::vector<double>& x)
{
    const std::size_t n = x.size();
    if (n < 2) {
        throw DomainError("ess: need at least two draws");
    }
    const double m = mean_of(x);
    std::vector<double> centred(n);
    double c0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        centred[i] = x[i] - m;
        c0 += centred[i] * centred[i];
    }
    // Rounding in the mean leaves residual spread of order 1e-16 |m| in a constant series.
    if (c0 <= static_cast<double>(n) * (1e-28 * m * m + 1e-300)) {
        return 1.0;
    }
    const auto rho = [&](std::size_t lag) {
        double ct = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) {
            ct += centred[i] * centred[i + lag];
        }
        return ct / c0;
    };
    double sum = 0.0;
    for (std::size_t t = 0; t + 1 < n; t += 2) {
        const double pair = (t == 0 ? 1.0 : rho(t)) + rho(t + 1);
        if (pair < 0.0) {
            break;
        }
        sum += pair;
    }
    const double tau = std::max(-1.0 + 2.0 * sum, 1.0 / static_cast<double>(n));
    return std::max(1.0, static_cast<double>(n) / tau);
}

double split_rhat(const std::vector<std::vector<double>>& chains)
{
    if (chains.empty()) {
        throw DomainError("rhat: no chains");
    }
    const std::size_t n = chains.front().size();
    for (const auto& c : chains) {
        if (c.size() != n) {
            throw DomainError("rhat: chains have different lengths");
        }
    }
    const std::size_t half = n / 2;
    if (half < 2) {
        throw DomainError("rhat: chains too short to split");
    }
    std::vector<std::vector<double>> halves;
    for (const auto& c : chains) {
        halves.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
        halves.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
    }
    std::vector<double> means;
    double within = 0.0;
    for (const auto& h : halves) {
        const double m = mean_of(h);
        means.push_back(m);
        within += sample_variance(h, m);
    }
    within /= static_cast<double>(halves.size());
    const double grand = mean_of(means);
    double between = 0.0;
    for (double m : means) {
        between += (m - grand) * (m - grand);
    }
    between *= static_cast<double>(half) / static_cast<double>(halves.size() - 1);
    if (!(within > 0.0)) {
        return between > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    }
    const double hn = static_cast<double>(half);
    const double pooled = (hn - 1.0) / hn * within + between / hn;
    return std::sqrt(pooled / within);
}

const ParameterDiagnostics& DiagnosticsReport::find(const std::string& name) const
{
    for (const auto& p : parameters) {
        if (p.name == name) {
            return p;
        }
    }
    throw DomainError("diagnostics: no parameter '" + name + "'");
}

DiagnosticsReport diagnose(const std::vector<DrawStore>& chains, std::vector<AcceptanceCounters> acceptance)
{
    if (chains.empty()) {
        throw DomainError("diagnostics: no chains");
    }
    const auto& names = chains.front().names();
    const std::size_t n = chains.front().size();
    for (const auto& c : chains) {
        if (c.names() != names) {
            throw DomainError("diagnostics: chains have different columns");
        }
        if (c.size() != n) {
            throw DomainError("diagnostics: chains have different lengths");
        }
    }
    if (n < kMinDiagnosticDraws) {
        throw DomainError("diagnostics: need at least " + std::to_string(kMinDiagnosticDraws) +
                          " draws per chain, got " + std::to_string(n));
    }
    DiagnosticsReport report;
    report.draws_per_chain = n;
    report.n_chains = chains.size();
    report.acceptance = std::move(acceptance);
    for (std::size_t j = 0; j < names.size(); ++j) {
        std::vector<std::vector<double>> columns;
        std::vector<double> pooled;
        ParameterDiagnostics p;
        p.name = names[j];
        for (const auto& c : chains) {
            columns.push_back(c.column(static_cast<int>(j)));
            pooled.insert(pooled.end(), columns.back().begin(), columns.back().end());
            p.ess += effective_sample_size(columns.back());
        }
        p.mean = mean_of(pooled);
        p.sd = std::sqrt(sample_variance(pooled, p.mean));
        p.rhat = split_rhat(columns);
        report.parameters.push_back(p);
    }
    return report;
}

} // namespace epigmrf
