#pragma once

#include <string>
#include <vector>

#include "epigmrf/chain.hpp"

namespace epigmrf {

/// Minimum number of post-burn-in draws per chain accepted by the diagnostics.
inline constexpr std::size_t kMinDiagnosticDraws = 100;

/// ESS from the autocorrelation sum truncated at the first negative pair of
/// consecutive lags (initial positive sequence). A constant series returns 1.
double effective_sample_size(const std::vector<double>& x);

/// Autocorrelation at `lag` with the biased (1/n) autocovariance.
double autocorrelation(const std::vector<double>& x, std::size_t lag);

/// Potential scale reduction over chain halves. Every chain must have the same length.
double split_rhat(const std::vector<std::vector<double>>& chains);

struct ParameterDiagnostics {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    double ess = 0.0; // summed over chains
    double rhat = 1.0;
};

struct DiagnosticsReport {
    std::vector<ParameterDiagnostics> parameters;
    std::vector<AcceptanceCounters> acceptance; // one per chain, when known
    std::size_t draws_per_chain = 0;
    std::size_t n_chains = 0;

    const ParameterDiagnostics& find(const std::string& name) const;
};

/// Diagnostics over chains sharing a column layout; constant columns report ESS 1 and R-hat 1.
DiagnosticsReport diagnose(const std::vector<DrawStore>& chains, std::vector<AcceptanceCounters> acceptance = {});

} // namespace epigmrf
