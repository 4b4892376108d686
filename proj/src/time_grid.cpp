#include "epigmrf/time_grid.hpp"

#include <cmath>
#include <string>

#include "epigmrf/errors.hpp"

namespace epigmrf {

namespace {

int as_integer_ratio(double numerator, double denominator, const char* what)
{
    const double ratio = numerator / denominator;
    const double rounded = std::round(ratio);
    if (!(rounded >= 1.0) || std::abs(ratio - rounded) > 1e-9 * rounded) {
        throw DomainError(std::string("time grid: ") + what + " must be a positive integer, got " +
                          std::to_string(ratio));
    }
    return static_cast<int>(rounded);
}

} // namespace

TimeGrid TimeGrid::from_spacing(double delta, double delta_beta, int n_days)
{
    if (!(delta > 0.0) || !(delta_beta > 0.0)) {
        throw DomainError("time grid: spacings must be positive");
    }
    if (n_days < 0) {
        throw DomainError("time grid: number of days must be nonnegative");
    }
    TimeGrid g;
    g.steps_per_day = as_integer_ratio(1.0, delta, "1/delta");
    g.steps_per_knot = as_integer_ratio(delta_beta, delta, "delta_beta/delta");
    g.n_days = n_days;
    return g;
}

} // namespace epigmrf
