#pragma once

#include <random>

namespace epigmrf {

using Rng = std::mt19937_64;

/// Discretisation of the observation window.
///
/// The ODE advances in steps of length delta = 1/steps_per_day days; step k
/// (1-based) covers [t_{k-1}, t_k) with t_k = k*delta. The transmission field
/// is piecewise constant over knots of length delta_beta = steps_per_knot*delta,
/// so step k reads knot ceil(k*delta/delta_beta) (1-based), i.e. the 0-based
/// knot (k-1)/steps_per_knot.
struct TimeGrid {
    int steps_per_day = 2;
    int steps_per_knot = 2;
    int n_days = 0;

    /// Builds a grid from spacings in days. 1/delta and delta_beta/delta must be integers.
    static TimeGrid from_spacing(double delta, double delta_beta, int n_days);

    double delta() const { return 1.0 / steps_per_day; }
    double delta_beta() const { return static_cast<double>(steps_per_knot) / steps_per_day; }
    int n_steps() const { return n_days * steps_per_day; }
    int n_knots() const { return knots_for_days(n_days); }
    int knots_for_days(int days) const
    {
        const int steps = days * steps_per_day;
        return (steps + steps_per_knot - 1) / steps_per_knot;
    }
    /// 0-based knot read by 1-based step k.
    int knot_of_step(int k) const { return (k - 1) / steps_per_knot; }
    /// 0-based day containing the end of step k.
    int day_of_step(int k) const { return (k - 1) / steps_per_day; }

    TimeGrid with_days(int days) const
    {
        TimeGrid g = *this;
        g.n_days = days;
        return g;
    }
};

} // namespace epigmrf
