#pragma once

#include <string>
#include <vector>

#include "epigmrf/forecast.hpp"
#include "epigmrf/observation_model.hpp"

namespace epigmrf {

/// Interval score of the central (1 - alpha) interval [lower, upper] for outcome y.
double interval_score(double lower, double upper, double y, double alpha);

/// Sample CRPS, mean|X - y| - 0.5 mean|X - X'|, by the sorted O(n log n) formula.
double crps_sample(std::vector<double> draws, double y);

/// Type-7 (linear interpolation) quantile of unsorted draws at level q in [0, 1].
double quantile_type7(std::vector<double> draws, double q);
/// Same on draws already sorted ascending.
double quantile_sorted(const std::vector<double>& sorted, double q);

struct ScoreRow {
    int region = 0;
    int day = 0;
    double interval_score = 0.0;
    double crps = 0.0;
    double width = 0.0;
    double sq_error = 0.0;
    bool operator==(const ScoreRow&) const = default;
};

struct ScoreSummary {
    int key = 0; // day or region
    double interval_score = 0.0;
    double crps = 0.0;
    double width = 0.0;
    double sq_error = 0.0;
    bool operator==(const ScoreSummary&) const = default;
};

struct ScoreReport {
    double alpha = 0.05;
    std::vector<ScoreRow> rows;          // region-major, then day
    std::vector<ScoreSummary> by_day;    // mean over regions
    std::vector<ScoreSummary> by_region; // mean over days

    /// Root of the mean squared error over days for one region.
    double rmse(int region) const;
    bool operator==(const ScoreReport&) const = default;
};

/// Scores region totals (summed over ages) of the forecast against truth indexed by absolute day.
ScoreReport score_forecasts(const ForecastDraws& fc, const SurveillanceData& truth, double alpha = 0.05);

/// Same for a single age group instead of region totals.
ScoreReport score_forecasts_age(const ForecastDraws& fc, const SurveillanceData& truth, int age,
                                double alpha = 0.05);

/// Same, from per-(region, day) draws of region totals; `samples[r][h]` are the draws for horizon day h.
ScoreReport score_totals(const std::vector<std::vector<std::vector<double>>>& samples,
                         const std::vector<std::vector<double>>& truth, int first_day, double alpha = 0.05);

} // namespace epigmrf
