#include "epigmrf/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "epigmrf/errors.hpp"

namespace epigmrf {

double interval_score(double lower, double upper, double y, double alpha)
{
    if (lower > upper) {
        throw DomainError("interval score: lower bound exceeds upper bound");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw DomainError("interval score: alpha must lie in (0, 1)");
    }
    double score = upper - lower;
    if (y < lower) {
        score += (2.0 / alpha) * (lower - y);
    } else if (y > upper) {
        score += (2.0 / alpha) * (y - upper);
    }
    return score;
}

double crps_sample(std::vector<double> draws, double y)
{
    if (draws.empty()) {
        throw DomainError("crps: no draws");
    }
    std::sort(draws.begin(), draws.end());
    const double n = static_cast<double>(draws.size());
    double abs_error = 0.0;
    double spread = 0.0;
    for (std::size_t i = 0; i < draws.size(); ++i) {
        abs_error += std::abs(draws[i] - y);
        spread += (2.0 * static_cast<double>(i + 1) - n - 1.0) * draws[i];
    }
    return abs_error / n - spread / (n * n);
}

double quantile_sorted(const std::vector<double>& sorted, double q)
{
    if (sorted.empty()) {
        throw DomainError("quantile: no draws");
    }
    if (!(q >= 0.0 && q <= 1.0)) {
        throw DomainError("quantile: level must lie in [0, 1]");
    }
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double quantile_type7(std::vector<double> draws, double q)
{
    std::sort(draws.begin(), draws.end());
    return quantile_sorted(draws, q);
}

double ScoreReport::rmse(int region) const
{
    double total = 0.0;
    int n = 0;
    for (const auto& r : rows) {
        if (r.region == region) {
            total += r.sq_error;
            ++n;
        }
    }
    if (n == 0) {
        throw DomainError("scores: no rows for region " + std::to_string(region));
    }
    return std::sqrt(total / n);
}

ScoreReport score_totals(const std::vector<std::vector<std::vector<double>>>& samples,
                         const std::vector<std::vector<double>>& truth, int first_day, double alpha)
{
    if (samples.size() != truth.size()) {
        throw DomainError("scores: forecast and truth cover different regions");
    }
    ScoreReport report;
    report.alpha = alpha;
    const std::size_t horizon = samples.empty() ? 0 : samples.front().size();
    report.by_day.resize(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
        report.by_day[h].key = first_day + static_cast<int>(h);
    }
    for (std::size_t r = 0; r < samples.size(); ++r) {
        if (samples[r].size() != horizon || truth[r].size() != horizon) {
            throw DomainError("scores: region " + std::to_string(r) + " is misaligned with the horizon");
        }
        ScoreSummary region_summary;
        region_summary.key = static_cast<int>(r);
        for (std::size_t h = 0; h < horizon; ++h) {
            std::vector<double> sorted = samples[r][h];
            std::sort(sorted.begin(), sorted.end());
            const double y = truth[r][h];
            const double lower = quantile_sorted(sorted, alpha / 2.0);
            const double upper = quantile_sorted(sorted, 1.0 - alpha / 2.0);
            double mean = 0.0;
            for (double v : sorted) {
                mean += v;
            }
            mean /= static_cast<double>(sorted.size());

            ScoreRow row;
            row.region = static_cast<int>(r);
            row.day = first_day + static_cast<int>(h);
            row.interval_score = interval_score(lower, upper, y, alpha);
            row.crps = crps_sample(sorted, y);
            row.width = upper - lower;
            row.sq_error = (mean - y) * (mean - y);
            report.rows.push_back(row);

            const auto add = [&](ScoreSummary& s) {
                s.interval_score += row.interval_score;
                s.crps += row.crps;
                s.width += row.width;
                s.sq_error += row.sq_error;
            };
            add(region_summary);
            add(report.by_day[h]);
        }
        if (horizon > 0) {
            const double inv = 1.0 / static_cast<double>(horizon);
            region_summary.interval_score *= inv;
            region_summary.crps *= inv;
            region_summary.width *= inv;
            region_summary.sq_error *= inv;
        }
        report.by_region.push_back(region_summary);
    }
    if (!samples.empty()) {
        const double inv = 1.0 / static_cast<double>(samples.size());
        for (auto& s : report.by_day) {
            s.interval_score *= inv;
            s.crps *= inv;
            s.width *= inv;
            s.sq_error *= inv;
        }
    }
    return report;
}

namespace {

// age < 0 scores region totals; otherwise the given age group alone.
ScoreReport score_selection(const ForecastDraws& fc, const SurveillanceData& truth, int age, double alpha)
{
    if (fc.n_draws == 0 && fc.horizon > 0) {
        throw DomainError("scores: forecast has no draws");
    }
    if (truth.n_regions != fc.n_regions || truth.n_ages != fc.n_ages) {
        throw DomainError("scores: truth has " + std::to_string(truth.n_regions) + " regions and " +
                          std::to_string(truth.n_ages) + " age groups, forecast has " +
                          std::to_string(fc.n_regions) + " and " + std::to_string(fc.n_ages));
    }
    if (fc.first_day + fc.horizon > truth.n_days) {
        throw DomainError("scores: truth ends on day " + std::to_string(truth.n_days - 1) +
                          " but the forecast runs to day " + std::to_string(fc.first_day + fc.horizon - 1));
    }
    std::vector<std::vector<std::vector<double>>> samples(fc.n_regions,
                                                          std::vector<std::vector<double>>(fc.horizon));
    std::vector<std::vector<double>> observed(fc.n_regions, std::vector<double>(fc.horizon, 0.0));
    for (int m = 0; m < fc.n_regions; ++m) {
        for (int h = 0; h < fc.horizon; ++h) {
            const int day = fc.first_day + h;
            for (int a = 0; a < fc.n_ages; ++a) {
                if (age >= 0 && a != age) {
                    continue;
                }
                const int y = truth.death(m, day, a);
                if (y < 0) {
                    throw DomainError("scores: truth is missing for region " + std::to_string(m) + ", day " +
                                      std::to_string(day) + ", age " + std::to_string(a));
                }
                observed[m][h] += y;
            }
            samples[m][h].reserve(fc.n_draws);
            for (int d = 0; d < fc.n_draws; ++d) {
                samples[m][h].push_back(age < 0 ? fc.region_total(d, m, h) : fc.count(d, m, h, age));
            }
        }
    }
    return score_totals(samples, observed, fc.first_day, alpha);
}

} // namespace

ScoreReport score_forecasts(const ForecastDraws& fc, const SurveillanceData& truth, double alpha)
{
    return score_selection(fc, truth, -1, alpha);
}

ScoreReport score_forecasts_age(const ForecastDraws& fc, const SurveillanceData& truth, int age, double alpha)
{
    if (age < 0 || age >= fc.n_ages) {
        throw DomainError("scores: age group " + std::to_string(age) + " out of range");
    }
    return score_selection(fc, truth, age, alpha);
}

} // namespace epigmrf
