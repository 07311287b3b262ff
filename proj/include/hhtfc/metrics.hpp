#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace hhtfc::metrics {

/// Forecasts for targets x[h..n), each equal to the value h steps earlier.
std::vector<double> persistence(std::span<const double> series, std::size_t horizon);

/// Simple exponential smoothing: level l_t = a x_t + (1 - a) l_{t-1}, l_0 = x_0.
std::vector<double> smoothing_levels(std::span<const double> series, double alpha);

/// Forecasts for targets x[h..n): the level at the origin h steps earlier.
std::vector<double> exp_smoothing(std::span<const double> series, double alpha, std::size_t horizon);

/// Grid point with the lowest in-sample MAE of exp_smoothing at the horizon;
/// ties keep the earlier grid entry.
double select_alpha(std::span<const double> series, std::size_t horizon, std::span<const double> grid);

struct IntervalSpec {
    std::string label;
    std::size_t begin = 0;  ///< index range [begin, end)
    std::size_t end = 0;
};

struct IntervalMetrics {
    std::string label;
    double mae = 0.0;
    double rmse = 0.0;
    std::optional<double> mape;
};

struct MetricsReport {
    double mae = 0.0;
    double rmse = 0.0;
    std::optional<double> mape;  ///< percent; absent when every actual is below the floor
    std::size_t n_skipped_mape = 0;
    std::vector<IntervalMetrics> sub_intervals;
};

/// MAE, RMSE and MAPE (over actuals with |a| > mape_floor), overall and per interval.
MetricsReport compute(std::span<const double> actual, std::span<const double> predicted,
                      const std::vector<IntervalSpec>& intervals = {}, double mape_floor = 1e-6);

/// Consecutive blocks of `block` samples: "0-24h", "24-48h" for hourly data.
std::vector<IntervalSpec> block_intervals(std::size_t length, std::size_t block, const std::string& unit);

nlohmann::json to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& doc);

struct NamedReport {
    std::string model;
    MetricsReport report;
};

/// Rows: interval then metric (MAE, RMSE); one column per model.
void write_interval_table(std::ostream& os, const std::vector<NamedReport>& reports);

/// Rows: models in the given order; columns MAPE %, MAE, RMSE.
void write_model_table(std::ostream& os, const std::vector<NamedReport>& reports);

}  // namespace hhtfc::metrics
