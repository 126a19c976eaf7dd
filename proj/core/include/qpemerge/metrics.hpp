/**
 * @file metrics.hpp
 * @brief Continuous and categorical verification scores.
 *
 * Continuous: Pearson correlation (CC), root mean square error (RMSE) and
 * relative bias (RB, percent). Categorical, from a rain/no-rain contingency
 * table: probability of detection (POD = H / (H + M)) and false alarm ratio
 * (FAR = F / (H + F)). An event is a value strictly above the threshold.
 *
 * Scores with no defined value throw UndefinedMetric; evaluate_all turns those
 * into flagged cells instead of numbers.
 */
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qpemerge/types.hpp"

namespace qpemerge {

inline constexpr double kDefaultEventThreshold = 0.1;  // mm/h

struct ContingencyTable {
  std::size_t hits{};
  std::size_t misses{};
  std::size_t false_alarms{};
  std::size_t correct_negatives{};
  double threshold{kDefaultEventThreshold};

  [[nodiscard]] std::size_t total() const { return hits + misses + false_alarms + correct_negatives; }
  [[nodiscard]] std::size_t observed_events() const { return hits + misses; }
  [[nodiscard]] std::size_t predicted_events() const { return hits + false_alarms; }
};

double cc(std::span<const double> p, std::span<const double> o);
double rmse(std::span<const double> p, std::span<const double> o);
double relative_bias(std::span<const double> p, std::span<const double> o);
ContingencyTable contingency(std::span<const double> p, std::span<const double> o, double threshold);
double pod(const ContingencyTable& t);
double far(const ContingencyTable& t);
/// M / (H + M), i.e. 1 - POD. Reported alongside FAR as a diagnostic.
double miss_ratio(const ContingencyTable& t);

/// A score that may be undefined for the given samples.
struct MetricValue {
  std::optional<double> value;
  std::string undefined_reason;

  [[nodiscard]] bool defined() const { return value.has_value(); }
};

struct MetricsReport {
  std::string station_id;
  std::string product;
  std::size_t n{};
  MetricValue cc;
  MetricValue rmse;
  MetricValue rb_percent;
  MetricValue pod;
  MetricValue far;
  MetricValue miss_ratio;
  ContingencyTable contingency;

  [[nodiscard]] bool any_undefined() const {
    return !cc.defined() || !rmse.defined() || !rb_percent.defined() || !pod.defined() || !far.defined();
  }
};

/**
 * @brief All scores for one product against the gauge.
 *
 * `p` and `o` must share start, step and length. Positions missing in either,
 * or flagged in `exclude` when given, are dropped from every score. Throws
 * DataError when the series are misaligned or no samples remain.
 */
MetricsReport evaluate_all(const TimeSeries& p, const TimeSeries& o, double threshold,
                           std::span<const std::uint8_t> exclude = {});

/**
 * @brief Scores several products on one shared sample set.
 *
 * A position is used only if the gauge and every product are present there,
 * so each product is scored on identical timesteps.
 */
std::vector<MetricsReport> evaluate_products(std::span<const TimeSeries> products, const TimeSeries& gauge,
                                             double threshold);

}  // namespace qpemerge
