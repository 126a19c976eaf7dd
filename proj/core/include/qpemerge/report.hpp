/**
 * @file report.hpp
 * @brief Metric tables, time-series and scatter data files, SVG rendering.
 */
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "qpemerge/metrics.hpp"
#include "qpemerge/types.hpp"

namespace qpemerge {

/// "0.383", or "undef" for an undefined score. Never prints "-0.000".
std::string format_metric(const MetricValue& v);

/// Product names in table column order: merged, mrms, imerg_e, stage4, then
/// anything else in first-seen order.
std::vector<std::string> table_product_order(std::span<const MetricsReport> reports);

/// `station,metric,<product columns...>`, five rows per station.
void write_metrics_csv(std::ostream& out, std::span<const MetricsReport> reports);
/// Aligned plain-text blocks, one per station.
void write_metrics_text(std::ostream& out, std::span<const MetricsReport> reports);
/// Full-precision scores, contingency counts and undefined reasons, one row per (station, product).
void write_metrics_detail_csv(std::ostream& out, std::span<const MetricsReport> reports);
/// Writes metrics.csv, metrics.txt and metrics_detail.csv into `dir`.
void emit_metrics_table(const std::filesystem::path& dir, std::span<const MetricsReport> reports);

/**
 * @brief Wide per-station table: gauge, products, fold id and phase.
 *
 * `columns[0]` is the gauge. All columns share start, step and length.
 * `fold[i] < 0` is written as "NA".
 */
struct TimeseriesTable {
  std::string station_id;
  std::vector<TimeSeries> columns;
  std::vector<int> fold;
  std::vector<std::string> phase;

  /// Throws DataError when columns are misaligned or fold/phase lengths differ.
  void validate() const;
};

/**
 *     # station=<id> step_minutes=60 unit=mm/h
 *     timestamp,gauge,<product>...,fold,phase
 *     2021-12-01T01:00:00Z,0.5,0.25,...,0,validation
 */
void write_timeseries_csv(std::ostream& out, const TimeseriesTable& table);
/// Reads a file written by write_timeseries_csv. Values use the canonical
/// value grammar, so product columns round-trip exactly.
TimeseriesTable read_timeseries_csv(std::istream& in, const std::string& source_name = "<stream>");
TimeseriesTable read_timeseries_csv(const std::filesystem::path& file);

struct ScatterPoint {
  TimePoint time{};
  double log_obs{};
  double log_pred{};
  bool validation{true};
};

inline constexpr double kScatterLogMin = -2.0;
inline constexpr double kScatterLogMax = 2.0;

/**
 * @brief (log10 o, log10 p) for co-present positive samples with both
 * coordinates in [-2, 2].
 *
 * `validation_mask`, when non-empty, marks positions that belong to the
 * shared validation sample set; other points are kept with validation=false.
 */
std::vector<ScatterPoint> log_scatter(const TimeSeries& p, const TimeSeries& o,
                                      std::span<const std::uint8_t> validation_mask = {});

/// `timestamp,log10_obs,log10_pred,validation`.
void write_scatter_csv(std::ostream& out, std::span<const ScatterPoint> points);

void render_timeseries_svg(std::ostream& out, const TimeseriesTable& table);
void render_scatter_svg(std::ostream& out, std::span<const ScatterPoint> points, const std::string& title);
/// Reads a file written by write_scatter_csv.
std::vector<ScatterPoint> read_scatter_csv(std::istream& in);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& file);

}  // namespace qpemerge
