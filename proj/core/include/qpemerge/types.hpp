/**
 * @file types.hpp
 * @brief Core domain types: stations, hourly series, aligned datasets.
 */
#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qpemerge/timeutil.hpp"

namespace qpemerge {

/// Elevation as written in the station table, with its unit label kept verbatim.
struct Elevation {
  double value{};
  std::string unit{"m"};
};

struct StationMeta {
  std::string id;
  std::string name;
  Elevation elevation;
  double latitude{};
  double longitude{};
  std::string nearby_city;

  /// Throws DataError when coordinates are out of range or the id is empty.
  void validate() const;
};

/// Throws DataError when two stations share an id.
void validate_station_set(std::span<const StationMeta> stations);

/**
 * @brief Precipitation product identity.
 *
 * Known products have a fixed kind; anything else is carried as `Other` with
 * its file-level name.
 */
class Product {
 public:
  enum class Kind : std::uint8_t { Gauge, ImergE, StageIV, Mrms, Merged, Other };

  Product() = default;
  static Product from_name(std::string_view name);
  static Product merged() { return from_name("merged"); }
  static Product gauge() { return from_name("gauge"); }

  [[nodiscard]] Kind kind() const { return kind_; }
  /// Name as used in files and configs ("imerg_e", "stage4", ...).
  [[nodiscard]] const std::string& name() const { return name_; }
  /// Column label used in metric tables ("IMERG", "StageIV", ...).
  [[nodiscard]] std::string display_name() const;

  friend bool operator==(const Product& a, const Product& b) { return a.name_ == b.name_; }

 private:
  Kind kind_{Kind::Other};
  std::string name_;
};

/// Half-open index interval [begin, end).
struct IndexRange {
  std::size_t begin{};
  std::size_t end{};

  [[nodiscard]] std::size_t size() const { return end > begin ? end - begin : 0; }
  [[nodiscard]] bool contains(std::size_t i) const { return i >= begin && i < end; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/**
 * @brief Regularly sampled precipitation rates (mm/h) with a missing mask.
 *
 * Most of the pipeline works on hourly data (`step == 60 min`); raw IMERG
 * files come in at 30 minutes and are aggregated before use.
 */
struct TimeSeries {
  std::string station_id;
  Product product;
  TimePoint start{};
  std::chrono::minutes step{60};
  std::vector<double> values;
  std::vector<std::uint8_t> missing;

  [[nodiscard]] std::size_t size() const { return values.size(); }
  [[nodiscard]] bool is_missing(std::size_t i) const { return missing[i] != 0; }
  [[nodiscard]] std::size_t missing_count() const;
  [[nodiscard]] TimePoint time_at(std::size_t i) const { return start + step * static_cast<long>(i); }
  [[nodiscard]] TimePoint end_time() const { return time_at(size()); }

  /// Checks the length and non-negativity invariants. Throws DataError.
  void validate() const;

  /// Copy of positions [range.begin, range.end).
  [[nodiscard]] TimeSeries slice(IndexRange range) const;
};

using HourlySeries = TimeSeries;

/// Convenience constructor for a fully present series.
TimeSeries make_series(std::string station_id, Product product, TimePoint start,
                       std::vector<double> values, std::chrono::minutes step = std::chrono::minutes{60});

/**
 * @brief Time-aligned feature matrix plus gauge target for one station.
 *
 * `features` is row-major, `length() x feature_count()`.
 */
struct AlignedDataset {
  std::string station_id;
  TimePoint start{};
  std::vector<std::string> feature_names;
  std::vector<double> features;
  std::vector<double> target;

  [[nodiscard]] std::size_t length() const { return target.size(); }
  [[nodiscard]] std::size_t feature_count() const { return feature_names.size(); }
  [[nodiscard]] double feature(std::size_t t, std::size_t j) const { return features[t * feature_count() + j]; }
  [[nodiscard]] std::span<const double> row(std::size_t t) const {
    return std::span<const double>(features).subspan(t * feature_count(), feature_count());
  }
  [[nodiscard]] TimePoint time_at(std::size_t t) const { return start + std::chrono::hours(t); }
};

/**
 * @brief Aligns gap-filled hourly series onto their common time span.
 *
 * Output covers the intersection of all inputs; feature columns follow the
 * order of `series_list`. Throws DataError on mismatched stations, residual
 * missing values, non-hourly or misaligned series, or an empty intersection.
 */
AlignedDataset align(std::span<const TimeSeries> series_list, const TimeSeries& target);

/// Restricts a series to [from, from + hours). Throws DataError if not covered.
TimeSeries trim_to(const TimeSeries& series, TimePoint from, std::size_t hours);

}  // namespace qpemerge
