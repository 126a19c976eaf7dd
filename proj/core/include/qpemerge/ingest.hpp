/**
 * @file ingest.hpp
 * @brief Canonical CSV reader/writer, half-hour aggregation and gap filling.
 *
 * Canonical file layout, one file per (station, product):
 *
 *     # station=<id> product=<name> step_minutes=<30|60> unit=mm/h
 *     timestamp,value
 *     2021-12-01T01:00:00Z,0.25
 *     2021-12-01T02:00:00Z,NA
 */
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "qpemerge/types.hpp"

namespace qpemerge {

inline constexpr std::string_view kMissingToken = "NA";

struct ParseResult {
  TimeSeries series;
  /// Tolerated irregularities (CRLF endings, blank lines). Empty for clean files.
  std::vector<std::string> warnings;
};

ParseResult parse_canonical(std::istream& in, const std::string& source_name = "<stream>");
ParseResult parse_canonical(const std::filesystem::path& file);

void write_canonical(std::ostream& out, const TimeSeries& series);
void write_canonical(const std::filesystem::path& file, const TimeSeries& series);

/// Parses a value token: a non-negative finite decimal, or "NA" (sets `missing`).
double parse_value_token(std::string_view token, bool& missing);

/// Shortest text that parses back to exactly `value`.
std::string format_value(double value);

/**
 * @brief Mean-of-rates aggregation from 30-minute to hourly steps.
 *
 * Either half missing makes the hour missing. Throws DataError for odd
 * lengths, a start off the top of the hour, or a non-30-minute input.
 */
TimeSeries aggregate_halfhourly_to_hourly(const TimeSeries& halfhourly);

/**
 * @brief Linear interpolation across interior gaps; nearest-value extension
 * at the ends. Throws DataError when every value is missing.
 */
TimeSeries fill_missing_linear(const TimeSeries& series);

struct GapStats {
  std::size_t length{};
  std::size_t missing{};
  std::size_t gap_count{};
  std::size_t longest_gap{};
};

GapStats gap_stats(const TimeSeries& series);

}  // namespace qpemerge
