#include "qpemerge/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "qpemerge/error.hpp"

namespace qpemerge {

void StationMeta::validate() const {
  if (id.empty()) {
    throw DataError("station id must not be empty");
  }
  if (!(latitude >= -90.0 && latitude <= 90.0)) {
    throw DataError("station " + id + ": latitude out of [-90, 90]");
  }
  if (!(longitude >= -180.0 && longitude <= 180.0)) {
    throw DataError("station " + id + ": longitude out of [-180, 180]");
  }
}

void validate_station_set(std::span<const StationMeta> stations) {
  std::set<std::string> seen;
  for (const auto& s : stations) {
    s.validate();
    if (!seen.insert(s.id).second) {
      throw DataError("duplicate station id '" + s.id + "'");
    }
  }
}

Product Product::from_name(std::string_view name) {
  Product p;
  p.name_ = std::string(name);
  if (name == "gauge") {
    p.kind_ = Kind::Gauge;
  } else if (name == "imerg_e") {
    p.kind_ = Kind::ImergE;
  } else if (name == "stage4") {
    p.kind_ = Kind::StageIV;
  } else if (name == "mrms") {
    p.kind_ = Kind::Mrms;
  } else if (name == "merged") {
    p.kind_ = Kind::Merged;
  } else {
    p.kind_ = Kind::Other;
  }
  return p;
}

std::string Product::display_name() const {
  switch (kind_) {
    case Kind::Gauge: return "Gauge";
    case Kind::ImergE: return "IMERG";
    case Kind::StageIV: return "StageIV";
    case Kind::Mrms: return "MRMS";
    case Kind::Merged: return "Merged";
    case Kind::Other: break;
  }
  return name_;
}

std::size_t TimeSeries::missing_count() const {
  return static_cast<std::size_t>(std::count_if(missing.begin(), missing.end(), [](auto m) { return m != 0; }));
}

void TimeSeries::validate() const {
  if (values.size() != missing.size()) {
    throw DataError("series " + station_id + "/" + product.name() + ": values and missing mask differ in length");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (missing[i] == 0 && !(values[i] >= 0.0 && std::isfinite(values[i]))) {
      throw DataError("series " + station_id + "/" + product.name() + ": negative or non-finite value at index " +
                      std::to_string(i));
    }
  }
}

TimeSeries TimeSeries::slice(IndexRange range) const {
  if (range.end > size() || range.begin > range.end) {
    throw DataError("slice out of bounds");
  }
  TimeSeries out;
  out.station_id = station_id;
  out.product = product;
  out.step = step;
  out.start = time_at(range.begin);
  out.values.assign(values.begin() + static_cast<long>(range.begin), values.begin() + static_cast<long>(range.end));
  out.missing.assign(missing.begin() + static_cast<long>(range.begin), missing.begin() + static_cast<long>(range.end));
  return out;
}

TimeSeries make_series(std::string station_id, Product product, TimePoint start, std::vector<double> values,
                       std::chrono::minutes step) {
  TimeSeries s;
  s.station_id = std::move(station_id);
  s.product = std::move(product);
  s.start = start;
  s.step = step;
  s.missing.assign(values.size(), 0);
  s.values = std::move(values);
  return s;
}

namespace {

void require_hourly(const TimeSeries& s) {
  if (s.step != std::chrono::minutes{60}) {
    throw DataError("series " + s.station_id + "/" + s.product.name() + " is not hourly");
  }
  if (!is_top_of_hour(s.start)) {
    throw DataError("series " + s.station_id + "/" + s.product.name() + " does not start on the hour");
  }
  if (s.values.size() != s.missing.size()) {
    throw DataError("series " + s.station_id + "/" + s.product.name() + ": mask length mismatch");
  }
  if (s.missing_count() != 0) {
    throw DataError("residual missing values in " + s.station_id + "/" + s.product.name());
  }
}

}  // namespace

AlignedDataset align(std::span<const TimeSeries> series_list, const TimeSeries& target) {
  if (series_list.empty()) {
    throw DataError("align needs at least one feature series");
  }
  require_hourly(target);
  TimePoint lo = target.start;
  TimePoint hi = target.end_time();
  for (const auto& s : series_list) {
    if (s.station_id != target.station_id) {
      throw DataError("mismatched station ids: '" + s.station_id + "' vs '" + target.station_id + "'");
    }
    require_hourly(s);
    lo = std::max(lo, s.start);
    hi = std::min(hi, s.end_time());
  }
  if (hi <= lo) {
    throw DataError("empty temporal intersection for station " + target.station_id);
  }
  const auto n = static_cast<std::size_t>(std::chrono::duration_cast<std::chrono::hours>(hi - lo).count());

  AlignedDataset ds;
  ds.station_id = target.station_id;
  ds.start = lo;
  const std::size_t d = series_list.size();
  ds.feature_names.reserve(d);
  for (const auto& s : series_list) {
    ds.feature_names.push_back(s.product.name());
  }
  ds.features.resize(n * d);
  for (std::size_t j = 0; j < d; ++j) {
    const auto& s = series_list[j];
    const auto offset = static_cast<std::size_t>(std::chrono::duration_cast<std::chrono::hours>(lo - s.start).count());
    for (std::size_t t = 0; t < n; ++t) {
      ds.features[t * d + j] = s.values[offset + t];
    }
  }
  const auto toff = static_cast<std::size_t>(std::chrono::duration_cast<std::chrono::hours>(lo - target.start).count());
  ds.target.assign(target.values.begin() + static_cast<long>(toff), target.values.begin() + static_cast<long>(toff + n));
  return ds;
}

TimeSeries trim_to(const TimeSeries& series, TimePoint from, std::size_t hours) {
  if (series.step != std::chrono::minutes{60} || from < series.start) {
    throw DataError("cannot trim " + series.station_id + "/" + series.product.name() + " to requested window");
  }
  const auto offset =
      static_cast<std::size_t>(std::chrono::duration_cast<std::chrono::hours>(from - series.start).count());
  if (offset + hours > series.size()) {
    throw DataError("series " + series.station_id + "/" + series.product.name() + " does not cover requested window");
  }
  return series.slice({offset, offset + hours});
}

}  // namespace qpemerge
