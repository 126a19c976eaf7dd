#include "qpemerge/scaler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qpemerge/error.hpp"

namespace qpemerge {
namespace {

struct Moments {
  double mean{};
  double std{};
};

template <typename Get>
Moments column_moments(std::span<const IndexRange> ranges, std::size_t count, Get get) {
  double sum = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& r : ranges) {
    for (std::size_t t = r.begin; t < r.end; ++t) {
      const double v = get(t);
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  // A constant column gets its exact value as mean, so it scales to exactly 0.
  const double mean = lo == hi ? lo : sum / static_cast<double>(count);
  double ss = 0.0;
  for (const auto& r : ranges) {
    for (std::size_t t = r.begin; t < r.end; ++t) {
      const double d = get(t) - mean;
      ss += d * d;
    }
  }
  return {mean, std::max(std::sqrt(ss / static_cast<double>(count)), kScalerStdFloor)};
}

}  // namespace

Scaler fit_scaler(const AlignedDataset& ds, std::span<const IndexRange> ranges) {
  std::size_t count = 0;
  for (const auto& r : ranges) {
    if (r.end > ds.length() || r.begin > r.end) {
      throw DataError("scaler range outside dataset");
    }
    count += r.size();
  }
  if (count == 0) {
    throw DataError("cannot fit scaler on an empty calibration slice");
  }
  Scaler s;
  const std::size_t d = ds.feature_count();
  s.feature_mean.resize(d);
  s.feature_std.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    const auto m = column_moments(ranges, count, [&](std::size_t t) { return ds.feature(t, j); });
    s.feature_mean[j] = m.mean;
    s.feature_std[j] = m.std;
  }
  const auto m = column_moments(ranges, count, [&](std::size_t t) { return ds.target[t]; });
  s.target_mean = m.mean;
  s.target_std = m.std;
  return s;
}

AlignedDataset Scaler::apply(const AlignedDataset& ds) const {
  if (ds.feature_count() != feature_mean.size()) {
    throw UsageError("scaler feature count does not match dataset");
  }
  AlignedDataset out = ds;
  const std::size_t d = ds.feature_count();
  for (std::size_t t = 0; t < ds.length(); ++t) {
    for (std::size_t j = 0; j < d; ++j) {
      out.features[t * d + j] = scale_feature(j, ds.features[t * d + j]);
    }
    out.target[t] = scale_target(ds.target[t]);
  }
  return out;
}

AlignedDataset Scaler::invert(const AlignedDataset& scaled) const {
  if (scaled.feature_count() != feature_mean.size()) {
    throw UsageError("scaler feature count does not match dataset");
  }
  AlignedDataset out = scaled;
  const std::size_t d = scaled.feature_count();
  for (std::size_t t = 0; t < scaled.length(); ++t) {
    for (std::size_t j = 0; j < d; ++j) {
      out.features[t * d + j] = unscale_feature(j, scaled.features[t * d + j]);
    }
    out.target[t] = unscale_target(scaled.target[t]);
  }
  return out;
}

}  // namespace qpemerge
