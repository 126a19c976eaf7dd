#pragma once

#include <span>
#include <vector>

#include "qpemerge/types.hpp"

namespace qpemerge {

inline constexpr double kScalerStdFloor = 1e-8;

/**
 * @brief Per-column z-score statistics for features and the target.
 *
 * Standard deviations use the population convention and are floored at
 * kScalerStdFloor so constant columns scale to zero.
 */
struct Scaler {
  std::vector<double> feature_mean;
  std::vector<double> feature_std;
  double target_mean{};
  double target_std{1.0};

  [[nodiscard]] double scale_feature(std::size_t j, double v) const { return (v - feature_mean[j]) / feature_std[j]; }
  [[nodiscard]] double unscale_feature(std::size_t j, double z) const { return z * feature_std[j] + feature_mean[j]; }
  [[nodiscard]] double scale_target(double v) const { return (v - target_mean) / target_std; }
  [[nodiscard]] double unscale_target(double z) const { return z * target_std + target_mean; }

  /// Standardized copy of the whole dataset (features and target).
  [[nodiscard]] AlignedDataset apply(const AlignedDataset& ds) const;
  /// Inverse of apply.
  [[nodiscard]] AlignedDataset invert(const AlignedDataset& scaled) const;

  friend bool operator==(const Scaler&, const Scaler&) = default;
};

/// Fits statistics over the rows covered by `ranges` only. Throws DataError when
/// the ranges cover no rows or fall outside the dataset.
Scaler fit_scaler(const AlignedDataset& ds, std::span<const IndexRange> ranges);

}  // namespace qpemerge
