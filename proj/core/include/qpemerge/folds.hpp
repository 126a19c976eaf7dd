/**
 * @file folds.hpp
 * @brief Blocked k-fold partition, chronological calibration subsplit and
 * stitching of held-out predictions.
 */
#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "qpemerge/types.hpp"

namespace qpemerge {

struct FoldSpec {
  std::size_t fold_index{};
  /// The fold's held-out block.
  IndexRange test_range;
  /// Complement of test_range in [0, n), in time order (one or two ranges).
  std::vector<IndexRange> calibration_ranges;
  /// Earliest share of the calibration indices.
  std::vector<std::size_t> train_indices;
  /// Remaining calibration indices, used for monitoring loss only.
  std::vector<std::size_t> cal_val_indices;
};

struct FoldOptions {
  std::size_t seq_len{12};
  double calibration_ratio{0.7};
};

/**
 * @brief Contiguous blocks of near-equal size; the first `n % k` blocks get
 * one extra step. Fold i holds out block i.
 *
 * Throws UsageError when k == 0 and DataError when n < k * seq_len.
 */
std::vector<FoldSpec> make_folds(std::size_t n, std::size_t k, const FoldOptions& options = {});

/// Chronological split: the first floor(ratio * count) indices train, the rest validate.
/// Throws DataError on empty input and UsageError when ratio is outside (0, 1].
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_calibration(std::span<const std::size_t> calibration,
                                                                                double ratio = 0.7);

/**
 * @brief Target indices whose full input window [t - seq_len + 1, t] lies in
 * a single range of `ranges`. Windows that would straddle a gap between
 * ranges are dropped.
 */
std::vector<std::size_t> window_targets(std::span<const std::size_t> indices, std::span<const IndexRange> ranges,
                                        std::size_t seq_len);

/// Throws DataError if any window ending at one of `targets` touches the test range.
void check_no_leakage(const FoldSpec& fold, std::span<const std::size_t> targets, std::size_t seq_len);

/**
 * @brief Concatenates per-fold held-out predictions into one series.
 *
 * Input series may come in any order; sorted by start they must tile a
 * contiguous period without overlap or gap. Missing (warm-up) positions stay
 * missing. Throws DataError otherwise.
 */
TimeSeries stitch_validation(std::span<const TimeSeries> fold_predictions);

}  // namespace qpemerge
