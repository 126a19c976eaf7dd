#include "qpemerge/folds.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <spdlog/spdlog.h>
#include <string>

#include "qpemerge/error.hpp"

namespace qpemerge {

std::vector<FoldSpec> make_folds(std::size_t n, std::size_t k, const FoldOptions& options) {
  if (k == 0) {
    throw UsageError("fold count must be positive");
  }
  if (options.seq_len == 0 || n < k * options.seq_len) {
    throw DataError("series of " + std::to_string(n) + " steps is too short for " + std::to_string(k) +
                    " folds with sequence length " + std::to_string(options.seq_len));
  }
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::vector<FoldSpec> folds(k);
  std::size_t begin = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t size = base + (i < extra ? 1 : 0);
    folds[i].fold_index = i;
    folds[i].test_range = {begin, begin + size};
    begin += size;
  }
  for (auto& f : folds) {
    std::vector<std::size_t> calibration;
    calibration.reserve(n - f.test_range.size());
    if (f.test_range.begin > 0) {
      f.calibration_ranges.push_back({0, f.test_range.begin});
    }
    if (f.test_range.end < n) {
      f.calibration_ranges.push_back({f.test_range.end, n});
    }
    for (const auto& r : f.calibration_ranges) {
      for (std::size_t t = r.begin; t < r.end; ++t) {
        calibration.push_back(t);
      }
    }
    if (!calibration.empty()) {
      std::tie(f.train_indices, f.cal_val_indices) = split_calibration(calibration, options.calibration_ratio);
    }
  }
  return folds;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_calibration(std::span<const std::size_t> calibration,
                                                                                double ratio) {
  if (calibration.empty()) {
    throw DataError("empty calibration index set");
  }
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw UsageError("calibration ratio must lie in (0, 1]");
  }
  if (ratio == 1.0) {
    spdlog::warn("calibration ratio 1.0 leaves no calibration-validation samples");
  }
  const auto cut = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(calibration.size())));
  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> out;
  out.first.assign(calibration.begin(), calibration.begin() + static_cast<long>(cut));
  out.second.assign(calibration.begin() + static_cast<long>(cut), calibration.end());
  return out;
}

std::vector<std::size_t> window_targets(std::span<const std::size_t> indices, std::span<const IndexRange> ranges,
                                        std::size_t seq_len) {
  std::vector<std::size_t> out;
  out.reserve(indices.size());
  for (std::size_t t : indices) {
    for (const auto& r : ranges) {
      if (r.contains(t)) {
        if (t + 1 >= r.begin + seq_len) {
          out.push_back(t);
        }
        break;
      }
    }
  }
  return out;
}

void check_no_leakage(const FoldSpec& fold, std::span<const std::size_t> targets, std::size_t seq_len) {
  for (std::size_t t : targets) {
    if (t + 1 < seq_len) {
      throw DataError("fold " + std::to_string(fold.fold_index) + ": window ending at " + std::to_string(t) +
                      " starts before the series");
    }
    const std::size_t first = t + 1 - seq_len;
    // Window [first, t] intersects [test.begin, test.end)?
    if (first < fold.test_range.end && t >= fold.test_range.begin) {
      throw DataError("fold " + std::to_string(fold.fold_index) + ": training window ending at " +
                      std::to_string(t) + " overlaps the held-out block");
    }
  }
}

TimeSeries stitch_validation(std::span<const TimeSeries> fold_predictions) {
  if (fold_predictions.empty()) {
    throw DataError("nothing to stitch");
  }
  std::vector<const TimeSeries*> order;
  order.reserve(fold_predictions.size());
  for (const auto& s : fold_predictions) {
    order.push_back(&s);
  }
  std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) { return a->start < b->start; });

  const TimeSeries& first = *order.front();
  TimeSeries out;
  out.station_id = first.station_id;
  out.product = first.product;
  out.start = first.start;
  out.step = first.step;
  TimePoint cursor = first.start;
  for (const auto* s : order) {
    if (s->step != out.step || s->station_id != out.station_id) {
      throw DataError("fold predictions disagree on station or step");
    }
    if (s->start < cursor) {
      throw DataError("overlapping fold coverage at " + format_timestamp(s->start));
    }
    if (s->start > cursor) {
      throw DataError("gap in fold coverage at " + format_timestamp(cursor));
    }
    out.values.insert(out.values.end(), s->values.begin(), s->values.end());
    out.missing.insert(out.missing.end(), s->missing.begin(), s->missing.end());
    cursor = s->end_time();
  }
  return out;
}

}  // namespace qpemerge
