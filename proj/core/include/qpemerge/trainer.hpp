/**
 * @file trainer.hpp
 * @brief Training loop and inference over contiguous regions.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qpemerge/adam.hpp"
#include "qpemerge/lstm.hpp"
#include "qpemerge/scaler.hpp"
#include "qpemerge/types.hpp"

namespace qpemerge {

struct TrainConfig {
  std::size_t hidden{12};
  std::size_t seq_len{12};
  double learning_rate{1e-3};
  std::size_t epochs{100};
  std::size_t batch_size{32};
  std::uint64_t seed{0};
  /// Half-width of the uniform weight init; 1/sqrt(hidden) when unset.
  std::optional<double> init_scale;
  double forget_bias_init{1.0};
  double beta1{0.9};
  double beta2{0.999};
  double eps_adam{1e-8};

  /// Throws UsageError when a count is zero, the rate is not positive, or a
  /// beta lies outside (0, 1).
  void validate() const;
  [[nodiscard]] double effective_init_scale() const;
  [[nodiscard]] AdamSettings adam() const { return {learning_rate, beta1, beta2, eps_adam}; }
};

/// Uniform weights in [-scale, scale], zero biases except the forget gate.
LstmParams init_params(const LstmShape& shape, const TrainConfig& cfg);

/// Target positions for the two loss sets. Every window [t - seq_len + 1, t]
/// must fit inside the dataset.
struct WindowIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

struct EpochLoss {
  /// Mean squared error over the epoch's training windows, measured before each batch update.
  double train{};
  /// Mean squared error on validation windows after the epoch; unset when there are none.
  std::optional<double> validation;
};

struct TrainResult {
  LstmParams params;
  std::vector<EpochLoss> history;
};

/**
 * @brief Mini-batch Adam on standardized data for exactly `cfg.epochs` epochs.
 *
 * Windows are reshuffled each epoch from `cfg.seed`; gradients are averaged
 * over each batch. Identical inputs give bit-identical results. Throws
 * DataError when there are no training windows and NumericError (naming the
 * epoch and batch) when the loss stops being finite.
 */
TrainResult train(const AlignedDataset& scaled, const WindowIndices& indices, const TrainConfig& cfg);

/// Mean squared error of the model over the given target positions.
double evaluate_loss(const AlignedDataset& scaled, std::span<const std::size_t> targets, const LstmParams& params,
                     std::size_t seq_len);

/**
 * @brief Predictions in mm/h over one contiguous region of the raw dataset.
 *
 * The first `seq_len - 1` positions have no complete window inside the region
 * and are marked missing. Outputs are inverse-scaled and clamped at zero.
 */
TimeSeries predict_series(const AlignedDataset& ds, IndexRange region, const LstmParams& params, const Scaler& scaler,
                          std::size_t seq_len);

}  // namespace qpemerge
