#pragma once

#include <cstdint>
#include <vector>

#include "qpemerge/lstm.hpp"

namespace qpemerge {

struct AdamSettings {
  double learning_rate{1e-3};
  double beta1{0.9};
  double beta2{0.999};
  double epsilon{1e-8};
};

/// First and second moment estimates, one entry per parameter.
struct AdamMoments {
  std::vector<double> first;
  std::vector<double> second;

  static AdamMoments zeros(const LstmShape& shape) {
    return {std::vector<double>(shape.parameter_count(), 0.0), std::vector<double>(shape.parameter_count(), 0.0)};
  }
};

/**
 * @brief Bias-corrected adaptive-moment update, in place.
 *
 * `step` is the 1-based update count. Throws NumericError on non-finite
 * gradients and UsageError on shape mismatch or `step == 0`.
 */
void adam_step(LstmParams& params, const LstmParams& grads, AdamMoments& moments, std::uint64_t step,
               const AdamSettings& settings);

}  // namespace qpemerge
