#include "qpemerge/adam.hpp"

#include <cmath>

#include "qpemerge/error.hpp"

namespace qpemerge {

void adam_step(LstmParams& params, const LstmParams& grads, AdamMoments& moments, std::uint64_t step,
               const AdamSettings& settings) {
  if (step == 0) {
    throw UsageError("adam step count starts at 1");
  }
  const std::size_t n = params.flat().size();
  if (grads.shape() != params.shape() || moments.first.size() != n || moments.second.size() != n) {
    throw UsageError("adam_step shape mismatch");
  }
  if (!grads.all_finite()) {
    throw NumericError("non-finite gradient");
  }
  const double b1 = settings.beta1;
  const double b2 = settings.beta2;
  const double t = static_cast<double>(step);
  const double correction1 = 1.0 - std::pow(b1, t);
  const double correction2 = 1.0 - std::pow(b2, t);
  auto p = params.flat();
  const auto g = grads.flat();
  for (std::size_t k = 0; k < n; ++k) {
    moments.first[k] = b1 * moments.first[k] + (1.0 - b1) * g[k];
    moments.second[k] = b2 * moments.second[k] + (1.0 - b2) * g[k] * g[k];
    const double m_hat = moments.first[k] / correction1;
    const double v_hat = moments.second[k] / correction2;
    p[k] -= settings.learning_rate * m_hat / (std::sqrt(v_hat) + settings.epsilon);
  }
}

}  // namespace qpemerge
