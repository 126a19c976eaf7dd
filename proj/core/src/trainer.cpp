#include "qpemerge/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qpemerge/error.hpp"
#include "qpemerge/rng.hpp"

namespace qpemerge {
namespace {

WindowView window_at(const AlignedDataset& ds, std::size_t t, std::size_t seq_len) {
  const std::size_t d = ds.feature_count();
  const std::size_t first = t + 1 - seq_len;
  return {std::span<const double>(ds.features).subspan(first * d, seq_len * d), seq_len, d};
}

void require_targets(const AlignedDataset& ds, std::span<const std::size_t> targets, std::size_t seq_len) {
  for (std::size_t t : targets) {
    if (t >= ds.length() || t + 1 < seq_len) {
      throw DataError("window ending at " + std::to_string(t) + " does not fit inside the dataset");
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (hidden == 0 || seq_len == 0 || epochs == 0 || batch_size == 0) {
    throw UsageError("hidden, seq_len, epochs and batch_size must all be at least 1");
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw UsageError("learning_rate must be positive");
  }
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw UsageError("beta1 and beta2 must lie in (0, 1)");
  }
  if (!(eps_adam > 0.0)) {
    throw UsageError("eps_adam must be positive");
  }
  if (init_scale && !(*init_scale >= 0.0)) {
    throw UsageError("init_scale must be non-negative");
  }
}

double TrainConfig::effective_init_scale() const {
  return init_scale ? *init_scale : 1.0 / std::sqrt(static_cast<double>(hidden));
}

LstmParams init_params(const LstmShape& shape, const TrainConfig& cfg) {
  LstmParams p(shape);
  Rng rng(cfg.seed);
  const double scale = cfg.effective_init_scale();
  for (std::size_t g = 0; g < kGateCount; ++g) {
    for (double& w : p.weights(static_cast<Gate>(g))) {
      w = rng.uniform(-scale, scale);
    }
  }
  for (double& w : p.head_weights()) {
    w = rng.uniform(-scale, scale);
  }
  for (double& b : p.bias(Gate::Forget)) {
    b = cfg.forget_bias_init;
  }
  return p;
}

double evaluate_loss(const AlignedDataset& scaled, std::span<const std::size_t> targets, const LstmParams& params,
                     std::size_t seq_len) {
  require_targets(scaled, targets, seq_len);
  if (targets.empty()) {
    throw DataError("no windows to evaluate");
  }
  BpttWorkspace ws;
  double sum = 0.0;
  for (std::size_t t : targets) {
    const double r = ws.predict(window_at(scaled, t, seq_len), params) - scaled.target[t];
    sum += r * r;
  }
  return sum / static_cast<double>(targets.size());
}

TrainResult train(const AlignedDataset& scaled, const WindowIndices& indices, const TrainConfig& cfg) {
  cfg.validate();
  if (indices.train.empty()) {
    throw DataError("no valid training windows");
  }
  require_targets(scaled, indices.train, cfg.seq_len);
  require_targets(scaled, indices.validation, cfg.seq_len);
  for (double v : scaled.features) {
    if (!std::isfinite(v)) {
      throw NumericError("non-finite feature value in training data");
    }
  }

  const LstmShape shape{scaled.feature_count(), cfg.hidden};
  TrainResult result{init_params(shape, cfg), {}};
  result.history.reserve(cfg.epochs);

  // Shuffling draws from a stream separate from initialization.
  Rng shuffle_rng(splitmix64(cfg.seed ^ 0x53485546464c45ULL));
  AdamMoments moments = AdamMoments::zeros(shape);
  LstmParams grads(shape);
  BpttWorkspace ws;
  std::vector<std::size_t> order(indices.train.begin(), indices.train.end());
  std::uint64_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size, ++batch_no) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - begin);
      grads.set_zero();
      double batch_loss = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t t = order[k];
        batch_loss += ws.accumulate(window_at(scaled, t, cfg.seq_len), scaled.target[t], result.params, grads, scale);
      }
      if (!std::isfinite(batch_loss) || !grads.all_finite()) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                           std::to_string(batch_no + 1));
      }
      epoch_loss += batch_loss;
      adam_step(result.params, grads, moments, ++step, cfg.adam());
    }
    EpochLoss record;
    record.train = epoch_loss / static_cast<double>(order.size());
    if (!indices.validation.empty()) {
      record.validation = evaluate_loss(scaled, indices.validation, result.params, cfg.seq_len);
      if (!std::isfinite(*record.validation)) {
        throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch + 1));
      }
    }
    result.history.push_back(record);
  }
  return result;
}

TimeSeries predict_series(const AlignedDataset& ds, IndexRange region, const LstmParams& params, const Scaler& scaler,
                          std::size_t seq_len) {
  if (region.end > ds.length() || region.begin > region.end) {
    throw DataError("prediction region outside dataset");
  }
  if (seq_len == 0) {
    throw UsageError("seq_len must be positive");
  }
  if (params.shape().input_dim != ds.feature_count()) {
    throw UsageError("model input dimension does not match dataset features");
  }
  if (!params.all_finite()) {
    throw NumericError("non-finite LSTM parameter");
  }
  TimeSeries out;
  out.station_id = ds.station_id;
  out.product = Product::merged();
  out.start = ds.time_at(region.begin);
  out.step = std::chrono::minutes{60};
  out.values.assign(region.size(), 0.0);
  out.missing.assign(region.size(), 1);

  const std::size_t d = ds.feature_count();
  std::vector<double> window(seq_len * d);
  BpttWorkspace ws;
  for (std::size_t t = region.begin; t < region.end; ++t) {
    if (t + 1 < region.begin + seq_len) {
      continue;
    }
    const std::size_t first = t + 1 - seq_len;
    for (std::size_t r = 0; r < seq_len; ++r) {
      for (std::size_t j = 0; j < d; ++j) {
        window[r * d + j] = scaler.scale_feature(j, ds.feature(first + r, j));
      }
    }
    const double z = ws.predict({window, seq_len, d}, params);
    const double v = scaler.unscale_target(z);
    if (!std::isfinite(v)) {
      throw NumericError("non-finite prediction at index " + std::to_string(t));
    }
    out.values[t - region.begin] = std::max(0.0, v);
    out.missing[t - region.begin] = 0;
  }
  return out;
}

}  // namespace qpemerge
