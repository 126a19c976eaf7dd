#include "qpemerge/lstm.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "qpemerge/error.hpp"

namespace qpemerge {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// gates <- activations of (W [x, h] + b), laid out f | i | g | o.
void compute_gates(const LstmParams& params, const double* concat, double* gates) {
  const auto& s = params.shape();
  const auto rows = static_cast<Eigen::Index>(kGateCount * s.hidden);
  const auto cols = static_cast<Eigen::Index>(s.concat_dim());
  ConstMatrixMap w(params.stacked_weights().data(), rows, cols);
  ConstVectorMap b(params.stacked_bias().data(), rows);
  ConstVectorMap xh(concat, cols);
  VectorMap z(gates, rows);
  z.noalias() = w * xh;
  z += b;
  const std::size_t h = s.hidden;
  for (std::size_t k = 0; k < h; ++k) {
    gates[k] = sigmoid(gates[k]);
    gates[h + k] = sigmoid(gates[h + k]);
    gates[2 * h + k] = std::tanh(gates[2 * h + k]);
    gates[3 * h + k] = sigmoid(gates[3 * h + k]);
  }
}

void require_window(const WindowView& window, std::size_t seq_len, const LstmParams& params) {
  if (params.flat().empty()) {
    throw UsageError("LSTM parameters are empty");
  }
  if (seq_len == 0 || window.rows != seq_len) {
    throw UsageError("wrong window length: expected " + std::to_string(seq_len) + " rows, got " +
                     std::to_string(window.rows));
  }
  if (window.cols != params.shape().input_dim || window.data.size() != window.rows * window.cols) {
    throw UsageError("window width does not match the model input dimension");
  }
  if (!params.all_finite()) {
    throw NumericError("non-finite LSTM parameter");
  }
  for (double v : window.data) {
    if (!std::isfinite(v)) {
      throw NumericError("non-finite value in input window");
    }
  }
}

}  // namespace

LstmParams::LstmParams(LstmShape shape) : shape_(shape) {
  if (shape.hidden == 0 || shape.input_dim == 0) {
    throw UsageError("LSTM dimensions must be positive");
  }
  data_.assign(shape.parameter_count(), 0.0);
}

std::span<double> LstmParams::weights(Gate g) {
  const auto n = shape_.gate_weight_count();
  return std::span<double>(data_).subspan(static_cast<std::size_t>(g) * n, n);
}

std::span<const double> LstmParams::weights(Gate g) const {
  const auto n = shape_.gate_weight_count();
  return std::span<const double>(data_).subspan(static_cast<std::size_t>(g) * n, n);
}

std::span<const double> LstmParams::stacked_weights() const {
  return std::span<const double>(data_).subspan(0, kGateCount * shape_.gate_weight_count());
}

std::span<double> LstmParams::bias(Gate g) {
  return std::span<double>(data_).subspan(bias_offset() + static_cast<std::size_t>(g) * shape_.hidden, shape_.hidden);
}

std::span<const double> LstmParams::bias(Gate g) const {
  return std::span<const double>(data_).subspan(bias_offset() + static_cast<std::size_t>(g) * shape_.hidden,
                                                shape_.hidden);
}

std::span<const double> LstmParams::stacked_bias() const {
  return std::span<const double>(data_).subspan(bias_offset(), kGateCount * shape_.hidden);
}

std::span<double> LstmParams::head_weights() { return std::span<double>(data_).subspan(head_offset(), shape_.hidden); }

std::span<const double> LstmParams::head_weights() const {
  return std::span<const double>(data_).subspan(head_offset(), shape_.hidden);
}

void LstmParams::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

bool LstmParams::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

CellStep lstm_cell_forward(std::span<const double> x, const LstmState& prev, const LstmParams& params) {
  const auto& s = params.shape();
  if (params.flat().empty() || x.size() != s.input_dim || prev.c.size() != s.hidden || prev.h.size() != s.hidden) {
    throw UsageError("dimension mismatch in lstm_cell_forward");
  }
  if (!params.all_finite()) {
    throw NumericError("non-finite LSTM parameter");
  }
  std::vector<double> concat(s.concat_dim());
  std::copy(x.begin(), x.end(), concat.begin());
  std::copy(prev.h.begin(), prev.h.end(), concat.begin() + static_cast<long>(s.input_dim));
  if (!std::all_of(concat.begin(), concat.end(), [](double v) { return std::isfinite(v); }) ||
      !std::all_of(prev.c.begin(), prev.c.end(), [](double v) { return std::isfinite(v); })) {
    throw NumericError("non-finite input or state in lstm_cell_forward");
  }

  std::vector<double> gates(kGateCount * s.hidden);
  compute_gates(params, concat.data(), gates.data());

  const std::size_t h = s.hidden;
  CellStep out;
  out.gates.forget.assign(gates.begin(), gates.begin() + static_cast<long>(h));
  out.gates.input.assign(gates.begin() + static_cast<long>(h), gates.begin() + static_cast<long>(2 * h));
  out.gates.candidate.assign(gates.begin() + static_cast<long>(2 * h), gates.begin() + static_cast<long>(3 * h));
  out.gates.output.assign(gates.begin() + static_cast<long>(3 * h), gates.end());
  out.next = LstmState::zeros(h);
  for (std::size_t k = 0; k < h; ++k) {
    out.next.c[k] = out.gates.forget[k] * prev.c[k] + out.gates.input[k] * out.gates.candidate[k];
    out.next.h[k] = out.gates.output[k] * std::tanh(out.next.c[k]);
  }
  return out;
}

double forward_window(const WindowView& window, std::size_t seq_len, const LstmParams& params) {
  require_window(window, seq_len, params);
  BpttWorkspace ws;
  return ws.predict(window, params);
}

LossAndGradients backprop_window(const WindowView& window, std::size_t seq_len, double target,
                                 const LstmParams& params) {
  require_window(window, seq_len, params);
  if (!std::isfinite(target)) {
    throw NumericError("non-finite target");
  }
  LossAndGradients out{0.0, LstmParams(params.shape())};
  BpttWorkspace ws;
  out.loss = ws.accumulate(window, target, params, out.grads, 1.0);
  return out;
}

void BpttWorkspace::resize(const LstmShape& shape, std::size_t steps) {
  if (shape == shape_ && steps == steps_) {
    return;
  }
  shape_ = shape;
  steps_ = steps;
  const std::size_t h = shape.hidden;
  concat_.assign(steps * shape.concat_dim(), 0.0);
  gates_.assign(steps * kGateCount * h, 0.0);
  cells_.assign(steps * h, 0.0);
  hidden_.assign(steps * h, 0.0);
  dz_.assign(kGateCount * h, 0.0);
  dconcat_.assign(shape.concat_dim(), 0.0);
  dh_.assign(h, 0.0);
  dc_.assign(h, 0.0);
}

double BpttWorkspace::run_forward(const WindowView& window, const LstmParams& params) {
  const auto& s = params.shape();
  resize(s, window.rows);
  const std::size_t h = s.hidden;
  const std::size_t d = s.input_dim;
  const std::size_t cdim = s.concat_dim();
  for (std::size_t t = 0; t < steps_; ++t) {
    double* xh = concat_.data() + t * cdim;
    const auto x = window.row(t);
    std::copy(x.begin(), x.end(), xh);
    if (t == 0) {
      std::fill(xh + d, xh + cdim, 0.0);
    } else {
      std::copy_n(hidden_.data() + (t - 1) * h, h, xh + d);
    }
    double* gt = gates_.data() + t * kGateCount * h;
    compute_gates(params, xh, gt);
    double* ct = cells_.data() + t * h;
    double* ht = hidden_.data() + t * h;
    for (std::size_t k = 0; k < h; ++k) {
      const double c_prev = t == 0 ? 0.0 : cells_[(t - 1) * h + k];
      ct[k] = gt[k] * c_prev + gt[h + k] * gt[2 * h + k];
      ht[k] = gt[3 * h + k] * std::tanh(ct[k]);
    }
  }
  const auto head = params.head_weights();
  const double* last = hidden_.data() + (steps_ - 1) * h;
  double y = params.head_bias();
  for (std::size_t k = 0; k < h; ++k) {
    y += head[k] * last[k];
  }
  return y;
}

double BpttWorkspace::predict(const WindowView& window, const LstmParams& params) {
  return run_forward(window, params);
}

double BpttWorkspace::accumulate(const WindowView& window, double target, const LstmParams& params,
                                 LstmParams& grads, double grad_scale) {
  const double prediction = run_forward(window, params);
  const double residual = prediction - target;
  const double loss = residual * residual;

  const auto& s = params.shape();
  const std::size_t h = s.hidden;
  const std::size_t cdim = s.concat_dim();
  const auto rows = static_cast<Eigen::Index>(kGateCount * h);
  const auto cols = static_cast<Eigen::Index>(cdim);

  const double dy = 2.0 * residual * grad_scale;
  const double* last = hidden_.data() + (steps_ - 1) * h;
  auto head_grad = grads.head_weights();
  const auto head = params.head_weights();
  for (std::size_t k = 0; k < h; ++k) {
    head_grad[k] += dy * last[k];
    dh_[k] = dy * head[k];
    dc_[k] = 0.0;
  }
  grads.head_bias() += dy;

  // Gradient blocks share the parameter layout: stacked weights then stacked biases.
  double* gw = grads.flat().data();
  double* gb = gw + kGateCount * s.gate_weight_count();
  MatrixMap dw(gw, rows, cols);
  VectorMap db(gb, rows);
  ConstMatrixMap w(params.stacked_weights().data(), rows, cols);
  VectorMap dz(dz_.data(), rows);
  VectorMap dxh(dconcat_.data(), cols);

  for (std::size_t step = steps_; step-- > 0;) {
    const double* gt = gates_.data() + step * kGateCount * h;
    const double* ct = cells_.data() + step * h;
    for (std::size_t k = 0; k < h; ++k) {
      const double f = gt[k];
      const double i = gt[h + k];
      const double g = gt[2 * h + k];
      const double o = gt[3 * h + k];
      const double tc = std::tanh(ct[k]);
      const double c_prev = step == 0 ? 0.0 : cells_[(step - 1) * h + k];
      const double d_o = dh_[k] * tc;
      const double dc = dc_[k] + dh_[k] * o * (1.0 - tc * tc);
      dz_[k] = dc * c_prev * f * (1.0 - f);
      dz_[h + k] = dc * g * i * (1.0 - i);
      dz_[2 * h + k] = dc * i * (1.0 - g * g);
      dz_[3 * h + k] = d_o * o * (1.0 - o);
      dc_[k] = dc * f;
    }
    ConstVectorMap xh(concat_.data() + step * cdim, cols);
    dw.noalias() += dz * xh.transpose();
    db += dz;
    dxh.noalias() = w.transpose() * dz;
    std::copy_n(dconcat_.data() + s.input_dim, h, dh_.data());
  }
  return loss;
}

}  // namespace qpemerge
