/**
 * @file lstm.hpp
 * @brief Single-layer LSTM with a scalar regression head.
 *
 * Gate equations, with `[x, h]` the concatenation of the input and the
 * previous hidden state:
 *
 *     f = sigmoid(W_f [x, h] + b_f)
 *     i = sigmoid(W_i [x, h] + b_i)
 *     g = tanh   (W_c [x, h] + b_c)      (candidate cell state)
 *     o = sigmoid(W_o [x, h] + b_o)
 *     c' = f * c + i * g
 *     h' = o * tanh(c')
 *
 * A window of inputs is run from a zero state and the last hidden state is
 * mapped to one value by `w_y . h + b_y`.
 */
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qpemerge {

enum class Gate : std::size_t { Forget = 0, Input = 1, Candidate = 2, Output = 3 };
inline constexpr std::size_t kGateCount = 4;

struct LstmShape {
  std::size_t input_dim{};
  std::size_t hidden{};

  [[nodiscard]] std::size_t concat_dim() const { return input_dim + hidden; }
  [[nodiscard]] std::size_t gate_weight_count() const { return hidden * concat_dim(); }
  /// Total learnable values: 4 gate matrices, 4 biases, head weights, head bias.
  [[nodiscard]] std::size_t parameter_count() const {
    return kGateCount * gate_weight_count() + kGateCount * hidden + hidden + 1;
  }
  friend bool operator==(const LstmShape&, const LstmShape&) = default;
};

/**
 * @brief All learnable values in one contiguous buffer.
 *
 * Layout (also the serialization order): W_f, W_i, W_c, W_o (each
 * `hidden x (input_dim + hidden)`, row-major), b_f, b_i, b_c, b_o, w_y, b_y.
 * Gradients use the same type.
 */
class LstmParams {
 public:
  LstmParams() = default;
  /// Zero-initialized. Throws UsageError if either dimension is zero.
  explicit LstmParams(LstmShape shape);

  [[nodiscard]] const LstmShape& shape() const { return shape_; }

  [[nodiscard]] std::span<double> weights(Gate g);
  [[nodiscard]] std::span<const double> weights(Gate g) const;
  /// All four gate matrices stacked as one `4*hidden x concat` row-major block.
  [[nodiscard]] std::span<const double> stacked_weights() const;
  [[nodiscard]] std::span<double> bias(Gate g);
  [[nodiscard]] std::span<const double> bias(Gate g) const;
  [[nodiscard]] std::span<const double> stacked_bias() const;
  [[nodiscard]] std::span<double> head_weights();
  [[nodiscard]] std::span<const double> head_weights() const;
  [[nodiscard]] double& head_bias() { return data_.back(); }
  [[nodiscard]] double head_bias() const { return data_.back(); }

  [[nodiscard]] std::span<double> flat() { return data_; }
  [[nodiscard]] std::span<const double> flat() const { return data_; }

  void set_zero();
  [[nodiscard]] bool all_finite() const;

  friend bool operator==(const LstmParams&, const LstmParams&) = default;

 private:
  [[nodiscard]] std::size_t bias_offset() const { return kGateCount * shape_.gate_weight_count(); }
  [[nodiscard]] std::size_t head_offset() const { return bias_offset() + kGateCount * shape_.hidden; }

  LstmShape shape_{};
  std::vector<double> data_;
};

struct LstmState {
  std::vector<double> c;
  std::vector<double> h;

  static LstmState zeros(std::size_t hidden) { return {std::vector<double>(hidden, 0.0), std::vector<double>(hidden, 0.0)}; }
};

struct GateActivations {
  std::vector<double> forget;
  std::vector<double> input;
  std::vector<double> candidate;
  std::vector<double> output;
};

struct CellStep {
  LstmState next;
  GateActivations gates;
};

/**
 * @brief One recurrence step.
 *
 * Throws UsageError on dimension mismatch and NumericError when a parameter
 * or input is non-finite.
 */
CellStep lstm_cell_forward(std::span<const double> x, const LstmState& prev, const LstmParams& params);

/// Row-major `rows x cols` view of an input window.
struct WindowView {
  std::span<const double> data;
  std::size_t rows{};
  std::size_t cols{};

  [[nodiscard]] std::span<const double> row(std::size_t t) const { return data.subspan(t * cols, cols); }
};

/// Runs the window from a zero state and applies the output head.
/// Throws UsageError if the window is not `seq_len x input_dim`.
double forward_window(const WindowView& window, std::size_t seq_len, const LstmParams& params);

struct LossAndGradients {
  double loss{};
  LstmParams grads;
};

/// Squared error `(prediction - target)^2` and its exact gradient via
/// backpropagation through time.
LossAndGradients backprop_window(const WindowView& window, std::size_t seq_len, double target,
                                 const LstmParams& params);

/**
 * @brief Reusable buffers for repeated forward/backward passes.
 *
 * Used by the trainer to avoid per-window allocation; results are identical
 * to `backprop_window`.
 */
class BpttWorkspace {
 public:
  BpttWorkspace() = default;

  /// Adds the gradient of the squared error for one window into `grads`
  /// (scaled by `grad_scale`) and returns the unscaled loss. No argument
  /// validation; callers check shapes and finiteness once up front.
  double accumulate(const WindowView& window, double target, const LstmParams& params, LstmParams& grads,
                    double grad_scale);

  /// Forward pass only, sharing the same buffers.
  double predict(const WindowView& window, const LstmParams& params);

 private:
  void resize(const LstmShape& shape, std::size_t steps);
  double run_forward(const WindowView& window, const LstmParams& params);

  LstmShape shape_{};
  std::size_t steps_{};
  // Per step t (0-based): concat input [x_t, h_{t-1}], gate activations
  // (4*hidden, order f,i,g,o), and cell state c_t. c_{-1} = h_{-1} = 0.
  std::vector<double> concat_;
  std::vector<double> gates_;
  std::vector<double> cells_;
  std::vector<double> hidden_;
  std::vector<double> dz_;
  std::vector<double> dconcat_;
  std::vector<double> dh_;
  std::vector<double> dc_;
};

}  // namespace qpemerge
