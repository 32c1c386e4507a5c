// Copyright 2026 The socprob Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SOCPROB__CONVLSTM_HPP_
#define SOCPROB__CONVLSTM_HPP_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "socprob/random.hpp"
#include "socprob/tensor.hpp"

namespace socprob::nn
{

struct CellShape
{
  std::size_t in_channels = 1;
  std::size_t hidden_channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t kernel = 3;
};

/**
 * @brief Weights of one ConvLSTM cell with peephole connections.
 *
 *   i  = sigmoid(W_xi * x + W_hi * h + W_ci o c  + b_i)
 *   f  = sigmoid(W_xf * x + W_hf * h + W_cf o c  + b_f)
 *   c' = f o c + i o tanh(W_xc * x + W_hc * h + b_c)
 *   o  = sigmoid(W_xo * x + W_ho * h + W_co o c' + b_o)
 *   h' = o o tanh(c')
 *
 * `*` is a same-size convolution, `o` the Hadamard product. The W_c* weights
 * have the state's full C x H x W shape, which ties a model to one grid size.
 */
struct ConvLstmCellParams
{
  Tensor w_xi, w_hi, w_xf, w_hf, w_xc, w_hc, w_xo, w_ho;
  Tensor w_ci, w_cf, w_co;
  Tensor b_i, b_f, b_c, b_o;

  static ConvLstmCellParams zeros(const CellShape & shape);

  CellShape shape() const;

  /// Visits every tensor in declaration order with a stable name.
  void for_each(const std::function<void(const std::string &, Tensor &)> & fn);
  void for_each(const std::function<void(const std::string &, const Tensor &)> & fn) const;

  friend bool operator==(const ConvLstmCellParams &, const ConvLstmCellParams &) = default;
};

struct ConvLstmState
{
  Tensor h;
  Tensor c;

  static ConvLstmState zeros(std::size_t channels, std::size_t height, std::size_t width);
};

/// One step of the cell equations above.
ConvLstmState cell_forward(const Tensor & x, const ConvLstmState & state,
  const ConvLstmCellParams & params);

struct StackConfig
{
  std::size_t height = 100;
  std::size_t width = 100;
  std::vector<std::size_t> channels{128, 64, 64, 32, 32};
  std::size_t kernel = 3;
  std::size_t input_channels = 1;

  friend bool operator==(const StackConfig &, const StackConfig &) = default;
};

/// 1x1 convolution from the top hidden state to one channel, then sigmoid.
struct HeadParams
{
  Tensor weight;  // 1 x C x 1 x 1
  Tensor bias;    // 1

  friend bool operator==(const HeadParams &, const HeadParams &) = default;
};

struct StackParams
{
  std::vector<ConvLstmCellParams> layers;
  HeadParams head;

  static StackParams zeros(const StackConfig & config);
  /// Kernels U(-1/sqrt(fan_in), 1/sqrt(fan_in)), b_f = 1, everything else 0.
  static StackParams initialize(const StackConfig & config, Rng & rng);

  StackConfig config() const;
  std::size_t num_values() const;

  void for_each(const std::function<void(const std::string &, Tensor &)> & fn);
  void for_each(const std::function<void(const std::string &, const Tensor &)> & fn) const;

  friend bool operator==(const StackParams &, const StackParams &) = default;
};

/// Intermediates of one cell step kept for the backward pass.
struct CellTape
{
  Tensor joint_input;  // [x; h_prev], (Cin + C) x H x W
  Tensor c_prev;
  Tensor i, f, g, o;   // gate activations (g = tanh candidate)
  Tensor c;
  Tensor tanh_c;
};

struct StackTape
{
  std::vector<std::vector<CellTape>> steps;  // [time][layer]
  std::vector<Tensor> top_hidden;            // [time]
  std::vector<Tensor> predictions;           // [time], 1 x H x W
};

struct StackOutput
{
  std::vector<Tensor> predictions;  // one 1 x H x W map per input step
  std::vector<ConvLstmState> final_states;
  StackTape tape;  // empty unless requested
};

/**
 * @brief Runs the stack over a sequence from zero initial states.
 *
 * Layer l consumes layer l-1's hidden sequence; the head turns the top
 * layer's hidden state into a sigmoid map at every step.
 */
StackOutput stack_forward(std::span<const Tensor> inputs, const StackParams & params,
  bool keep_tape = true);

/**
 * @brief Backpropagation through time.
 *
 * `grad_predictions[t]` is dLoss/dPrediction_t (1 x H x W) or an empty
 * tensor for steps without loss. Returns gradients shaped like `params`.
 */
StackParams stack_backward(const StackParams & params, const StackTape & tape,
  std::span<const Tensor> grad_predictions);

/// Incremental inference without a tape, one input map per call. Copies are
/// cheap and continue independently from the copied state.
class StackRunner
{
public:
  explicit StackRunner(const StackParams & params);

  /// Feeds one 1 x H x W input and returns the predicted map.
  Tensor step(const Tensor & input);
  void reset();
  const std::vector<ConvLstmState> & states() const { return states_; }

private:
  struct Packed
  {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> bias;
  };

  const StackParams * params_;
  std::shared_ptr<const Packed> packed_;  // shared by copies of the runner
  std::vector<ConvLstmState> states_;
};

// Flat views used by the optimizer and gradient checks.
std::vector<Tensor *> parameter_list(StackParams & params);
std::vector<const Tensor *> parameter_list(const StackParams & params);
std::vector<std::string> parameter_names(const StackParams & params);

}  // namespace socprob::nn

#endif  // SOCPROB__CONVLSTM_HPP_
