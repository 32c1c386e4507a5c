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

#include "socprob/convlstm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <string>

#if defined(__SSE2__)
#include <xmmintrin.h>
#endif

#include "socprob/error.hpp"
#include "socprob/ops.hpp"

namespace socprob::nn
{

namespace
{

constexpr std::size_t kGates = 4;  // i, f, c, o

std::array<const Tensor *, kGates> input_kernels(const ConvLstmCellParams & p)
{
  return {&p.w_xi, &p.w_xf, &p.w_xc, &p.w_xo};
}
std::array<const Tensor *, kGates> hidden_kernels(const ConvLstmCellParams & p)
{
  return {&p.w_hi, &p.w_hf, &p.w_hc, &p.w_ho};
}
std::array<const Tensor *, kGates> gate_biases(const ConvLstmCellParams & p)
{
  return {&p.b_i, &p.b_f, &p.b_c, &p.b_o};
}
std::array<Tensor *, kGates> input_kernels(ConvLstmCellParams & p)
{
  return {&p.w_xi, &p.w_xf, &p.w_xc, &p.w_xo};
}
std::array<Tensor *, kGates> hidden_kernels(ConvLstmCellParams & p)
{
  return {&p.w_hi, &p.w_hf, &p.w_hc, &p.w_ho};
}
std::array<Tensor *, kGates> gate_biases(ConvLstmCellParams & p)
{
  return {&p.b_i, &p.b_f, &p.b_c, &p.b_o};
}

// Flush-to-zero and denormals-are-zero for the current thread while in scope.
class FlushDenormals
{
public:
#if defined(__SSE2__)
  FlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040); }
  ~FlushDenormals() { _mm_setcsr(saved_); }

private:
  unsigned int saved_;
#endif
};

// Gate weights laid out as one (4C) x ((Cin + C) K K) matrix matching the
// im2col rows of the concatenated [x; h] input.
struct PackedCell
{
  std::vector<double> weights;
  std::vector<double> bias;
};

PackedCell pack(const ConvLstmCellParams & p)
{
  const CellShape s = p.shape();
  const std::size_t kk = s.kernel * s.kernel;
  const std::size_t x_cols = s.in_channels * kk;
  const std::size_t h_cols = s.hidden_channels * kk;
  const std::size_t row_len = x_cols + h_cols;
  PackedCell packed;
  packed.weights.resize(kGates * s.hidden_channels * row_len);
  packed.bias.resize(kGates * s.hidden_channels);
  const auto wx = input_kernels(p);
  const auto wh = hidden_kernels(p);
  const auto b = gate_biases(p);
  for (std::size_t gate = 0; gate < kGates; ++gate) {
    for (std::size_t o = 0; o < s.hidden_channels; ++o) {
      double * row = packed.weights.data() + (gate * s.hidden_channels + o) * row_len;
      std::memcpy(row, wx[gate]->raw() + o * x_cols, x_cols * sizeof(double));
      std::memcpy(row + x_cols, wh[gate]->raw() + o * h_cols, h_cols * sizeof(double));
      packed.bias[gate * s.hidden_channels + o] = (*b[gate])[o];
    }
  }
  return packed;
}

void check_cell_inputs(const Tensor & x, const ConvLstmState & state, const CellShape & s)
{
  const Shape state_shape{s.hidden_channels, s.height, s.width};
  if (x.shape() != Shape{s.in_channels, s.height, s.width}) {
    throw DimensionError(
      "cell_forward: input " + shape_to_string(x.shape()) + " does not match cell input " +
      shape_to_string({s.in_channels, s.height, s.width}));
  }
  if (state.h.shape() != state_shape || state.c.shape() != state_shape) {
    throw DimensionError("cell_forward: state shape does not match " + shape_to_string(state_shape));
  }
}

struct Scratch
{
  std::vector<double> columns;
  std::vector<double> preact;
};

// One cell step. Writes the new state into `next`; fills `tape` if non-null.
void cell_step(
  const ConvLstmCellParams & p, const double * packed_weights, const double * packed_bias,
  const Tensor & x,
  const ConvLstmState & prev, ConvLstmState & next, CellTape * tape, Scratch & scratch)
{
  const CellShape s = p.shape();
  check_cell_inputs(x, prev, s);
  const std::size_t n = s.height * s.width;
  const std::size_t hc = s.hidden_channels;
  const std::size_t joint_ch = s.in_channels + hc;
  const std::size_t rows = joint_ch * s.kernel * s.kernel;

  Tensor joint({joint_ch, s.height, s.width});
  std::memcpy(joint.raw(), x.raw(), x.size() * sizeof(double));
  std::memcpy(joint.raw() + x.size(), prev.h.raw(), prev.h.size() * sizeof(double));

  scratch.columns.resize(rows * n);
  scratch.preact.resize(kGates * hc * n);
  detail::im2col(
    joint.raw(), joint_ch, s.height, s.width, s.kernel, (s.kernel - 1) / 2, scratch.columns.data());
  detail::gemm(
    packed_weights, scratch.columns.data(), scratch.preact.data(), kGates * hc, rows, n, false);

  next.h = Tensor({hc, s.height, s.width});
  next.c = Tensor({hc, s.height, s.width});
  Tensor gi, gf, gg, go, tc;
  if (tape) {
    gi = gf = gg = go = tc = Tensor({hc, s.height, s.width});
  }
  const double * z = scratch.preact.data();
  for (std::size_t ch = 0; ch < hc; ++ch) {
    const double bi = packed_bias[0 * hc + ch];
    const double bf = packed_bias[1 * hc + ch];
    const double bc = packed_bias[2 * hc + ch];
    const double bo = packed_bias[3 * hc + ch];
    const double * zi = z + (0 * hc + ch) * n;
    const double * zf = z + (1 * hc + ch) * n;
    const double * zc = z + (2 * hc + ch) * n;
    const double * zo = z + (3 * hc + ch) * n;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t idx = ch * n + k;
      const double c_prev = prev.c[idx];
      const double i = sigmoid(zi[k] + bi + p.w_ci[idx] * c_prev);
      const double f = sigmoid(zf[k] + bf + p.w_cf[idx] * c_prev);
      const double g = std::tanh(zc[k] + bc);
      const double c = f * c_prev + i * g;
      const double o = sigmoid(zo[k] + bo + p.w_co[idx] * c);
      const double t = std::tanh(c);
      next.c[idx] = c;
      next.h[idx] = o * t;
      if (tape) {
        gi[idx] = i;
        gf[idx] = f;
        gg[idx] = g;
        go[idx] = o;
        tc[idx] = t;
      }
    }
  }
  if (tape) {
    tape->joint_input = std::move(joint);
    tape->c_prev = prev.c;
    tape->i = std::move(gi);
    tape->f = std::move(gf);
    tape->g = std::move(gg);
    tape->o = std::move(go);
    tape->c = next.c;
    tape->tanh_c = std::move(tc);
  }
}

Tensor head_forward(const HeadParams & head, const Tensor & h)
{
  const std::size_t channels = h.dim(0);
  const std::size_t n = h.dim(1) * h.dim(2);
  Tensor out({1, h.dim(1), h.dim(2)}, head.bias[0]);
  for (std::size_t c = 0; c < channels; ++c) {
    const double w = head.weight[c];
    const double * plane = h.raw() + c * n;
    for (std::size_t k = 0; k < n; ++k) {
      out[k] += w * plane[k];
    }
  }
  for (auto & v : out.data()) {
    v = sigmoid(v);
  }
  return out;
}

// Uniform in [-bound, bound], rounded to float.
void init_uniform(Tensor & t, double bound, Rng & rng)
{
  for (auto & v : t.data()) {
    v = static_cast<float>(uniform(rng, -bound, bound));
  }
}

}  // namespace

// ---------------------------------------------------------------- params

ConvLstmCellParams ConvLstmCellParams::zeros(const CellShape & s)
{
  if (s.kernel % 2 == 0 || s.kernel == 0) {
    throw DimensionError("ConvLSTM kernel size must be odd");
  }
  const Shape wx{s.hidden_channels, s.in_channels, s.kernel, s.kernel};
  const Shape wh{s.hidden_channels, s.hidden_channels, s.kernel, s.kernel};
  const Shape peep{s.hidden_channels, s.height, s.width};
  const Shape bias{s.hidden_channels};
  ConvLstmCellParams p;
  p.w_xi = p.w_xf = p.w_xc = p.w_xo = Tensor(wx);
  p.w_hi = p.w_hf = p.w_hc = p.w_ho = Tensor(wh);
  p.w_ci = p.w_cf = p.w_co = Tensor(peep);
  p.b_i = p.b_f = p.b_c = p.b_o = Tensor(bias);
  return p;
}

CellShape ConvLstmCellParams::shape() const
{
  return {w_xi.dim(1), w_xi.dim(0), w_ci.dim(1), w_ci.dim(2), w_xi.dim(2)};
}

void ConvLstmCellParams::for_each(const std::function<void(const std::string &, Tensor &)> & fn)
{
  fn("w_xi", w_xi);
  fn("w_hi", w_hi);
  fn("w_xf", w_xf);
  fn("w_hf", w_hf);
  fn("w_xc", w_xc);
  fn("w_hc", w_hc);
  fn("w_xo", w_xo);
  fn("w_ho", w_ho);
  fn("w_ci", w_ci);
  fn("w_cf", w_cf);
  fn("w_co", w_co);
  fn("b_i", b_i);
  fn("b_f", b_f);
  fn("b_c", b_c);
  fn("b_o", b_o);
}

void ConvLstmCellParams::for_each(
  const std::function<void(const std::string &, const Tensor &)> & fn) const
{
  const_cast<ConvLstmCellParams *>(this)->for_each(
    [&](const std::string & name, Tensor & t) { fn(name, t); });
}

ConvLstmState ConvLstmState::zeros(std::size_t channels, std::size_t height, std::size_t width)
{
  return {Tensor({channels, height, width}), Tensor({channels, height, width})};
}

ConvLstmState cell_forward(
  const Tensor & x, const ConvLstmState & state, const ConvLstmCellParams & params)
{
  const FlushDenormals flush;
  const PackedCell packed = pack(params);
  Scratch scratch;
  ConvLstmState next;
  cell_step(params, packed.weights.data(), packed.bias.data(), x, state, next, nullptr, scratch);
  return next;
}

StackParams StackParams::zeros(const StackConfig & config)
{
  if (config.channels.empty()) {
    throw ArgumentError("StackConfig needs at least one layer");
  }
  StackParams p;
  std::size_t in = config.input_channels;
  for (std::size_t hidden : config.channels) {
    p.layers.push_back(
      ConvLstmCellParams::zeros({in, hidden, config.height, config.width, config.kernel}));
    in = hidden;
  }
  p.head.weight = Tensor({1, in, 1, 1});
  p.head.bias = Tensor({1});
  return p;
}

StackParams StackParams::initialize(const StackConfig & config, Rng & rng)
{
  StackParams p = zeros(config);
  for (auto & layer : p.layers) {
    const CellShape s = layer.shape();
    const double kk = static_cast<double>(s.kernel * s.kernel);
    const double x_bound = 1.0 / std::sqrt(static_cast<double>(s.in_channels) * kk);
    const double h_bound = 1.0 / std::sqrt(static_cast<double>(s.hidden_channels) * kk);
    for (Tensor * w : input_kernels(layer)) {
      init_uniform(*w, x_bound, rng);
    }
    for (Tensor * w : hidden_kernels(layer)) {
      init_uniform(*w, h_bound, rng);
    }
    layer.b_f.fill(1.0);
  }
  init_uniform(p.head.weight, 1.0 / std::sqrt(static_cast<double>(p.head.weight.dim(1))), rng);
  return p;
}

StackConfig StackParams::config() const
{
  StackConfig c;
  c.channels.clear();
  for (const auto & layer : layers) {
    c.channels.push_back(layer.shape().hidden_channels);
  }
  const CellShape first = layers.at(0).shape();
  c.height = first.height;
  c.width = first.width;
  c.kernel = first.kernel;
  c.input_channels = first.in_channels;
  return c;
}

std::size_t StackParams::num_values() const
{
  std::size_t n = 0;
  for_each([&](const std::string &, const Tensor & t) { n += t.size(); });
  return n;
}

void StackParams::for_each(const std::function<void(const std::string &, Tensor &)> & fn)
{
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    layers[l].for_each([&](const std::string & name, Tensor & t) { fn(prefix + name, t); });
  }
  fn("head.weight", head.weight);
  fn("head.bias", head.bias);
}

void StackParams::for_each(
  const std::function<void(const std::string &, const Tensor &)> & fn) const
{
  const_cast<StackParams *>(this)->for_each(
    [&](const std::string & name, Tensor & t) { fn(name, t); });
}

std::vector<Tensor *> parameter_list(StackParams & params)
{
  std::vector<Tensor *> out;
  params.for_each([&](const std::string &, Tensor & t) { out.push_back(&t); });
  return out;
}

std::vector<const Tensor *> parameter_list(const StackParams & params)
{
  std::vector<const Tensor *> out;
  params.for_each([&](const std::string &, const Tensor & t) { out.push_back(&t); });
  return out;
}

std::vector<std::string> parameter_names(const StackParams & params)
{
  std::vector<std::string> out;
  params.for_each([&](const std::string & name, const Tensor &) { out.push_back(name); });
  return out;
}

// ---------------------------------------------------------------- forward

StackOutput stack_forward(
  std::span<const Tensor> inputs, const StackParams & params, bool keep_tape)
{
  if (inputs.empty()) {
    throw ArgumentError("stack_forward: empty input sequence");
  }
  if (params.layers.empty()) {
    throw ArgumentError("stack_forward: no layers");
  }
  const FlushDenormals flush;
  const std::size_t num_layers = params.layers.size();
  std::vector<PackedCell> packed;
  for (const auto & layer : params.layers) {
    packed.push_back(pack(layer));
  }

  StackOutput out;
  for (const auto & layer : params.layers) {
    const CellShape s = layer.shape();
    out.final_states.push_back(ConvLstmState::zeros(s.hidden_channels, s.height, s.width));
  }
  if (keep_tape) {
    out.tape.steps.resize(inputs.size(), std::vector<CellTape>(num_layers));
  }

  Scratch scratch;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const Tensor * x = &inputs[t];
    for (std::size_t l = 0; l < num_layers; ++l) {
      ConvLstmState next;
      CellTape * tape = keep_tape ? &out.tape.steps[t][l] : nullptr;
      cell_step(params.layers[l], packed[l].weights.data(), packed[l].bias.data(), *x,
        out.final_states[l], next, tape, scratch);
      out.final_states[l] = std::move(next);
      x = &out.final_states[l].h;
    }
    out.predictions.push_back(head_forward(params.head, *x));
    if (keep_tape) {
      out.tape.top_hidden.push_back(*x);
    }
  }
  if (keep_tape) {
    out.tape.predictions = out.predictions;
  }
  return out;
}

StackRunner::StackRunner(const StackParams & params) : params_(&params)
{
  if (params.layers.empty()) {
    throw ArgumentError("StackRunner: no layers");
  }
  auto packed = std::make_shared<Packed>();
  for (const auto & layer : params.layers) {
    PackedCell p = pack(layer);
    packed->weights.push_back(std::move(p.weights));
    packed->bias.push_back(std::move(p.bias));
  }
  packed_ = std::move(packed);
  reset();
}

void StackRunner::reset()
{
  states_.clear();
  for (const auto & layer : params_->layers) {
    const CellShape s = layer.shape();
    states_.push_back(ConvLstmState::zeros(s.hidden_channels, s.height, s.width));
  }
}

Tensor StackRunner::step(const Tensor & input)
{
  const FlushDenormals flush;
  Scratch scratch;
  const Tensor * x = &input;
  for (std::size_t l = 0; l < states_.size(); ++l) {
    ConvLstmState next;
    cell_step(params_->layers[l], packed_->weights[l].data(), packed_->bias[l].data(), *x,
      states_[l], next, nullptr, scratch);
    states_[l] = std::move(next);
    x = &states_[l].h;
  }
  return head_forward(params_->head, *x);
}

// ---------------------------------------------------------------- backward

namespace
{

void check_tape(const StackParams & params, const StackTape & tape, std::size_t num_grads)
{
  if (tape.steps.empty() || tape.steps.size() != tape.predictions.size() ||
      tape.steps.size() != tape.top_hidden.size())
  {
    throw Error("stack_backward: incomplete tape");
  }
  if (num_grads != tape.steps.size()) {
    throw Error("stack_backward: expected one gradient slot per time step");
  }
  for (const auto & step : tape.steps) {
    if (step.size() != params.layers.size()) {
      throw Error("stack_backward: tape depth does not match the parameters");
    }
  }
}

// Backward through one cell step. `dh` and `dc` hold the gradients flowing
// into h_t and c_t; on return they hold the gradients for h_{t-1}, c_{t-1},
// and `dx` the gradient for the step input.
void cell_backward(
  const ConvLstmCellParams & p, const PackedCell & packed, const CellTape & tape, Tensor & dh,
  Tensor & dc, Tensor & dx, ConvLstmCellParams & grads, Scratch & scratch)
{
  const CellShape s = p.shape();
  const std::size_t n = s.height * s.width;
  const std::size_t hc = s.hidden_channels;
  const std::size_t joint_ch = s.in_channels + hc;
  const std::size_t kk = s.kernel * s.kernel;
  const std::size_t rows = joint_ch * kk;
  const std::size_t pad = (s.kernel - 1) / 2;

  std::vector<double> dz(kGates * hc * n);
  Tensor dc_prev({hc, s.height, s.width});
  for (std::size_t ch = 0; ch < hc; ++ch) {
    double * dzi = dz.data() + (0 * hc + ch) * n;
    double * dzf = dz.data() + (1 * hc + ch) * n;
    double * dzg = dz.data() + (2 * hc + ch) * n;
    double * dzo = dz.data() + (3 * hc + ch) * n;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t idx = ch * n + k;
      const double i = tape.i[idx];
      const double f = tape.f[idx];
      const double g = tape.g[idx];
      const double o = tape.o[idx];
      const double t = tape.tanh_c[idx];
      const double c = tape.c[idx];
      const double c_prev = tape.c_prev[idx];

      const double d_o = dh[idx] * t;
      double d_c = dc[idx] + dh[idx] * o * (1.0 - t * t);
      const double d_zo = d_o * o * (1.0 - o);
      d_c += d_zo * p.w_co[idx];
      grads.w_co[idx] += d_zo * c;

      const double d_zi = d_c * g * i * (1.0 - i);
      const double d_zf = d_c * c_prev * f * (1.0 - f);
      const double d_zg = d_c * i * (1.0 - g * g);
      grads.w_ci[idx] += d_zi * c_prev;
      grads.w_cf[idx] += d_zf * c_prev;
      dc_prev[idx] = d_c * f + d_zi * p.w_ci[idx] + d_zf * p.w_cf[idx];

      dzi[k] = d_zi;
      dzf[k] = d_zf;
      dzg[k] = d_zg;
      dzo[k] = d_zo;
    }
  }

  auto gb = gate_biases(grads);
  for (std::size_t gate = 0; gate < kGates; ++gate) {
    for (std::size_t ch = 0; ch < hc; ++ch) {
      const double * row = dz.data() + (gate * hc + ch) * n;
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        acc += row[k];
      }
      (*gb[gate])[ch] += acc;
    }
  }

  scratch.columns.resize(rows * n);
  detail::im2col(tape.joint_input.raw(), joint_ch, s.height, s.width, s.kernel, pad,
    scratch.columns.data());
  std::vector<double> dw(kGates * hc * rows);
  detail::gemm_nt(dz.data(), scratch.columns.data(), dw.data(), kGates * hc, n, rows, false);
  const std::size_t x_cols = s.in_channels * kk;
  const std::size_t h_cols = hc * kk;
  auto gx = input_kernels(grads);
  auto gh = hidden_kernels(grads);
  for (std::size_t gate = 0; gate < kGates; ++gate) {
    for (std::size_t o = 0; o < hc; ++o) {
      const double * row = dw.data() + (gate * hc + o) * rows;
      double * wx = gx[gate]->raw() + o * x_cols;
      double * wh = gh[gate]->raw() + o * h_cols;
      for (std::size_t q = 0; q < x_cols; ++q) {
        wx[q] += row[q];
      }
      for (std::size_t q = 0; q < h_cols; ++q) {
        wh[q] += row[x_cols + q];
      }
    }
  }

  // Reuse the column buffer for d(columns) = W^T dz.
  detail::gemm_tn(packed.weights.data(), dz.data(), scratch.columns.data(), rows, kGates * hc, n,
    false);
  Tensor djoint({joint_ch, s.height, s.width});
  detail::col2im(scratch.columns.data(), joint_ch, s.height, s.width, s.kernel, pad, djoint.raw());

  dx = Tensor({s.in_channels, s.height, s.width});
  std::memcpy(dx.raw(), djoint.raw(), dx.size() * sizeof(double));
  std::memcpy(dh.raw(), djoint.raw() + dx.size(), dh.size() * sizeof(double));
  dc = std::move(dc_prev);
}

}  // namespace

StackParams stack_backward(
  const StackParams & params, const StackTape & tape, std::span<const Tensor> grad_predictions)
{
  check_tape(params, tape, grad_predictions.size());
  const FlushDenormals flush;
  const std::size_t num_layers = params.layers.size();
  const std::size_t steps = tape.steps.size();
  StackParams grads = StackParams::zeros(params.config());

  std::vector<PackedCell> packed;
  for (const auto & layer : params.layers) {
    packed.push_back(pack(layer));
  }

  // Recurrent gradients carried from step t+1 into step t, per layer.
  std::vector<Tensor> dh_next, dc_next;
  for (const auto & layer : params.layers) {
    const CellShape s = layer.shape();
    dh_next.emplace_back(Shape{s.hidden_channels, s.height, s.width});
    dc_next.emplace_back(Shape{s.hidden_channels, s.height, s.width});
  }

  Scratch scratch;
  const std::size_t top_channels = params.head.weight.dim(1);
  for (std::size_t t = steps; t-- > 0;) {
    // Head: y = sigmoid(w . h_top + b).
    Tensor dh_from_above({top_channels, tape.top_hidden[t].dim(1), tape.top_hidden[t].dim(2)});
    const Tensor & dy = grad_predictions[t];
    if (!dy.empty()) {
      const Tensor & y = tape.predictions[t];
      require_same_shape(dy, y, "stack_backward");
      const Tensor & h = tape.top_hidden[t];
      const std::size_t n = y.size();
      std::vector<double> dpre(n);
      double bias_grad = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        dpre[k] = dy[k] * y[k] * (1.0 - y[k]);
        bias_grad += dpre[k];
      }
      grads.head.bias[0] += bias_grad;
      for (std::size_t c = 0; c < top_channels; ++c) {
        const double w = params.head.weight[c];
        const double * plane = h.raw() + c * n;
        double * dplane = dh_from_above.raw() + c * n;
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          acc += dpre[k] * plane[k];
          dplane[k] = w * dpre[k];
        }
        grads.head.weight[c] += acc;
      }
    }

    for (std::size_t l = num_layers; l-- > 0;) {
      Tensor dh = dh_next[l];
      axpy(1.0, dh_from_above, dh);
      Tensor dc = std::move(dc_next[l]);
      Tensor dx;
      cell_backward(params.layers[l], packed[l], tape.steps[t][l], dh, dc, dx, grads.layers[l],
        scratch);
      dh_next[l] = std::move(dh);
      dc_next[l] = std::move(dc);
      dh_from_above = std::move(dx);
    }
  }
  return grads;
}

}  // namespace socprob::nn
