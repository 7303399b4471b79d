// Copyright 2026 The BNO Authors.
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

// Convolution over (space, time) grids, MSE loss, Adam and the step-wise
// learning-rate schedule.
//
// Parameters are always stored in double precision. Activations may be float
// or double; the float path converts weights on entry and accumulates
// gradients back into double.

#ifndef BNO_NEURAL_HPP_
#define BNO_NEURAL_HPP_

#include "bno/tensor.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace bno::nn {

enum class Activation { Relu, Linear };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view s);

/// Same-padded, stride-1 2-D convolution. Weights are laid out as
/// [time_tap][space_tap][in_chan][out_chan].
struct ConvLayer {
  Index time_taps = 1;
  Index space_taps = 1;
  Index in_chan = 1;
  Index out_chan = 1;
  std::vector<double> weights;
  std::vector<double> bias;
  Activation activation = Activation::Linear;

  Index fan_in() const { return time_taps * space_taps * in_chan; }
  Index weight_count() const { return fan_in() * out_chan; }

  double& w(Index dt, Index ds, Index ci, Index co) {
    return weights[static_cast<size_t>(((dt * space_taps + ds) * in_chan + ci) * out_chan + co)];
  }
  double w(Index dt, Index ds, Index ci, Index co) const {
    return weights[static_cast<size_t>(((dt * space_taps + ds) * in_chan + ci) * out_chan + co)];
  }

  /// Throws InvalidArgument unless taps are odd and arrays match the shape.
  void validate() const;

  static ConvLayer zeros(Index time_taps, Index space_taps, Index in_chan,
                         Index out_chan, Activation act);
  /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero bias.
  static ConvLayer glorot(Index time_taps, Index space_taps, Index in_chan,
                          Index out_chan, Activation act, std::mt19937_64& rng);
};

struct ConvGrads {
  std::vector<double> weights;
  std::vector<double> bias;

  static ConvGrads zeros_like(const ConvLayer& layer);
  void set_zero();
};

template <class T>
Tensor3<T> conv2d_forward(const Tensor3<T>& x, const ConvLayer& layer);

template <class T>
struct ConvBackward {
  Tensor3<T> grad_x;
  ConvGrads grads;
};

/// Gradients of the forward map (activation included). Recomputes the
/// forward pass.
template <class T>
ConvBackward<T> conv2d_backward(const Tensor3<T>& x, const ConvLayer& layer,
                                const Tensor3<T>& grad_out);

/// Training-path variant: `y` is the cached forward output, gradients are
/// added into `acc`, and grad_x is produced only when `grad_x` is non-null.
template <class T>
void conv2d_backward_accumulate(const Tensor3<T>& x, const ConvLayer& layer,
                                const Tensor3<T>& y, const Tensor3<T>& grad_out,
                                ConvGrads& acc, Tensor3<T>* grad_x);

template <class T>
struct LossResult {
  double loss = 0.0;
  std::vector<Tensor3<T>> grad;
};

/// Mean over batch x space x time x channel of squared differences.
template <class T>
LossResult<T> mse_loss(std::span<const Tensor3<T>> pred,
                       std::span<const Tensor3<T>> target);

/// Sum of squared differences for one sample; writes 2 (pred - target) / count
/// into grad. Used to build batch losses one sample at a time.
template <class T>
double mse_partial(const Tensor3<T>& pred, const Tensor3<T>& target,
                   double count, Tensor3<T>* grad);

struct AdamState {
  std::int64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update over a list of parameter tensors. Moment
/// buffers are allocated on the first call.
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state,
               double lr);

struct LrSchedule {
  std::vector<std::int64_t> boundaries;
  std::vector<double> rates;

  /// 1e-3 until step 1500, 1e-4 until step 2500, 1e-5 afterwards.
  static LrSchedule standard();
  void validate() const;
};

double lr_at(const LrSchedule& schedule, std::int64_t iteration);

}  // namespace bno::nn

#endif  // BNO_NEURAL_HPP_
