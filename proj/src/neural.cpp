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

#include "bno/neural.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstring>
#include <string>

namespace bno::nn {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using RowMap = Eigen::Map<RowMat<T>>;
template <class T>
using ConstRowMap = Eigen::Map<const RowMat<T>>;

void check_input(const ConvLayer& layer, Index n_chan) {
  if (n_chan != layer.in_chan) {
    throw Error(ErrorKind::ChanMismatch,
                "input has " + std::to_string(n_chan) + " channels, layer expects " +
                    std::to_string(layer.in_chan));
  }
}

// Per-thread scratch matrices, reused across calls so that large buffers are
// not reallocated (and page-faulted) on every convolution.
template <class T>
RowMat<T>& scratch(int slot) {
  thread_local RowMat<T> buffers[3];
  return buffers[slot];
}

// The convolution runs on a zero-padded copy of the grid, one row per padded
// (s, t) position. Output position (s, t) is row s * nt_pad + t of a block of
// `rows` consecutive rows, and the input rows feeding tap (dt, ds) are the
// same block shifted by ds * nt_pad + dt. Rows of the block that fall in the
// time padding are scratch and never read back.
struct PadGeometry {
  Index ns, nt, nt_pad, total, rows;
  Index ps, pt;

  PadGeometry(Index n_space, Index n_time, const ConvLayer& layer)
      : ns(n_space), nt(n_time), ps(layer.space_taps / 2), pt(layer.time_taps / 2) {
    nt_pad = nt + 2 * pt;
    total = (ns + 2 * ps) * nt_pad;
    rows = (ns - 1) * nt_pad + nt;
  }
  Index block_row(Index s, Index t) const { return s * nt_pad + t; }
  Index padded_row(Index s, Index t) const { return (s + ps) * nt_pad + t + pt; }
  Index tap_offset(Index dt, Index ds) const { return ds * nt_pad + dt; }
};

template <class T>
void pad_into(const Tensor3<T>& x, const PadGeometry& g, RowMat<T>& xp) {
  const Index nc = x.n_chan();
  xp.resize(g.total, nc);
  xp.setZero();
  for (Index s = 0; s < g.ns; ++s) {
    std::memcpy(xp.data() + g.padded_row(s, 0) * nc, &x(s, 0, 0),
                sizeof(T) * static_cast<size_t>(g.nt * nc));
  }
}

template <class T>
RowMat<T> weight_matrix(const ConvLayer& layer) {
  return ConstRowMap<double>(layer.weights.data(), layer.fan_in(), layer.out_chan)
      .template cast<T>();
}

}  // namespace

std::string_view to_string(Activation a) {
  return a == Activation::Relu ? "relu" : "linear";
}

Activation activation_from_string(std::string_view s) {
  if (s == "relu") return Activation::Relu;
  if (s == "linear") return Activation::Linear;
  throw Error(ErrorKind::InvalidArgument, "unknown activation '" + std::string(s) + "'");
}

void ConvLayer::validate() const {
  if (time_taps < 1 || space_taps < 1 || time_taps % 2 == 0 || space_taps % 2 == 0) {
    throw Error(ErrorKind::InvalidArgument, "kernel taps must be odd and positive");
  }
  if (in_chan < 1 || out_chan < 1) {
    throw Error(ErrorKind::InvalidArgument, "channel counts must be positive");
  }
  if (static_cast<Index>(weights.size()) != weight_count() ||
      static_cast<Index>(bias.size()) != out_chan) {
    throw Error(ErrorKind::ShapeMismatch, "conv parameter arrays do not match shape");
  }
}

ConvLayer ConvLayer::zeros(Index time_taps, Index space_taps, Index in_chan,
                           Index out_chan, Activation act) {
  ConvLayer layer;
  layer.time_taps = time_taps;
  layer.space_taps = space_taps;
  layer.in_chan = in_chan;
  layer.out_chan = out_chan;
  layer.activation = act;
  layer.weights.assign(static_cast<size_t>(layer.weight_count()), 0.0);
  layer.bias.assign(static_cast<size_t>(out_chan), 0.0);
  layer.validate();
  return layer;
}

ConvLayer ConvLayer::glorot(Index time_taps, Index space_taps, Index in_chan,
                            Index out_chan, Activation act, std::mt19937_64& rng) {
  ConvLayer layer = zeros(time_taps, space_taps, in_chan, out_chan, act);
  const double fan_in = static_cast<double>(time_taps * space_taps * in_chan);
  const double fan_out = static_cast<double>(time_taps * space_taps * out_chan);
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& w : layer.weights) w = dist(rng);
  return layer;
}

ConvGrads ConvGrads::zeros_like(const ConvLayer& layer) {
  ConvGrads g;
  g.weights.assign(layer.weights.size(), 0.0);
  g.bias.assign(layer.bias.size(), 0.0);
  return g;
}

void ConvGrads::set_zero() {
  std::fill(weights.begin(), weights.end(), 0.0);
  std::fill(bias.begin(), bias.end(), 0.0);
}

template <class T>
Tensor3<T> conv2d_forward(const Tensor3<T>& x, const ConvLayer& layer) {
  check_input(layer, x.n_chan());
  const PadGeometry g(x.n_space(), x.n_time(), layer);
  const Index in = layer.in_chan, out = layer.out_chan;
  RowMat<T>& xp = scratch<T>(0);
  pad_into(x, g, xp);
  const RowMat<T> w = weight_matrix<T>(layer);
  RowMat<T>& acc = scratch<T>(1);
  acc.resize(g.rows, out);
  acc.setZero();
  for (Index dt = 0; dt < layer.time_taps; ++dt) {
    for (Index ds = 0; ds < layer.space_taps; ++ds) {
      const Index tap = dt * layer.space_taps + ds;
      acc.noalias() += ConstRowMap<T>(xp.data() + g.tap_offset(dt, ds) * in, g.rows, in) *
                       w.middleRows(tap * in, in);
    }
  }

  Tensor3<T> y(x.n_space(), x.n_time(), out);
  const Eigen::Matrix<T, 1, Eigen::Dynamic> b =
      Eigen::Map<const Eigen::RowVectorXd>(layer.bias.data(), out).template cast<T>();
  const bool relu = layer.activation == Activation::Relu;
  for (Index s = 0; s < g.ns; ++s) {
    RowMap<T> ys(&y(s, 0, 0), g.nt, out);
    ys = acc.middleRows(g.block_row(s, 0), g.nt).rowwise() + b;
    if (relu) ys = ys.cwiseMax(T(0));
  }
  return y;
}

template <class T>
void conv2d_backward_accumulate(const Tensor3<T>& x, const ConvLayer& layer,
                                const Tensor3<T>& y, const Tensor3<T>& grad_out,
                                ConvGrads& acc, Tensor3<T>* grad_x) {
  check_input(layer, x.n_chan());
  require_same_shape(y, grad_out, "conv2d_backward output gradient");
  if (y.n_space() != x.n_space() || y.n_time() != x.n_time() ||
      y.n_chan() != layer.out_chan) {
    throw Error(ErrorKind::ShapeMismatch, "conv2d_backward cached output");
  }
  const PadGeometry g(x.n_space(), x.n_time(), layer);
  const Index in = layer.in_chan, out = layer.out_chan;

  // Pre-activation gradient laid out like the output block, zero in padding rows.
  RowMat<T>& gz = scratch<T>(1);
  gz.resize(g.rows, out);
  gz.setZero();
  const bool relu = layer.activation == Activation::Relu;
  for (Index s = 0; s < g.ns; ++s) {
    auto dst = gz.middleRows(g.block_row(s, 0), g.nt);
    const ConstRowMap<T> go(&grad_out(s, 0, 0), g.nt, out);
    if (relu) {
      dst = (ConstRowMap<T>(&y(s, 0, 0), g.nt, out).array() > T(0)).select(go, T(0));
    } else {
      dst = go;
    }
  }

  RowMat<T>& xp = scratch<T>(0);
  pad_into(x, g, xp);
  RowMat<T> gw(layer.fan_in(), out);
  for (Index dt = 0; dt < layer.time_taps; ++dt) {
    for (Index ds = 0; ds < layer.space_taps; ++ds) {
      const Index tap = dt * layer.space_taps + ds;
      gw.middleRows(tap * in, in).noalias() =
          ConstRowMap<T>(xp.data() + g.tap_offset(dt, ds) * in, g.rows, in).transpose() * gz;
    }
  }
  RowMap<double>(acc.weights.data(), layer.fan_in(), out) += gw.template cast<double>();
  Eigen::Map<Eigen::RowVectorXd>(acc.bias.data(), out) +=
      gz.colwise().sum().template cast<double>();

  if (grad_x != nullptr) {
    const RowMat<T> w = weight_matrix<T>(layer);
    RowMat<T>& gxp = scratch<T>(2);
    gxp.resize(g.total, in);
    gxp.setZero();
    for (Index dt = 0; dt < layer.time_taps; ++dt) {
      for (Index ds = 0; ds < layer.space_taps; ++ds) {
        const Index tap = dt * layer.space_taps + ds;
        gxp.middleRows(g.tap_offset(dt, ds), g.rows).noalias() +=
            gz * w.middleRows(tap * in, in).transpose();
      }
    }
    *grad_x = Tensor3<T>(x.n_space(), x.n_time(), in);
    for (Index s = 0; s < g.ns; ++s) {
      std::memcpy(&(*grad_x)(s, 0, 0), gxp.data() + g.padded_row(s, 0) * in,
                  sizeof(T) * static_cast<size_t>(g.nt * in));
    }
  }
}

template <class T>
ConvBackward<T> conv2d_backward(const Tensor3<T>& x, const ConvLayer& layer,
                                const Tensor3<T>& grad_out) {
  const Tensor3<T> y = conv2d_forward(x, layer);
  require_same_shape(y, grad_out, "conv2d_backward output gradient");
  ConvBackward<T> out;
  out.grads = ConvGrads::zeros_like(layer);
  conv2d_backward_accumulate(x, layer, y, grad_out, out.grads, &out.grad_x);
  return out;
}

template <class T>
double mse_partial(const Tensor3<T>& pred, const Tensor3<T>& target, double count,
                   Tensor3<T>* grad) {
  require_same_shape(pred, target, "mse_loss");
  if (grad != nullptr) *grad = Tensor3<T>(pred.n_space(), pred.n_time(), pred.n_chan());
  double sum = 0.0;
  const T scale = static_cast<T>(2.0 / count);
  for (Index i = 0; i < pred.size(); ++i) {
    const T d = pred.data()[i] - target.data()[i];
    sum += static_cast<double>(d) * static_cast<double>(d);
    if (grad != nullptr) grad->data()[i] = scale * d;
  }
  return sum;
}

template <class T>
LossResult<T> mse_loss(std::span<const Tensor3<T>> pred,
                       std::span<const Tensor3<T>> target) {
  if (pred.size() != target.size()) {
    throw Error(ErrorKind::ShapeMismatch, "mse_loss batch sizes differ");
  }
  double count = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    require_same_shape(pred[i], target[i], "mse_loss");
    count += static_cast<double>(pred[i].size());
  }
  LossResult<T> out;
  out.grad.resize(pred.size());
  if (count == 0.0) return out;
  double sum = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    sum += mse_partial(pred[i], target[i], count, &out.grad[i]);
  }
  out.loss = sum / count;
  return out;
}

void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state,
               double lr) {
  if (params.size() != grads.size()) {
    throw Error(ErrorKind::ShapeMismatch, "adam: parameter/gradient list sizes differ");
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), 0.0);
      state.v.emplace_back(p.size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) {
    throw Error(ErrorKind::ShapeMismatch, "adam: state does not match parameters");
  }
  for (size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != grads[i].size() || state.m[i].size() != params[i].size()) {
      throw Error(ErrorKind::ShapeMismatch, "adam: tensor " + std::to_string(i));
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (size_t i = 0; i < params.size(); ++i) {
    std::vector<double>& m = state.m[i];
    std::vector<double>& v = state.v[i];
    for (size_t j = 0; j < params[i].size(); ++j) {
      const double g = grads[i][j];
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      params[i][j] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

LrSchedule LrSchedule::standard() { return {{1500, 2500}, {1e-3, 1e-4, 1e-5}}; }

void LrSchedule::validate() const {
  if (rates.size() != boundaries.size() + 1) {
    throw Error(ErrorKind::InvalidArgument, "lr schedule needs boundaries+1 rates");
  }
  for (size_t i = 1; i < boundaries.size(); ++i) {
    if (boundaries[i] <= boundaries[i - 1]) {
      throw Error(ErrorKind::InvalidArgument, "lr boundaries must increase strictly");
    }
  }
  for (double r : rates) {
    if (!(r > 0.0) || !std::isfinite(r)) {
      throw Error(ErrorKind::InvalidArgument, "lr rates must be positive");
    }
  }
}

double lr_at(const LrSchedule& schedule, std::int64_t iteration) {
  size_t i = 0;
  while (i < schedule.boundaries.size() && iteration >= schedule.boundaries[i]) ++i;
  return schedule.rates.at(i);
}

#define BNO_INSTANTIATE(T)                                                      \
  template Tensor3<T> conv2d_forward<T>(const Tensor3<T>&, const ConvLayer&);   \
  template ConvBackward<T> conv2d_backward<T>(const Tensor3<T>&, const ConvLayer&, \
                                              const Tensor3<T>&);               \
  template void conv2d_backward_accumulate<T>(const Tensor3<T>&, const ConvLayer&, \
                                              const Tensor3<T>&, const Tensor3<T>&, \
                                              ConvGrads&, Tensor3<T>*);         \
  template LossResult<T> mse_loss<T>(std::span<const Tensor3<T>>,               \
                                     std::span<const Tensor3<T>>);              \
  template double mse_partial<T>(const Tensor3<T>&, const Tensor3<T>&, double,  \
                                 Tensor3<T>*);

BNO_INSTANTIATE(float)
BNO_INSTANTIATE(double)

#undef BNO_INSTANTIATE

}  // namespace bno::nn
