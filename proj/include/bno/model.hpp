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

// Banach layers and the full operator network, the CNN-only baseline that
// shares its parameter layout, and the cached forward/backward passes used
// for training.
//
// A Banach layer maps u -> head(relu(cnn(u) + broadcast(K u))), where K is
// the Koopman propagator fitted by DMD on u itself. No gradient flows
// through K: it is exact for a single layer (K sees raw input only) and an
// approximation for deeper stacks.

#ifndef BNO_MODEL_HPP_
#define BNO_MODEL_HPP_

#include "bno/data.hpp"
#include "bno/neural.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace bno::model {

/// CNN corrector (relu layers) followed by a linear projection head.
struct ConvStack {
  std::vector<nn::ConvLayer> branch;
  nn::ConvLayer head;

  Index fuse_chan() const { return branch.empty() ? 0 : branch.back().out_chan; }
  void validate() const;
  bool same_shapes(const ConvStack& other) const;
};

struct ArchConfig {
  Index time_taps = 5;
  Index space_taps = 5;
  std::vector<Index> filters{16, 32, 16};
  Index dmd_rank = 12;
  int dmd_horizon = 1;
  Index layers = 1;

  void validate() const;
};

ConvStack make_stack(const ArchConfig& arch, std::mt19937_64& rng);

struct KoopmanConfig {
  Index rank = 12;
  int horizon = 1;
};

struct BanachLayer {
  ConvStack cnn;
  KoopmanConfig koopman;
};

struct ModelMeta {
  std::uint64_t seed = 0;
  Index train_nx = 0;
  Index train_ny = 0;
  // False when gradients skip the DMD branch of a layer whose input depends
  // on parameters (more than one Banach layer).
  bool exact_gradients = true;
};

struct BnoModel {
  std::vector<BanachLayer> layers;
  data::NormStats norm;
  data::WindowSpec window;
  ModelMeta meta;

  static BnoModel create(const ArchConfig& arch, std::uint64_t seed);
  void validate() const;
};

struct CnnBaseline {
  std::vector<ConvStack> blocks;
  data::NormStats norm;
  data::WindowSpec window;
  ModelMeta meta;

  static CnnBaseline create(const ArchConfig& arch, std::uint64_t seed);
  void validate() const;
};

/// Copies every conv parameter verbatim; the DMD configuration is dropped.
CnnBaseline transfer_weights(const BnoModel& src);
/// Copies every conv parameter verbatim and attaches `koopman` to each layer.
BnoModel transfer_weights(const CnnBaseline& src, const KoopmanConfig& koopman);
/// Copies conv parameters of `src` into an existing destination of identical
/// shapes, keeping the destination's DMD configuration and metadata.
void transfer_weights(const BnoModel& src, CnnBaseline& dst);
void transfer_weights(const CnnBaseline& src, BnoModel& dst);

struct ForwardStats {
  std::int64_t degenerate_dmd = 0;  // DMD fits replaced by a zero contribution
};

/// (N, T, 1) Koopman forecast of a single-channel input, or zeros when the
/// fit is degenerate or the eigendecomposition fails.
template <class T>
Tensor3<T> koopman_branch(const Tensor3<T>& u, const KoopmanConfig& cfg, double dt,
                          ForwardStats* stats = nullptr);

template <class T>
Tensor3<T> banach_forward(const BanachLayer& layer, const Tensor3<T>& u, double dt = 1.0,
                          ForwardStats* stats = nullptr);

template <class T>
Tensor3<T> bno_forward(const BnoModel& model, const Tensor3<T>& u0, double dt = 1.0,
                       ForwardStats* stats = nullptr);

template <class T>
Tensor3<T> cnn_forward(const CnnBaseline& model, const Tensor3<T>& u0);

// --- training machinery ---------------------------------------------------

/// Uniform view over both model types: one entry per block, with the Koopman
/// branch present for Banach layers only.
struct Block {
  const ConvStack* stack;
  std::optional<KoopmanConfig> koopman;
};
std::vector<Block> blocks_of(const BnoModel& m);
std::vector<Block> blocks_of(const CnnBaseline& m);

template <class T>
struct BlockCache {
  Tensor3<T> input;
  std::vector<Tensor3<T>> acts;  // outputs of each branch conv
  Tensor3<T> fused;              // relu(c + k)
  Tensor3<T> output;
};

template <class T>
struct ForwardCache {
  std::vector<BlockCache<T>> blocks;
};

/// Forward pass keeping every activation. `first_koopman`, when given, is
/// used as the DMD term of the first block instead of refitting.
template <class T>
Tensor3<T> forward_cached(std::span<const Block> blocks, const Tensor3<T>& u0, double dt,
                          ForwardCache<T>& cache, const Tensor3<T>* first_koopman = nullptr,
                          ForwardStats* stats = nullptr);

struct StackGrads {
  std::vector<nn::ConvGrads> branch;
  nn::ConvGrads head;
};
using ModelGrads = std::vector<StackGrads>;

ModelGrads zero_grads(std::span<const Block> blocks);
void set_zero(ModelGrads& grads);
void add_into(ModelGrads& acc, const ModelGrads& g);

/// Adds d(loss)/d(params) into `acc` given d(loss)/d(output).
template <class T>
void backward(std::span<const Block> blocks, const ForwardCache<T>& cache,
              const Tensor3<T>& grad_out, ModelGrads& acc);

struct LossAndGrads {
  double loss = 0.0;
  ModelGrads grads;
};

/// MSE over the batch and its gradients with respect to every conv weight.
template <class T>
LossAndGrads bno_backward(const BnoModel& model, std::span<const Tensor3<T>> batch,
                          std::span<const Tensor3<T>> targets, double dt = 1.0);

/// Parameter tensors in a fixed order: per block, branch layers then head,
/// each weights then bias. grad_spans uses the same order.
std::vector<std::span<double>> parameter_spans(BnoModel& m);
std::vector<std::span<double>> parameter_spans(CnnBaseline& m);
std::vector<std::span<const double>> grad_spans(const ModelGrads& g);

/// Tensor names matching parameter_spans order, e.g. "layer0.cnn0.weight".
std::vector<std::string> parameter_names(std::span<const Block> blocks);

}  // namespace bno::model

#endif  // BNO_MODEL_HPP_
