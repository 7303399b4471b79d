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

#include "bno/model.hpp"

#include "bno/dmd.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <string>

namespace bno::model {

namespace {

bool same_layer_shape(const nn::ConvLayer& a, const nn::ConvLayer& b) {
  return a.time_taps == b.time_taps && a.space_taps == b.space_taps &&
         a.in_chan == b.in_chan && a.out_chan == b.out_chan && a.activation == b.activation;
}

void copy_params(const ConvStack& src, ConvStack& dst) {
  if (!src.same_shapes(dst)) {
    throw Error(ErrorKind::ShapeMismatch, "conv stacks differ in layer shapes");
  }
  for (size_t i = 0; i < src.branch.size(); ++i) {
    dst.branch[i].weights = src.branch[i].weights;
    dst.branch[i].bias = src.branch[i].bias;
  }
  dst.head.weights = src.head.weights;
  dst.head.bias = src.head.bias;
}

void check_single_channel(Index n_chan) {
  if (n_chan != 1) {
    throw Error(ErrorKind::ShapeMismatch,
                "operator input must have 1 channel, got " + std::to_string(n_chan));
  }
}

template <class T>
Tensor3<T> fuse(const Tensor3<T>& c, const Tensor3<T>* k) {
  Tensor3<T> fused(c.n_space(), c.n_time(), c.n_chan());
  const Index nc = c.n_chan();
  const Index points = c.n_space() * c.n_time();
  for (Index p = 0; p < points; ++p) {
    const T add = k != nullptr ? k->data()[p] : T(0);
    const T* src = c.data() + p * nc;
    T* dst = fused.data() + p * nc;
    for (Index ch = 0; ch < nc; ++ch) dst[ch] = std::max(src[ch] + add, T(0));
  }
  return fused;
}

template <class T>
Tensor3<T> block_forward(const Block& block, const Tensor3<T>& u, double dt,
                         BlockCache<T>* cache, const Tensor3<T>* koopman,
                         ForwardStats* stats) {
  check_single_channel(u.n_chan());
  const ConvStack& stack = *block.stack;
  std::vector<Tensor3<T>> acts;
  acts.reserve(stack.branch.size());
  const Tensor3<T>* x = &u;
  for (const nn::ConvLayer& layer : stack.branch) {
    acts.push_back(nn::conv2d_forward(*x, layer));
    x = &acts.back();
  }

  Tensor3<T> k_owned;
  const Tensor3<T>* k = nullptr;
  if (block.koopman) {
    if (koopman != nullptr) {
      if (koopman->n_space() != u.n_space() || koopman->n_time() != u.n_time() ||
          koopman->n_chan() != 1) {
        throw Error(ErrorKind::ShapeMismatch, "precomputed Koopman term");
      }
      k = koopman;
    } else {
      k_owned = koopman_branch(u, *block.koopman, dt, stats);
      k = &k_owned;
    }
  }
  Tensor3<T> fused = fuse(acts.back(), k);
  Tensor3<T> out = nn::conv2d_forward(fused, stack.head);
  if (cache != nullptr) {
    cache->input = u;
    cache->acts = std::move(acts);
    cache->fused = std::move(fused);
    cache->output = out;
  }
  return out;
}

template <class T>
void add_param_spans(ConvStack& s, std::vector<std::span<double>>& out) {
  for (auto& l : s.branch) {
    out.emplace_back(l.weights);
    out.emplace_back(l.bias);
  }
  out.emplace_back(s.head.weights);
  out.emplace_back(s.head.bias);
}

}  // namespace

void ArchConfig::validate() const {
  if (time_taps < 1 || space_taps < 1 || time_taps % 2 == 0 || space_taps % 2 == 0) {
    throw Error(ErrorKind::InvalidArgument, "kernel size must be odd and positive");
  }
  if (filters.empty()) throw Error(ErrorKind::InvalidArgument, "need at least one filter count");
  for (Index f : filters) {
    if (f < 1) throw Error(ErrorKind::InvalidArgument, "filter counts must be positive");
  }
  if (dmd_rank < 1) throw Error(ErrorKind::InvalidArgument, "dmd rank must be >= 1");
  if (dmd_horizon < 0) throw Error(ErrorKind::InvalidArgument, "dmd horizon must be >= 0");
  if (layers < 1) throw Error(ErrorKind::InvalidArgument, "need at least one layer");
}

void ConvStack::validate() const {
  if (branch.empty()) throw Error(ErrorKind::InvalidArgument, "empty CNN branch");
  Index chan = 1;
  for (const auto& l : branch) {
    l.validate();
    if (l.in_chan != chan) throw Error(ErrorKind::ChanMismatch, "CNN branch channel chain");
    chan = l.out_chan;
  }
  head.validate();
  if (head.in_chan != fuse_chan() || head.out_chan != 1) {
    throw Error(ErrorKind::ChanMismatch, "head must map fuse channels to 1");
  }
}

bool ConvStack::same_shapes(const ConvStack& other) const {
  if (branch.size() != other.branch.size()) return false;
  for (size_t i = 0; i < branch.size(); ++i) {
    if (!same_layer_shape(branch[i], other.branch[i])) return false;
  }
  return same_layer_shape(head, other.head);
}

ConvStack make_stack(const ArchConfig& arch, std::mt19937_64& rng) {
  arch.validate();
  ConvStack s;
  Index chan = 1;
  for (Index f : arch.filters) {
    s.branch.push_back(nn::ConvLayer::glorot(arch.time_taps, arch.space_taps, chan, f,
                                             nn::Activation::Relu, rng));
    chan = f;
  }
  s.head = nn::ConvLayer::glorot(arch.time_taps, arch.space_taps, chan, 1,
                                 nn::Activation::Linear, rng);
  return s;
}

BnoModel BnoModel::create(const ArchConfig& arch, std::uint64_t seed) {
  arch.validate();
  std::mt19937_64 rng(seed);
  BnoModel m;
  for (Index i = 0; i < arch.layers; ++i) {
    m.layers.push_back({make_stack(arch, rng), {arch.dmd_rank, arch.dmd_horizon}});
  }
  m.meta.seed = seed;
  m.meta.exact_gradients = arch.layers == 1;
  return m;
}

void BnoModel::validate() const {
  if (layers.empty()) throw Error(ErrorKind::InvalidArgument, "model has no layers");
  for (const auto& l : layers) {
    l.cnn.validate();
    if (l.koopman.rank < 1) throw Error(ErrorKind::InvalidArgument, "dmd rank must be >= 1");
    if (l.koopman.horizon < 0) throw Error(ErrorKind::InvalidArgument, "dmd horizon < 0");
  }
  if (!(norm.std > 0.0)) throw Error(ErrorKind::InvalidArgument, "norm std must be > 0");
}

CnnBaseline CnnBaseline::create(const ArchConfig& arch, std::uint64_t seed) {
  arch.validate();
  std::mt19937_64 rng(seed);
  CnnBaseline m;
  for (Index i = 0; i < arch.layers; ++i) m.blocks.push_back(make_stack(arch, rng));
  m.meta.seed = seed;
  return m;
}

void CnnBaseline::validate() const {
  if (blocks.empty()) throw Error(ErrorKind::InvalidArgument, "model has no blocks");
  for (const auto& b : blocks) b.validate();
  if (!(norm.std > 0.0)) throw Error(ErrorKind::InvalidArgument, "norm std must be > 0");
}

CnnBaseline transfer_weights(const BnoModel& src) {
  CnnBaseline dst;
  for (const auto& l : src.layers) dst.blocks.push_back(l.cnn);
  dst.norm = src.norm;
  dst.window = src.window;
  dst.meta = src.meta;
  dst.meta.exact_gradients = true;
  return dst;
}

BnoModel transfer_weights(const CnnBaseline& src, const KoopmanConfig& koopman) {
  BnoModel dst;
  for (const auto& b : src.blocks) dst.layers.push_back({b, koopman});
  dst.norm = src.norm;
  dst.window = src.window;
  dst.meta = src.meta;
  dst.meta.exact_gradients = dst.layers.size() == 1;
  return dst;
}

void transfer_weights(const BnoModel& src, CnnBaseline& dst) {
  if (src.layers.size() != dst.blocks.size()) {
    throw Error(ErrorKind::ShapeMismatch, "layer counts differ");
  }
  for (size_t i = 0; i < src.layers.size(); ++i) copy_params(src.layers[i].cnn, dst.blocks[i]);
}

void transfer_weights(const CnnBaseline& src, BnoModel& dst) {
  if (src.blocks.size() != dst.layers.size()) {
    throw Error(ErrorKind::ShapeMismatch, "layer counts differ");
  }
  for (size_t i = 0; i < src.blocks.size(); ++i) copy_params(src.blocks[i], dst.layers[i].cnn);
}

template <class T>
Tensor3<T> koopman_branch(const Tensor3<T>& u, const KoopmanConfig& cfg, double dt,
                          ForwardStats* stats) {
  check_single_channel(u.n_chan());
  dmd::SnapshotMatrix snaps;
  snaps.dt = dt;
  snaps.values.resize(u.n_space(), u.n_time());
  for (Index s = 0; s < u.n_space(); ++s) {
    for (Index t = 0; t < u.n_time(); ++t) snaps.values(s, t) = static_cast<double>(u(s, t, 0));
  }
  Tensor3<T> k(u.n_space(), u.n_time(), 1);
  const Index rank = std::min<Index>(cfg.rank, u.n_time() - 1);
  try {
    const dmd::KoopmanOutput out = dmd::koopman_apply(snaps, rank, cfg.horizon);
    for (Index s = 0; s < u.n_space(); ++s) {
      for (Index t = 0; t < u.n_time(); ++t) k(s, t, 0) = static_cast<T>(out.values(s, t));
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateData && e.kind() != ErrorKind::ConvergenceFailure) {
      throw;
    }
    spdlog::debug("koopman branch fell back to zero: {}", e.what());
    if (stats != nullptr) ++stats->degenerate_dmd;
  }
  return k;
}

template <class T>
Tensor3<T> banach_forward(const BanachLayer& layer, const Tensor3<T>& u, double dt,
                          ForwardStats* stats) {
  const Block block{&layer.cnn, layer.koopman};
  return block_forward<T>(block, u, dt, nullptr, nullptr, stats);
}

template <class T>
Tensor3<T> bno_forward(const BnoModel& model, const Tensor3<T>& u0, double dt,
                       ForwardStats* stats) {
  Tensor3<T> u = u0;
  for (const auto& layer : model.layers) u = banach_forward(layer, u, dt, stats);
  return u;
}

template <class T>
Tensor3<T> cnn_forward(const CnnBaseline& model, const Tensor3<T>& u0) {
  Tensor3<T> u = u0;
  for (const auto& stack : model.blocks) {
    u = block_forward<T>(Block{&stack, std::nullopt}, u, 1.0, nullptr, nullptr, nullptr);
  }
  return u;
}

std::vector<Block> blocks_of(const BnoModel& m) {
  std::vector<Block> out;
  for (const auto& l : m.layers) out.push_back({&l.cnn, l.koopman});
  return out;
}

std::vector<Block> blocks_of(const CnnBaseline& m) {
  std::vector<Block> out;
  for (const auto& b : m.blocks) out.push_back({&b, std::nullopt});
  return out;
}

template <class T>
Tensor3<T> forward_cached(std::span<const Block> blocks, const Tensor3<T>& u0, double dt,
                          ForwardCache<T>& cache, const Tensor3<T>* first_koopman,
                          ForwardStats* stats) {
  cache.blocks.resize(blocks.size());
  Tensor3<T> u = u0;
  for (size_t i = 0; i < blocks.size(); ++i) {
    u = block_forward<T>(blocks[i], u, dt, &cache.blocks[i], i == 0 ? first_koopman : nullptr,
                         stats);
  }
  return u;
}

ModelGrads zero_grads(std::span<const Block> blocks) {
  ModelGrads g;
  for (const Block& b : blocks) {
    StackGrads sg;
    for (const auto& l : b.stack->branch) sg.branch.push_back(nn::ConvGrads::zeros_like(l));
    sg.head = nn::ConvGrads::zeros_like(b.stack->head);
    g.push_back(std::move(sg));
  }
  return g;
}

void set_zero(ModelGrads& grads) {
  for (auto& sg : grads) {
    for (auto& g : sg.branch) g.set_zero();
    sg.head.set_zero();
  }
}

void add_into(ModelGrads& acc, const ModelGrads& g) {
  auto add = [](nn::ConvGrads& a, const nn::ConvGrads& b) {
    for (size_t i = 0; i < a.weights.size(); ++i) a.weights[i] += b.weights[i];
    for (size_t i = 0; i < a.bias.size(); ++i) a.bias[i] += b.bias[i];
  };
  for (size_t i = 0; i < acc.size(); ++i) {
    for (size_t j = 0; j < acc[i].branch.size(); ++j) add(acc[i].branch[j], g[i].branch[j]);
    add(acc[i].head, g[i].head);
  }
}

template <class T>
void backward(std::span<const Block> blocks, const ForwardCache<T>& cache,
              const Tensor3<T>& grad_out, ModelGrads& acc) {
  if (cache.blocks.size() != blocks.size() || acc.size() != blocks.size()) {
    throw Error(ErrorKind::ShapeMismatch, "backward: cache/gradient layout");
  }
  Tensor3<T> grad = grad_out;
  for (size_t bi = blocks.size(); bi-- > 0;) {
    const ConvStack& stack = *blocks[bi].stack;
    const BlockCache<T>& bc = cache.blocks[bi];
    require_same_shape(bc.output, grad, "backward output gradient");

    Tensor3<T> g_fused;
    nn::conv2d_backward_accumulate(bc.fused, stack.head, bc.output, grad, acc[bi].head, &g_fused);
    // relu at the fusion; the Koopman term is a constant here.
    for (Index i = 0; i < g_fused.size(); ++i) {
      if (!(bc.fused.data()[i] > T(0))) g_fused.data()[i] = T(0);
    }

    Tensor3<T> g = std::move(g_fused);
    for (size_t li = stack.branch.size(); li-- > 0;) {
      const Tensor3<T>& x = li == 0 ? bc.input : bc.acts[li - 1];
      const bool need_x = li > 0 || bi > 0;
      Tensor3<T> gx;
      nn::conv2d_backward_accumulate(x, stack.branch[li], bc.acts[li], g, acc[bi].branch[li],
                                     need_x ? &gx : nullptr);
      g = std::move(gx);
    }
    grad = std::move(g);
  }
}

template <class T>
LossAndGrads bno_backward(const BnoModel& model, std::span<const Tensor3<T>> batch,
                          std::span<const Tensor3<T>> targets, double dt) {
  if (batch.size() != targets.size()) {
    throw Error(ErrorKind::ShapeMismatch, "batch and target counts differ");
  }
  const auto blocks = blocks_of(model);
  LossAndGrads out;
  out.grads = zero_grads(blocks);
  double count = 0.0;
  for (const auto& t : targets) count += static_cast<double>(t.size());
  double sum = 0.0;
  for (size_t i = 0; i < batch.size(); ++i) {
    ForwardCache<T> cache;
    const Tensor3<T> pred = forward_cached<T>(blocks, batch[i], dt, cache);
    Tensor3<T> grad;
    sum += nn::mse_partial(pred, targets[i], count, &grad);
    backward<T>(blocks, cache, grad, out.grads);
  }
  out.loss = count > 0.0 ? sum / count : 0.0;
  return out;
}

std::vector<std::span<double>> parameter_spans(BnoModel& m) {
  std::vector<std::span<double>> out;
  for (auto& l : m.layers) add_param_spans<double>(l.cnn, out);
  return out;
}

std::vector<std::span<double>> parameter_spans(CnnBaseline& m) {
  std::vector<std::span<double>> out;
  for (auto& b : m.blocks) add_param_spans<double>(b, out);
  return out;
}

std::vector<std::span<const double>> grad_spans(const ModelGrads& g) {
  std::vector<std::span<const double>> out;
  for (const auto& sg : g) {
    for (const auto& c : sg.branch) {
      out.emplace_back(c.weights);
      out.emplace_back(c.bias);
    }
    out.emplace_back(sg.head.weights);
    out.emplace_back(sg.head.bias);
  }
  return out;
}

std::vector<std::string> parameter_names(std::span<const Block> blocks) {
  std::vector<std::string> out;
  for (size_t i = 0; i < blocks.size(); ++i) {
    const std::string prefix = "layer" + std::to_string(i) + ".";
    for (size_t j = 0; j < blocks[i].stack->branch.size(); ++j) {
      out.push_back(prefix + "cnn" + std::to_string(j) + ".weight");
      out.push_back(prefix + "cnn" + std::to_string(j) + ".bias");
    }
    out.push_back(prefix + "head.weight");
    out.push_back(prefix + "head.bias");
  }
  return out;
}

#define BNO_INSTANTIATE(T)                                                                    \
  template Tensor3<T> koopman_branch<T>(const Tensor3<T>&, const KoopmanConfig&, double,       \
                                        ForwardStats*);                                       \
  template Tensor3<T> banach_forward<T>(const BanachLayer&, const Tensor3<T>&, double,         \
                                        ForwardStats*);                                       \
  template Tensor3<T> bno_forward<T>(const BnoModel&, const Tensor3<T>&, double, ForwardStats*); \
  template Tensor3<T> cnn_forward<T>(const CnnBaseline&, const Tensor3<T>&);                  \
  template Tensor3<T> forward_cached<T>(std::span<const Block>, const Tensor3<T>&, double,     \
                                        ForwardCache<T>&, const Tensor3<T>*, ForwardStats*);   \
  template void backward<T>(std::span<const Block>, const ForwardCache<T>&, const Tensor3<T>&, \
                            ModelGrads&);                                                     \
  template LossAndGrads bno_backward<T>(const BnoModel&, std::span<const Tensor3<T>>,         \
                                        std::span<const Tensor3<T>>, double);

BNO_INSTANTIATE(float)
BNO_INSTANTIATE(double)

#undef BNO_INSTANTIATE

}  // namespace bno::model
