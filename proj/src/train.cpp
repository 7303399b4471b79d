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

#include "bno/train.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

namespace bno::train {

namespace {

using model::Block;
using model::ModelGrads;

template <class T>
struct Samples {
  std::vector<Tensor3<T>> inputs;
  std::vector<Tensor3<T>> labels;
  std::vector<Tensor3<T>> koopman;  // first-block DMD term; empty for the CNN
};

template <class T>
Samples<T> prepare(const data::Dataset& ds, const std::vector<Block>& blocks,
                   model::ForwardStats& stats) {
  Samples<T> s;
  for (size_t i = 0; i < ds.inputs.size(); ++i) {
    s.inputs.push_back(ds.inputs[i].cast<T>());
    s.labels.push_back(ds.labels[i].cast<T>());
  }
  // The first block sees raw windows, so its Koopman term never changes.
  if (!blocks.empty() && blocks.front().koopman) {
    for (const auto& x : s.inputs) {
      s.koopman.push_back(model::koopman_branch<T>(x, *blocks.front().koopman, 1.0, &stats));
    }
  }
  return s;
}

template <class T>
const Tensor3<T>* koopman_of(const Samples<T>& s, Index i) {
  return s.koopman.empty() ? nullptr : &s.koopman[static_cast<size_t>(i)];
}

/// Loss sum and gradients for samples idx[lo, hi), count = total elements of
/// the batch.
template <class T>
void sample_range(const std::vector<Block>& blocks, const Samples<T>& s,
                  std::span<const Index> idx, double count, std::vector<ModelGrads>& per,
                  std::vector<double>& sums, size_t lo, size_t hi,
                  std::vector<model::ForwardStats>& stats) {
  for (size_t j = lo; j < hi; ++j) {
    const Index i = idx[j];
    model::ForwardCache<T> cache;
    const Tensor3<T> pred = model::forward_cached<T>(
        blocks, s.inputs[static_cast<size_t>(i)], 1.0, cache, koopman_of(s, i), &stats[j]);
    Tensor3<T> grad;
    sums[j] = nn::mse_partial(pred, s.labels[static_cast<size_t>(i)], count, &grad);
    model::set_zero(per[j]);
    model::backward<T>(blocks, cache, grad, per[j]);
  }
}

template <class T>
double batch_grads(const std::vector<Block>& blocks, const Samples<T>& s,
                   std::span<const Index> idx, Index threads, std::vector<ModelGrads>& per,
                   ModelGrads& acc, std::int64_t& degenerate) {
  double count = 0.0;
  for (Index i : idx) count += static_cast<double>(s.labels[static_cast<size_t>(i)].size());
  while (per.size() < idx.size()) per.push_back(model::zero_grads(blocks));
  std::vector<double> sums(idx.size(), 0.0);
  std::vector<model::ForwardStats> stats(idx.size());

  const size_t n = idx.size();
  const size_t workers = std::min<size_t>(static_cast<size_t>(std::max<Index>(threads, 1)), n);
  if (workers <= 1) {
    sample_range(blocks, s, idx, count, per, sums, 0, n, stats);
  } else {
    std::vector<std::thread> pool;
    const size_t chunk = (n + workers - 1) / workers;
    for (size_t w = 0; w < workers; ++w) {
      const size_t lo = w * chunk;
      const size_t hi = std::min(n, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back([&, lo, hi] {
        sample_range(blocks, s, idx, count, per, sums, lo, hi, stats);
      });
    }
    for (auto& t : pool) t.join();
  }

  // Reduce in sample order so results do not depend on the thread count.
  model::set_zero(acc);
  double sum = 0.0;
  for (size_t j = 0; j < n; ++j) {
    model::add_into(acc, per[j]);
    sum += sums[j];
    degenerate += stats[j].degenerate_dmd;
  }
  return count > 0.0 ? sum / count : 0.0;
}

template <class T>
double split_mse(const std::vector<Block>& blocks, const Samples<T>& s,
                 std::span<const Index> idx, std::int64_t& degenerate) {
  if (idx.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (Index i : idx) {
    model::ForwardCache<T> cache;
    model::ForwardStats stats;
    const Tensor3<T> pred = model::forward_cached<T>(blocks, s.inputs[static_cast<size_t>(i)],
                                                     1.0, cache, koopman_of(s, i), &stats);
    const auto& y = s.labels[static_cast<size_t>(i)];
    total += nn::mse_partial<T>(pred, y, 1.0, nullptr) / static_cast<double>(y.size());
    degenerate += stats.degenerate_dmd;
  }
  return total / static_cast<double>(idx.size());
}

template <class T, class Model>
TrainResult run(Model& m, const data::Dataset& ds, const TrainConfig& config) {
  config.validate();
  if (ds.train.empty()) throw Error(ErrorKind::InvalidArgument, "training split is empty");
  m.validate();

  const std::vector<Block> blocks = model::blocks_of(m);
  TrainResult result;
  model::ForwardStats prep_stats;
  const Samples<T> samples = prepare<T>(ds, blocks, prep_stats);
  result.degenerate_dmd += prep_stats.degenerate_dmd;

  std::mt19937_64 rng(config.seed);
  std::vector<Index> order(ds.train.begin(), ds.train.end());
  nn::AdamState adam;
  ModelGrads acc = model::zero_grads(blocks);
  std::vector<ModelGrads> per;
  const auto params = model::parameter_spans(m);

  for (Index epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    Index batches = 0;
    bool capped = false;
    for (size_t lo = 0; lo < order.size(); lo += static_cast<size_t>(config.batch_size)) {
      if (config.max_steps >= 0 && result.steps >= config.max_steps) {
        capped = true;
        break;
      }
      const size_t hi = std::min(order.size(), lo + static_cast<size_t>(config.batch_size));
      const std::span<const Index> idx(order.data() + lo, hi - lo);
      const double loss =
          batch_grads<T>(blocks, samples, idx, config.threads, per, acc, result.degenerate_dmd);
      if (!std::isfinite(loss)) {
        throw Error(ErrorKind::NumericalFailure,
                    fmt::format("non-finite loss in epoch {} batch {}", epoch, batches + 1));
      }
      nn::adam_step(params, model::grad_spans(acc), adam, nn::lr_at(config.schedule, result.steps));
      ++result.steps;
      loss_sum += loss;
      ++batches;
    }
    if (batches == 0) break;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train = loss_sum / static_cast<double>(batches);
    rec.validation = std::numeric_limits<double>::quiet_NaN();
    const bool last = epoch == config.epochs || capped ||
                      (config.max_steps >= 0 && result.steps >= config.max_steps);
    if (last || epoch % config.validate_every == 0) {
      rec.validation = split_mse<T>(blocks, samples, ds.validation, result.degenerate_dmd);
    }
    spdlog::info("epoch {} step {} train {:.6e} validation {:.6e}", epoch, result.steps,
                 rec.train, rec.validation);
    result.history.push_back(rec);
    if (last) break;
  }
  if (result.degenerate_dmd > 0) {
    spdlog::warn("{} DMD fits degenerated to a zero Koopman term", result.degenerate_dmd);
  }
  return result;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw Error(ErrorKind::InvalidArgument, "epochs must be >= 0");
  if (batch_size < 1) throw Error(ErrorKind::InvalidArgument, "batch_size must be >= 1");
  if (threads < 1) throw Error(ErrorKind::InvalidArgument, "threads must be >= 1");
  if (validate_every < 1) throw Error(ErrorKind::InvalidArgument, "validate_every must be >= 1");
  schedule.validate();
}

TrainResult train(model::BnoModel& model, const data::Dataset& ds, const TrainConfig& config) {
  TrainResult r = config.precision == eval::Precision::F32 ? run<float>(model, ds, config)
                                                           : run<double>(model, ds, config);
  model.meta.exact_gradients = model.layers.size() <= 1;
  model.meta.train_nx = ds.nx;
  model.meta.train_ny = ds.ny;
  return r;
}

TrainResult train(model::CnnBaseline& model, const data::Dataset& ds, const TrainConfig& config) {
  TrainResult r = config.precision == eval::Precision::F32 ? run<float>(model, ds, config)
                                                           : run<double>(model, ds, config);
  model.meta.train_nx = ds.nx;
  model.meta.train_ny = ds.ny;
  return r;
}

void write_history_csv(const TrainResult& result, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  os << "epoch,train,validation\n";
  for (const auto& r : result.history) {
    os << fmt::format("{},{:.9e},{:.9e}\n", r.epoch, r.train, r.validation);
  }
  if (!os) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

}  // namespace bno::train
