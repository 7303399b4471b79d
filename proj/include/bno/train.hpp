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

#ifndef BNO_TRAIN_HPP_
#define BNO_TRAIN_HPP_

#include "bno/eval.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace bno::train {

struct TrainConfig {
  Index epochs = 100;
  std::int64_t max_steps = -1;  // stop after this many optimizer steps; < 0 = no cap
  Index batch_size = 10;
  nn::LrSchedule schedule = nn::LrSchedule::standard();
  std::uint64_t seed = 0;  // shuffling
  eval::Precision precision = eval::Precision::F32;
  Index threads = 1;         // per-sample gradients are reduced in index order
  Index validate_every = 1;  // epochs between validation passes; the last epoch always runs

  void validate() const;
};

struct EpochRecord {
  Index epoch = 0;            // 1-based
  double train = 0.0;         // mean mini-batch loss over the epoch
  double validation = 0.0;    // NaN when not evaluated this epoch
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::int64_t steps = 0;
  std::int64_t degenerate_dmd = 0;
};

/// Mini-batch Adam on the training split of `ds` (shuffled each epoch with
/// config.seed), validation MSE on the validation split. A non-finite batch
/// loss throws NumericalFailure naming the batch.
TrainResult train(model::BnoModel& model, const data::Dataset& ds, const TrainConfig& config);
TrainResult train(model::CnnBaseline& model, const data::Dataset& ds, const TrainConfig& config);

/// "epoch,train,validation" with one row per epoch.
void write_history_csv(const TrainResult& result, const std::filesystem::path& path);

}  // namespace bno::train

#endif  // BNO_TRAIN_HPP_
