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

// Evaluation protocols: one-step prediction, window-to-window rollout,
// zero-shot super-resolution with cross-architecture transfer, line
// profiles, branch timings and report emission.

#ifndef BNO_EVAL_HPP_
#define BNO_EVAL_HPP_

#include "bno/data.hpp"
#include "bno/model.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bno::eval {

enum class Precision { F32, F64 };

/// Maps an (N, n, 1) input window to the (N, n, 1) window s steps ahead.
class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual std::string tag() const = 0;
  virtual Tensor3<double> predict(const Tensor3<double>& window) const = 0;
};

class BnoForecaster : public Forecaster {
 public:
  explicit BnoForecaster(const model::BnoModel& m, Precision p = Precision::F64,
                         std::string tag = "BNO")
      : model_(&m), precision_(p), tag_(std::move(tag)) {}
  std::string tag() const override { return tag_; }
  Tensor3<double> predict(const Tensor3<double>& window) const override;

 private:
  const model::BnoModel* model_;
  Precision precision_;
  std::string tag_;
};

class CnnForecaster : public Forecaster {
 public:
  explicit CnnForecaster(const model::CnnBaseline& m, Precision p = Precision::F64,
                         std::string tag = "CNN")
      : model_(&m), precision_(p), tag_(std::move(tag)) {}
  std::string tag() const override { return tag_; }
  Tensor3<double> predict(const Tensor3<double>& window) const override;

 private:
  const model::CnnBaseline* model_;
  Precision precision_;
  std::string tag_;
};

/// DMD-only baseline: the Koopman branch on its own.
class DmdForecaster : public Forecaster {
 public:
  explicit DmdForecaster(model::KoopmanConfig cfg, std::string tag = "DMD")
      : cfg_(cfg), tag_(std::move(tag)) {}
  std::string tag() const override { return tag_; }
  Tensor3<double> predict(const Tensor3<double>& window) const override;

 private:
  model::KoopmanConfig cfg_;
  std::string tag_;
};

class FunctionForecaster : public Forecaster {
 public:
  using Fn = std::function<Tensor3<double>(const Tensor3<double>&)>;
  FunctionForecaster(std::string tag, Fn fn) : tag_(std::move(tag)), fn_(std::move(fn)) {}
  std::string tag() const override { return tag_; }
  Tensor3<double> predict(const Tensor3<double>& window) const override { return fn_(window); }

 private:
  std::string tag_;
  Fn fn_;
};

double window_mse(const Tensor3<double>& pred, const Tensor3<double>& target);

/// MSE of one forward pass per window against its label, for every window.
std::vector<double> one_step_predict(const Forecaster& model, const data::Dataset& ds);
std::vector<double> one_step_predict(const Forecaster& model, const data::Dataset& ds,
                                     std::span<const Index> windows);
/// Mean of one_step_predict over `windows` (all windows share one size).
double mean_mse(const Forecaster& model, const data::Dataset& ds,
                std::span<const Index> windows);

struct RolloutResult {
  Index steps = 0;
  std::vector<Tensor3<double>> predictions;
  std::vector<double> per_step_mse;
  std::optional<Index> diverged_at;  // 1-based step that blew up
};

inline constexpr double kDivergenceFactor = 1e6;

/// Feeds each predicted window back as the next input. A step whose output
/// exceeds kDivergenceFactor x the initial window's max magnitude (or is
/// non-finite) is recorded in diverged_at and ends the rollout. per_step_mse
/// is filled when `truth` holds at least `steps` windows.
RolloutResult rollout(const Forecaster& model, const Tensor3<double>& initial, Index steps,
                      std::span<const Tensor3<double>> truth = {});

/// Ground truth for a rollout from window `start`: windows start + j*s,
/// j = 1..steps.
std::vector<Tensor3<double>> rollout_truth(const data::FieldSeries& f,
                                           const data::WindowSpec& w, Index start,
                                           Index steps);

struct EvalReport {
  std::string model;
  std::string resolution;  // "nx x ny", e.g. "32x16"
  double train_loss = 0.0;
  double validation_loss = 0.0;
  double gap = 0.0;  // |train - validation|
  double dmd_seconds = 0.0;
  double cnn_seconds = 0.0;
  std::string input_hash;
};

std::string resolution_string(Index nx, Index ny);

/// Train/validation MSE of `model` over the split of `ds`.
EvalReport evaluate_split(const Forecaster& model, const data::Dataset& ds);

/// Normalizes `field` with `stats`, windows it with `w` and evaluates the
/// unchanged model at that resolution.
EvalReport superres_eval(const Forecaster& model, const data::NormStats& stats,
                         const data::FieldSeries& field, const data::WindowSpec& w,
                         double train_fraction = 0.7);

/// Zero-shot rows for a BNO model and, when given, a CNN baseline together
/// with both cross-architecture transfers (BNO weights in the CNN, CNN
/// weights in the BNO).
std::vector<EvalReport> superres_transfer_eval(const model::BnoModel& bno,
                                               const model::CnnBaseline* cnn,
                                               const data::FieldSeries& field,
                                               const data::WindowSpec& w,
                                               double train_fraction, Precision precision);

/// Values along y at grid column x and snapshot t.
std::vector<double> line_profile(const data::FieldSeries& f, Index x, Index t);
std::vector<double> line_profile(const Tensor3<double>& window, Index nx, Index ny, Index x,
                                 Index t);

struct Timing {
  double dmd_seconds = 0.0;
  double cnn_seconds = 0.0;
  double ratio = 0.0;  // dmd / cnn
};

/// Wall-clock time of the isolated DMD branch and CNN branch of `layer` over
/// the same batch.
Timing timing_bench(const model::BanachLayer& layer, std::span<const Tensor3<double>> batch,
                    Precision precision = Precision::F32);

/// SHA-256 hex digest of the field payload and dims.
std::string hash_field(const data::FieldSeries& f);

void write_report_csv(std::span<const EvalReport> rows, const std::filesystem::path& path);
std::string format_report_table(std::span<const EvalReport> rows);

}  // namespace bno::eval

#endif  // BNO_EVAL_HPP_
