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

#include "bno/eval.hpp"

#include "binio.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

namespace bno::eval {

namespace {

template <class Fn>
Tensor3<double> run_in(Precision p, const Tensor3<double>& x, Fn&& fn) {
  if (p == Precision::F64) return fn(x);
  return fn(x.cast<float>()).template cast<double>();
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

Tensor3<double> BnoForecaster::predict(const Tensor3<double>& window) const {
  return run_in(precision_, window, [&](const auto& x) { return model::bno_forward(*model_, x); });
}

Tensor3<double> CnnForecaster::predict(const Tensor3<double>& window) const {
  return run_in(precision_, window, [&](const auto& x) { return model::cnn_forward(*model_, x); });
}

Tensor3<double> DmdForecaster::predict(const Tensor3<double>& window) const {
  return model::koopman_branch(window, cfg_, 1.0);
}

double window_mse(const Tensor3<double>& pred, const Tensor3<double>& target) {
  if (pred.size() == 0) throw Error(ErrorKind::ShapeMismatch, "empty window");
  return nn::mse_partial<double>(pred, target, 1.0, nullptr) / static_cast<double>(pred.size());
}

std::vector<double> one_step_predict(const Forecaster& model, const data::Dataset& ds,
                                     std::span<const Index> windows) {
  std::vector<double> out;
  out.reserve(windows.size());
  for (Index i : windows) {
    if (i < 0 || i >= static_cast<Index>(ds.inputs.size())) {
      throw Error(ErrorKind::IndexOutOfRange, "window " + std::to_string(i));
    }
    const auto& x = ds.inputs[static_cast<size_t>(i)];
    const auto& y = ds.labels[static_cast<size_t>(i)];
    const Tensor3<double> pred = model.predict(x);
    require_same_shape(pred, y, "one_step_predict");
    out.push_back(window_mse(pred, y));
  }
  return out;
}

std::vector<double> one_step_predict(const Forecaster& model, const data::Dataset& ds) {
  std::vector<Index> all(ds.inputs.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Index>(i);
  return one_step_predict(model, ds, all);
}

double mean_mse(const Forecaster& model, const data::Dataset& ds,
                std::span<const Index> windows) {
  if (windows.empty()) return 0.0;
  const auto per = one_step_predict(model, ds, windows);
  double sum = 0.0;
  for (double v : per) sum += v;
  return sum / static_cast<double>(per.size());
}

RolloutResult rollout(const Forecaster& model, const Tensor3<double>& initial, Index steps,
                      std::span<const Tensor3<double>> truth) {
  if (steps < 1) throw Error(ErrorKind::InvalidArgument, "rollout needs steps >= 1");
  const bool score = static_cast<Index>(truth.size()) >= steps;
  const double limit = kDivergenceFactor * std::max(initial.max_abs(), 1e-300);
  RolloutResult out;
  out.steps = steps;
  Tensor3<double> current = initial;
  for (Index step = 1; step <= steps; ++step) {
    Tensor3<double> pred = model.predict(current);
    const bool blown = !pred.all_finite() || pred.max_abs() > limit;
    if (score) out.per_step_mse.push_back(window_mse(pred, truth[static_cast<size_t>(step - 1)]));
    out.predictions.push_back(pred);
    if (blown) {
      out.diverged_at = step;
      break;
    }
    current = std::move(pred);
  }
  return out;
}

std::vector<Tensor3<double>> rollout_truth(const data::FieldSeries& f, const data::WindowSpec& w,
                                           Index start, Index steps) {
  std::vector<Tensor3<double>> out;
  for (Index j = 1; j <= steps; ++j) out.push_back(data::window_at(f, w, start + j * w.s));
  return out;
}

std::string resolution_string(Index nx, Index ny) { return fmt::format("{}x{}", nx, ny); }

EvalReport evaluate_split(const Forecaster& model, const data::Dataset& ds) {
  EvalReport r;
  r.model = model.tag();
  r.resolution = resolution_string(ds.nx, ds.ny);
  r.train_loss = mean_mse(model, ds, ds.train);
  r.validation_loss = mean_mse(model, ds, ds.validation);
  r.gap = std::abs(r.train_loss - r.validation_loss);
  return r;
}

EvalReport superres_eval(const Forecaster& model, const data::NormStats& stats,
                         const data::FieldSeries& field, const data::WindowSpec& w,
                         double train_fraction) {
  const data::Dataset ds = data::build_windows(data::normalize(field, stats), w, train_fraction);
  EvalReport r = evaluate_split(model, ds);
  r.input_hash = hash_field(field);
  return r;
}

std::vector<EvalReport> superres_transfer_eval(const model::BnoModel& bno,
                                               const model::CnnBaseline* cnn,
                                               const data::FieldSeries& field,
                                               const data::WindowSpec& w,
                                               double train_fraction, Precision precision) {
  std::vector<EvalReport> rows;
  rows.push_back(superres_eval(BnoForecaster(bno, precision, "BNO"), bno.norm, field, w,
                               train_fraction));
  const model::CnnBaseline bno_in_cnn = model::transfer_weights(bno);
  rows.push_back(superres_eval(CnnForecaster(bno_in_cnn, precision, "BNO->CNN"), bno.norm, field,
                               w, train_fraction));
  if (cnn != nullptr) {
    rows.push_back(
        superres_eval(CnnForecaster(*cnn, precision, "CNN"), cnn->norm, field, w, train_fraction));
    model::BnoModel cnn_in_bno = model::transfer_weights(*cnn, bno.layers.front().koopman);
    rows.push_back(superres_eval(BnoForecaster(cnn_in_bno, precision, "CNN->BNO"), cnn->norm,
                                 field, w, train_fraction));
  }
  return rows;
}

std::vector<double> line_profile(const data::FieldSeries& f, Index x, Index t) {
  if (x < 0 || x >= f.nx || t < 0 || t >= f.nt) {
    throw Error(ErrorKind::IndexOutOfRange,
                fmt::format("profile at x={} t={} outside {}x{}x{}", x, t, f.nx, f.ny, f.nt));
  }
  std::vector<double> out(static_cast<size_t>(f.ny));
  for (Index y = 0; y < f.ny; ++y) out[static_cast<size_t>(y)] = f.at(x, y, t);
  return out;
}

std::vector<double> line_profile(const Tensor3<double>& window, Index nx, Index ny, Index x,
                                 Index t) {
  if (nx * ny != window.n_space()) {
    throw Error(ErrorKind::ShapeMismatch, "grid dims do not match window space axis");
  }
  if (x < 0 || x >= nx || t < 0 || t >= window.n_time()) {
    throw Error(ErrorKind::IndexOutOfRange, fmt::format("profile at x={} t={}", x, t));
  }
  std::vector<double> out(static_cast<size_t>(ny));
  for (Index y = 0; y < ny; ++y) out[static_cast<size_t>(y)] = window(x * ny + y, t, 0);
  return out;
}

Timing timing_bench(const model::BanachLayer& layer, std::span<const Tensor3<double>> batch,
                    Precision precision) {
  if (batch.empty()) throw Error(ErrorKind::InvalidArgument, "timing batch is empty");
  Timing t;
  auto t0 = Clock::now();
  for (const auto& x : batch) {
    const auto k = model::koopman_branch(x, layer.koopman, 1.0);
    (void)k;
  }
  t.dmd_seconds = seconds_since(t0);

  t0 = Clock::now();
  for (const auto& x : batch) {
    run_in(precision, x, [&](const auto& in) {
      using T = typename std::decay_t<decltype(in)>::value_type;
      Tensor3<T> u = in;
      for (const auto& l : layer.cnn.branch) u = nn::conv2d_forward(u, l);
      return u;
    });
  }
  t.cnn_seconds = seconds_since(t0);
  t.ratio = t.dmd_seconds / std::max(t.cnn_seconds, 1e-12);
  return t;
}

std::string hash_field(const data::FieldSeries& f) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  const std::uint64_t dims[3] = {binio::to_little<std::uint64_t>(f.nx),
                                 binio::to_little<std::uint64_t>(f.ny),
                                 binio::to_little<std::uint64_t>(f.nt)};
  EVP_DigestUpdate(ctx.get(), dims, sizeof(dims));
  const double dt = binio::to_little(f.dt);
  EVP_DigestUpdate(ctx.get(), &dt, sizeof(dt));
  for (double v : f.values) {
    const double le = binio::to_little(v);
    EVP_DigestUpdate(ctx.get(), &le, sizeof(le));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

void write_report_csv(std::span<const EvalReport> rows, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  os << "model,resolution,train_loss,validation_loss,gap,input_hash\n";
  for (const auto& r : rows) {
    os << fmt::format("{},{},{:.17g},{:.17g},{:.17g},{}\n", r.model, r.resolution, r.train_loss,
                      r.validation_loss, r.gap, r.input_hash);
  }
  if (!os) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

std::string format_report_table(std::span<const EvalReport> rows) {
  std::ostringstream os;
  os << fmt::format("{:<12} {:>10} {:>14} {:>16} {:>14}\n", "Model", "Resolution",
                    "Training loss", "Validation loss", "Overfit gap");
  for (const auto& r : rows) {
    os << fmt::format("{:<12} {:>10} {:>14.4e} {:>16.4e} {:>14.4e}\n", r.model, r.resolution,
                      r.train_loss, r.validation_loss, r.gap);
  }
  return os.str();
}

}  // namespace bno::eval
