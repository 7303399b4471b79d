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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bno/eval.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace bno;
using namespace bno::eval;
using data::FieldSeries;
using data::WindowSpec;
namespace fs = std::filesystem;
using cplx = std::complex<double>;

namespace {

FieldSeries linear_field(Index nx, Index ny, Index nt, double dt, double growth = -0.02) {
  data::SynthSpec spec;
  spec.modes = {{cplx(growth, 2.0), cplx(1.0, 0.0), 1.0, 0.0},
                {cplx(-0.05, 5.0), cplx(0.5, 0.0), 2.0, 1.0}};
  return data::synth_generate(spec, nx, ny, nt, dt, 7);
}

FieldSeries random_field(Index nx, Index ny, Index nt, std::uint64_t seed) {
  FieldSeries f = FieldSeries::zeros(nx, ny, nt, 0.1);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  for (double& v : f.values) v = g(rng);
  return f;
}

template <class F>
ErrorKind kind_of(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::InvalidArgument;
}

model::ArchConfig small_arch() {
  model::ArchConfig a;
  a.time_taps = 3;
  a.space_taps = 3;
  a.filters = {3, 4, 3};
  a.dmd_rank = 4;
  a.dmd_horizon = 1;
  return a;
}

}  // namespace

TEST_CASE("a model that returns the label scores zero") {
  const data::Dataset ds = data::build_windows(random_field(4, 3, 40, 1), WindowSpec{5, 2, 10, 1});
  const FunctionForecaster perfect("oracle", [&](const Tensor3<double>& x) {
    for (size_t i = 0; i < ds.inputs.size(); ++i)
      if (ds.inputs[i] == x) return ds.labels[i];
    FAIL("unknown window");
    return x;
  });
  for (double v : one_step_predict(perfect, ds)) CHECK(v == 0.0);
  const EvalReport r = evaluate_split(perfect, ds);
  CHECK(r.train_loss == 0.0);
  CHECK(r.validation_loss == 0.0);
  CHECK(r.gap == 0.0);
  CHECK(r.resolution == "4x3");
  CHECK(r.model == "oracle");
}

TEST_CASE("window_mse matches a direct mean of squares") {
  Tensor3<double> a(2, 2, 1), b(2, 2, 1);
  a.values() = {1.0, 2.0, 3.0, 4.0};
  b.values() = {0.0, 2.0, 5.0, 4.0};
  CHECK(window_mse(a, b) == doctest::Approx(5.0 / 4.0).epsilon(1e-15));
  CHECK(kind_of([&] { window_mse(a, Tensor3<double>(2, 3, 1)); }) == ErrorKind::ShapeMismatch);
}

TEST_CASE("koopman-only model is exact on rank-exact linear data") {
  const data::Dataset ds = data::build_windows(linear_field(8, 4, 80, 0.1), WindowSpec{12, 2, 20, 1});
  const DmdForecaster dmd(model::KoopmanConfig{4, 1});
  for (double v : one_step_predict(dmd, ds)) CHECK(v <= 1e-10);
  const data::Dataset ds3 = data::build_windows(linear_field(8, 4, 80, 0.1), WindowSpec{12, 2, 10, 3});
  for (double v : one_step_predict(DmdForecaster(model::KoopmanConfig{4, 3}), ds3)) CHECK(v <= 1e-10);
}

TEST_CASE("one-step prediction checks window indices and shapes") {
  const data::Dataset ds = data::build_windows(random_field(4, 3, 40, 2), WindowSpec{5, 2, 10, 1});
  const std::vector<Index> bad = {10};
  const DmdForecaster dmd(model::KoopmanConfig{4, 1});
  CHECK(kind_of([&] { one_step_predict(dmd, ds, bad); }) == ErrorKind::IndexOutOfRange);
  const FunctionForecaster wrong("wrong", [](const Tensor3<double>& x) {
    return Tensor3<double>(x.n_space(), x.n_time() + 1, 1);
  });
  CHECK(kind_of([&] { one_step_predict(wrong, ds); }) == ErrorKind::ShapeMismatch);
}

TEST_CASE("rollout with one step equals one-step prediction") {
  const FieldSeries f = random_field(4, 4, 60, 3);
  const WindowSpec w{6, 2, 12, 1};
  const data::Dataset ds = data::build_windows(f, w);
  const model::BnoModel m = model::BnoModel::create(small_arch(), 4);
  const BnoForecaster bno(m);
  const auto per = one_step_predict(bno, ds);
  for (Index i = 1; i <= 12; ++i) {
    const auto truth = rollout_truth(f, w, i, 1);
    CHECK(truth[0] == ds.labels[static_cast<size_t>(i - 1)]);
    const RolloutResult r = rollout(bno, ds.inputs[static_cast<size_t>(i - 1)], 1, truth);
    REQUIRE(r.per_step_mse.size() == 1);
    CHECK(r.per_step_mse[0] == per[static_cast<size_t>(i - 1)]);
    CHECK(r.predictions[0] == bno.predict(ds.inputs[static_cast<size_t>(i - 1)]));
  }
}

TEST_CASE("identity rollout: constant predictions, MSE equals ground-truth drift") {
  const FieldSeries f = random_field(3, 3, 80, 5);
  const WindowSpec w{5, 2, 10, 2};
  const FunctionForecaster identity("id", [](const Tensor3<double>& x) { return x; });
  const Tensor3<double> start = data::window_at(f, w, 2);
  const auto truth = rollout_truth(f, w, 2, 6);
  const RolloutResult r = rollout(identity, start, 6, truth);
  CHECK(r.steps == 6);
  CHECK_FALSE(r.diverged_at.has_value());
  REQUIRE(r.predictions.size() == 6);
  REQUIRE(r.per_step_mse.size() == 6);
  for (Index j = 0; j < 6; ++j) {
    CHECK(r.predictions[static_cast<size_t>(j)] == start);
    CHECK(r.per_step_mse[static_cast<size_t>(j)] == window_mse(start, truth[static_cast<size_t>(j)]));
    CHECK(truth[static_cast<size_t>(j)] == data::window_at(f, w, 2 + (j + 1) * 2));
  }
  const RolloutResult unscored = rollout(identity, start, 3);
  CHECK(unscored.per_step_mse.empty());
  CHECK(unscored.predictions.size() == 3);
  CHECK(kind_of([&] { rollout(identity, start, 0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("DMD rollout on an unstable linear system is flagged as divergent") {
  // |lambda| = 1.3 per snapshot; the window-to-window step advances k * s = 6
  // snapshots, a growth of 1.3^6 per rollout step.
  data::SynthSpec spec;
  spec.modes = {{cplx(std::log(1.3) / 0.1, 2.0), cplx(1.0, 0.0), 1.0, 0.0},
                {cplx(-0.05, 5.0), cplx(0.5, 0.0), 2.0, 1.0}};
  const FieldSeries f = data::synth_generate(spec, 8, 4, 40, 0.1, 3);
  const WindowSpec w{10, 2, 1, 3};
  const DmdForecaster dmd(model::KoopmanConfig{12, 3});
  const RolloutResult r = rollout(dmd, data::window_at(f, w, 1), 12);
  REQUIRE(r.diverged_at.has_value());
  CHECK(*r.diverged_at <= 12);
  CHECK(r.predictions.size() == static_cast<size_t>(*r.diverged_at));

  const FunctionForecaster nan_model("nan", [](const Tensor3<double>& x) {
    Tensor3<double> y = x;
    y.values()[0] = std::nan("");
    return y;
  });
  const RolloutResult n = rollout(nan_model, data::window_at(f, w, 1), 5);
  REQUIRE(n.diverged_at.has_value());
  CHECK(*n.diverged_at == 1);
}

TEST_CASE("super-resolution at the training resolution reproduces one-step MSE") {
  const FieldSeries raw = linear_field(8, 4, 80, 0.1);
  const auto [norm, stats] = data::zscore_fit_apply(raw);
  const WindowSpec w{10, 2, 20, 1};
  const data::Dataset ds = data::build_windows(norm, w);
  model::BnoModel m = model::BnoModel::create(small_arch(), 6);
  m.norm = stats;
  const BnoForecaster bno(m);
  const EvalReport direct = evaluate_split(bno, ds);
  const EvalReport sr = superres_eval(bno, stats, raw, w);
  CHECK(std::abs(sr.validation_loss - direct.validation_loss) <= 1e-12);
  CHECK(std::abs(sr.train_loss - direct.train_loss) <= 1e-12);
  CHECK(sr.input_hash == hash_field(raw));
  CHECK(sr.resolution == "8x4");

  model::CnnBaseline cnn = model::CnnBaseline::create(small_arch(), 7);
  cnn.norm = stats;
  const auto rows = superres_transfer_eval(m, &cnn, raw, w, 0.7, Precision::F64);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].model == "BNO");
  CHECK(rows[1].model == "BNO->CNN");
  CHECK(rows[2].model == "CNN");
  CHECK(rows[3].model == "CNN->BNO");
  CHECK(rows[0].validation_loss == direct.validation_loss);
  for (const auto& r : rows) CHECK(std::isfinite(r.validation_loss));
  CHECK(superres_transfer_eval(m, nullptr, raw, w, 0.7, Precision::F64).size() == 2);
}

TEST_CASE("line profiles") {
  FieldSeries c = FieldSeries::zeros(3, 5, 4, 1.0);
  std::fill(c.values.begin(), c.values.end(), -1.5);
  for (double v : line_profile(c, 2, 3)) CHECK(v == -1.5);

  const FieldSeries f = random_field(6, 5, 7, 8);
  const auto p = line_profile(f, 4, 2);
  REQUIRE(p.size() == 5);
  for (Index y = 0; y < 5; ++y) CHECK(p[static_cast<size_t>(y)] == f.values[static_cast<size_t>((4 * 5 + y) * 7 + 2)]);

  const fs::path tmp = fs::temp_directory_path() / ("bno_profile_" + std::to_string(std::random_device{}()) + ".fld");
  data::save_field(f, tmp, data::FieldPrecision::F64);
  CHECK(line_profile(data::load_field(tmp), 4, 2) == p);
  fs::remove(tmp);

  const data::Dataset ds = data::build_windows(f, WindowSpec{3, 1, 2, 1});
  const auto wp = line_profile(ds.inputs[0], 6, 5, 4, 1);
  CHECK(wp == line_profile(f, 4, 1));

  CHECK(kind_of([&] { line_profile(f, 6, 0); }) == ErrorKind::IndexOutOfRange);
  CHECK(kind_of([&] { line_profile(f, 0, 7); }) == ErrorKind::IndexOutOfRange);
  CHECK(kind_of([&] { line_profile(f, -1, 0); }) == ErrorKind::IndexOutOfRange);
  CHECK(kind_of([&] { line_profile(ds.inputs[0], 5, 5, 0, 0); }) == ErrorKind::ShapeMismatch);
}

TEST_CASE("timing bench reports positive times") {
  const model::BnoModel m = model::BnoModel::create(small_arch(), 9);
  const data::Dataset ds = data::build_windows(random_field(8, 4, 60, 10), WindowSpec{10, 2, 5, 1});
  const Timing t = timing_bench(m.layers[0], ds.inputs);
  CHECK(t.dmd_seconds > 0.0);
  CHECK(t.cnn_seconds > 0.0);
  CHECK(t.ratio > 0.0);
  CHECK(kind_of([&] { timing_bench(m.layers[0], std::span<const Tensor3<double>>{}); }) ==
        ErrorKind::InvalidArgument);
}

TEST_CASE("field hash is SHA-256 over little-endian dims, dt and values") {
  FieldSeries f = FieldSeries::zeros(2, 1, 2, 0.5);
  f.values = {1.0, -2.0, 0.25, 3.0};
  CHECK(hash_field(f) == "424fc23388a93d4a6b7842c8224a7e8d8a370edd5e511d84b705714767259a4b");
  FieldSeries g = f;
  g.values[3] = std::nextafter(3.0, 4.0);
  CHECK(hash_field(g) != hash_field(f));
}

TEST_CASE("report CSV and table layout") {
  std::vector<EvalReport> rows(2);
  rows[0] = {"BNO", "32x16", 1.5e-3, 2.25e-3, 7.5e-4, 0, 0, "abc"};
  rows[1] = {"CNN", "32x16", 0.1, 0.3, 0.2, 0, 0, "abc"};
  const fs::path tmp = fs::temp_directory_path() / ("bno_report_" + std::to_string(std::random_device{}()) + ".csv");
  write_report_csv(rows, tmp);
  std::ifstream is(tmp);
  std::stringstream ss;
  ss << is.rdbuf();
  fs::remove(tmp);
  CHECK(ss.str() ==
        "model,resolution,train_loss,validation_loss,gap,input_hash\n"
        "BNO,32x16,0.0015,0.0022499999999999998,0.00075000000000000002,abc\n"
        "CNN,32x16,0.10000000000000001,0.29999999999999999,0.20000000000000001,abc\n");
  const std::string table = format_report_table(rows);
  CHECK(table.find("Validation loss") != std::string::npos);
  CHECK(table.find("BNO") != std::string::npos);
  CHECK(std::count(table.begin(), table.end(), '\n') == 3);
  CHECK(kind_of([&] { write_report_csv(rows, "/nonexistent/dir/report.csv"); }) == ErrorKind::IoError);
}
