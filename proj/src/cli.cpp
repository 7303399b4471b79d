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

#include "bno/cli.hpp"

#include "bno/checkpoint.hpp"
#include "bno/dmd.hpp"
#include "bno/eval.hpp"
#include "bno/train.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

namespace bno::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string> kCommands = {"generate", "dmd",      "train", "predict",
                                            "rollout",  "superres", "report"};

/// Usage errors raised while reading the configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  fs::path data;
  fs::path out;
  fs::path checkpoint;
  fs::path checkpoint2;
  std::vector<fs::path> runs;

  Index nx = 0, ny = 0, nt = 0;
  double dt = 0.0;
  data::SynthSpec synth;
  std::uint64_t data_seed = 0;
  data::FieldPrecision field_precision = data::FieldPrecision::F64;
  Index pool = 1;

  data::WindowSpec window;
  double split = 0.7;
  std::string model;
  model::ArchConfig arch;
  train::TrainConfig train;
  std::uint64_t seed = 0;

  Index steps = 9;
  Index start = 1;
  Index sweep_max = 0;
  bool report_dmd = true;
};

json mode_json(double om_re, double om_im, double amp, double kx, double ky) {
  return {{"omega", {om_re, om_im}}, {"amplitude", {amp, 0.0}}, {"kx", kx}, {"ky", ky}};
}

void setup_logging() {
  static bool done = false;
  if (!done) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("bno"));
    spdlog::set_pattern("[%l] %v");
    done = true;
  }
  const char* env = std::getenv("BNO_LOG");
  const std::string level = env == nullptr ? "info" : env;
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "info") {
    spdlog::set_level(spdlog::level::info);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    throw ConfigError("BNO_LOG must be one of error, info, debug (got '" + level + "')");
  }
}

bool same_type(const json& def, const json& v) {
  if (def.is_number_integer()) return v.is_number_integer();
  if (def.is_number()) return v.is_number();
  return def.type() == v.type();
}

void set_key(json& cfg, const std::string& key, const json& value) {
  const json defaults = default_config();
  if (!defaults.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  if (!same_type(defaults[key], value)) {
    throw ConfigError(fmt::format("config key '{}' expects a value like {}", key,
                                  defaults[key].dump()));
  }
  cfg[key] = value;
}

void apply_override(json& cfg, const std::string& key, const std::string& text) {
  const json defaults = default_config();
  if (!defaults.contains(key)) throw ConfigError("unknown option --" + key);
  if (defaults[key].is_string()) {
    set_key(cfg, key, text);
    return;
  }
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("cannot parse value '{}' for --{}", text, key));
  }
  set_key(cfg, key, value);
}

template <class T>
T get(const json& cfg, const char* key) {
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("config key '{}' has the wrong type", key));
  }
}

data::SynthSpec synth_from_json(const json& modes, double epsilon, double noise) {
  data::SynthSpec spec;
  spec.epsilon = epsilon;
  spec.noise = noise;
  try {
    for (const json& m : modes) {
      data::SynthMode sm;
      sm.omega = {m.at("omega").at(0).get<double>(), m.at("omega").at(1).get<double>()};
      sm.amplitude = {m.at("amplitude").at(0).get<double>(),
                      m.at("amplitude").at(1).get<double>()};
      sm.kx = m.at("kx").get<double>();
      sm.ky = m.at("ky").get<double>();
      spec.modes.push_back(sm);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synth_modes: ") + e.what());
  }
  return spec;
}

eval::Precision precision_from(const std::string& s) {
  if (s == "f32") return eval::Precision::F32;
  if (s == "f64") return eval::Precision::F64;
  throw ConfigError("precision must be f32 or f64");
}

RunConfig parse_config(const std::string& command, const json& cfg) {
  RunConfig rc;
  rc.command = command;
  rc.data = get<std::string>(cfg, "data");
  rc.out = get<std::string>(cfg, "out");
  rc.checkpoint = get<std::string>(cfg, "checkpoint");
  rc.checkpoint2 = get<std::string>(cfg, "checkpoint2");
  for (const auto& p : get<std::vector<std::string>>(cfg, "runs")) rc.runs.emplace_back(p);

  rc.nx = get<Index>(cfg, "nx");
  rc.ny = get<Index>(cfg, "ny");
  rc.nt = get<Index>(cfg, "nt");
  rc.dt = get<double>(cfg, "dt");
  rc.synth = synth_from_json(cfg.at("synth_modes"), get<double>(cfg, "synth_epsilon"),
                             get<double>(cfg, "synth_noise"));
  rc.data_seed = get<std::uint64_t>(cfg, "data_seed");
  const auto fp = get<std::string>(cfg, "field_precision");
  if (fp != "f32" && fp != "f64") throw ConfigError("field_precision must be f32 or f64");
  rc.field_precision = fp == "f32" ? data::FieldPrecision::F32 : data::FieldPrecision::F64;
  rc.pool = get<Index>(cfg, "pool");
  if (rc.pool < 1) throw ConfigError("pool must be >= 1");

  rc.window = {get<Index>(cfg, "n"), get<Index>(cfg, "k"), get<Index>(cfg, "m"),
               get<Index>(cfg, "s")};
  rc.split = get<double>(cfg, "split");
  if (!(rc.split >= 0.0 && rc.split <= 1.0)) throw ConfigError("split must lie in [0, 1]");
  rc.model = get<std::string>(cfg, "model");
  if (rc.model != "bno" && rc.model != "cnn" && rc.model != "dmd") {
    throw ConfigError("model must be bno, cnn or dmd");
  }

  rc.arch.time_taps = rc.arch.space_taps = get<Index>(cfg, "kernel");
  rc.arch.filters = get<std::vector<Index>>(cfg, "filters");
  rc.arch.dmd_rank = get<Index>(cfg, "rank");
  // -1 ties the Koopman horizon to the label shift s.
  const int horizon = get<int>(cfg, "horizon");
  rc.arch.dmd_horizon = horizon == -1 ? static_cast<int>(rc.window.s) : horizon;
  rc.arch.layers = get<Index>(cfg, "layers");

  rc.seed = get<std::uint64_t>(cfg, "seed");
  rc.train.epochs = get<Index>(cfg, "epochs");
  rc.train.max_steps = get<std::int64_t>(cfg, "max_steps");
  rc.train.batch_size = get<Index>(cfg, "batch_size");
  rc.train.schedule.boundaries = get<std::vector<std::int64_t>>(cfg, "lr_boundaries");
  rc.train.schedule.rates = get<std::vector<double>>(cfg, "lr_rates");
  rc.train.seed = rc.seed;
  rc.train.precision = precision_from(get<std::string>(cfg, "precision"));
  rc.train.threads = get<Index>(cfg, "threads");
  rc.train.validate_every = get<Index>(cfg, "validate_every");

  rc.steps = get<Index>(cfg, "steps");
  rc.start = get<Index>(cfg, "start");
  rc.sweep_max = get<Index>(cfg, "sweep_max");
  rc.report_dmd = get<bool>(cfg, "report_dmd");
  return rc;
}

/// Checks every precondition that does not need input files.
void validate_static(const RunConfig& rc) {
  if (rc.out.empty()) throw ConfigError("out must not be empty");
  if (rc.data.empty()) {
    if (rc.nx < 1 || rc.ny < 1 || rc.nt < 1 || !(rc.dt > 0.0)) {
      throw Error(ErrorKind::BadSpec, "nx, ny, nt and dt must be positive");
    }
    if (rc.synth.modes.empty()) throw Error(ErrorKind::BadSpec, "synth_modes is empty");
  }
  if (rc.command == "generate") return;
  if (rc.command == "dmd") {
    if (rc.arch.dmd_rank < 1) throw ConfigError("rank must be >= 1");
    if (rc.sweep_max < 0) throw ConfigError("sweep_max must be >= 0");
    return;
  }
  rc.window.validate();
  rc.arch.validate();
  if (rc.command == "train") {
    if (rc.model == "dmd") throw ConfigError("the DMD baseline has no trainable weights");
    rc.train.validate();
  }
  if (rc.command == "rollout") {
    if (rc.steps < 1) throw ConfigError("steps must be >= 1");
    if (rc.start < 1 || rc.start > rc.window.m) throw ConfigError("start must lie in [1, m]");
  }
  const bool needs_checkpoint = rc.command == "superres" ||
                                ((rc.command == "predict" || rc.command == "rollout") &&
                                 rc.model != "dmd");
  if (needs_checkpoint && rc.checkpoint.empty()) {
    throw ConfigError(rc.command + " needs a checkpoint");
  }
  if (rc.command == "report" && rc.runs.empty() && !rc.report_dmd) {
    throw ConfigError("report needs runs or report_dmd");
  }
}

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw Error(ErrorKind::IoError, "no such file: " + p.string());
}

data::FieldSeries load_series(const RunConfig& rc) {
  data::FieldSeries f;
  if (rc.data.empty()) {
    f = data::synth_generate(rc.synth, rc.nx, rc.ny, rc.nt, rc.dt, rc.data_seed);
  } else {
    require_file(rc.data);
    f = data::load_field(rc.data);
  }
  if (rc.pool > 1) f = data::avg_pool(f, rc.pool);
  return f;
}

void prepare_out(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + out.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::trunc);
  if (!os) throw Error(ErrorKind::IoError, "cannot open " + p.string() + " for writing");
  return os;
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

// --- commands ---------------------------------------------------------------

int cmd_generate(const RunConfig& rc) {
  const data::FieldSeries f =
      data::synth_generate(rc.synth, rc.nx, rc.ny, rc.nt, rc.dt, rc.data_seed);
  prepare_out(rc.out);
  const fs::path path = rc.out / "field.fld";
  data::save_field(f, path, rc.field_precision);
  std::cout << fmt::format("wrote {} ({}x{}x{}, dt={})\n", path.string(), f.nx, f.ny, f.nt,
                           f.dt);
  std::cout << "generator eigenvalues:\n";
  for (const auto& l : data::synth_eigenvalues(rc.synth, rc.dt)) {
    std::cout << fmt::format("  {} {:+}i\n", num(l.real()), l.imag());
  }
  return kOk;
}

dmd::SnapshotMatrix snapshots_of(const data::FieldSeries& f) {
  dmd::SnapshotMatrix s;
  s.dt = f.dt;
  s.values.resize(f.n_space(), f.nt);
  for (Index p = 0; p < f.n_space(); ++p) {
    for (Index t = 0; t < f.nt; ++t) s.values(p, t) = f.values[static_cast<size_t>(p * f.nt + t)];
  }
  return s;
}

int cmd_dmd(const RunConfig& rc) {
  const data::FieldSeries f = load_series(rc);
  if (rc.arch.dmd_rank > f.nt - 1) {
    throw Error(ErrorKind::RankTooLarge, fmt::format("rank {} exceeds snapshots-1 = {}",
                                                     rc.arch.dmd_rank, f.nt - 1));
  }
  const dmd::SnapshotMatrix snaps = snapshots_of(f);
  const dmd::DmdModel m = dmd::dmd_fit(snaps, rc.arch.dmd_rank);

  std::vector<double> times(static_cast<size_t>(f.nt));
  for (Index t = 0; t < f.nt; ++t) times[static_cast<size_t>(t)] = static_cast<double>(t) * f.dt;
  const Index sweep = rc.sweep_max == 0 ? rc.arch.dmd_rank : std::min(rc.sweep_max, f.nt - 1);
  std::vector<std::pair<Index, double>> errors;
  const double norm = snaps.values.norm();
  for (Index r = 1; r <= sweep; ++r) {
    const dmd::DmdModel mr = dmd::dmd_fit(snaps, r);
    const dmd::KoopmanOutput rec = dmd::dmd_reconstruct(mr, times);
    errors.emplace_back(r, (rec.values - snaps.values).norm() / std::max(norm, 1e-300));
  }

  prepare_out(rc.out);
  auto modes = open_out(rc.out / "dmd_modes.csv");
  modes << "index,lambda_re,lambda_im,omega_re,omega_im,amplitude_abs\n";
  std::cout << fmt::format("rank {} (requested {})\n", m.rank, m.requested_rank);
  for (Index i = 0; i < m.rank; ++i) {
    const auto l = m.eig_discrete(i);
    const auto w = m.eig_continuous(i);
    const double b = std::abs(m.amplitudes(i));
    modes << fmt::format("{},{},{},{},{},{}\n", i, num(l.real()), num(l.imag()), num(w.real()),
                         num(w.imag()), num(b));
    std::cout << fmt::format("  {:>3}  lambda {:+.10f} {:+.10f}i  |b| {:.4e}\n", i, l.real(),
                             l.imag(), b);
  }
  auto sw = open_out(rc.out / "dmd_sweep.csv");
  sw << "rank,relative_error\n";
  for (const auto& [r, e] : errors) sw << fmt::format("{},{}\n", r, num(e));
  return kOk;
}

int cmd_train(const RunConfig& rc) {
  const data::FieldSeries raw = load_series(rc);
  rc.window.validate_against(raw.nt);
  auto [normed, stats] = data::zscore_fit_apply(raw);
  const data::Dataset ds = data::build_windows(normed, rc.window, rc.split);

  prepare_out(rc.out);
  train::TrainResult result;
  const fs::path ckpt = rc.out / "model.bno";
  if (rc.model == "bno") {
    model::BnoModel m = model::BnoModel::create(rc.arch, rc.seed);
    m.norm = stats;
    m.window = rc.window;
    m.meta.train_nx = ds.nx;
    m.meta.train_ny = ds.ny;
    if (rc.train.epochs > 0) result = train::train(m, ds, rc.train);
    model::save_checkpoint(m, ckpt);
  } else {
    model::CnnBaseline m = model::CnnBaseline::create(rc.arch, rc.seed);
    m.norm = stats;
    m.window = rc.window;
    m.meta.train_nx = ds.nx;
    m.meta.train_ny = ds.ny;
    if (rc.train.epochs > 0) result = train::train(m, ds, rc.train);
    model::save_checkpoint(m, ckpt);
  }
  train::write_history_csv(result, rc.out / "history.csv");
  if (!result.history.empty()) {
    const auto& last = result.history.back();
    std::cout << fmt::format("steps {} final train {:.6e} validation {:.6e}\n", result.steps,
                             last.train, last.validation);
  }
  std::cout << "wrote " << ckpt.string() << "\n";
  return kOk;
}

/// A loaded forecaster plus the model it points into.
struct Loaded {
  std::unique_ptr<model::AnyModel> model;
  std::unique_ptr<eval::Forecaster> forecaster;
  data::NormStats norm;
  bool has_norm = false;
};

Loaded load_forecaster(const RunConfig& rc, const fs::path& path, bool dmd_only) {
  Loaded l;
  if (dmd_only) {
    l.forecaster = std::make_unique<eval::DmdForecaster>(
        model::KoopmanConfig{rc.arch.dmd_rank, rc.arch.dmd_horizon});
    return l;
  }
  require_file(path);
  l.model = std::make_unique<model::AnyModel>(model::load_any_checkpoint(path));
  if (auto* b = std::get_if<model::BnoModel>(l.model.get())) {
    l.forecaster = std::make_unique<eval::BnoForecaster>(*b, rc.train.precision, "BNO");
    l.norm = b->norm;
  } else {
    auto& c = std::get<model::CnnBaseline>(*l.model);
    l.forecaster = std::make_unique<eval::CnnForecaster>(c, rc.train.precision, "CNN");
    l.norm = c.norm;
  }
  l.has_norm = true;
  return l;
}

data::FieldSeries normalized_for(const Loaded& l, const data::FieldSeries& raw) {
  return l.has_norm ? data::normalize(raw, l.norm) : data::zscore_fit_apply(raw).first;
}

int cmd_predict(const RunConfig& rc) {
  const Loaded l = load_forecaster(rc, rc.checkpoint, rc.model == "dmd");
  const data::FieldSeries raw = load_series(rc);
  rc.window.validate_against(raw.nt);
  const data::Dataset ds = data::build_windows(normalized_for(l, raw), rc.window, rc.split);
  const std::vector<double> per = eval::one_step_predict(*l.forecaster, ds);

  prepare_out(rc.out);
  auto os = open_out(rc.out / "predict.csv");
  os << "window,split,mse\n";
  for (size_t i = 0; i < per.size(); ++i) {
    const bool tr = std::find(ds.train.begin(), ds.train.end(), static_cast<Index>(i)) !=
                    ds.train.end();
    os << fmt::format("{},{},{}\n", i + 1, tr ? "train" : "validation", num(per[i]));
  }
  const eval::EvalReport r = eval::evaluate_split(*l.forecaster, ds);
  std::cout << fmt::format("{} train {:.6e} validation {:.6e}\n", r.model, r.train_loss,
                           r.validation_loss);
  return kOk;
}

int cmd_rollout(const RunConfig& rc) {
  const Loaded l = load_forecaster(rc, rc.checkpoint, rc.model == "dmd");
  const data::FieldSeries raw = load_series(rc);
  rc.window.validate_against(raw.nt);
  const data::FieldSeries f = normalized_for(l, raw);
  const Tensor3<double> initial = data::window_at(f, rc.window, rc.start);
  std::vector<Tensor3<double>> truth;
  const Index last_start = rc.start + rc.steps * rc.window.s;
  if ((last_start + rc.window.n - 1) * rc.window.k <= f.nt) {
    truth = eval::rollout_truth(f, rc.window, rc.start, rc.steps);
  } else {
    spdlog::warn("not enough snapshots for ground truth; per-step MSE omitted");
  }
  const eval::RolloutResult r = eval::rollout(*l.forecaster, initial, rc.steps, truth);

  prepare_out(rc.out);
  auto os = open_out(rc.out / "rollout.csv");
  os << "step,mse,max_abs\n";
  for (size_t j = 0; j < r.predictions.size(); ++j) {
    const std::string mse = j < r.per_step_mse.size() ? num(r.per_step_mse[j]) : "";
    os << fmt::format("{},{},{}\n", j + 1, mse, num(r.predictions[j].max_abs()));
  }
  if (r.diverged_at) {
    spdlog::error("rollout diverged at step {}", *r.diverged_at);
    return kNumerical;
  }
  std::cout << fmt::format("{} steps completed\n", r.predictions.size());
  return kOk;
}

int cmd_superres(const RunConfig& rc) {
  require_file(rc.checkpoint);
  if (!rc.checkpoint2.empty()) require_file(rc.checkpoint2);
  std::optional<model::BnoModel> bno;
  std::optional<model::CnnBaseline> cnn;
  for (const fs::path& p : {rc.checkpoint, rc.checkpoint2}) {
    if (p.empty()) continue;
    model::AnyModel any = model::load_any_checkpoint(p);
    if (auto* b = std::get_if<model::BnoModel>(&any)) {
      if (bno) throw ConfigError("superres takes at most one BNO checkpoint");
      bno = std::move(*b);
    } else {
      if (cnn) throw ConfigError("superres takes at most one CNN checkpoint");
      cnn = std::move(std::get<model::CnnBaseline>(any));
    }
  }
  if (!bno) throw ConfigError("superres needs a BNO checkpoint");
  const data::FieldSeries raw = load_series(rc);
  rc.window.validate_against(raw.nt);
  const auto rows = eval::superres_transfer_eval(*bno, cnn ? &*cnn : nullptr, raw, rc.window,
                                                 rc.split, rc.train.precision);
  prepare_out(rc.out);
  eval::write_report_csv(rows, rc.out / "superres.csv");
  std::cout << eval::format_report_table(rows);
  return kOk;
}

int cmd_report(const RunConfig& rc) {
  for (const auto& p : rc.runs) require_file(p);
  const data::FieldSeries raw = load_series(rc);
  rc.window.validate_against(raw.nt);
  std::vector<eval::EvalReport> rows;
  std::vector<Tensor3<double>> bench;
  for (const auto& p : rc.runs) {
    const Loaded l = load_forecaster(rc, p, false);
    rows.push_back(eval::superres_eval(*l.forecaster, l.norm, raw, rc.window, rc.split));
    if (const auto* b = std::get_if<model::BnoModel>(l.model.get())) {
      const data::FieldSeries f = data::normalize(raw, l.norm);
      if (bench.empty()) bench.push_back(data::window_at(f, rc.window, 1));
      const eval::Timing t = eval::timing_bench(b->layers.front(), bench, rc.train.precision);
      rows.back().dmd_seconds = t.dmd_seconds;
      rows.back().cnn_seconds = t.cnn_seconds;
    }
  }
  if (rc.report_dmd) {
    const Loaded l = load_forecaster(rc, {}, true);
    const auto [normed, stats] = data::zscore_fit_apply(raw);
    rows.push_back(eval::superres_eval(*l.forecaster, stats, raw, rc.window, rc.split));
  }
  prepare_out(rc.out);
  eval::write_report_csv(rows, rc.out / "report.csv");
  std::string table = eval::format_report_table(rows);
  for (const auto& r : rows) {
    if (r.cnn_seconds > 0.0) {
      table += fmt::format("{} branch timing: DMD {:.4e} s, CNN {:.4e} s, ratio {:.2f}\n", r.model,
                           r.dmd_seconds, r.cnn_seconds, r.dmd_seconds / r.cnn_seconds);
    }
  }
  auto os = open_out(rc.out / "report.txt");
  os << table;
  std::cout << table;
  return kOk;
}

int dispatch(const RunConfig& rc) {
  if (rc.command == "generate") return cmd_generate(rc);
  if (rc.command == "dmd") return cmd_dmd(rc);
  if (rc.command == "train") return cmd_train(rc);
  if (rc.command == "predict") return cmd_predict(rc);
  if (rc.command == "rollout") return cmd_rollout(rc);
  if (rc.command == "superres") return cmd_superres(rc);
  return cmd_report(rc);
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::IoError:
    case ErrorKind::BadMagic:
    case ErrorKind::VersionMismatch:
      return kIo;
    case ErrorKind::NonFinite:
    case ErrorKind::ConvergenceFailure:
    case ErrorKind::NumericalFailure:
    case ErrorKind::DegenerateData:
      return kNumerical;
    default:
      return kUsage;
  }
}

json default_config() {
  return {
      {"data", ""},
      {"out", "."},
      {"checkpoint", ""},
      {"checkpoint2", ""},
      {"runs", json::array()},
      {"nx", 32},
      {"ny", 16},
      {"nt", 200},
      {"dt", 0.1},
      {"synth_modes", json::array({mode_json(-0.02, 2.0, 1.0, 1.0, 0.0),
                                   mode_json(-0.05, 5.0, 0.5, 2.0, 1.0)})},
      {"synth_epsilon", 0.1},
      {"synth_noise", 0.0},
      {"data_seed", 7},
      {"field_precision", "f32"},
      {"pool", 1},
      {"n", 20},
      {"k", 2},
      {"m", 80},
      {"s", 1},
      {"split", 0.7},
      {"model", "bno"},
      {"rank", 12},
      {"horizon", -1},
      {"layers", 1},
      {"kernel", 5},
      {"filters", {16, 32, 16}},
      {"batch_size", 10},
      {"epochs", 100},
      {"max_steps", -1},
      {"lr_boundaries", {1500, 2500}},
      {"lr_rates", {1e-3, 1e-4, 1e-5}},
      {"seed", 0},
      {"precision", "f32"},
      {"threads", 1},
      {"validate_every", 1},
      {"steps", 9},
      {"start", 1},
      {"sweep_max", 0},
      {"report_dmd", true},
  };
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Banach neural operator toolkit", "bno"};
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  app.add_option("command", command, "generate | dmd | train | predict | rollout | superres | report")
      ->required();
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--out", out, "output directory");
  app.allow_extras();
  app.footer("Any configuration key may be given as --key=value.");

  try {
    setup_logging();
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end()) {
      throw ConfigError("unknown command '" + command + "'");
    }

    json cfg = default_config();
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw Error(ErrorKind::IoError, "cannot open config " + config_path);
      json file;
      try {
        file = json::parse(is);
      } catch (const json::exception& e) {
        throw ConfigError(std::string("config file: ") + e.what());
      }
      if (!file.is_object()) throw ConfigError("config file must hold a JSON object");
      for (const auto& [k, v] : file.items()) set_key(cfg, k, v);
    }
    const std::vector<std::string> extras = app.remaining();
    for (size_t i = 0; i < extras.size(); ++i) {
      const std::string& a = extras[i];
      if (a.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + a + "'");
      const auto eq = a.find('=');
      if (eq != std::string::npos) {
        apply_override(cfg, a.substr(2, eq - 2), a.substr(eq + 1));
      } else if (i + 1 < extras.size()) {
        apply_override(cfg, a.substr(2), extras[++i]);
      } else {
        throw ConfigError("option " + a + " needs a value");
      }
    }
    if (seed) cfg["seed"] = *seed;
    if (!out.empty()) cfg["out"] = out;

    const RunConfig rc = parse_config(command, cfg);
    validate_static(rc);
    return dispatch(rc);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
}

}  // namespace bno::cli
