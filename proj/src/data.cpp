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

#include "bno/data.hpp"

#include "binio.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

namespace bno::data {

namespace {

constexpr char kFieldMagic[4] = {'F', 'L', 'D', '1'};

std::string str(Index v) { return std::to_string(v); }

bool parse_double(std::string_view tok, double& out) {
  while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
  while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r')) {
    tok.remove_suffix(1);
  }
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

FieldSeries FieldSeries::zeros(Index nx, Index ny, Index nt, double dt) {
  FieldSeries f;
  f.nx = nx;
  f.ny = ny;
  f.nt = nt;
  f.dt = dt;
  f.values.assign(static_cast<size_t>(nx * ny * nt), 0.0);
  return f;
}

void FieldSeries::validate() const {
  if (nx < 1 || ny < 1 || nt < 1) {
    throw Error(ErrorKind::InvalidArgument,
                "field dims must be >= 1, got " + str(nx) + "x" + str(ny) + "x" + str(nt));
  }
  if (static_cast<Index>(values.size()) != nx * ny * nt) {
    throw Error(ErrorKind::ShapeMismatch, "field payload does not match dims");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorKind::InvalidArgument, "field dt must be positive");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "field values");
  }
}

void WindowSpec::validate() const {
  if (n < 2 || k < 1 || m < 1 || s < 0) {
    throw Error(ErrorKind::InvalidArgument,
                "window spec needs n>=2, k>=1, m>=1, s>=0; got (" + str(n) + "," +
                    str(k) + "," + str(m) + "," + str(s) + ")");
  }
}

void WindowSpec::validate_against(Index nt) const {
  validate();
  if (last_snapshot() > nt) {
    throw Error(ErrorKind::WindowOutOfRange,
                "(s+m+n-1)*k = " + str(last_snapshot()) + " exceeds nt = " + str(nt));
  }
}

std::pair<FieldSeries, NormStats> zscore_fit_apply(const FieldSeries& f) {
  if (f.values.empty()) throw Error(ErrorKind::InvalidArgument, "empty field");
  const double count = static_cast<double>(f.values.size());
  double mean = 0.0;
  for (double v : f.values) mean += v;
  mean /= count;
  double var = 0.0;
  for (double v : f.values) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / count);
  const double scale = std::max(std::abs(mean), std::numeric_limits<double>::min());
  if (!(sd > 1e-14 * scale)) {
    throw Error(ErrorKind::ConstantField, "field has zero variance");
  }
  NormStats stats{mean, sd};
  return {normalize(f, stats), stats};
}

FieldSeries normalize(const FieldSeries& f, const NormStats& stats) {
  if (!(stats.std > 0.0)) throw Error(ErrorKind::InvalidArgument, "norm std must be > 0");
  FieldSeries out = f;
  for (double& v : out.values) v = (v - stats.mean) / stats.std;
  return out;
}

FieldSeries denormalize(const FieldSeries& f, const NormStats& stats) {
  FieldSeries out = f;
  for (double& v : out.values) v = v * stats.std + stats.mean;
  return out;
}

FieldSeries avg_pool(const FieldSeries& f, Index factor) {
  if (factor < 1) throw Error(ErrorKind::InvalidArgument, "pool factor must be >= 1");
  if (f.nx % factor != 0 || f.ny % factor != 0) {
    throw Error(ErrorKind::NotDivisible, str(f.nx) + "x" + str(f.ny) +
                                             " not divisible by " + str(factor));
  }
  FieldSeries out = FieldSeries::zeros(f.nx / factor, f.ny / factor, f.nt, f.dt);
  const double inv = 1.0 / static_cast<double>(factor * factor);
  for (Index x = 0; x < out.nx; ++x) {
    for (Index y = 0; y < out.ny; ++y) {
      for (Index t = 0; t < f.nt; ++t) {
        double sum = 0.0;
        for (Index a = 0; a < factor; ++a) {
          for (Index b = 0; b < factor; ++b) sum += f.at(x * factor + a, y * factor + b, t);
        }
        out.at(x, y, t) = sum * inv;
      }
    }
  }
  return out;
}

Tensor3<double> window_at(const FieldSeries& f, const WindowSpec& w, Index start) {
  w.validate();
  if (start < 1 || (start + w.n - 1) * w.k > f.nt) {
    throw Error(ErrorKind::WindowOutOfRange,
                "window starting at " + str(start) + " needs snapshot " +
                    str((start + w.n - 1) * w.k) + " of " + str(f.nt));
  }
  Tensor3<double> win(f.n_space(), w.n, 1);
  for (Index p = 0; p < f.n_space(); ++p) {
    const double* src = f.values.data() + p * f.nt;
    for (Index j = 1; j <= w.n; ++j) win(p, j - 1, 0) = src[(start + j - 1) * w.k - 1];
  }
  return win;
}

Dataset build_windows(const FieldSeries& f, const WindowSpec& w, double train_fraction) {
  w.validate_against(f.nt);
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "train fraction must lie in [0, 1]");
  }
  Dataset ds;
  ds.nx = f.nx;
  ds.ny = f.ny;
  ds.inputs.reserve(static_cast<size_t>(w.m));
  ds.labels.reserve(static_cast<size_t>(w.m));
  for (Index i = 1; i <= w.m; ++i) {
    ds.inputs.push_back(window_at(f, w, i));
    ds.labels.push_back(window_at(f, w, i + w.s));
  }
  const Index n_train = static_cast<Index>(std::llround(train_fraction * static_cast<double>(w.m)));
  for (Index i = 0; i < w.m; ++i) (i < n_train ? ds.train : ds.validation).push_back(i);
  return ds;
}

FieldSeries synth_generate(const SynthSpec& spec, Index nx, Index ny, Index nt, double dt,
                           std::uint64_t seed) {
  if (spec.modes.empty()) throw Error(ErrorKind::BadSpec, "synthetic spec has no modes");
  if (nx < 1 || ny < 1 || nt < 1 || !(dt > 0.0)) {
    throw Error(ErrorKind::BadSpec, "synthetic grid dims and dt must be positive");
  }
  if (!std::isfinite(spec.epsilon) || !(spec.noise >= 0.0)) {
    throw Error(ErrorKind::BadSpec, "epsilon must be finite and noise >= 0");
  }
  for (const SynthMode& m : spec.modes) {
    if (!std::isfinite(m.omega.real()) || !std::isfinite(m.omega.imag()) ||
        !std::isfinite(m.amplitude.real()) || !std::isfinite(m.amplitude.imag()) ||
        !std::isfinite(m.kx) || !std::isfinite(m.ky)) {
      throw Error(ErrorKind::BadSpec, "non-finite synthetic mode parameter");
    }
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<double> theta;
  for (size_t j = 0; j < spec.modes.size(); ++j) theta.push_back(phase(rng));

  FieldSeries f = FieldSeries::zeros(nx, ny, nt, dt);
  using cplx = std::complex<double>;
  std::vector<cplx> pattern(spec.modes.size());
  std::vector<cplx> step(spec.modes.size());
  for (size_t j = 0; j < spec.modes.size(); ++j) step[j] = std::exp(spec.modes[j].omega * dt);

  for (Index x = 0; x < nx; ++x) {
    const double xc = (static_cast<double>(x) + 0.5) / static_cast<double>(nx);
    for (Index y = 0; y < ny; ++y) {
      const double yc = (static_cast<double>(y) + 0.5) / static_cast<double>(ny);
      for (size_t j = 0; j < spec.modes.size(); ++j) {
        const SynthMode& m = spec.modes[j];
        const double arg = 2.0 * std::numbers::pi * (m.kx * xc + m.ky * yc) + theta[j];
        pattern[j] = m.amplitude * std::polar(1.0, arg);
      }
      for (Index t = 0; t < nt; ++t) {
        const double time = static_cast<double>(t) * dt;
        double lin = 0.0;
        for (size_t j = 0; j < spec.modes.size(); ++j) {
          lin += (pattern[j] * std::exp(spec.modes[j].omega * time)).real();
        }
        f.at(x, y, t) = lin + spec.epsilon * lin * lin;
      }
    }
  }
  if (spec.noise > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.noise);
    for (double& v : f.values) v += noise(rng);
  }
  return f;
}

std::vector<std::complex<double>> synth_eigenvalues(const SynthSpec& spec, double dt) {
  std::vector<std::complex<double>> out;
  for (const SynthMode& m : spec.modes) {
    const auto lambda = std::exp(m.omega * dt);
    out.push_back(lambda);
    if (m.omega.imag() != 0.0) out.push_back(std::conj(lambda));
  }
  return out;
}

void save_field(const FieldSeries& f, const std::filesystem::path& path,
                FieldPrecision precision) {
  f.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  os.write(kFieldMagic, 4);
  binio::put<std::uint16_t>(os, static_cast<std::uint16_t>(precision));
  binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(f.nx));
  binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(f.ny));
  binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(f.nt));
  binio::put<double>(os, f.dt);
  for (double v : f.values) {
    if (precision == FieldPrecision::F32) {
      binio::put<float>(os, static_cast<float>(v));
    } else {
      binio::put<double>(os, v);
    }
  }
  if (!os) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

FieldSeries load_field(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  char magic[4] = {};
  if (!is.read(magic, 4) || !std::equal(magic, magic + 4, kFieldMagic)) {
    throw Error(ErrorKind::BadMagic, path.string() + " is not an FLD1 container");
  }
  const auto version = binio::get<std::uint16_t>(is, "version");
  if (version != static_cast<std::uint16_t>(FieldPrecision::F32) &&
      version != static_cast<std::uint16_t>(FieldPrecision::F64)) {
    throw Error(ErrorKind::VersionMismatch, "FLD1 version " + std::to_string(version));
  }
  FieldSeries f;
  f.nx = binio::get<std::uint32_t>(is, "nx");
  f.ny = binio::get<std::uint32_t>(is, "ny");
  f.nt = binio::get<std::uint32_t>(is, "nt");
  f.dt = binio::get<double>(is, "dt");
  const size_t count = static_cast<size_t>(f.nx * f.ny * f.nt);
  f.values.resize(count);
  for (size_t i = 0; i < count; ++i) {
    f.values[i] = version == static_cast<std::uint16_t>(FieldPrecision::F32)
                      ? static_cast<double>(binio::get<float>(is, "payload"))
                      : binio::get<double>(is, "payload");
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorKind::IoError, path.string() + " has trailing bytes");
  }
  f.validate();
  return f;
}

FieldSeries load_csv_snapshots(std::span<const std::filesystem::path> files, double dt) {
  if (files.empty()) throw Error(ErrorKind::InvalidArgument, "no CSV snapshot files");
  std::vector<std::vector<std::vector<double>>> snaps;
  for (const auto& path : files) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::vector<double> row;
      bool numeric = true;
      for (auto tok : split_commas(line)) {
        double v = 0.0;
        if (!parse_double(tok, v)) {
          numeric = false;
          break;
        }
        row.push_back(v);
      }
      if (!numeric) {
        if (first) {
          first = false;
          continue;  // header
        }
        throw Error(ErrorKind::IoError, "non-numeric row in " + path.string());
      }
      first = false;
      if (!rows.empty() && row.size() != rows.front().size()) {
        throw Error(ErrorKind::IoError, "ragged rows in " + path.string());
      }
      rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error(ErrorKind::IoError, "no data rows in " + path.string());
    if (!snaps.empty() && (rows.size() != snaps.front().size() ||
                           rows.front().size() != snaps.front().front().size())) {
      throw Error(ErrorKind::ShapeMismatch, "snapshot dims differ in " + path.string());
    }
    snaps.push_back(std::move(rows));
  }
  const Index nx = static_cast<Index>(snaps.front().size());
  const Index ny = static_cast<Index>(snaps.front().front().size());
  FieldSeries f = FieldSeries::zeros(nx, ny, static_cast<Index>(snaps.size()), dt);
  for (Index t = 0; t < f.nt; ++t) {
    for (Index x = 0; x < nx; ++x) {
      for (Index y = 0; y < ny; ++y) {
        f.at(x, y, t) = snaps[static_cast<size_t>(t)][static_cast<size_t>(x)][static_cast<size_t>(y)];
      }
    }
  }
  f.validate();
  return f;
}

void save_csv_snapshot(const FieldSeries& f, Index t, const std::filesystem::path& path) {
  if (t < 0 || t >= f.nt) throw Error(ErrorKind::IndexOutOfRange, "snapshot " + str(t));
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  for (Index y = 0; y < f.ny; ++y) os << (y ? "," : "") << "y" << y;
  os << "\n";
  char buf[64];
  for (Index x = 0; x < f.nx; ++x) {
    for (Index y = 0; y < f.ny; ++y) {
      auto res = std::to_chars(buf, buf + sizeof(buf), f.at(x, y, t));
      if (y) os << ',';
      os.write(buf, res.ptr - buf);
    }
    os << "\n";
  }
  if (!os) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

}  // namespace bno::data
