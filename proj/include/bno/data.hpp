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

// Field containers, normalization, pooling, sliding windows and the
// synthetic field generator.

#ifndef BNO_DATA_HPP_
#define BNO_DATA_HPP_

#include "bno/tensor.hpp"

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace bno::data {

/// Scalar field on an nx x ny grid over nt snapshots. Values are stored in
/// (x, y, t) row-major order; the flattened spatial index is x * ny + y.
struct FieldSeries {
  Index nx = 0;
  Index ny = 0;
  Index nt = 0;
  double dt = 1.0;
  std::vector<double> values;

  Index n_space() const { return nx * ny; }
  double& at(Index x, Index y, Index t) {
    return values[static_cast<size_t>((x * ny + y) * nt + t)];
  }
  double at(Index x, Index y, Index t) const {
    return values[static_cast<size_t>((x * ny + y) * nt + t)];
  }

  static FieldSeries zeros(Index nx, Index ny, Index nt, double dt);
  void validate() const;

  friend bool operator==(const FieldSeries&, const FieldSeries&) = default;
};

struct NormStats {
  double mean = 0.0;
  double std = 1.0;

  friend bool operator==(const NormStats&, const NormStats&) = default;
};

/// (n, k, m, s): n snapshots per window with stride k, m windows, labels
/// shifted by s window steps.
struct WindowSpec {
  Index n = 20;
  Index k = 2;
  Index m = 350;
  Index s = 1;

  /// Last 1-based snapshot index touched by any label window.
  Index last_snapshot() const { return (s + m + n - 1) * k; }
  void validate() const;
  void validate_against(Index nt) const;

  friend bool operator==(const WindowSpec&, const WindowSpec&) = default;
};

struct Dataset {
  std::vector<Tensor3<double>> inputs;  // each (nx*ny, n, 1)
  std::vector<Tensor3<double>> labels;
  std::vector<Index> train;
  std::vector<Index> validation;
  Index nx = 0;
  Index ny = 0;
};

/// Global z-score with the population standard deviation.
std::pair<FieldSeries, NormStats> zscore_fit_apply(const FieldSeries& f);
FieldSeries normalize(const FieldSeries& f, const NormStats& stats);
FieldSeries denormalize(const FieldSeries& f, const NormStats& stats);

/// Mean over factor x factor spatial blocks, per snapshot.
FieldSeries avg_pool(const FieldSeries& f, Index factor);

/// Input window i (1-based) holds snapshots (i + j - 1) * k for j = 1..n,
/// label window i holds (s + i + j - 1) * k; snapshot indices are 1-based.
/// The first round(split * m) windows form the training split.
Dataset build_windows(const FieldSeries& f, const WindowSpec& w,
                      double train_fraction = 0.7);

/// Window whose first snapshot is start * k (1-based start), as in
/// build_windows but without the m bound.
Tensor3<double> window_at(const FieldSeries& f, const WindowSpec& w, Index start);

struct SynthMode {
  std::complex<double> omega;      // continuous-time growth rate
  std::complex<double> amplitude;
  double kx = 1.0;                 // wavenumbers over the unit square
  double ky = 0.0;
};

struct SynthSpec {
  std::vector<SynthMode> modes;
  double epsilon = 0.0;  // pointwise quadratic mixing
  double noise = 0.0;    // std of additive gaussian noise
};

/// u(x, y, t) = L + epsilon * L^2 (+ noise) with
/// L = Re(sum_j a_j exp(i (2 pi (kx x + ky y) + theta_j)) exp(omega_j t)),
/// x, y cell centres of the unit square and theta_j drawn from `seed`.
/// With epsilon = 0 and no noise each mode contributes the conjugate pair
/// exp(+-omega dt) to the exact DMD spectrum.
FieldSeries synth_generate(const SynthSpec& spec, Index nx, Index ny, Index nt,
                           double dt, std::uint64_t seed);

/// Discrete eigenvalues exp(omega dt) and conjugates implied by the spec.
std::vector<std::complex<double>> synth_eigenvalues(const SynthSpec& spec, double dt);

// FLD1 container: "FLD1", u16 version, u32 nx, ny, nt, f64 dt, then the
// payload in (x, y, t) order, little endian. Version 1 stores f32 values,
// version 2 stores f64 values.
enum class FieldPrecision : std::uint16_t { F32 = 1, F64 = 2 };

void save_field(const FieldSeries& f, const std::filesystem::path& path,
                FieldPrecision precision = FieldPrecision::F32);
FieldSeries load_field(const std::filesystem::path& path);

/// One snapshot per CSV file: one row per x, one column per y, optional
/// header row, ',' separator.
FieldSeries load_csv_snapshots(std::span<const std::filesystem::path> files, double dt);
void save_csv_snapshot(const FieldSeries& f, Index t, const std::filesystem::path& path);

}  // namespace bno::data

#endif  // BNO_DATA_HPP_
