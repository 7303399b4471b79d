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

// Exact dynamic mode decomposition and the finite-rank Koopman propagator
// built from it.

#ifndef BNO_DMD_HPP_
#define BNO_DMD_HPP_

#include "bno/linalg.hpp"

#include <span>
#include <vector>

namespace bno::dmd {

using linalg::Index;
using linalg::MatC;
using linalg::MatR;
using linalg::VecC;

/// Columns are snapshots u_1 .. u_M of a real field, spaced by dt.
struct SnapshotMatrix {
  MatR values;
  double dt = 1.0;

  Index n_space() const { return values.rows(); }
  Index n_time() const { return values.cols(); }
};

struct DmdModel {
  Index rank = 0;            // effective rank actually used
  Index requested_rank = 0;  // rank asked for; > rank when the data was rank-deficient
  MatC modes;                // Phi, n_space x rank
  VecC eig_discrete;         // lambda
  VecC eig_continuous;       // omega = log(lambda) / dt, principal branch
  VecC amplitudes;           // b = pinv(Phi) u_1
  double dt = 1.0;

  bool rank_reduced() const { return rank < requested_rank; }
};

struct KoopmanOutput {
  MatR values;  // n_space x eval_times.size()
  std::vector<double> eval_times;
  double imag_residue = 0.0;          // max |Im| of the complex reconstruction
  bool imbalanced_spectrum = false;   // imag_residue above 1e-6 * max |values|
};

/// Fits exact DMD on Y = u_1..u_{M-1}, Y' = u_2..u_M. Requires
/// n_time >= 3 and 1 <= r <= n_time - 1. Modes are ordered by decreasing
/// |lambda|, conjugate pairs adjacent (positive imaginary part first).
DmdModel dmd_fit(const SnapshotMatrix& snapshots, Index r,
                 double rel_cutoff = linalg::kDefaultCutoff);

/// Re(Phi diag(exp(omega t_j)) b) for each t_j, with t measured from u_1.
KoopmanOutput dmd_reconstruct(const DmdModel& model,
                              std::span<const double> eval_times);

/// Fits DMD on `sequence` and evaluates it at (j + horizon_steps) * dt for
/// j = 0 .. n_time-1: the input window advanced by horizon_steps.
KoopmanOutput koopman_apply(const SnapshotMatrix& sequence, Index r,
                            int horizon_steps,
                            double rel_cutoff = linalg::kDefaultCutoff);

}  // namespace bno::dmd

#endif  // BNO_DMD_HPP_
