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

#include "bno/dmd.hpp"

#include "bno/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace bno::dmd {

namespace {

using linalg::cplx;

// exp(omega t) for one mode. A zero discrete eigenvalue has omega = -inf;
// its mode contributes only at t = 0.
cplx propagator(cplx lambda, cplx omega, double t) {
  if (lambda == cplx(0.0, 0.0)) return t == 0.0 ? cplx(1.0, 0.0) : cplx(0.0, 0.0);
  return std::exp(omega * t);
}

}  // namespace

DmdModel dmd_fit(const SnapshotMatrix& snapshots, Index r, double rel_cutoff) {
  const Index m = snapshots.n_time();
  const Index n = snapshots.n_space();
  if (n == 0 || m == 0) throw Error(ErrorKind::EmptyMatrix, "empty snapshot matrix");
  if (m < 3) {
    throw Error(ErrorKind::InvalidArgument,
                "dmd needs at least 3 snapshots, got " + std::to_string(m));
  }
  if (!(snapshots.dt > 0.0) || !std::isfinite(snapshots.dt)) {
    throw Error(ErrorKind::InvalidArgument, "dt must be positive");
  }
  if (r < 1 || r > m - 1) {
    throw Error(ErrorKind::RankTooLarge,
                "rank " + std::to_string(r) + " outside [1, " +
                    std::to_string(m - 1) + "]");
  }
  if (!snapshots.values.allFinite()) throw Error(ErrorKind::NonFinite, "snapshots");

  const auto y = snapshots.values.leftCols(m - 1);
  const auto y_next = snapshots.values.rightCols(m - 1);

  linalg::SvdResult svd = linalg::svd_truncated(y, r, rel_cutoff);
  const Index k = svd.rank();
  if (k == 0) throw Error(ErrorKind::DegenerateData, "snapshot matrix has rank 0");

  // Y' V Sigma^-1, shared by the reduced operator and the modes.
  MatR y_next_v = y_next * svd.vt.transpose();
  y_next_v.array().rowwise() /= svd.sigma.transpose().array();

  const MatR a_tilde = svd.u.transpose() * y_next_v;
  linalg::EigResult eig;
  try {
    eig = linalg::eig_dense(a_tilde.cast<cplx>());
  } catch (const Error& e) {
    throw Error(ErrorKind::ConvergenceFailure,
                std::string("reduced operator eigendecomposition: ") + e.what());
  }

  std::vector<Index> order(static_cast<size_t>(k));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    const double ma = std::abs(eig.values(a));
    const double mb = std::abs(eig.values(b));
    if (std::abs(ma - mb) > 1e-12 * std::max(ma, mb)) return ma > mb;
    return eig.values(a).imag() > eig.values(b).imag();
  });

  DmdModel model;
  model.rank = k;
  model.requested_rank = r;
  model.dt = snapshots.dt;
  model.eig_discrete.resize(k);
  MatC w(k, k);
  for (Index j = 0; j < k; ++j) {
    model.eig_discrete(j) = eig.values(order[static_cast<size_t>(j)]);
    w.col(j) = eig.vectors.col(order[static_cast<size_t>(j)]);
  }
  model.eig_continuous.resize(k);
  for (Index j = 0; j < k; ++j) {
    model.eig_continuous(j) = std::log(model.eig_discrete(j)) / snapshots.dt;
  }
  model.modes = y_next_v.cast<cplx>() * w;
  model.amplitudes =
      linalg::pinv(model.modes, rel_cutoff) * snapshots.values.col(0).cast<cplx>();

  if (model.rank_reduced()) {
    spdlog::debug("dmd rank reduced from {} to {}", r, k);
  }
  return model;
}

KoopmanOutput dmd_reconstruct(const DmdModel& model,
                              std::span<const double> eval_times) {
  const Index k = model.rank;
  const Index nt = static_cast<Index>(eval_times.size());
  MatC coeffs(k, nt);
  for (Index j = 0; j < nt; ++j) {
    const double t = eval_times[static_cast<size_t>(j)];
    if (!std::isfinite(t)) throw Error(ErrorKind::NonFinite, "eval time");
    for (Index i = 0; i < k; ++i) {
      coeffs(i, j) = propagator(model.eig_discrete(i), model.eig_continuous(i), t) *
                     model.amplitudes(i);
    }
  }
  const MatC full = model.modes * coeffs;

  KoopmanOutput out;
  out.eval_times.assign(eval_times.begin(), eval_times.end());
  out.values = full.real();
  if (!out.values.allFinite()) throw Error(ErrorKind::NonFinite, "reconstruction");
  out.imag_residue = full.size() ? full.imag().cwiseAbs().maxCoeff() : 0.0;
  const double scale = out.values.size() ? out.values.cwiseAbs().maxCoeff() : 0.0;
  if (out.imag_residue > 1e-6 * scale) {
    out.imbalanced_spectrum = true;
    spdlog::debug("dmd reconstruction: imaginary residue {:.3e} vs scale {:.3e}",
                 out.imag_residue, scale);
  }
  return out;
}

KoopmanOutput koopman_apply(const SnapshotMatrix& sequence, Index r,
                            int horizon_steps, double rel_cutoff) {
  if (horizon_steps < 0) {
    throw Error(ErrorKind::InvalidArgument, "horizon_steps must be >= 0");
  }
  const DmdModel model = dmd_fit(sequence, r, rel_cutoff);
  std::vector<double> times(static_cast<size_t>(sequence.n_time()));
  for (size_t j = 0; j < times.size(); ++j) {
    times[j] = static_cast<double>(static_cast<Index>(j) + horizon_steps) * sequence.dt;
  }
  return dmd_reconstruct(model, times);
}

}  // namespace bno::dmd
