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

#include "bno/linalg.hpp"

#include "bno/error.hpp"

#include <algorithm>
#include <string>

namespace bno::linalg {

namespace {

void require_dims(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::DimMismatch, what);
}

std::string shape(Index r, Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

bool all_finite(const MatR& a) { return a.allFinite(); }

bool all_finite(const MatC& a) {
  return a.real().allFinite() && a.imag().allFinite();
}

SvdResult svd_truncated(const MatR& a, Index r, double rel_cutoff) {
  if (a.rows() == 0 || a.cols() == 0) {
    throw Error(ErrorKind::EmptyMatrix, "svd of " + shape(a.rows(), a.cols()));
  }
  if (r < 1) throw Error(ErrorKind::InvalidArgument, "svd rank must be >= 1");
  if (!a.allFinite()) throw Error(ErrorKind::NonFinite, "svd input");

  Eigen::JacobiSVD<MatR, Eigen::ColPivHouseholderQRPreconditioner> svd(
      a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VecR& s = svd.singularValues();

  Index keep = 0;
  if (s.size() > 0 && s(0) > 0.0) {
    const double floor = rel_cutoff * s(0);
    while (keep < s.size() && s(keep) >= floor) ++keep;
  }
  keep = std::min(keep, r);

  SvdResult out;
  out.u = svd.matrixU().leftCols(keep);
  out.sigma = s.head(keep);
  out.vt = svd.matrixV().leftCols(keep).transpose();
  return out;
}

EigResult eig_dense(const MatC& a, Index cap) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorKind::NotSquare, "eig of " + shape(a.rows(), a.cols()));
  }
  if (a.rows() == 0) throw Error(ErrorKind::EmptyMatrix, "eig of empty matrix");
  if (a.rows() > cap) {
    throw Error(ErrorKind::InvalidArgument,
                "eig size " + std::to_string(a.rows()) + " exceeds cap " +
                    std::to_string(cap));
  }
  if (!all_finite(a)) throw Error(ErrorKind::NonFinite, "eig input");

  EigResult out;
  if (a.imag().isZero(0.0)) {
    Eigen::EigenSolver<MatR> es(a.real(), true);
    if (es.info() != Eigen::Success) {
      throw Error(ErrorKind::ConvergenceFailure, "real Schur iteration");
    }
    out.values = es.eigenvalues();
    out.vectors = es.eigenvectors();
  } else {
    Eigen::ComplexEigenSolver<MatC> es(a, true);
    if (es.info() != Eigen::Success) {
      throw Error(ErrorKind::ConvergenceFailure, "complex Schur iteration");
    }
    out.values = es.eigenvalues();
    out.vectors = es.eigenvectors();
  }
  for (Index j = 0; j < out.vectors.cols(); ++j) {
    const double n = out.vectors.col(j).norm();
    if (n > 0.0) out.vectors.col(j) /= n;
  }
  if (!all_finite(out.vectors) || !out.values.allFinite()) {
    throw Error(ErrorKind::ConvergenceFailure, "non-finite eigenpairs");
  }
  return out;
}

MatC pinv(const MatC& a, double rel_cutoff) {
  if (a.rows() == 0 || a.cols() == 0) {
    throw Error(ErrorKind::EmptyMatrix, "pinv of " + shape(a.rows(), a.cols()));
  }
  if (!all_finite(a)) throw Error(ErrorKind::NonFinite, "pinv input");

  Eigen::JacobiSVD<MatC, Eigen::ColPivHouseholderQRPreconditioner> svd(
      a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VecR& s = svd.singularValues();
  MatC out = MatC::Zero(a.cols(), a.rows());
  if (s.size() == 0 || s(0) == 0.0) return out;
  const double floor = rel_cutoff * s(0);
  for (Index j = 0; j < s.size() && s(j) >= floor; ++j) {
    out.noalias() +=
        (svd.matrixV().col(j) / s(j)) * svd.matrixU().col(j).adjoint();
  }
  return out;
}

MatR matmul(const MatR& a, const MatR& b) {
  require_dims(a.cols() == b.rows(), "matmul inner dimensions");
  return a * b;
}

MatC matmul(const MatC& a, const MatC& b) {
  require_dims(a.cols() == b.rows(), "matmul inner dimensions");
  return a * b;
}

VecR matvec(const MatR& a, const VecR& x) {
  require_dims(a.cols() == x.size(), "matvec inner dimensions");
  return a * x;
}

VecC matvec(const MatC& a, const VecC& x) {
  require_dims(a.cols() == x.size(), "matvec inner dimensions");
  return a * x;
}

MatC conj_transpose(const MatC& a) { return a.adjoint(); }

}  // namespace bno::linalg
