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

// Dense real/complex kernels used by the DMD pipeline. Everything here is a
// pure function of its arguments and runs in 64-bit precision.

#ifndef BNO_LINALG_HPP_
#define BNO_LINALG_HPP_

#include <Eigen/Dense>

#include <complex>

namespace bno::linalg {

using Index = Eigen::Index;
using cplx = std::complex<double>;
using MatR = Eigen::MatrixXd;
using MatC = Eigen::MatrixXcd;
using VecR = Eigen::VectorXd;
using VecC = Eigen::VectorXcd;

inline constexpr double kDefaultCutoff = 1e-10;
inline constexpr Index kDefaultEigCap = 128;

struct SvdResult {
  MatR u;       // rows x k, orthonormal columns
  VecR sigma;   // k values, descending
  MatR vt;      // k x cols, orthonormal rows

  Index rank() const { return sigma.size(); }
};

/// Thin SVD truncated to the leading min(r, effective rank) triplets, where
/// the effective rank counts singular values >= rel_cutoff * sigma[0].
/// An all-zero input yields an empty (rank 0) result.
SvdResult svd_truncated(const MatR& a, Index r,
                        double rel_cutoff = kDefaultCutoff);

struct EigResult {
  VecC values;
  MatC vectors;  // unit 2-norm columns, vectors.col(j) pairs with values(j)
};

/// Eigendecomposition of a small dense matrix. Real-valued input goes through
/// the real Schur path so complex eigenvalues come out in exact conjugate
/// pairs.
EigResult eig_dense(const MatC& a, Index cap = kDefaultEigCap);

/// Moore-Penrose pseudo-inverse; singular values below
/// rel_cutoff * sigma_max are treated as zero.
MatC pinv(const MatC& a, double rel_cutoff = kDefaultCutoff);

MatR matmul(const MatR& a, const MatR& b);
MatC matmul(const MatC& a, const MatC& b);
VecR matvec(const MatR& a, const VecR& x);
VecC matvec(const MatC& a, const VecC& x);
MatC conj_transpose(const MatC& a);

bool all_finite(const MatR& a);
bool all_finite(const MatC& a);

}  // namespace bno::linalg

#endif  // BNO_LINALG_HPP_
