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

#include "bno/linalg.hpp"
#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <numbers>

using namespace bno;
using namespace bno::linalg;

namespace {

MatR to_eigen(const oracle::Dense& d) {
  MatR m(d.rows, d.cols);
  for (Index i = 0; i < d.rows; ++i)
    for (Index j = 0; j < d.cols; ++j) m(i, j) = d(i, j);
  return m;
}

MatC random_complex(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MatC m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = {u(rng), u(rng)};
  return m;
}

double rel_fro(const MatC& a, const MatC& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

template <class E>
ErrorKind kind_of(E&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("jacobi oracle reproduces diagonal singular values") {
  oracle::Dense d(3, 3);
  d(0, 0) = 1.0;
  d(1, 1) = -3.0;
  d(2, 2) = 2.0;
  const auto sv = oracle::jacobi_singular_values(d);
  CHECK(sv[0] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(sv[1] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(sv[2] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("svd of diag(3,2,1) truncated to rank 2") {
  MatR a = MatR::Zero(3, 3);
  a.diagonal() << 3.0, 2.0, 1.0;
  const SvdResult s = svd_truncated(a, 2);
  REQUIRE(s.rank() == 2);
  CHECK(s.sigma(0) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(s.sigma(1) == doctest::Approx(2.0).epsilon(1e-14));
  for (Index j = 0; j < 2; ++j) {
    CHECK(std::abs(s.u(j, j)) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(s.vt(j, j)) == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK((s.u * s.sigma.asDiagonal() * s.vt - a).norm() <= 1.0 + 1e-12);
}

TEST_CASE("all-ones matrix has effective rank 1") {
  const SvdResult s = svd_truncated(MatR::Ones(4, 4), 4, 1e-10);
  REQUIRE(s.rank() == 1);
  CHECK(s.sigma(0) == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("svd singular values match the jacobi oracle on a seeded 8x5 matrix") {
  const oracle::Dense d = oracle::random_dense(8, 5, 42);
  const auto want = oracle::jacobi_singular_values(d);
  const SvdResult s = svd_truncated(to_eigen(d), 5);
  REQUIRE(s.rank() == 5);
  for (Index j = 0; j < 5; ++j) CHECK(std::abs(s.sigma(j) - want[static_cast<size_t>(j)]) <= 1e-10);
}

TEST_CASE("svd factors are orthonormal and the reconstruction bound holds") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Index rows = 1 + static_cast<Index>(rng() % 64);
    const Index cols = 1 + static_cast<Index>(rng() % 32);
    const Index r = 1 + static_cast<Index>(rng() % std::min(rows, cols));
    const MatR a = to_eigen(oracle::random_dense(rows, cols, 1000 + trial));
    const SvdResult s = svd_truncated(a, r);
    const Index k = s.rank();
    CHECK(k == r);
    CHECK((s.u.transpose() * s.u - MatR::Identity(k, k)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((s.vt * s.vt.transpose() - MatR::Identity(k, k)).cwiseAbs().maxCoeff() <= 1e-10);
    for (Index j = 1; j < k; ++j) CHECK(s.sigma(j) <= s.sigma(j - 1));

    const auto all = oracle::jacobi_singular_values(oracle::random_dense(rows, cols, 1000 + trial));
    double discarded = 0.0;
    for (size_t j = static_cast<size_t>(k); j < all.size(); ++j) discarded += all[j];
    const double err = (s.u * s.sigma.asDiagonal() * s.vt - a).norm();
    CHECK(err <= discarded + 1e-9 * a.norm());
  }
}

TEST_CASE("svd preconditions") {
  CHECK(kind_of([] { svd_truncated(MatR(0, 3), 1); }) == ErrorKind::EmptyMatrix);
  MatR bad = MatR::Ones(2, 2);
  bad(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK(kind_of([&] { svd_truncated(bad, 1); }) == ErrorKind::NonFinite);
  bad(1, 0) = std::numeric_limits<double>::infinity();
  CHECK(kind_of([&] { svd_truncated(bad, 1); }) == ErrorKind::NonFinite);
  CHECK(kind_of([] { svd_truncated(MatR::Ones(2, 2), 0); }) == ErrorKind::InvalidArgument);
  CHECK(svd_truncated(MatR::Zero(3, 2), 2).rank() == 0);
}

TEST_CASE("eig of diag(2, 3i)") {
  MatC a = MatC::Zero(2, 2);
  a(0, 0) = 2.0;
  a(1, 1) = cplx(0.0, 3.0);
  const EigResult e = eig_dense(a);
  REQUIRE(e.values.size() == 2);
  for (Index j = 0; j < 2; ++j) {
    const Index which = std::abs(e.values(j) - cplx(2.0, 0.0)) < 1e-12 ? 0 : 1;
    CHECK(std::abs(e.values(j) - a(which, which)) <= 1e-12);
    CHECK(std::abs(std::abs(e.vectors(which, j)) - 1.0) <= 1e-12);
    CHECK(std::abs(e.vectors(1 - which, j)) <= 1e-12);
  }
}

TEST_CASE("eig of a rotation by pi/4") {
  const double th = std::numbers::pi / 4.0;
  MatC a(2, 2);
  a << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  const EigResult e = eig_dense(a);
  const cplx want = std::polar(1.0, th);
  const bool first_up = e.values(0).imag() > 0.0;
  CHECK(std::abs(e.values(first_up ? 0 : 1) - want) <= 1e-12);
  CHECK(std::abs(e.values(first_up ? 1 : 0) - std::conj(want)) <= 1e-12);
}

TEST_CASE("eig of the companion matrix of z^3 - 1 gives the cube roots of unity") {
  MatC c = MatC::Zero(3, 3);
  c(0, 2) = 1.0;  // z^3 = 1
  c(1, 0) = 1.0;
  c(2, 1) = 1.0;
  const EigResult e = eig_dense(c);
  for (int k = 0; k < 3; ++k) {
    const cplx root = std::polar(1.0, 2.0 * std::numbers::pi * k / 3.0);
    double best = 1e300;
    for (Index j = 0; j < 3; ++j) best = std::min(best, std::abs(e.values(j) - root));
    CHECK(best <= 1e-10);
  }
  const MatC lam = e.values.asDiagonal();
  CHECK((c * e.vectors - e.vectors * lam).norm() <= 1e-8 * c.norm());
}

TEST_CASE("eig residual and unit columns on seeded matrices up to 16x16") {
  for (Index n = 1; n <= 16; ++n) {
    for (int real_input = 0; real_input < 2; ++real_input) {
      MatC a = random_complex(n, n, 500 + static_cast<std::uint64_t>(n));
      if (real_input != 0) a = a.real().cast<cplx>();
      const EigResult e = eig_dense(a);
      const MatC lam = e.values.asDiagonal();
      CHECK((a * e.vectors - e.vectors * lam).norm() <= 1e-8 * a.norm());
      for (Index j = 0; j < n; ++j) CHECK(std::abs(e.vectors.col(j).norm() - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("eig preconditions") {
  CHECK(kind_of([] { eig_dense(MatC::Zero(2, 3)); }) == ErrorKind::NotSquare);
  CHECK(kind_of([] { eig_dense(MatC::Identity(5, 5), 4); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("pinv small cases") {
  CHECK((pinv(MatC::Identity(3, 3)) - MatC::Identity(3, 3)).norm() <= 1e-14);
  MatC v(2, 1);
  v << 1.0, 2.0;
  const MatC p = pinv(v);
  REQUIRE(p.rows() == 1);
  REQUIRE(p.cols() == 2);
  CHECK(std::abs(p(0, 0) - cplx(0.2, 0.0)) <= 1e-14);
  CHECK(std::abs(p(0, 1) - cplx(0.4, 0.0)) <= 1e-14);
}

TEST_CASE("pinv satisfies the Penrose conditions, including rank-deficient inputs") {
  for (int trial = 0; trial < 20; ++trial) {
    MatC a = random_complex(6, 3, 900 + static_cast<std::uint64_t>(trial));
    if (trial % 2 == 1) a.col(2) = a.col(0) * cplx(0.5, -1.0) + a.col(1);
    const MatC p = pinv(a);
    CHECK(rel_fro(a * p * a, a) <= 1e-8);
    CHECK(rel_fro(p * a * p, p) <= 1e-8);
    CHECK(rel_fro((a * p).adjoint(), a * p) <= 1e-8);
    CHECK(rel_fro((p * a).adjoint(), p * a) <= 1e-8);
  }
  MatC bad = MatC::Ones(2, 2);
  bad(0, 0) = cplx(std::numeric_limits<double>::quiet_NaN(), 0.0);
  CHECK(kind_of([&] { pinv(bad); }) == ErrorKind::NonFinite);
}

TEST_CASE("matmul, matvec and conj_transpose") {
  const VecR x = VecR::LinSpaced(4, -1.0, 2.0);
  CHECK((matvec(MatR::Identity(4, 4), x) - x).norm() == 0.0);

  const MatC a = random_complex(3, 3, 11), b = random_complex(3, 3, 12);
  CHECK((conj_transpose(matmul(a, b)) - matmul(conj_transpose(b), conj_transpose(a)))
            .cwiseAbs()
            .maxCoeff() <= 1e-12);

  const oracle::Dense da = oracle::random_dense(4, 4, 21), db = oracle::random_dense(4, 4, 22);
  const oracle::Dense want = oracle::naive_matmul(da, db);
  const MatR got = matmul(to_eigen(da), to_eigen(db));
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 4; ++j) CHECK(std::abs(got(i, j) - want(i, j)) <= 1e-13);

  CHECK(kind_of([] { matmul(MatR(MatR::Ones(2, 3)), MatR(MatR::Ones(2, 3))); }) == ErrorKind::DimMismatch);
  CHECK(kind_of([] { matvec(MatC(MatC::Ones(2, 3)), VecC(VecC::Ones(2))); }) == ErrorKind::DimMismatch);
}
