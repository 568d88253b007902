// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nlpcanon/errors.hpp"
#include "nlpcanon/linalg.hpp"
#include "support.hpp"

using namespace nlpcanon;
using testsupport::mat_gap;
using testsupport::random_symmetric;

namespace {

// Closed-form eigenvalues of a symmetric 2x2, the oracle for the Jacobi path.
std::pair<double, double> eig2_oracle(double a, double b, double c) {
  const double mean = 0.5 * (a + c);
  const double disc = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  return {mean + disc, mean - disc};
}

Mat plane_rotation(int n, int i, int j, double angle) {
  Mat r = Mat::identity(n);
  r(i, i) = std::cos(angle);
  r(j, j) = std::cos(angle);
  r(i, j) = -std::sin(angle);
  r(j, i) = std::sin(angle);
  return r;
}

}  // namespace

TEST_CASE("numeric_rank on pinned matrices") {
  CHECK(numeric_rank(Mat({{1, 0}, {0, 0}}), 1e-8) == 1);
  CHECK(numeric_rank(Mat({{1, 2}, {2, 4}}), 1e-8) == 1);
  CHECK(numeric_rank(Mat::identity(3), 1e-8) == 3);
  CHECK(numeric_rank(Mat(2, 2), 1e-8) == 0);
  CHECK(numeric_rank(Mat(0, 3), 1e-8) == 0);
  CHECK_THROWS_AS(numeric_rank(Mat::identity(2), 0.0), Error);
}

TEST_CASE("numeric_rank is invariant under permutations and rotations") {
  Rng rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 3 + trial % 3;
    Mat m(n, n);
    const int rank = 1 + trial % n;
    for (int k = 0; k < rank; ++k) {
      const Vec u = rng.unit_vector(n);
      const Vec v = rng.unit_vector(n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) += u[i] * v[j];
    }
    const int base = numeric_rank(m, 1e-8);
    const Mat rot = plane_rotation(n, 0, n - 1, rng.uniform(0.0, 3.0));
    CHECK(numeric_rank(rot * m, 1e-8) == base);
    CHECK(numeric_rank(m * rot, 1e-8) == base);
    Mat permuted(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) permuted(i, j) = m((i + 1) % n, j);
    CHECK(numeric_rank(permuted, 1e-8) == base);
  }
}

TEST_CASE("sym_eig on pinned matrices") {
  const EigDecomp d1 = sym_eig(Mat({{3, 0}, {0, -2}}));
  CHECK(d1.values[0] == doctest::Approx(3.0));
  CHECK(d1.values[1] == doctest::Approx(-2.0));

  // lambda^2 - 1 = 0 for the exchange matrix.
  const auto [hi, lo] = eig2_oracle(0.0, 1.0, 0.0);
  const EigDecomp d2 = sym_eig(Mat({{0, 1}, {1, 0}}));
  CHECK(d2.values[0] == doctest::Approx(hi));
  CHECK(d2.values[1] == doctest::Approx(lo));
  CHECK(d2.values[0] == doctest::Approx(1.0));
  CHECK(d2.values[1] == doctest::Approx(-1.0));

  const EigDecomp dz = sym_eig(Mat(2, 2));
  CHECK(dz.values[0] == 0.0);
  CHECK(dz.values[1] == 0.0);
  CHECK(mat_gap(dz.vectors.transpose() * dz.vectors, Mat::identity(2)) <=
        1e-10);
}

TEST_CASE("sym_eig invariants on random symmetric matrices") {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 6;
    const Mat s = random_symmetric(rng, n);
    const EigDecomp d = sym_eig(s);
    CHECK(mat_gap(d.vectors.transpose() * d.vectors, Mat::identity(n)) <=
          1e-10);
    Mat lam(n, n);
    for (int i = 0; i < n; ++i) lam(i, i) = d.values[i];
    CHECK(mat_gap(d.vectors * lam * d.vectors.transpose(), s) <=
          1e-9 * (1.0 + inf_norm(s)));
    for (int i = 0; i + 1 < n; ++i) CHECK(d.values[i] >= d.values[i + 1]);
    // 2x2 cross-check against the closed form.
    if (n == 2) {
      const auto [hi, lo] = eig2_oracle(s(0, 0), s(0, 1), s(1, 1));
      CHECK(d.values[0] == doctest::Approx(hi).epsilon(1e-12));
      CHECK(d.values[1] == doctest::Approx(lo).epsilon(1e-12));
    }
  }
}

TEST_CASE("sym_eig rejects asymmetric input") {
  CHECK_THROWS_AS(sym_eig(Mat({{0, 1}, {0, 0}})), PreconditionFailed);
}

TEST_CASE("nullspace_basis on pinned matrices") {
  const Mat basis = nullspace_basis(Mat({{1, 1, 0}, {0, 1, 0}}), 1e-8);
  REQUIRE(basis.cols() == 1);
  // Hand nullspace: d1 + d2 = 0 and d2 = 0 force (0, 0, t).
  CHECK(std::fabs(basis(0, 0)) <= 1e-12);
  CHECK(std::fabs(basis(1, 0)) <= 1e-12);
  CHECK(std::fabs(std::fabs(basis(2, 0)) - 1.0) <= 1e-12);

  CHECK(nullspace_basis(Mat::identity(3), 1e-8).cols() == 0);
  CHECK(mat_gap(nullspace_basis(Mat(0, 3), 1e-8), Mat::identity(3)) == 0.0);
}

TEST_CASE("nullspace_basis columns are orthonormal and annihilated") {
  Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + trial % 4;
    const int rows = 1 + trial % n;
    Mat m(rows, n);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
    const Mat basis = nullspace_basis(m, 1e-8);
    CHECK(basis.cols() == n - numeric_rank(m, 1e-8));
    if (basis.cols() > 0) {
      CHECK(mat_gap(basis.transpose() * basis, Mat::identity(basis.cols())) <=
            1e-10);
      CHECK(inf_norm(m * basis) <= 1e-8 * (1.0 + inf_norm(m)));
    }
  }
}

TEST_CASE("lambda_min on pinned matrices") {
  CHECK(lambda_min(Mat({{3, 0}, {0, -2}})) == doctest::Approx(-2.0));
  CHECK(lambda_min(Mat::identity(4)) == doctest::Approx(1.0));
  CHECK(lambda_min(Mat({{0, 1}, {1, 0}})) == doctest::Approx(-1.0));
}

TEST_CASE("lu_solve, inverse and determinant agree") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 5;
    Mat a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = rng.uniform(-2.0, 2.0);
    if (std::fabs(determinant(a)) < 1e-6) continue;
    Vec b(static_cast<std::size_t>(n));
    for (auto& x : b) x = rng.uniform(-1.0, 1.0);
    const Vec x = lu_solve(a, b);
    CHECK(testsupport::vec_gap(a * x, b) <= 1e-10 * (1.0 + inf_norm(b)));
    CHECK(mat_gap(a * inverse(a), Mat::identity(n)) <= 1e-9);
  }
  CHECK(determinant(Mat({{2, 0}, {0, 3}})) == doctest::Approx(6.0));
  CHECK(determinant(Mat({{1, 2}, {2, 4}})) == doctest::Approx(0.0));
}
