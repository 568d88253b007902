// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nlpcanon/errors.hpp"
#include "nlpcanon/simplex.hpp"
#include "support.hpp"

using namespace nlpcanon;

TEST_CASE("maximize t subject to t <= 1") {
  // Phrased as min -t; the optimum sits at t = 1 with objective -1.
  const LPResult res =
      simplex_solve_small({-1.0}, Mat(0, 1), {}, Mat({{1.0}}), {1.0},
                          {VarBound::free()});
  REQUIRE(res.status == LPStatus::Optimal);
  CHECK(res.point[0] == doctest::Approx(1.0));
  CHECK(res.objective == doctest::Approx(-1.0));
}

TEST_CASE("infeasible bounds are detected") {
  const LPResult res =
      simplex_solve_small({1.0}, Mat(0, 1), {}, Mat({{1.0}}), {-1.0},
                          {VarBound::nonnegative()});
  CHECK(res.status == LPStatus::Infeasible);
}

TEST_CASE("unbounded improvement is detected") {
  const LPResult res = simplex_solve_small({-1.0}, Mat(0, 1), {}, Mat(0, 1),
                                           {}, {VarBound::nonnegative()});
  CHECK(res.status == LPStatus::Unbounded);
}

TEST_CASE("equality rows pass through phase 1") {
  const LPResult res = simplex_solve_small({1.0}, Mat({{1.0}}), {3.0},
                                           Mat(0, 1), {}, {VarBound::free()});
  REQUIRE(res.status == LPStatus::Optimal);
  CHECK(res.point[0] == doctest::Approx(3.0));
}

TEST_CASE("the strict-decrease LP of the MFCQ example") {
  // Variables (d1, d2, d3, delta): minimize -delta subject to d1 = 0,
  // d2 + delta <= 0, d1 + d3 + delta <= 0, |d_i| <= 1. Hand optimum puts
  // d = (0, -1, -1) and delta = 1, so the minimized objective is negative.
  const Vec c = {0.0, 0.0, 0.0, -1.0};
  const Mat a_eq({{1.0, 0.0, 0.0, 0.0}});
  const Mat a_le({{0.0, 1.0, 0.0, 1.0}, {1.0, 0.0, 1.0, 1.0}});
  std::vector<VarBound> bounds(3, VarBound::interval(-1.0, 1.0));
  bounds.push_back(VarBound::interval(-1e6, 1e6));
  const LPResult res =
      simplex_solve_small(c, a_eq, {0.0}, a_le, {0.0, 0.0}, bounds);
  REQUIRE(res.status == LPStatus::Optimal);
  CHECK(res.objective == doctest::Approx(-1.0));
  CHECK(res.point[0] == doctest::Approx(0.0));
  CHECK(res.point[1] == doctest::Approx(-1.0));
  CHECK(res.point[2] == doctest::Approx(-1.0));
  CHECK(res.point[3] == doctest::Approx(1.0));
}

TEST_CASE("optimal points satisfy constraints to 1e-9") {
  Rng rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 4;
    const int rows = 1 + trial % 3;
    // Build rows satisfied with slack at an interior box point.
    Vec x0(static_cast<std::size_t>(n));
    for (auto& v : x0) v = rng.uniform(0.2, 0.8);
    Mat a_le(rows, n);
    Vec b_le(static_cast<std::size_t>(rows));
    for (int i = 0; i < rows; ++i) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) {
        a_le(i, j) = rng.uniform(-1.0, 1.0);
        acc += a_le(i, j) * x0[static_cast<std::size_t>(j)];
      }
      b_le[static_cast<std::size_t>(i)] = acc + rng.uniform(0.05, 0.5);
    }
    Vec c(static_cast<std::size_t>(n));
    for (auto& v : c) v = rng.uniform(-1.0, 1.0);
    std::vector<VarBound> bounds(static_cast<std::size_t>(n),
                                 VarBound::interval(0.0, 1.0));
    const LPResult res =
        simplex_solve_small(c, Mat(0, n), {}, a_le, b_le, bounds);
    REQUIRE(res.status == LPStatus::Optimal);
    CHECK(res.objective <= dot(c, x0) + 1e-9);
    for (int i = 0; i < rows; ++i)
      CHECK(dot(a_le.row(i), res.point) <=
            b_le[static_cast<std::size_t>(i)] + 1e-9);
    for (double v : res.point) {
      CHECK(v >= -1e-9);
      CHECK(v <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("size cap is enforced") {
  CHECK_THROWS_AS(simplex_solve_small(Vec(300, 1.0), Mat(0, 300), {},
                                      Mat(0, 300), {},
                                      std::vector<VarBound>(300)),
                  Error);
}
