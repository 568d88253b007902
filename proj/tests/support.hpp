// SPDX-License-Identifier: Apache-2.0
// Shared helpers for the unit suites.
#pragma once

#include <string>

#include "nlpcanon/expr.hpp"
#include "nlpcanon/linalg.hpp"
#include "nlpcanon/rng.hpp"

namespace testsupport {

using nlpcanon::Expr;
using nlpcanon::Mat;
using nlpcanon::Rng;
using nlpcanon::Vec;

inline double mat_gap(const Mat& a, const Mat& b) {
  return nlpcanon::inf_norm(a - b);
}

inline double vec_gap(const Vec& a, const Vec& b) {
  return nlpcanon::inf_norm(a - b);
}

/// Random C^inf expression over n variables with no singular nodes (no div,
/// log or sqrt), safe to differentiate anywhere in the unit ball.
inline Expr random_smooth_expr(Rng& rng, int n, int depth) {
  if (depth <= 0 || rng.uniform() < 0.25) {
    if (rng.uniform() < 0.7)
      return Expr::variable(static_cast<int>(rng.uniform() * n) % n);
    const double v = std::floor(rng.uniform(-3.0, 4.0)) * 0.5;
    // Negative literals print as unary minus, so keep the node nonnegative.
    return v < 0.0 ? -Expr::constant(-v) : Expr::constant(v);
  }
  const double pick = rng.uniform();
  if (pick < 0.22)
    return random_smooth_expr(rng, n, depth - 1) +
           random_smooth_expr(rng, n, depth - 1);
  if (pick < 0.40)
    return random_smooth_expr(rng, n, depth - 1) -
           random_smooth_expr(rng, n, depth - 1);
  if (pick < 0.62)
    return random_smooth_expr(rng, n, depth - 1) *
           random_smooth_expr(rng, n, depth - 1);
  if (pick < 0.74)
    return pow(random_smooth_expr(rng, n, depth - 1),
               2 + (static_cast<int>(rng.uniform() * 2.0) % 2));
  if (pick < 0.82) return sin(random_smooth_expr(rng, n, depth - 1));
  if (pick < 0.90) return cos(random_smooth_expr(rng, n, depth - 1));
  if (pick < 0.96) return -random_smooth_expr(rng, n, depth - 1);
  return exp(Expr::constant(0.25) * random_smooth_expr(rng, n, depth - 1));
}

/// Random symmetric matrix with entries in [-1, 1].
inline Mat random_symmetric(Rng& rng, int n) {
  Mat s(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) s(i, j) = s(j, i) = rng.uniform(-1.0, 1.0);
  return s;
}

inline std::string data_path(const std::string& name) {
#ifdef NLPCANON_TEST_DATA_DIR
  return std::string(NLPCANON_TEST_DATA_DIR) + "/" + name;
#else
  return "tests/data/" + name;
#endif
}

}  // namespace testsupport
