// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>
#include <vector>

#include "nlpcanon/linalg.hpp"

namespace nlpcanon {

enum class LPStatus { Optimal, Infeasible, Unbounded };

struct LPResult {
  LPStatus status = LPStatus::Infeasible;
  Vec point;               // in the original variable space
  double objective = 0.0;  // c . point when optimal
  int iterations = 0;
};

/// Per-variable interval; use +-infinity() for one-sided or free variables.
struct VarBound {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  static VarBound free() { return {}; }
  static VarBound nonnegative() { return {0.0, std::numeric_limits<double>::infinity()}; }
  static VarBound interval(double lo, double hi) { return {lo, hi}; }
};

/// Dense two-phase simplex with Bland's rule:
///   minimize c . x  subject to  a_eq x = b_eq,  a_le x <= b_le,
///   bounds[i].lo <= x_i <= bounds[i].hi.
/// Intended for small well-scaled programs (total dimension <= 200, enforced).
/// Throws IterationCap if the pivot budget is exhausted.
LPResult simplex_solve_small(const Vec& c, const Mat& a_eq, const Vec& b_eq,
                             const Mat& a_le, const Vec& b_le,
                             const std::vector<VarBound>& bounds);

}  // namespace nlpcanon
