// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <utility>

#include "nlpcanon/expr.hpp"
#include "nlpcanon/linalg.hpp"

namespace nlpcanon {

/// Exact value, gradient and Hessian of an expression at a point.
struct DerivativeBundle {
  double value = 0.0;
  Vec gradient;
  Mat hessian;  // symmetric as returned
};

/// Forward-mode differentiation with (value, gradient, Hessian) carriers.
/// Cost is O(n^2) per node, which is the right trade at desk scale (n <= ~20).
/// Throws DomainError where a node is undefined and NonFiniteError on
/// overflow.
DerivativeBundle derivatives(const Expr& e, const Vec& x);

/// First-order-only carrier pass; cheaper when Hessians are not needed.
struct ValueGradient {
  double value = 0.0;
  Vec gradient;
};
ValueGradient value_gradient(const Expr& e, const Vec& x);

Vec gradient(const Expr& e, const Vec& x);
Mat hessian(const Expr& e, const Vec& x);

/// Row-stacked gradients; an empty list yields a 0 x n matrix.
Mat jacobian(std::span<const Expr> es, const Vec& x);

/// Central differences, optionally Richardson-extrapolated once.
Vec fd_gradient(const Expr& e, const Vec& x, double step,
                bool richardson = false);
Mat fd_hessian(const Expr& e, const Vec& x, double step,
               bool richardson = false);

/// Max-norm discrepancies (gradient, Hessian) between forward-mode and
/// central differences. step must lie in [1e-7, 1e-2].
std::pair<double, double> fd_check(const Expr& e, const Vec& x, double step);

}  // namespace nlpcanon
