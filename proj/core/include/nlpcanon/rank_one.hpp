// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "nlpcanon/expr.hpp"
#include "nlpcanon/linalg.hpp"

namespace nlpcanon {

/// Factorization of a family H_1..H_m as H_j = alphas[j] * coupling.
/// The all-zero family is representable (coupling = 0, zero_family set) even
/// though it sits outside the proportionality lemma's hypothesis; callers
/// treat the gamma-coupled term as absent in that case.
struct RankOneFactorization {
  Vec alphas;
  Mat coupling;          // shared symmetric matrix H
  double residual = 0.0; // max_j ||H_j - alpha_j H||_F / (1 + ||H_j||_F)
  bool zero_family = false;
};

/// Rank of the n x m stack [H_1 v, ..., H_m v].
int directional_rank_check(std::span<const Mat> hs, const Vec& v, double tol);

/// Factor a symmetric family by Frobenius-projection ratios onto its first
/// non-negligible member (normalized alpha = 1 there). Throws NotProportional
/// when the residual exceeds tol, carrying the worst member and a direction
/// v on which the column stack has rank two.
RankOneFactorization factor_rank_one_family(std::span<const Mat> hs,
                                            double tol);

/// Directional derivative A_v = lim (1/delta) h(delta v) of a matrix-valued
/// map with h(0) = 0, by Richardson-extrapolated shrinking quotients.
/// Throws NoConvergence when successive estimates diverge.
Mat directional_derivative_matrix(const std::function<Mat(const Vec&)>& h,
                                  const Vec& v, double step);

/// Max over sampled points in the ball of numeric_rank(Dc(x)), rows of Dc
/// being the gradients of the given functions. samples >= 100.
int jacobian_rank_field(std::span<const Expr> cs, double radius, int samples,
                        double tol, std::uint64_t seed = 0);

/// Factor the Hessian family of the given functions at the origin. Requires
/// Dc(0) = 0 within tol and jacobian_rank_field <= 1 (HypothesisViolated
/// otherwise); NotProportional propagates from the matrix factorization.
RankOneFactorization factor_hessian_family(std::span<const Expr> cs,
                                           double tol, double radius = 0.5,
                                           int samples = 200,
                                           std::uint64_t seed = 0);

}  // namespace nlpcanon
