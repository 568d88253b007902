// SPDX-License-Identifier: Apache-2.0
#include "nlpcanon/rank_one.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nlpcanon/autodiff.hpp"
#include "nlpcanon/errors.hpp"
#include "nlpcanon/rng.hpp"

namespace nlpcanon {

int directional_rank_check(std::span<const Mat> hs, const Vec& v, double tol) {
  if (two_norm(v) <= 0.0)
    throw PreconditionFailed("directional_rank_check: v must be nonzero");
  if (hs.empty()) return 0;
  const int n = hs.front().rows();
  Mat stack(n, static_cast<int>(hs.size()));
  for (std::size_t j = 0; j < hs.size(); ++j) {
    const Vec col = hs[j] * v;
    for (int i = 0; i < n; ++i) stack(i, static_cast<int>(j)) = col[i];
  }
  return numeric_rank(stack, tol);
}

namespace {

// Search for a direction on which the family's column stack has rank >= 2;
// used only to decorate NotProportional errors.
Vec violating_direction(std::span<const Mat> hs, double tol) {
  if (hs.empty()) return {};
  const int n = hs.front().rows();
  Rng rng(0x9e3779b97f4a7c15ull);
  for (int attempt = 0; attempt < 200; ++attempt) {
    const Vec v = rng.unit_vector(n);
    if (directional_rank_check(hs, v, tol) >= 2) return v;
  }
  return {};
}

}  // namespace

RankOneFactorization factor_rank_one_family(std::span<const Mat> hs,
                                            double tol) {
  RankOneFactorization out;
  out.alphas.assign(hs.size(), 0.0);
  if (hs.empty()) {
    out.zero_family = true;
    return out;
  }
  const int n = hs.front().rows();
  for (const Mat& h : hs)
    if (h.rows() != n || h.cols() != n ||
        max_abs_asymmetry(h) > 1e-12 * (1.0 + inf_norm(h)))
      throw PreconditionFailed("factor_rank_one_family: members must be "
                               "symmetric and same-sized");

  int pivot = -1;
  for (std::size_t j = 0; j < hs.size(); ++j)
    if (frobenius_norm(hs[j]) > tol) {
      pivot = static_cast<int>(j);
      break;
    }
  if (pivot < 0) {
    // All members negligible: the lemma's H != 0 conclusion cannot apply, so
    // return the flagged degenerate factorization instead of guessing.
    out.coupling = Mat(n, n);
    out.zero_family = true;
    return out;
  }

  out.coupling = hs[static_cast<std::size_t>(pivot)];
  const double denom = frobenius_dot(out.coupling, out.coupling);
  for (std::size_t j = 0; j < hs.size(); ++j)
    out.alphas[j] = frobenius_dot(hs[j], out.coupling) / denom;
  out.alphas[static_cast<std::size_t>(pivot)] = 1.0;

  int worst = 0;
  for (std::size_t j = 0; j < hs.size(); ++j) {
    const Mat diff = hs[j] - out.alphas[j] * out.coupling;
    const double r = frobenius_norm(diff) / (1.0 + frobenius_norm(hs[j]));
    if (r > out.residual) {
      out.residual = r;
      worst = static_cast<int>(j);
    }
  }
  if (out.residual > tol)
    throw NotProportional(
        "family member " + std::to_string(worst + 1) +
            " deviates from the shared matrix (residual " +
            std::to_string(out.residual) + ")",
        worst, out.residual, violating_direction(hs, tol));
  return out;
}

Mat directional_derivative_matrix(const std::function<Mat(const Vec&)>& h,
                                  const Vec& v, double step) {
  const Vec origin(v.size(), 0.0);
  const Mat at0 = h(origin);
  if (inf_norm(at0) > 1e-10)
    throw PreconditionFailed("directional_derivative_matrix: h(0) != 0");
  if (two_norm(v) == 0.0) return Mat(at0.rows(), at0.cols());

  auto quotient = [&](double delta) {
    Vec p(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) p[i] = delta * v[i];
    return (1.0 / delta) * h(p);
  };

  // First-order quotients extrapolated pairwise: R_k = 2 E(d/2) - E(d)
  // kills the O(delta) term. Track the Cauchy differences for convergence.
  Mat prev = quotient(step);
  Mat prev_extrap;
  double prev_diff = std::numeric_limits<double>::infinity();
  int grew = 0;
  double delta = step;
  for (int k = 0; k < 12; ++k) {
    delta *= 0.5;
    const Mat cur = quotient(delta);
    const Mat extrap = 2.0 * cur - prev;
    if (k > 0) {
      const double diff = inf_norm(extrap - prev_extrap);
      const double scale = 1.0 + inf_norm(extrap);
      if (diff <= 1e-9 * scale) return extrap;
      if (diff > 2.0 * prev_diff && diff > 1e-7 * scale) {
        if (++grew >= 2)
          throw NoConvergence(
              "directional_derivative_matrix: estimates diverge");
      } else {
        grew = 0;
      }
      prev_diff = diff;
    }
    prev_extrap = extrap;
    prev = cur;
  }
  return prev_extrap;
}

int jacobian_rank_field(std::span<const Expr> cs, double radius, int samples,
                        double tol, std::uint64_t seed) {
  if (samples < 100)
    throw PreconditionFailed("jacobian_rank_field: samples must be >= 100");
  if (cs.empty()) return 0;
  int n = 0;
  for (const Expr& c : cs) n = std::max(n, c.min_dimension());
  Rng rng(seed);
  int max_rank = 0;
  const int m = static_cast<int>(cs.size());
  for (int s = 0; s < samples && max_rank < std::min(m, n); ++s) {
    const Vec x = rng.ball_point(n, radius);
    Mat jac(m, n);
    for (int r = 0; r < m; ++r) jac.set_row(r, gradient(cs[r], x));
    max_rank = std::max(max_rank, numeric_rank(jac, tol));
  }
  return max_rank;
}

RankOneFactorization factor_hessian_family(std::span<const Expr> cs,
                                           double tol, double radius,
                                           int samples, std::uint64_t seed) {
  if (cs.empty()) {
    RankOneFactorization out;
    out.zero_family = true;
    return out;
  }
  int n = 0;
  for (const Expr& c : cs) n = std::max(n, c.min_dimension());
  const Vec origin(n, 0.0);
  for (std::size_t j = 0; j < cs.size(); ++j) {
    const double gnorm = inf_norm(gradient(cs[j], origin));
    if (gnorm > tol)
      throw HypothesisViolated("factor_hessian_family: Dc(0) != 0 for member " +
                                   std::to_string(j + 1) + " (|grad| = " +
                                   std::to_string(gnorm) + ")",
                               {}, gnorm);
  }
  const int field = jacobian_rank_field(cs, radius, samples, tol, seed);
  if (field > 1)
    throw HypothesisViolated(
        "factor_hessian_family: rank(Dc(x)) exceeds 1 on the sampled ball "
        "(max rank " + std::to_string(field) + ")",
        {}, static_cast<double>(field));

  std::vector<Mat> hessians;
  hessians.reserve(cs.size());
  for (const Expr& c : cs) hessians.push_back(hessian(c, origin));
  return factor_rank_one_family(hessians, tol);
}

}  // namespace nlpcanon
