// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "nlpcanon/expr.hpp"
#include "nlpcanon/linalg.hpp"
#include "nlpcanon/nlp_instance.hpp"

namespace nlpcanon {

/// Reordering of the inequality constraints: the rank-completing ones first
/// (count = completing), the rest in their original relative order.
struct InequalitySelection {
  std::vector<int> permutation;  // 0-based indices into the inequality list
  int completing = 0;            // r
};

/// Greedy pivoted selection of inequality gradients extending Dh(0) to the
/// full rank of the combined Jacobian. Throws RankDeficientEqualities when
/// rank(Dh(0)) < m.
InequalitySelection select_rank_completing_inequalities(const NLPInstance& p,
                                                        double tol);

/// The chart of the canonical reduction: coordinates t = (y, z, w) given by
/// Phi(x) = (h(x), g_sel(x), W^T x), with q = Phi^{-1} solved by Newton.
/// By construction h(q(t)) = y and g_sel(q(t)) = z up to Newton tolerance,
/// and the residual constraints c_l(t) = g_rest(q(t)) satisfy c(0) = 0 and
/// D_w c(0) = 0. Immutable after construction; Newton evaluation is
/// reentrant.
class CanonicalChart {
 public:
  const NLPInstance& source() const { return source_; }
  int n() const { return source_.n(); }
  int m() const { return source_.num_equalities(); }
  int r() const { return selection_.completing; }
  int p() const { return source_.num_inequalities() - r(); }
  int wdim() const { return n() - m() - r(); }
  const std::vector<int>& permutation() const {
    return selection_.permutation;
  }
  const Mat& complement_basis() const { return w_basis_; }
  double radius() const { return radius_; }

  Vec to_chart(const Vec& x) const;       // Phi
  Mat phi_jacobian(const Vec& x) const;   // DPhi
  /// Newton solve of Phi(x) = t; throws NewtonDivergence outside the
  /// validity region.
  Vec from_chart(const Vec& t) const;
  /// Dq(t) = DPhi(q(t))^{-1}.
  Mat q_jacobian(const Vec& t) const;

  Vec h_hat(const Vec& t) const;           // h(q(t)), equals the y block
  Vec g_hat_selected(const Vec& t) const;  // equals the z block
  Vec c_values(const Vec& t) const;        // residual constraints at t

  /// Chart coordinates (0, 0, w) as a full t vector.
  Vec lift_w(const Vec& w) const;

  /// D_w c(0) by the implicit relation Dq(0) = DPhi(0)^{-1}; exact up to
  /// autodiff rounding. The finite-difference cross-check lives in
  /// canonical_residuals.
  Mat dwc_at_origin() const;

 private:
  friend CanonicalChart build_canonical_chart(const NLPInstance& p,
                                              double tol);
  CanonicalChart(NLPInstance source, InequalitySelection selection)
      : source_(std::move(source)), selection_(std::move(selection)) {}

  NLPInstance source_;
  InequalitySelection selection_;
  std::vector<Expr> selected_;  // rank-completing inequalities, chart order
  std::vector<Expr> residual_;  // remaining inequalities, chart order
  Mat w_basis_;                 // n x wdim, orthonormal
  Mat dphi0_inv_;
  double radius_ = 0.0;
  double tol_ = 1e-8;
};

/// Construct the chart; throws RankDeficientEqualities / RankError when the
/// rank hypotheses fail. The validity radius is estimated by a halving
/// search (Newton convergence on sampled boundary points) and is reported,
/// not certified.
CanonicalChart build_canonical_chart(const NLPInstance& p, double tol);

struct ChartResidualReport {
  double max_h_residual = 0.0;   // max |h(q(t)) - y|
  double max_g_residual = 0.0;   // max |g_sel(q(t)) - z|
  double dwc_inf_norm = 0.0;     // finite-difference ||D_w c(0)||_inf
  int samples_used = 0;
  int samples_excluded = 0;      // Newton failures outside the radius
  bool rank_identity = true;     // rank(Dhgc) - (m+r) == rank(D_w c) on samples
};

ChartResidualReport canonical_residuals(const CanonicalChart& chart,
                                        int samples, std::uint64_t seed);

/// f and c restricted to the w block: ftilde(w) = f(q(0,0,w)),
/// ctilde_l(w) = c_l(0,0,w). First derivatives at 0 are implicit through
/// DPhi(0)^{-1}; second derivatives use central differences on w (step 1e-4,
/// Richardson once) since q's own second derivatives are never materialized.
struct WRestriction {
  int wdim = 0;
  std::function<double(const Vec&)> objective;
  std::vector<std::function<double(const Vec&)>> constraints;
  Vec objective_gradient0;
  Mat objective_hessian0;
  Mat constraints_jacobian0;          // p x wdim
  std::vector<Mat> constraint_hessians0;
};

WRestriction restrict_to_w(const CanonicalChart& chart, const Expr& objective);

}  // namespace nlpcanon
