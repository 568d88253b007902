// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "nlpcanon/canonical_form.hpp"
#include "nlpcanon/linalg.hpp"
#include "nlpcanon/nlp_instance.hpp"
#include "nlpcanon/quadratic_forms.hpp"

namespace nlpcanon {

/// Rows: Dh(x) then Dg(x), in declared constraint order.
Mat combined_jacobian(const NLPInstance& p, const Vec& x);

struct MFCQReport {
  bool satisfied = false;
  int rank_dh = 0;
  /// Witness with ||d||_inf = 1, Dh(0) d = 0 and Dg(0) d < 0 when satisfied.
  Vec witness;
  /// delta = -max_l grad g_l(0) . d; +infinity when there are no
  /// inequalities (the rank condition alone decides).
  double margin = 0.0;
};

/// Rank test plus an LP search for the strictly decreasing direction:
/// maximize delta s.t. Dh(0) d = 0, Dg(0) d + delta <= 0, |d_i| <= 1. The LP
/// witness is re-projected onto ker Dh(0) so the reported direction satisfies
/// the equality block to rounding.
MFCQReport check_mfcq(const NLPInstance& p, double tol);

struct RankDeviationReport {
  bool within_one = false;  // max_rank <= base_rank + 1 over the samples
  int base_rank = 0;
  int max_rank = 0;
  Vec argmax;  // sample attaining max_rank
};

/// Sampling evidence (never proof) for rank(Dhg(x)) <= rank(Dhg(0)) + 1 on
/// the ball. samples >= 200.
RankDeviationReport check_rank_deviation(const NLPInstance& p, int samples,
                                         double tol, std::uint64_t seed = 0);

/// ||grad f + sum lambda grad h + sum mu grad g||_inf at x. Throws
/// NegativeMultiplier when any mu is negative.
double kkt_residual(const NLPInstance& p, const Vec& x, const Vec& lambda,
                    const Vec& mu);

/// Orthonormal basis of {d : Dh(0) d = 0, Dg(0) d = 0}.
Mat tangent_kernel_basis(const NLPInstance& p, double tol);

/// LP bounds of sum_l coeffs[l] mu_l over the first-order multiplier
/// polytope {(lambda, mu) : KKT residual 0, mu >= 0, sum mu <= cap}.
/// Throws MultiplierRecoveryFailed when the polytope is empty.
Interval multiplier_mu_bounds(const NLPInstance& p, const Vec& coeffs,
                              double cap = 1e6, bool* cap_bound = nullptr);

/// The computed realization of the weak second-order conclusion:
/// multipliers, the coupling factorization on the w block and the separating
/// gamma. mu is kept in the original constraint order; alpha[l] pairs with
/// mu[permutation[completing + l]].
struct AndreaniCertificate {
  Vec lambda;
  Vec mu;
  double gamma = 0.0;
  Vec alpha;
  Mat coupling;  // shared Hessian factor on the w block
  Interval interval;

  std::vector<int> permutation;
  int completing = 0;  // r
  int wdim = 0;
  double kkt = 0.0;
  double separation_lambda_min = 0.0;
  double factor_residual = 0.0;
  bool family_zero = false;
  double chart_radius = 0.0;
  bool interval_cap_bound = false;

  /// Sampled local-minimality guard (diagnostic: a failed guard is reported,
  /// not fatal, so separation failures can still surface their witness).
  bool minimality_ok = true;
  double minimality_worst = 0.0;  // min f(x) - f(0) over feasible samples
  int minimality_samples = 0;

  /// |gamma - sum alpha_l mu_{pi(r+l)}|.
  double gamma_consistency() const;
};

/// Full pipeline: MFCQ -> rank deviation -> canonical chart -> w-restriction
/// -> rank-one factorization -> multiplier interval by LP -> semidefinite
/// separation -> multiplier recovery by LP. Throws HypothesisViolated,
/// SeparationFailed (with an x-space witness direction) or
/// MultiplierRecoveryFailed.
AndreaniCertificate andreani_certificate(const NLPInstance& p, double tol,
                                         std::uint64_t seed = 0);

struct WeakSecondOrderReport {
  double min_s = std::numeric_limits<double>::infinity();
  Vec argmin;
  double kernel_lambda_min = 0.0;  // of the Lagrangian Hessian on the kernel
  int kernel_dim = 0;
  int samples = 0;
  double tolerance = 0.0;
  bool passed = false;  // min S(d) >= -tol (1 + ||d||^2) over unit samples
};

/// Sample S(d) over unit directions in the tangent kernel with the
/// certificate's multipliers.
WeakSecondOrderReport verify_weak_second_order(const NLPInstance& p,
                                               const AndreaniCertificate& cert,
                                               int samples, double tol,
                                               std::uint64_t seed = 0);

}  // namespace nlpcanon
