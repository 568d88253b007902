// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nlpcanon/expr.hpp"
#include "nlpcanon/linalg.hpp"
#include "nlpcanon/nlp_instance.hpp"

namespace nlpcanon {

/// A local diffeomorphism q with q(0) = 0, held as one expression per
/// component so forward values, Jacobians and component Hessians are exact.
/// The inverse is a damped Newton solve (tolerance 1e-12, 50 iterations,
/// started at Dq(0)^{-1} x). Immutable after construction.
class Diffeomorphism {
 public:
  static Diffeomorphism identity(int n, double radius = 1.0);

  /// Wrap explicit components; validates q(0) = 0 and that Dq(0) is
  /// invertible. User-supplied maps are further validated only by sampling
  /// (invertibility on the ball is certified for the generated family, not
  /// in general).
  static Diffeomorphism from_components(std::vector<Expr> components,
                                        double radius);

  int dim() const { return static_cast<int>(components_.size()); }
  double radius() const { return radius_; }
  std::span<const Expr> components() const { return components_; }

  Vec forward(const Vec& y) const;
  Mat jacobian(const Vec& y) const;
  std::vector<Mat> component_hessians(const Vec& y) const;
  const Mat& jacobian_at_origin() const { return a0_; }

  /// Newton inverse; throws NoConvergence when damping cannot restore
  /// progress within the iteration cap.
  Vec inverse(const Vec& x) const;

 private:
  Diffeomorphism() = default;

  std::vector<Expr> components_;
  double radius_ = 1.0;
  Mat a0_;      // Dq(0)
  Mat a0_inv_;
};

/// Seeded family q(y) = A y + magnitude * (quadratic terms), with A built
/// from random rotations and singular values in [0.6, 1.8] (condition <= 3).
/// Invertibility (|det Dq| bounded away from 0) and the Newton round trip
/// are verified by sampling on the ball; failure raises GenerationFailed,
/// in which case a smaller magnitude will succeed.
Diffeomorphism random_diffeomorphism(int n, std::uint64_t seed,
                                     double magnitude, double radius = 1.0);

/// The source problem rewritten in the coordinates y with x = q(y): the
/// composed expressions are exact substitutions, so all derivatives of the
/// hatted functions come from plain autodiff on them.
class TransformedProblem {
 public:
  TransformedProblem(const NLPInstance& source, const Diffeomorphism& q);

  const NLPInstance& source() const { return source_; }
  const Diffeomorphism& map() const { return q_; }
  const Expr& objective() const { return objective_; }
  std::span<const Expr> equalities() const { return equalities_; }
  std::span<const Expr> inequalities() const { return inequalities_; }
  double radius() const { return radius_; }

  /// Package the transformed problem as a standalone instance (radius is the
  /// verified transformed ball).
  NLPInstance instance() const;

 private:
  NLPInstance source_;
  Diffeomorphism q_;
  Expr objective_;
  std::vector<Expr> equalities_;
  std::vector<Expr> inequalities_;
  double radius_ = 0.0;
};

TransformedProblem transform_problem(const NLPInstance& p,
                                     const Diffeomorphism& q);

/// Residuals of the four transformation identities, each measured relative
/// (max over the problem's functions and the supplied points):
///   lin_grad:  grad(f o A)(y)      = A^T grad f(A y)
///   lin_hess:  hess(f o A)(y)      = A^T hess f(A y) A
///   non_grad:  grad(f o q)(y)      = Dq(y)^T grad f(q(y))
///   non_hess:  hess(f o q)(y)      = Dq^T hess f Dq + sum_k d_k f hess q_k
/// fd_grad / fd_hess check the composed left sides against central
/// differences.
struct ChainRuleReport {
  double lin_grad = 0.0;
  double lin_hess = 0.0;
  double non_grad = 0.0;
  double non_hess = 0.0;
  double fd_grad = 0.0;
  double fd_hess = 0.0;

  bool pass(double tol_ad = 1e-6, double tol_fd = 1e-4) const {
    return lin_grad <= tol_ad && lin_hess <= tol_ad && non_grad <= tol_ad &&
           non_hess <= tol_ad && fd_grad <= tol_fd && fd_hess <= tol_fd;
  }
};

ChainRuleReport verify_chain_rules(const NLPInstance& p,
                                   const Diffeomorphism& q,
                                   std::span<const Vec> points);

/// First-order residuals of one multiplier pair on both sides of the change
/// of variables. Residual magnitudes transform by Dq(0)^T, so the verdicts
/// compare against tol on the source and tol * cond(Dq(0)) on the transform;
/// equivalence is of verdicts, not values.
struct MultiplierInvarianceReport {
  double residual_source = 0.0;
  double residual_transformed = 0.0;
  double condition = 1.0;
  double tol_source = 0.0;
  double tol_transformed = 0.0;
  bool source_holds = false;
  bool transformed_holds = false;

  bool equivalent() const { return source_holds == transformed_holds; }
};

MultiplierInvarianceReport verify_multiplier_invariance(
    const NLPInstance& p, const Diffeomorphism& q, const Vec& lambda,
    const Vec& mu, double tol);

/// d^T (hess f + sum lambda_j hess h_j + sum mu_l hess g_l) d at x.
double second_order_term(const NLPInstance& p, const Vec& x, const Vec& lambda,
                         const Vec& mu, const Vec& d);

/// Invariance of the second-order term under the change of variables, valid
/// once the first-order conditions hold (the curvature correction cancels).
/// Directions are sampled in the tangent kernel when it is nontrivial.
struct SecondOrderInvarianceReport {
  double max_deviation = 0.0;  // relative: |S - S_hat| / (1 + |S|)
  int kernel_dim_source = 0;
  int kernel_dim_transformed = 0;
  bool kernel_correspondence = false;
  int samples = 0;
  double tolerance = 0.0;
  bool passed = false;  // max_deviation <= tolerance and kernels correspond
};

/// Throws PreconditionFailed when (lambda, mu) leave a first-order residual
/// above 1e-8 (the cancellation needs stationarity).
SecondOrderInvarianceReport verify_second_order_invariance(
    const NLPInstance& p, const Diffeomorphism& q, const Vec& lambda,
    const Vec& mu, int samples, double tol, std::uint64_t seed = 0);

}  // namespace nlpcanon
