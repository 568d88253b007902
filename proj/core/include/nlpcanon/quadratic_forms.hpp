// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>

#include "nlpcanon/linalg.hpp"

namespace nlpcanon {

/// Closed interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

enum class RangeKind { FullPlane, Sector, Ray, OriginOnly };

/// Joint range {(x^T A x, x^T B x)} of two quadratic forms. The set is a
/// cone, so it is either the whole plane or described by two boundary angles
/// with width theta2 - theta1 in [0, pi).
struct RangeClassification {
  RangeKind kind = RangeKind::OriginOnly;
  double theta1 = 0.0;
  double theta2 = 0.0;

  double width() const { return theta2 - theta1; }
  /// True when the ray at the given angle belongs to the classified set, up
  /// to an angular tolerance.
  bool contains_angle(double angle, double tol = 1e-6) const;
};

/// Classify the joint range by a supporting-halfplane scan refined with
/// bisection, then validate against sampled unit vectors. samples >= 1000.
/// Throws DegenerateError when every sample maps to (0, 0).
RangeClassification joint_range(const Mat& a, const Mat& b, int samples,
                                std::uint64_t seed = 0);

/// Result of testing "for every x there is gamma_x in I with
/// x^T (A + gamma_x B) x >= -tol". The max over gamma of the affine map
/// gamma -> x^T (A + gamma B) x sits at an endpoint, so endpoints decide.
struct PointwiseReport {
  bool holds = false;
  Vec worst_x;          // unit direction minimizing the endpoint maximum
  double worst_value = 0.0;
};

PointwiseReport check_pointwise_hypothesis(const Mat& a, const Mat& b,
                                           Interval interval, int samples,
                                           double tol = 1e-8,
                                           std::uint64_t seed = 0);

enum class SeparationMode { Definite, Semidefinite };

struct SeparationResult {
  double gamma_star = 0.0;
  double certificate_lambda_min = 0.0;
  SeparationMode mode = SeparationMode::Definite;
  /// Maximizers of the 1/k-regularized problems for k = 10, 100, 1000
  /// (semidefinite mode only).
  std::array<double, 3> regularized_gammas{};
};

/// Maximize the concave map gamma -> lambda_min(A + gamma B) over the
/// interval by golden section (endpoints always evaluated). Throws
/// HypothesisViolated when the maximum is <= 0, carrying the maximizing
/// gamma's minimal eigenvector as witness.
SeparationResult definite_separation(const Mat& a, const Mat& b,
                                     Interval interval);

/// As definite_separation with ">= -tol" acceptance, cross-validated by the
/// regularized runs definite_separation(A + I/k, B, I) for k = 10, 100, 1000.
SeparationResult semidefinite_separation(const Mat& a, const Mat& b,
                                         Interval interval, double tol = 1e-8);

}  // namespace nlpcanon
