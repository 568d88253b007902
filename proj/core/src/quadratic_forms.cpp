// SPDX-License-Identifier: Apache-2.0
#include "nlpcanon/quadratic_forms.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nlpcanon/errors.hpp"
#include "nlpcanon/rng.hpp"

namespace nlpcanon {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kTwoPi = 2.0 * kPi;

void require_symmetric(const Mat& m, const char* name) {
  if (m.rows() != m.cols())
    throw PreconditionFailed(std::string(name) + " must be square");
  if (max_abs_asymmetry(m) > 1e-12 * (1.0 + inf_norm(m)))
    throw PreconditionFailed(std::string(name) + " must be symmetric");
}

double quad_form(const Mat& m, const Vec& x) {
  double acc = 0.0;
  const int n = m.rows();
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) row += m(i, j) * x[j];
    acc += x[i] * row;
  }
  return acc;
}

Mat affine_combo(const Mat& a, double t, const Mat& b) {
  Mat out = a;
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out(i, j) += t * b(i, j);
  return out;
}

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a <= -kPi) a += kTwoPi;
  if (a > kPi) a -= kTwoPi;
  return a;
}

}  // namespace

bool RangeClassification::contains_angle(double angle, double tol) const {
  switch (kind) {
    case RangeKind::FullPlane:
      return true;
    case RangeKind::OriginOnly:
      return false;
    case RangeKind::Sector:
    case RangeKind::Ray: {
      double rel = std::fmod(angle - theta1, kTwoPi);
      if (rel < 0.0) rel += kTwoPi;
      return rel <= width() + tol || rel >= kTwoPi - tol;
    }
  }
  return false;
}

RangeClassification joint_range(const Mat& a, const Mat& b, int samples,
                                std::uint64_t seed) {
  require_symmetric(a, "A");
  require_symmetric(b, "B");
  if (samples < 1000)
    throw PreconditionFailed("joint_range: samples must be >= 1000");
  const int n = a.rows();

  Rng rng(seed);
  std::vector<double> angles;
  angles.reserve(static_cast<std::size_t>(samples));
  double max_mag = 0.0;
  std::vector<std::pair<double, double>> points(
      static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    const Vec x = rng.unit_vector(n);
    const double u = quad_form(a, x);
    const double v = quad_form(b, x);
    points[static_cast<std::size_t>(s)] = {u, v};
    max_mag = std::max(max_mag, std::hypot(u, v));
  }
  if (max_mag <= 1e-14 * (1.0 + inf_norm(a) + inf_norm(b)))
    throw DegenerateError("joint_range: all samples map to (0, 0)");
  for (const auto& [u, v] : points)
    if (std::hypot(u, v) > 1e-12 * max_mag)
      angles.push_back(std::atan2(v, u));

  // Supporting halfplanes: the ray direction psi supports the range iff
  // N(psi) = sin(psi) A - cos(psi) B is positive semidefinite. Under the
  // Dines hypothesis the set {psi : N(psi) >= 0} is empty (full plane) or a
  // single arc whose complement-width is the sector width.
  auto support_gap = [&](double psi) {
    return lambda_min(affine_combo((std::sin(psi)) * a, -std::cos(psi), b));
  };

  const int grid = 2048;
  std::vector<double> gv(grid);
  int best = 0;
  bool any_nonneg = false;
  for (int i = 0; i < grid; ++i) {
    gv[i] = support_gap(kTwoPi * i / grid);
    if (gv[i] >= 0.0) any_nonneg = true;
    if (gv[i] > gv[best]) best = i;
  }

  RangeClassification out;
  if (!any_nonneg) {
    // Refine around the grid maximum before declaring the whole plane.
    double lo = kTwoPi * (best - 1) / grid;
    double hi = kTwoPi * (best + 1) / grid;
    const double invphi = 0.6180339887498948482;
    double x1 = hi - invphi * (hi - lo), x2 = lo + invphi * (hi - lo);
    double f1 = support_gap(x1), f2 = support_gap(x2);
    for (int it = 0; it < 80; ++it) {
      if (f1 < f2) {
        lo = x1; x1 = x2; f1 = f2;
        x2 = lo + invphi * (hi - lo); f2 = support_gap(x2);
      } else {
        hi = x2; x2 = x1; f2 = f1;
        x1 = hi - invphi * (hi - lo); f1 = support_gap(x1);
      }
    }
    if (std::max(f1, f2) < 0.0) {
      out.kind = RangeKind::FullPlane;
      return out;
    }
    // A supporting direction exists after all; fall through with it.
    best = static_cast<int>(std::floor((lo / kTwoPi) * grid)) % grid;
    gv[best] = std::max(f1, f2);
  }

  // Longest circular run of nonnegative support values.
  int start = -1;
  for (int i = 0; i < grid; ++i)
    if (gv[i] < 0.0) {
      start = i;
      break;
    }
  int arc_begin = best, arc_len = grid;
  if (start >= 0) {
    arc_len = 0;
    int run_begin = -1, run_len = 0;
    for (int k = 1; k <= grid; ++k) {
      const int i = (start + k) % grid;
      if (gv[i] >= 0.0) {
        if (run_len == 0) run_begin = i;
        ++run_len;
        if (run_len > arc_len) {
          arc_len = run_len;
          arc_begin = run_begin;
        }
      } else {
        run_len = 0;
      }
    }
  }
  if (arc_len == 0 || arc_len >= grid)
    throw DegenerateError("joint_range: support scan found no usable arc");

  // Bisect both boundaries of the arc: g < 0 outside, g >= 0 inside.
  auto bisect = [&](double neg, double pos) {
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (neg + pos);
      if (support_gap(mid) >= 0.0) {
        pos = mid;
      } else {
        neg = mid;
      }
    }
    return pos;
  };
  const double step = kTwoPi / grid;
  const double psi_begin =
      bisect(step * (arc_begin - 1), step * arc_begin);
  const double psi_end = bisect(step * (arc_begin + arc_len),
                                step * (arc_begin + arc_len - 1));
  const double arc = psi_end - psi_begin;  // in (0, ~pi]

  double width = kPi - arc;
  if (width < 0.0) width = 0.0;
  out.theta1 = wrap_angle(psi_end - kPi);
  out.theta2 = out.theta1 + width;
  out.kind = width <= 1e-8 ? RangeKind::Ray : RangeKind::Sector;
  if (out.kind == RangeKind::Ray) out.theta2 = out.theta1;

  for (double angle : angles)
    if (!out.contains_angle(angle, 1e-6))
      throw Error("joint_range: classification inconsistent with samples");
  return out;
}

PointwiseReport check_pointwise_hypothesis(const Mat& a, const Mat& b,
                                           Interval interval, int samples,
                                           double tol, std::uint64_t seed) {
  require_symmetric(a, "A");
  require_symmetric(b, "B");
  if (interval.lo > interval.hi)
    throw PreconditionFailed("check_pointwise_hypothesis: empty interval");
  const int n = a.rows();
  Rng rng(seed);
  PointwiseReport report;
  report.holds = true;
  report.worst_value = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    const Vec x = rng.unit_vector(n);
    const double u = quad_form(a, x);
    const double v = quad_form(b, x);
    const double best_gamma =
        std::max(u + interval.lo * v, u + interval.hi * v);
    if (best_gamma < report.worst_value) {
      report.worst_value = best_gamma;
      report.worst_x = x;
    }
  }
  if (n == 0) {
    report.worst_value = 0.0;
    report.worst_x = {};
  }
  report.holds = report.worst_value >= -tol;
  return report;
}

namespace {

struct GoldenMax {
  double arg = 0.0;
  double value = 0.0;
};

// Maximize a concave scalar function over [lo, hi]; endpoints are always
// candidates so boundary maximizers are never lost to the interior probes.
template <typename F>
GoldenMax golden_max(F&& f, double lo, double hi, int iterations) {
  GoldenMax best{lo, f(lo)};
  const double fhi = f(hi);
  if (fhi > best.value) best = {hi, fhi};
  if (hi - lo <= 0.0) return best;

  const double invphi = 0.6180339887498948482;
  double a = lo, b = hi;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int it = 0; it < iterations; ++it) {
    if (f1 > best.value) best = {x1, f1};
    if (f2 > best.value) best = {x2, f2};
    if (b - a <= 1e-15 * (1.0 + std::fabs(lo) + std::fabs(hi))) break;
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    }
  }
  return best;
}

GoldenMax maximize_lambda_min(const Mat& a, const Mat& b, Interval interval) {
  auto phi = [&](double gamma) {
    return lambda_min(affine_combo(a, gamma, b));
  };
  return golden_max(phi, interval.lo, interval.hi, 200);
}

Vec min_eigvec(const Mat& s) {
  if (s.rows() == 0) return {};
  const EigDecomp eig = sym_eig(s);
  return eig.vectors.col(s.rows() - 1);
}

}  // namespace

SeparationResult definite_separation(const Mat& a, const Mat& b,
                                     Interval interval) {
  require_symmetric(a, "A");
  require_symmetric(b, "B");
  if (interval.lo > interval.hi)
    throw PreconditionFailed("definite_separation: empty interval");
  const GoldenMax best = maximize_lambda_min(a, b, interval);
  if (!(best.value > 0.0))
    throw HypothesisViolated(
        "definite separation failed: max lambda_min = " +
            std::to_string(best.value) + " at gamma = " +
            std::to_string(best.arg),
        min_eigvec(affine_combo(a, best.arg, b)), best.value);
  return {best.arg, best.value, SeparationMode::Definite, {}};
}

SeparationResult semidefinite_separation(const Mat& a, const Mat& b,
                                         Interval interval, double tol) {
  require_symmetric(a, "A");
  require_symmetric(b, "B");
  if (interval.lo > interval.hi)
    throw PreconditionFailed("semidefinite_separation: empty interval");
  const GoldenMax best = maximize_lambda_min(a, b, interval);
  if (!(best.value >= -tol))
    throw HypothesisViolated(
        "semidefinite separation failed: max lambda_min = " +
            std::to_string(best.value) + " at gamma = " +
            std::to_string(best.arg),
        min_eigvec(affine_combo(a, best.arg, b)), best.value);

  // Regularized limit from the lemma's proof: the strictly separable
  // problems for A + I/k must agree on an accumulation point.
  SeparationResult out{best.arg, best.value, SeparationMode::Semidefinite, {}};
  const int n = a.rows();
  const double ks[3] = {10.0, 100.0, 1000.0};
  for (int i = 0; i < 3; ++i) {
    Mat shifted = a;
    for (int d = 0; d < n; ++d) shifted(d, d) += 1.0 / ks[i];
    const SeparationResult reg = definite_separation(shifted, b, interval);
    out.regularized_gammas[static_cast<std::size_t>(i)] = reg.gamma_star;
  }
  const double anchor = out.regularized_gammas[2];
  for (double gk : out.regularized_gammas)
    if (std::fabs(gk - anchor) > 1e-3)
      throw HypothesisViolated(
          "semidefinite separation: regularized maximizers failed to "
          "accumulate within 1e-3",
          {}, best.value);
  const double anchor_lmin = lambda_min(affine_combo(a, anchor, b));
  if (!(anchor_lmin >= -tol))
    throw HypothesisViolated(
        "semidefinite separation: regularized limit is not semidefinite",
        min_eigvec(affine_combo(a, anchor, b)), anchor_lmin);
  return out;
}

}  // namespace nlpcanon
