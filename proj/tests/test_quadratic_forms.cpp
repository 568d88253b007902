// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "nlpcanon/errors.hpp"
#include "nlpcanon/quadratic_forms.hpp"
#include "support.hpp"

using namespace nlpcanon;
using testsupport::random_symmetric;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

double quad(const Mat& m, const Vec& x) {
  double acc = 0.0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) acc += x[i] * m(i, j) * x[j];
  return acc;
}

// Brute-force range oracle: sampled angles and their circular gap decide
// plane vs sector, boundaries read off the gap ends.
struct HullOracle {
  bool full_plane = false;
  double theta1 = 0.0;
  double theta2 = 0.0;
};

HullOracle hull_oracle(const Mat& a, const Mat& b, int samples,
                       std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> angles;
  double max_mag = 0.0;
  std::vector<std::pair<double, double>> pts;
  for (int s = 0; s < samples; ++s) {
    const Vec x = rng.unit_vector(a.rows());
    const double u = quad(a, x);
    const double v = quad(b, x);
    pts.emplace_back(u, v);
    max_mag = std::max(max_mag, std::hypot(u, v));
  }
  for (auto& [u, v] : pts)
    if (std::hypot(u, v) > 1e-10 * max_mag) angles.push_back(std::atan2(v, u));
  std::sort(angles.begin(), angles.end());
  double max_gap = 0.0;
  double gap_end = angles.front();
  for (std::size_t i = 1; i < angles.size(); ++i) {
    const double gap = angles[i] - angles[i - 1];
    if (gap > max_gap) {
      max_gap = gap;
      gap_end = angles[i];
    }
  }
  const double wrap = angles.front() + 2.0 * kPi - angles.back();
  if (wrap > max_gap) {
    max_gap = wrap;
    gap_end = angles.front();
  }
  HullOracle out;
  if (max_gap <= kPi + 1e-2) {
    out.full_plane = true;
    return out;
  }
  out.theta1 = gap_end;                       // first covered angle
  out.theta2 = gap_end + (2.0 * kPi - max_gap);  // last covered angle
  return out;
}

// Map an angle into [base, base + 2 pi).
double wrap_from(double angle, double base) {
  double rel = std::fmod(angle - base, 2.0 * kPi);
  if (rel < 0.0) rel += 2.0 * kPi;
  return base + rel;
}

// Hypothesis-satisfying pair: A = P - gamma0 B with P positive definite
// (G^T G plus a lifted diagonal), so lambda_min(A + gamma0 B) > 0.
std::pair<Mat, Mat> satisfying_pair(Rng& rng, int n, double gamma0) {
  const Mat b = random_symmetric(rng, n);
  Mat g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = rng.uniform(-1.0, 1.0);
  Mat p = g.transpose() * g;
  for (int i = 0; i < n; ++i) p(i, i) += 0.3;
  Mat a = p;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) -= gamma0 * b(i, j);
  return {a, b};
}

}  // namespace

TEST_CASE("joint_range pinned classifications") {
  // (x1^2 - x2^2, 2 x1 x2) sweeps the full circle on unit vectors.
  const RangeClassification plane = joint_range(
      Mat({{1, 0}, {0, -1}}), Mat({{0, 1}, {1, 0}}), 2000, 1);
  CHECK(plane.kind == RangeKind::FullPlane);

  const RangeClassification ray = joint_range(Mat::identity(2), Mat(2, 2),
                                              2000, 1);
  CHECK(ray.kind == RangeKind::Ray);
  CHECK(std::fabs(ray.theta1) <= 1e-6);

  const RangeClassification quadrant = joint_range(
      Mat({{1, 0}, {0, 0}}), Mat({{0, 0}, {0, 1}}), 10000, 1);
  CHECK(quadrant.kind == RangeKind::Sector);
  CHECK(quadrant.theta1 == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(quadrant.theta2 == doctest::Approx(kPi / 2.0).epsilon(1e-6));
  CHECK(quadrant.width() == doctest::Approx(kPi / 2.0).epsilon(1e-6));

  CHECK_THROWS_AS(joint_range(Mat(2, 2), Mat(2, 2), 1000, 1),
                  DegenerateError);
  CHECK_THROWS_AS(joint_range(Mat::identity(2), Mat(2, 2), 10, 1),
                  PreconditionFailed);
}

TEST_CASE("joint_range agrees with the brute-force hull oracle") {
  Rng rng(101);
  int sectors = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 2;
    const Mat a = random_symmetric(rng, n);
    const Mat b = random_symmetric(rng, n);
    const HullOracle oracle = hull_oracle(a, b, 10000, 500 + trial);
    RangeClassification cls;
    try {
      cls = joint_range(a, b, 2000, 900 + trial);
    } catch (const DegenerateError&) {
      continue;  // outside the classification hypothesis
    }
    if (oracle.full_plane) {
      CHECK(cls.kind == RangeKind::FullPlane);
      continue;
    }
    ++sectors;
    REQUIRE(cls.kind != RangeKind::FullPlane);
    CHECK(cls.width() < kPi);
    // Boundary agreement at sampling resolution.
    const double t1 = wrap_from(oracle.theta1, cls.theta1 - kPi);
    CHECK(std::fabs(t1 - cls.theta1) <= 5e-2);
    const double t2 = wrap_from(oracle.theta2, cls.theta2 - kPi);
    CHECK(std::fabs(t2 - cls.theta2) <= 5e-2);

    // Pointedness: the mid-sector direction supports every sampled point.
    const double mid = 0.5 * (cls.theta1 + cls.theta2);
    Rng srng(33 + trial);
    for (int s = 0; s < 500; ++s) {
      const Vec x = srng.unit_vector(n);
      const double u = quad(a, x);
      const double v = quad(b, x);
      CHECK(u * std::cos(mid) + v * std::sin(mid) >=
            -1e-6 * (1.0 + std::hypot(u, v)));
    }
  }
  CHECK(sectors > 0);  // the battery must exercise the sector path
}

TEST_CASE("check_pointwise_hypothesis pinned cases") {
  const Mat a = Mat({{1, 0}, {0, -1}});
  const PointwiseReport yes = check_pointwise_hypothesis(
      a, Mat({{-1, 0}, {0, 1}}), Interval{0.0, 2.0}, 2000);
  CHECK(yes.holds);

  const PointwiseReport no1 = check_pointwise_hypothesis(
      -1.0 * Mat::identity(2), Mat(2, 2), Interval{0.0, 1.0}, 2000);
  CHECK(!no1.holds);
  CHECK(no1.worst_value <= -0.9);

  const PointwiseReport no2 =
      check_pointwise_hypothesis(a, Mat(2, 2), Interval{0.0, 1.0}, 4000);
  CHECK(!no2.holds);
  // Worst witness leans toward e2 where the form is -1.
  CHECK(std::fabs(no2.worst_x[1]) > 0.9);
}

TEST_CASE("definite_separation pinned cases") {
  const SeparationResult s1 = definite_separation(
      Mat::identity(2), Mat({{0, 1}, {1, 0}}), Interval{-0.5, 0.5});
  CHECK(std::fabs(s1.gamma_star) <= 1e-9);
  CHECK(s1.certificate_lambda_min == doctest::Approx(1.0).epsilon(1e-9));

  const SeparationResult s2 = definite_separation(
      Mat({{1, 0}, {0, -1}}), Mat({{0, 0}, {0, 2}}), Interval{0.0, 1.0});
  CHECK(s2.gamma_star == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(s2.certificate_lambda_min == doctest::Approx(1.0).epsilon(1e-9));

  CHECK_THROWS_AS(definite_separation(-1.0 * Mat::identity(2), Mat(2, 2),
                                      Interval{0.0, 1.0}),
                  HypothesisViolated);
}

TEST_CASE("semidefinite_separation pinned cases") {
  // lambda_min(A + gamma B) = -|1 - gamma| peaks at gamma = 1.
  const SeparationResult s1 = semidefinite_separation(
      Mat({{1, 0}, {0, -1}}), Mat({{-1, 0}, {0, 1}}), Interval{0.0, 2.0});
  CHECK(std::fabs(s1.gamma_star - 1.0) <= 1e-6);
  CHECK(s1.certificate_lambda_min >= -1e-8);
  for (double g : s1.regularized_gammas)
    CHECK(std::fabs(g - s1.gamma_star) <= 1e-3);

  // -|1 - 2 gamma| peaks at gamma = 1/2.
  const SeparationResult s2 = semidefinite_separation(
      Mat({{1, 0}, {0, -1}}), Mat({{-2, 0}, {0, 2}}), Interval{0.0, 1.0});
  CHECK(std::fabs(s2.gamma_star - 0.5) <= 1e-6);
  CHECK(s2.certificate_lambda_min >= -1e-8);

  // B = 0: any gamma works, the certificate value is lambda_min(A) = 1.
  const SeparationResult s3 = semidefinite_separation(
      Mat::identity(2), Mat(2, 2), Interval{0.0, 1.0});
  CHECK(s3.certificate_lambda_min == doctest::Approx(1.0));
  CHECK(s3.gamma_star >= 0.0);
  CHECK(s3.gamma_star <= 1.0);

  CHECK_THROWS_AS(semidefinite_separation(-1.0 * Mat::identity(2), Mat(2, 2),
                                          Interval{0.0, 1.0}),
                  HypothesisViolated);
}

TEST_CASE("lambda_min along gamma is concave on sampled grids") {
  Rng rng(103);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 3;
    const Mat a = random_symmetric(rng, n);
    const Mat b = random_symmetric(rng, n);
    const int grid = 101;
    std::vector<double> gamma(grid), phi(grid);
    for (int i = 0; i < grid; ++i) {
      gamma[i] = -1.0 + 2.0 * i / (grid - 1);
      Mat m = a;
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) m(r, c) += gamma[i] * b(r, c);
      phi[i] = lambda_min(m);
    }
    // Upper concave envelope via the monotone chain; concavity of phi means
    // every sample sits on it (within numerics).
    std::vector<int> hull;
    for (int i = 0; i < grid; ++i) {
      while (hull.size() >= 2) {
        const int p = hull[hull.size() - 2];
        const int q = hull[hull.size() - 1];
        const double cross = (gamma[q] - gamma[p]) * (phi[i] - phi[p]) -
                             (gamma[i] - gamma[p]) * (phi[q] - phi[p]);
        if (cross >= 0.0) {
          hull.pop_back();
        } else {
          break;
        }
      }
      hull.push_back(i);
    }
    double worst = 0.0;
    for (std::size_t h = 0; h + 1 < hull.size(); ++h) {
      for (int i = hull[h]; i <= hull[h + 1]; ++i) {
        const double t =
            (gamma[i] - gamma[hull[h]]) / (gamma[hull[h + 1]] - gamma[hull[h]]);
        const double env = phi[hull[h]] + t * (phi[hull[h + 1]] - phi[hull[h]]);
        worst = std::max(worst, env - phi[i]);
      }
    }
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("separation success implies the pointwise hypothesis") {
  Rng rng(107);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + trial % 2;
    const double gamma0 = rng.uniform(0.2, 0.8);
    const auto [a, b] = satisfying_pair(rng, n, gamma0);
    const SeparationResult sep =
        semidefinite_separation(a, b, Interval{0.0, 1.0});
    CHECK(sep.certificate_lambda_min >= -1e-8);
    const PointwiseReport pw =
        check_pointwise_hypothesis(a, b, Interval{0.0, 1.0}, 10000);
    CHECK(pw.holds);
  }
}

TEST_CASE("golden-section gamma matches a dense grid oracle") {
  Rng rng(109);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 2;
    const double gamma0 = rng.uniform(0.15, 0.85);
    const auto [a, b] = satisfying_pair(rng, n, gamma0);
    const Interval interval{0.0, 1.0};
    const SeparationResult sep = semidefinite_separation(a, b, interval);

    const int grid = 10000;
    const double spacing = (interval.hi - interval.lo) / grid;
    double best_gamma = interval.lo;
    double best_val = -1e300;
    for (int i = 0; i <= grid; ++i) {
      const double g = interval.lo + spacing * i;
      Mat m = a;
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) m(r, c) += g * b(r, c);
      const double val = lambda_min(m);
      if (val > best_val) {
        best_val = val;
        best_gamma = g;
      }
    }
    CHECK(std::fabs(sep.gamma_star - best_gamma) <= spacing);
    CHECK(std::fabs(sep.certificate_lambda_min - best_val) <= 1e-6);
  }
}
