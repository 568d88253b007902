// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "nlpcanon/change_of_vars.hpp"
#include "nlpcanon/errors.hpp"
#include "nlpcanon/nlp_analysis.hpp"
#include "support.hpp"

using namespace nlpcanon;
using testsupport::mat_gap;
using testsupport::vec_gap;

namespace {

NLPInstance load(const std::string& name) {
  std::ifstream in(testsupport::data_path(name));
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return NLPInstance(parse_problem(ss.str()));
}

}  // namespace

TEST_CASE("combined_jacobian pinned values") {
  const NLPInstance p = load("worked_instance.nlp");
  const double a = 0.3, b = -0.7;
  const Mat j = combined_jacobian(p, Vec{0.0, a, b});
  CHECK(mat_gap(j, Mat({{1, 0, 0}, {1, b, a}})) <= 1e-14);

  const Mat j0 = combined_jacobian(p, Vec{0.0, 0.0, 0.0});
  CHECK(mat_gap(j0, Mat({{1, 0, 0}, {1, 0, 0}})) <= 1e-14);
  CHECK(numeric_rank(j0, 1e-8) == 1);

  const NLPInstance unconstrained(2, parse_expr("x1^2 + x2^2", 2), {}, {},
                                  1.0);
  const Mat empty = combined_jacobian(unconstrained, Vec{0.0, 0.0});
  CHECK(empty.rows() == 0);
  CHECK(empty.cols() == 2);
}

TEST_CASE("check_mfcq pinned cases") {
  const MFCQReport ok = check_mfcq(load("mfcq_ok.nlp"), 1e-8);
  CHECK(ok.satisfied);
  CHECK(ok.rank_dh == 1);
  CHECK(ok.margin == doctest::Approx(1.0));
  CHECK(inf_norm(ok.witness) == doctest::Approx(1.0));
  // Witness lies in ker Dh(0) = {d1 = 0} and strictly decreases both
  // inequalities; the LP vertex is d = (0, -1, -1).
  CHECK(std::fabs(ok.witness[0]) <= 1e-10);
  CHECK(ok.witness[1] == doctest::Approx(-1.0));
  CHECK(ok.witness[2] == doctest::Approx(-1.0));

  const MFCQReport opp = check_mfcq(load("mfcq_opposing.nlp"), 1e-8);
  CHECK(!opp.satisfied);

  const MFCQReport rd = check_mfcq(load("mfcq_rankdef.nlp"), 1e-8);
  CHECK(!rd.satisfied);
  CHECK(rd.rank_dh == 1);

  const MFCQReport worked = check_mfcq(load("worked_instance.nlp"), 1e-8);
  CHECK(worked.satisfied);
  CHECK(worked.margin > 0.9);
  CHECK(inf_norm(Vec{worked.witness[0]}) == doctest::Approx(1.0));

  // No inequalities: the rank condition decides and the margin is infinite.
  const NLPInstance eq_only(2, parse_expr("x2", 2), {parse_expr("x1", 2)}, {},
                            1.0);
  const MFCQReport eo = check_mfcq(eq_only, 1e-8);
  CHECK(eo.satisfied);
  CHECK(std::isinf(eo.margin));
  CHECK(inf_norm(eo.witness) == doctest::Approx(1.0));
}

TEST_CASE("check_rank_deviation pinned cases") {
  const RankDeviationReport worked =
      check_rank_deviation(load("worked_instance.nlp"), 300, 1e-8, 3);
  CHECK(worked.within_one);
  CHECK(worked.base_rank == 1);
  CHECK(worked.max_rank == 2);

  const RankDeviationReport bad =
      check_rank_deviation(load("rankdev_false.nlp"), 300, 1e-8, 3);
  CHECK(!bad.within_one);
  CHECK(bad.base_rank == 0);
  CHECK(bad.max_rank == 2);
  // The recorded sample indeed attains the deviating rank.
  CHECK(numeric_rank(combined_jacobian(load("rankdev_false.nlp"), bad.argmax),
                     1e-8) == bad.max_rank);

  const NLPInstance linear(2, parse_expr("x1", 2),
                           {parse_expr("x1 + x2", 2)}, {}, 1.0);
  const RankDeviationReport lin = check_rank_deviation(linear, 300, 1e-8, 3);
  CHECK(lin.within_one);
  CHECK(lin.base_rank == lin.max_rank);

  CHECK_THROWS_AS(check_rank_deviation(linear, 50, 1e-8, 3),
                  PreconditionFailed);
}

TEST_CASE("kkt_residual pinned values") {
  const NLPInstance p = load("worked_instance.nlp");
  const Vec origin(3, 0.0);
  CHECK(kkt_residual(p, origin, {}, Vec{2.0, 0.0}) <= 1e-14);
  CHECK(kkt_residual(p, origin, {}, Vec{0.0, 0.0}) == doctest::Approx(2.0));
  CHECK_THROWS_AS(kkt_residual(p, origin, {}, Vec{-1.0, 0.0}),
                  NegativeMultiplier);
}

TEST_CASE("tangent_kernel_basis pinned cases") {
  const Mat kernel = tangent_kernel_basis(load("worked_instance.nlp"), 1e-8);
  REQUIRE(kernel.cols() == 2);
  // Both columns annihilate the z coordinate.
  CHECK(std::fabs(kernel(0, 0)) <= 1e-12);
  CHECK(std::fabs(kernel(0, 1)) <= 1e-12);
  CHECK(mat_gap(kernel.transpose() * kernel, Mat::identity(2)) <= 1e-10);

  const NLPInstance square(2, parse_expr("x1", 2),
                           {parse_expr("x1", 2), parse_expr("x2", 2)}, {},
                           1.0);
  CHECK(tangent_kernel_basis(square, 1e-8).cols() == 0);

  const NLPInstance unconstrained(3, parse_expr("x1", 3), {}, {}, 1.0);
  CHECK(mat_gap(tangent_kernel_basis(unconstrained, 1e-8), Mat::identity(3)) ==
        0.0);
}

TEST_CASE("multiplier_mu_bounds on the worked polytope") {
  const NLPInstance p = load("worked_instance.nlp");
  // mu_1 + mu_2 = 2 with mu >= 0: each coordinate spans [0, 2].
  const Interval i2 = multiplier_mu_bounds(p, Vec{0.0, 1.0});
  CHECK(i2.lo == doctest::Approx(0.0));
  CHECK(i2.hi == doctest::Approx(2.0));
  const Interval isum = multiplier_mu_bounds(p, Vec{1.0, 1.0});
  CHECK(isum.lo == doctest::Approx(2.0));
  CHECK(isum.hi == doctest::Approx(2.0));

  // Unattainable stationarity: empty polytope.
  const NLPInstance infeasible(2, parse_expr("x1", 2), {},
                               {parse_expr("x2", 2)}, 1.0);
  CHECK_THROWS_AS(multiplier_mu_bounds(infeasible, Vec{1.0}),
                  MultiplierRecoveryFailed);
}

TEST_CASE("andreani_certificate on the worked instance") {
  const NLPInstance p = load("worked_instance.nlp");
  const AndreaniCertificate cert = andreani_certificate(p, 1e-8, 0);

  CHECK(cert.completing == 1);
  CHECK(cert.wdim == 2);
  REQUIRE(cert.alpha.size() == 1);
  CHECK(cert.alpha[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(mat_gap(cert.coupling, Mat({{0, 1}, {1, 0}})) <= 1e-6);
  CHECK(cert.interval.lo == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(cert.interval.hi == doctest::Approx(2.0).epsilon(1e-6));
  // gamma* = 0 maximizes lambda_min(2I + gamma H) = 2 - |gamma| on [0, 2].
  CHECK(std::fabs(cert.gamma) <= 1e-6);
  CHECK(cert.separation_lambda_min == doctest::Approx(2.0).epsilon(1e-4));
  REQUIRE(cert.mu.size() == 2);
  CHECK(cert.mu[0] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(std::fabs(cert.mu[1]) <= 1e-8);
  CHECK(cert.kkt <= 1e-8);
  CHECK(cert.gamma_consistency() <= 1e-8);
  CHECK(cert.minimality_ok);
  CHECK(cert.minimality_samples > 1000);
  CHECK(!cert.family_zero);
  for (double m : cert.mu) CHECK(m >= 0.0);

  const WeakSecondOrderReport weak =
      verify_weak_second_order(p, cert, 1000, 1e-8, 0);
  CHECK(weak.kernel_dim == 2);
  CHECK(weak.min_s >= -1e-8);
  CHECK(weak.kernel_lambda_min >= -1e-8);
  CHECK(weak.passed);
}

TEST_CASE("the indefinite variant fails with a separation witness") {
  const NLPInstance p = load("worked_variant.nlp");
  try {
    andreani_certificate(p, 1e-8, 0);
    FAIL("expected SeparationFailed");
  } catch (const SeparationFailed& e) {
    REQUIRE(e.witness().size() == 3);
    // The negative direction is the w2 axis, i.e. (0, 0, 1) in x space.
    CHECK(std::fabs(e.witness()[0]) <= 1e-6);
    CHECK(std::fabs(e.witness()[1]) <= 1e-6);
    CHECK(std::fabs(std::fabs(e.witness()[2]) - 1.0) <= 1e-6);
    CHECK(e.worst_value() < 0.0);
    // The guard also flags that 0 is not a local minimizer.
    CHECK(std::string(e.what()).find("minimality") != std::string::npos);
  }
}

TEST_CASE("hypothesis failures are reported as such") {
  CHECK_THROWS_AS(andreani_certificate(load("mfcq_opposing.nlp"), 1e-8, 0),
                  HypothesisViolated);
  CHECK_THROWS_AS(andreani_certificate(load("rankdev_false.nlp"), 1e-8, 0),
                  HypothesisViolated);
}

TEST_CASE("empty residual family reduces to plain kernel semidefiniteness") {
  // g spans two independent gradients: r = 2, p = 0, wdim = 1.
  const NLPInstance psd(3, parse_expr("x1^2 - x2 - x3", 3), {},
                        {parse_expr("x2", 3), parse_expr("x3", 3)}, 1.0);
  const AndreaniCertificate cert = andreani_certificate(psd, 1e-8, 1);
  CHECK(cert.completing == 2);
  CHECK(cert.alpha.empty());
  CHECK(cert.family_zero);
  CHECK(cert.gamma == doctest::Approx(0.0));
  CHECK(cert.separation_lambda_min >= 2.0 - 1e-6);

  const NLPInstance indefinite(3, parse_expr("-x1^2 - x2 - x3", 3), {},
                               {parse_expr("x2", 3), parse_expr("x3", 3)},
                               1.0);
  CHECK_THROWS_AS(andreani_certificate(indefinite, 1e-8, 1),
                  SeparationFailed);
}

TEST_CASE("weak second order with the gamma = 2 multiplier choice") {
  const NLPInstance p = load("worked_instance.nlp");
  AndreaniCertificate cert;
  cert.lambda = {};
  cert.mu = {0.0, 2.0};  // S(d) = 2 (d1 + d2)^2 on the kernel
  const WeakSecondOrderReport weak =
      verify_weak_second_order(p, cert, 1000, 1e-8, 5);
  CHECK(weak.kernel_dim == 2);
  CHECK(weak.min_s >= -1e-12);
  CHECK(weak.min_s <= 1e-3);  // the flat direction (0, 1, -1) is approached
  CHECK(std::fabs(weak.kernel_lambda_min) <= 1e-9);
}

TEST_CASE("pipeline is invariant under changes of variables") {
  const NLPInstance p = load("worked_instance.nlp");
  const AndreaniCertificate base = andreani_certificate(p, 1e-8, 0);
  const WeakSecondOrderReport base_weak =
      verify_weak_second_order(p, base, 500, 1e-8, 0);
  CHECK(base_weak.passed);

  for (std::uint64_t seed : {11ull, 12ull}) {
    const Diffeomorphism q = random_diffeomorphism(3, seed, 0.15);
    const NLPInstance t = transform_problem(p, q).instance();
    const AndreaniCertificate cert = andreani_certificate(t, 1e-8, seed);
    const WeakSecondOrderReport weak =
        verify_weak_second_order(t, cert, 500, 1e-8, seed);
    CHECK(weak.passed);
    // The multiplier polytopes agree coordinate by coordinate.
    for (int l = 0; l < 2; ++l) {
      Vec coeff(2, 0.0);
      coeff[static_cast<std::size_t>(l)] = 1.0;
      const Interval a = multiplier_mu_bounds(p, coeff);
      const Interval b = multiplier_mu_bounds(t, coeff);
      CHECK(a.lo == doctest::Approx(b.lo).epsilon(1e-6));
      CHECK(a.hi == doctest::Approx(b.hi).epsilon(1e-6));
    }
  }
}

TEST_CASE("kernel directions map S through the chart restriction") {
  // Equivalence of the ambient form and its w-space reduction on the worked
  // instance, whose chart is the identity on the w block.
  const NLPInstance p = load("worked_instance.nlp");
  const AndreaniCertificate cert = andreani_certificate(p, 1e-8, 0);
  const CanonicalChart chart = build_canonical_chart(p, 1e-8);
  const WRestriction res = restrict_to_w(chart, p.objective());
  Rng rng(77);
  for (int s = 0; s < 100; ++s) {
    Vec d_tilde = rng.unit_vector(2);
    // Lift (0, 0, d_tilde) through the chart derivative at the origin.
    const Mat dq0 = inverse(chart.phi_jacobian(Vec(3, 0.0)));
    Vec d(3, 0.0);
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 2; ++k)
        d[i] += dq0(i, chart.m() + chart.r() + k) * d_tilde[k];
    const double s_ambient = second_order_term(p, Vec(3, 0.0), cert.lambda,
                                               cert.mu, d);
    // Restricted form with the certificate's tail multipliers.
    Mat restricted = res.objective_hessian0;
    for (std::size_t l = 0; l < res.constraint_hessians0.size(); ++l) {
      const double mu_tail =
          cert.mu[static_cast<std::size_t>(
              cert.permutation[static_cast<std::size_t>(cert.completing) + l])];
      restricted = restricted + mu_tail * res.constraint_hessians0[l];
    }
    const double s_reduced = dot(d_tilde, restricted * d_tilde);
    CHECK(std::fabs(s_ambient - s_reduced) <=
          1e-8 * (1.0 + std::fabs(s_ambient)));
  }
}
