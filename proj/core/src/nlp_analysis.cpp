// SPDX-License-Identifier: Apache-2.0
#include "nlpcanon/nlp_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nlpcanon/autodiff.hpp"
#include "nlpcanon/errors.hpp"
#include "nlpcanon/rank_one.hpp"
#include "nlpcanon/rng.hpp"
#include "nlpcanon/simplex.hpp"

namespace nlpcanon {

Mat combined_jacobian(const NLPInstance& p, const Vec& x) {
  Mat j(p.num_equalities() + p.num_inequalities(), p.n());
  int r = 0;
  for (const Expr& h : p.equalities()) j.set_row(r++, gradient(h, x));
  for (const Expr& g : p.inequalities()) j.set_row(r++, gradient(g, x));
  return j;
}

MFCQReport check_mfcq(const NLPInstance& p, double tol) {
  const Vec origin(static_cast<std::size_t>(p.n()), 0.0);
  const Mat dh = jacobian(p.equalities(), origin);
  MFCQReport report;
  report.rank_dh = numeric_rank(dh.rows() == 0 ? Mat(0, p.n()) : dh, tol);
  if (report.rank_dh < p.num_equalities()) return report;

  const int n = p.n();
  const int m = p.num_equalities();
  const int ng = p.num_inequalities();
  const Mat kernel = nullspace_basis(dh.rows() == 0 ? Mat(0, n) : dh, tol);

  if (ng == 0) {
    report.satisfied = true;
    report.margin = std::numeric_limits<double>::infinity();
    if (kernel.cols() > 0) {
      Vec d = kernel.col(0);
      report.witness = (1.0 / inf_norm(d)) * d;
    } else {
      report.witness.assign(static_cast<std::size_t>(n), 0.0);
    }
    return report;
  }

  // LP variables (d, delta): maximize delta, i.e. minimize -delta.
  const Mat dg = jacobian(p.inequalities(), origin);
  Vec c(static_cast<std::size_t>(n) + 1, 0.0);
  c[static_cast<std::size_t>(n)] = -1.0;
  Mat a_eq(m, n + 1);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) a_eq(i, j) = dh(i, j);
  Mat a_le(ng, n + 1);
  for (int l = 0; l < ng; ++l) {
    for (int j = 0; j < n; ++j) a_le(l, j) = dg(l, j);
    a_le(l, n) = 1.0;
  }
  std::vector<VarBound> bounds(static_cast<std::size_t>(n),
                               VarBound::interval(-1.0, 1.0));
  bounds.push_back(VarBound::interval(-1e6, 1e6));
  const LPResult lp = simplex_solve_small(c, a_eq, Vec(m, 0.0), a_le,
                                          Vec(ng, 0.0), bounds);
  if (lp.status != LPStatus::Optimal) return report;

  Vec d(lp.point.begin(), lp.point.begin() + n);
  // Re-project onto ker Dh(0) so the equality block holds to rounding, then
  // renormalize; both margin and Dh d scale together.
  if (m > 0) {
    Vec projected(static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k < kernel.cols(); ++k) {
      const Vec base = kernel.col(k);
      const double coef = dot(base, d);
      for (int i = 0; i < n; ++i) projected[i] += coef * base[i];
    }
    d = projected;
  }
  const double scale = inf_norm(d);
  if (scale < 1e-12) return report;  // no usable direction
  d = (1.0 / scale) * d;
  double margin = std::numeric_limits<double>::infinity();
  for (int l = 0; l < ng; ++l)
    margin = std::min(margin, -dot(dg.row(l), d));
  report.margin = margin;
  report.witness = d;
  report.satisfied = margin > tol;
  return report;
}

RankDeviationReport check_rank_deviation(const NLPInstance& p, int samples,
                                         double tol, std::uint64_t seed) {
  if (samples < 200)
    throw PreconditionFailed("check_rank_deviation: samples must be >= 200");
  RankDeviationReport report;
  const Vec origin(static_cast<std::size_t>(p.n()), 0.0);
  report.base_rank = numeric_rank(combined_jacobian(p, origin), tol);
  report.max_rank = report.base_rank;
  report.argmax = origin;
  Rng rng(seed);
  for (int s = 0; s < samples; ++s) {
    const Vec x = rng.ball_point(p.n(), p.radius());
    const int rank = numeric_rank(combined_jacobian(p, x), tol);
    if (rank > report.max_rank) {
      report.max_rank = rank;
      report.argmax = x;
    }
  }
  report.within_one = report.max_rank <= report.base_rank + 1;
  return report;
}

double kkt_residual(const NLPInstance& p, const Vec& x, const Vec& lambda,
                    const Vec& mu) {
  if (static_cast<int>(lambda.size()) != p.num_equalities() ||
      static_cast<int>(mu.size()) != p.num_inequalities())
    throw PreconditionFailed("kkt_residual: multiplier size mismatch");
  for (double m : mu)
    if (m < 0.0)
      throw NegativeMultiplier("kkt_residual: negative inequality multiplier");
  Vec acc = gradient(p.objective(), x);
  for (int j = 0; j < p.num_equalities(); ++j) {
    const Vec g = gradient(p.equalities()[static_cast<std::size_t>(j)], x);
    for (std::size_t i = 0; i < acc.size(); ++i)
      acc[i] += lambda[static_cast<std::size_t>(j)] * g[i];
  }
  for (int l = 0; l < p.num_inequalities(); ++l) {
    const Vec g = gradient(p.inequalities()[static_cast<std::size_t>(l)], x);
    for (std::size_t i = 0; i < acc.size(); ++i)
      acc[i] += mu[static_cast<std::size_t>(l)] * g[i];
  }
  return inf_norm(acc);
}

Mat tangent_kernel_basis(const NLPInstance& p, double tol) {
  const Vec origin(static_cast<std::size_t>(p.n()), 0.0);
  return nullspace_basis(combined_jacobian(p, origin), tol);
}

namespace {

// Shared assembly of the multiplier-polytope LP. Variables are
// (lambda_1..lambda_m, mu_1..mu_{r+p}) with mu >= 0 and sum mu <= cap;
// equality rows impose grad f + sum lambda grad h + sum mu grad g = 0.
struct PolytopeLP {
  int m = 0;
  int ng = 0;
  Mat a_eq;
  Vec b_eq;
  Mat a_le;
  Vec b_le;
  std::vector<VarBound> bounds;
};

PolytopeLP polytope_lp(const NLPInstance& p, double cap) {
  const Vec origin(static_cast<std::size_t>(p.n()), 0.0);
  PolytopeLP lp;
  lp.m = p.num_equalities();
  lp.ng = p.num_inequalities();
  const int vars = lp.m + lp.ng;
  lp.a_eq = Mat(p.n(), vars);
  const Mat dh = jacobian(p.equalities(), origin);
  const Mat dg = jacobian(p.inequalities(), origin);
  for (int i = 0; i < p.n(); ++i) {
    for (int j = 0; j < lp.m; ++j) lp.a_eq(i, j) = dh(j, i);
    for (int l = 0; l < lp.ng; ++l) lp.a_eq(i, lp.m + l) = dg(l, i);
  }
  const Vec grad_f = gradient(p.objective(), origin);
  lp.b_eq.resize(static_cast<std::size_t>(p.n()));
  for (int i = 0; i < p.n(); ++i) lp.b_eq[i] = -grad_f[i];
  lp.a_le = Mat(1, vars);
  for (int l = 0; l < lp.ng; ++l) lp.a_le(0, lp.m + l) = 1.0;
  lp.b_le = Vec(1, cap);
  lp.bounds.assign(static_cast<std::size_t>(lp.m), VarBound::free());
  for (int l = 0; l < lp.ng; ++l) lp.bounds.push_back(VarBound::nonnegative());
  return lp;
}

}  // namespace

Interval multiplier_mu_bounds(const NLPInstance& p, const Vec& coeffs,
                              double cap, bool* cap_bound) {
  if (static_cast<int>(coeffs.size()) != p.num_inequalities())
    throw PreconditionFailed("multiplier_mu_bounds: coefficient size mismatch");
  const PolytopeLP lp = polytope_lp(p, cap);
  Vec c(static_cast<std::size_t>(lp.m + lp.ng), 0.0);
  for (int l = 0; l < lp.ng; ++l) c[lp.m + l] = coeffs[static_cast<std::size_t>(l)];
  if (cap_bound) *cap_bound = false;

  auto solve = [&](double sense) {
    const LPResult res = simplex_solve_small(
        sense * c, lp.a_eq, lp.b_eq, lp.a_le, lp.b_le, lp.bounds);
    if (res.status != LPStatus::Optimal)
      throw MultiplierRecoveryFailed(
          "multiplier polytope is empty or unbounded at tolerance");
    if (cap_bound) {
      double total = 0.0;
      for (int l = 0; l < lp.ng; ++l) total += res.point[lp.m + l];
      if (total > cap - 1.0) *cap_bound = true;
    }
    return dot(c, res.point);
  };
  Interval out;
  out.lo = solve(1.0);
  out.hi = solve(-1.0);
  return out;
}

double AndreaniCertificate::gamma_consistency() const {
  double acc = 0.0;
  for (std::size_t l = 0; l < alpha.size(); ++l)
    acc += alpha[l] *
           mu[static_cast<std::size_t>(
               permutation[static_cast<std::size_t>(completing) + l])];
  return std::fabs(gamma - acc);
}

namespace {

// Sampled local-minimality guard: feasible chart points (y = 0, z <= 0,
// c <= 0) must not beat f(0) by more than 1e-9. Diagnostic only.
void sample_minimality(const NLPInstance& p, const CanonicalChart& chart,
                       AndreaniCertificate& cert, std::uint64_t seed) {
  Rng rng(seed ^ 0x6d696e69ull);
  const Vec origin(static_cast<std::size_t>(p.n()), 0.0);
  const double f0 = eval(p.objective(), origin);
  const int target = 5000;
  const int max_attempts = 20000;
  cert.minimality_worst = 0.0;
  cert.minimality_ok = true;
  int kept = 0;
  for (int attempt = 0; attempt < max_attempts && kept < target; ++attempt) {
    Vec t = rng.ball_point(p.n(), 0.9 * chart.radius());
    for (int j = 0; j < chart.m(); ++j) t[static_cast<std::size_t>(j)] = 0.0;
    for (int k = 0; k < chart.r(); ++k) {
      auto& z = t[static_cast<std::size_t>(chart.m() + k)];
      z = -std::fabs(z);
    }
    Vec x;
    try {
      x = chart.from_chart(t);
    } catch (const NewtonDivergence&) {
      continue;
    }
    bool feasible = true;
    for (double cv : chart.c_values(t))
      if (cv > 1e-10) feasible = false;
    if (!feasible) continue;
    ++kept;
    const double gap = eval(p.objective(), x) - f0;
    cert.minimality_worst = std::min(cert.minimality_worst, gap);
  }
  cert.minimality_samples = kept;
  cert.minimality_ok = cert.minimality_worst >= -1e-9;
}

}  // namespace

AndreaniCertificate andreani_certificate(const NLPInstance& p, double tol,
                                         std::uint64_t seed) {
  const MFCQReport mfcq = check_mfcq(p, tol);
  if (!mfcq.satisfied)
    throw HypothesisViolated(
        "Mangasarian-Fromovitz constraint qualification fails at the origin "
        "(rank Dh = " + std::to_string(mfcq.rank_dh) + ", margin = " +
        std::to_string(mfcq.margin) + ")");
  const RankDeviationReport rank_dev =
      check_rank_deviation(p, 500, tol, seed);
  if (!rank_dev.within_one)
    throw HypothesisViolated(
        "rank of the combined Jacobian deviates by more than one on the "
        "sampled ball (base " + std::to_string(rank_dev.base_rank) +
            ", observed " + std::to_string(rank_dev.max_rank) + ")",
        rank_dev.argmax, static_cast<double>(rank_dev.max_rank));

  const CanonicalChart chart = build_canonical_chart(p, tol);

  AndreaniCertificate cert;
  cert.permutation = chart.permutation();
  cert.completing = chart.r();
  cert.wdim = chart.wdim();
  cert.chart_radius = chart.radius();
  sample_minimality(p, chart, cert, seed);

  const WRestriction restriction = restrict_to_w(chart, p.objective());
  if (inf_norm(restriction.constraints_jacobian0) > 1e-6)
    throw HypothesisViolated(
        "residual constraints have a nonzero w-gradient at the origin",
        {}, inf_norm(restriction.constraints_jacobian0));

  // The finite-difference Hessians carry ~1e-5 noise through the Newton
  // inverse, so the proportionality tolerance cannot be tighter than that.
  const double factor_tol = std::max(tol, 1e-4);
  RankOneFactorization family;
  try {
    family = factor_rank_one_family(restriction.constraint_hessians0,
                                    factor_tol);
  } catch (const NotProportional& e) {
    throw HypothesisViolated(
        std::string("restricted Hessian family is not rank-one coupled: ") +
            e.what(),
        e.direction(), e.residual());
  }
  cert.alpha = family.alphas;
  cert.coupling = family.zero_family ? Mat(chart.wdim(), chart.wdim())
                                     : family.coupling;
  cert.factor_residual = family.residual;
  cert.family_zero = family.zero_family;

  // Interval for the separating gamma: LP range of sum alpha_l mu_{pi(r+l)}
  // over the multiplier polytope (empty polytope means no first-order
  // multipliers exist at tolerance).
  Vec gamma_coeffs(static_cast<std::size_t>(p.num_inequalities()), 0.0);
  for (std::size_t l = 0; l < cert.alpha.size(); ++l)
    gamma_coeffs[static_cast<std::size_t>(
        cert.permutation[static_cast<std::size_t>(cert.completing) + l])] =
        cert.alpha[l];
  cert.interval =
      multiplier_mu_bounds(p, gamma_coeffs, 1e6, &cert.interval_cap_bound);

  const Mat& a = restriction.objective_hessian0;
  SeparationResult separation;
  try {
    separation = semidefinite_separation(a, cert.coupling, cert.interval, tol);
  } catch (const HypothesisViolated& e) {
    // Lift the w-space witness to an x-space direction through the chart.
    const PointwiseReport pw = check_pointwise_hypothesis(
        a, cert.coupling, cert.interval, 2000, tol, seed);
    Vec w_witness = pw.worst_x.empty() ? e.witness() : pw.worst_x;
    Vec x_witness;
    if (!w_witness.empty()) {
      const Vec origin(static_cast<std::size_t>(p.n()), 0.0);
      const Mat dq0 = inverse(chart.phi_jacobian(origin));
      x_witness.assign(static_cast<std::size_t>(p.n()), 0.0);
      for (int i = 0; i < p.n(); ++i)
        for (int k = 0; k < chart.wdim(); ++k)
          x_witness[i] += dq0(i, chart.m() + chart.r() + k) * w_witness[k];
      const double norm = inf_norm(x_witness);
      if (norm > 0.0) x_witness = (1.0 / norm) * x_witness;
    }
    std::string msg =
        "no gamma in [" + std::to_string(cert.interval.lo) + ", " +
        std::to_string(cert.interval.hi) +
        "] makes the restricted form semidefinite";
    if (!cert.minimality_ok)
      msg += "; sampled minimality also fails (worst gap " +
             std::to_string(cert.minimality_worst) +
             "), so 0 is likely not a local minimizer";
    throw SeparationFailed(msg, x_witness, e.value());
  }
  cert.gamma = separation.gamma_star;
  cert.separation_lambda_min = separation.certificate_lambda_min;

  // Recover a full multiplier pair pinned to gamma by LP, minimizing the
  // total mu for a canonical representative.
  {
    const PolytopeLP lp = polytope_lp(p, 1e6);
    const int vars = lp.m + lp.ng;
    Mat a_eq(lp.a_eq.rows() + 1, vars);
    for (int i = 0; i < lp.a_eq.rows(); ++i)
      for (int j = 0; j < vars; ++j) a_eq(i, j) = lp.a_eq(i, j);
    for (int l = 0; l < lp.ng; ++l)
      a_eq(lp.a_eq.rows(), lp.m + l) = gamma_coeffs[static_cast<std::size_t>(l)];
    Vec b_eq = lp.b_eq;
    b_eq.push_back(cert.gamma);
    Vec c(static_cast<std::size_t>(vars), 0.0);
    for (int l = 0; l < lp.ng; ++l) c[lp.m + l] = 1.0;
    const LPResult res =
        simplex_solve_small(c, a_eq, b_eq, lp.a_le, lp.b_le, lp.bounds);
    if (res.status != LPStatus::Optimal)
      throw MultiplierRecoveryFailed(
          "no multiplier pair attains the separating gamma at tolerance");
    cert.lambda.assign(res.point.begin(), res.point.begin() + lp.m);
    cert.mu.assign(res.point.begin() + lp.m, res.point.end());
    for (auto& m : cert.mu) {
      if (m < 0.0 && m > -1e-12) m = 0.0;
    }
  }

  cert.kkt = kkt_residual(p, Vec(static_cast<std::size_t>(p.n()), 0.0),
                          cert.lambda, cert.mu);
  if (cert.kkt > 1e-8)
    throw MultiplierRecoveryFailed(
        "recovered multipliers leave a first-order residual of " +
        std::to_string(cert.kkt));
  if (cert.gamma_consistency() > 1e-8)
    throw MultiplierRecoveryFailed(
        "recovered multipliers are inconsistent with the separating gamma");
  return cert;
}

WeakSecondOrderReport verify_weak_second_order(const NLPInstance& p,
                                               const AndreaniCertificate& cert,
                                               int samples, double tol,
                                               std::uint64_t seed) {
  WeakSecondOrderReport report;
  report.tolerance = tol;
  const Vec origin(static_cast<std::size_t>(p.n()), 0.0);
  Mat lagrangian = hessian(p.objective(), origin);
  for (int j = 0; j < p.num_equalities(); ++j)
    lagrangian = lagrangian +
                 cert.lambda[static_cast<std::size_t>(j)] *
                     hessian(p.equalities()[static_cast<std::size_t>(j)], origin);
  for (int l = 0; l < p.num_inequalities(); ++l)
    lagrangian = lagrangian +
                 cert.mu[static_cast<std::size_t>(l)] *
                     hessian(p.inequalities()[static_cast<std::size_t>(l)], origin);

  const Mat kernel = tangent_kernel_basis(p, 1e-8);
  report.kernel_dim = kernel.cols();
  if (kernel.cols() == 0) {
    report.min_s = 0.0;
    report.passed = true;
    return report;
  }
  const Mat restricted =
      kernel.transpose() * (lagrangian * kernel);
  report.kernel_lambda_min = lambda_min(restricted);

  Rng rng(seed);
  report.samples = samples;
  for (int s = 0; s < samples; ++s) {
    Vec coef(static_cast<std::size_t>(kernel.cols()));
    for (auto& c : coef) c = rng.gaussian();
    Vec d = kernel * coef;
    const double norm = two_norm(d);
    if (norm < 1e-12) continue;
    d = (1.0 / norm) * d;
    const double s_val = dot(d, lagrangian * d);
    if (s_val < report.min_s) {
      report.min_s = s_val;
      report.argmin = d;
    }
  }
  report.passed = report.min_s >= -tol * 2.0;  // unit samples: 1 + ||d||^2 = 2
  return report;
}

}  // namespace nlpcanon
