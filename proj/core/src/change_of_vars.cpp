// SPDX-License-Identifier: Apache-2.0
#include "nlpcanon/change_of_vars.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nlpcanon/autodiff.hpp"
#include "nlpcanon/errors.hpp"
#include "nlpcanon/rng.hpp"

namespace nlpcanon {

namespace {

Vec quad_apply(const Mat& l, const Vec& d) { return l * d; }

double quad_form_local(const Mat& l, const Vec& d) {
  return dot(d, quad_apply(l, d));
}

// Lagrangian-gradient residual without the mu >= 0 gate (callers that need
// the gate use kkt_residual from the analysis module).
double first_order_residual(const Expr& f, std::span<const Expr> hs,
                            std::span<const Expr> gs, const Vec& x,
                            const Vec& lambda, const Vec& mu) {
  Vec acc = gradient(f, x);
  for (std::size_t j = 0; j < hs.size(); ++j) {
    const Vec gh = gradient(hs[j], x);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += lambda[j] * gh[i];
  }
  for (std::size_t l = 0; l < gs.size(); ++l) {
    const Vec gg = gradient(gs[l], x);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += mu[l] * gg[i];
  }
  return inf_norm(acc);
}

Mat lagrangian_hessian(const Expr& f, std::span<const Expr> hs,
                       std::span<const Expr> gs, const Vec& x,
                       const Vec& lambda, const Vec& mu) {
  Mat l = hessian(f, x);
  for (std::size_t j = 0; j < hs.size(); ++j)
    l = l + lambda[j] * hessian(hs[j], x);
  for (std::size_t k = 0; k < gs.size(); ++k)
    l = l + mu[k] * hessian(gs[k], x);
  return l;
}

Mat combined_jacobian_of(std::span<const Expr> hs, std::span<const Expr> gs,
                         const Vec& x) {
  Mat j(static_cast<int>(hs.size() + gs.size()),
        static_cast<int>(x.size()));
  int r = 0;
  for (const Expr& h : hs) j.set_row(r++, gradient(h, x));
  for (const Expr& g : gs) j.set_row(r++, gradient(g, x));
  return j;
}

}  // namespace

Diffeomorphism Diffeomorphism::identity(int n, double radius) {
  std::vector<Expr> comps;
  comps.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) comps.push_back(Expr::variable(i));
  return from_components(std::move(comps), radius);
}

Diffeomorphism Diffeomorphism::from_components(std::vector<Expr> components,
                                               double radius) {
  if (components.empty())
    throw PreconditionFailed("Diffeomorphism: no components");
  if (!(radius > 0.0))
    throw PreconditionFailed("Diffeomorphism: radius must be positive");
  Diffeomorphism d;
  d.components_ = std::move(components);
  d.radius_ = radius;
  const int n = d.dim();
  for (const Expr& c : d.components_)
    if (c.min_dimension() > n)
      throw PreconditionFailed(
          "Diffeomorphism: component references variable beyond dimension");
  const Vec origin(static_cast<std::size_t>(n), 0.0);
  for (const Expr& c : d.components_)
    if (std::fabs(eval(c, origin)) > 1e-12)
      throw PreconditionFailed("Diffeomorphism: q(0) must be 0");
  d.a0_ = d.jacobian(origin);
  try {
    d.a0_inv_ = nlpcanon::inverse(d.a0_);
  } catch (const Error&) {
    throw PreconditionFailed("Diffeomorphism: Dq(0) is singular");
  }
  return d;
}

Vec Diffeomorphism::forward(const Vec& y) const {
  Vec x(components_.size());
  for (std::size_t k = 0; k < components_.size(); ++k)
    x[k] = eval(components_[k], y);
  return x;
}

Mat Diffeomorphism::jacobian(const Vec& y) const {
  return nlpcanon::jacobian(components_, y);
}

std::vector<Mat> Diffeomorphism::component_hessians(const Vec& y) const {
  std::vector<Mat> hs;
  hs.reserve(components_.size());
  for (const Expr& c : components_) hs.push_back(hessian(c, y));
  return hs;
}

Vec Diffeomorphism::inverse(const Vec& x) const {
  Vec y = a0_inv_ * x;
  const double target = 1e-12 * (1.0 + inf_norm(x));
  double res = inf_norm(forward(y) - x);
  for (int it = 0; it < 50; ++it) {
    if (res <= target) return y;
    const Vec step = lu_solve(jacobian(y), forward(y) - x);
    double damping = 1.0;
    bool improved = false;
    for (int half = 0; half < 12; ++half) {
      const Vec trial = y - damping * step;
      const double trial_res = inf_norm(forward(trial) - x);
      if (trial_res < res) {
        y = trial;
        res = trial_res;
        improved = true;
        break;
      }
      damping *= 0.5;
    }
    if (!improved)
      throw NoConvergence("Diffeomorphism::inverse: damping stalled");
  }
  if (res <= target) return y;
  throw NoConvergence("Diffeomorphism::inverse: Newton cap exceeded");
}

namespace {

// Orthonormalize the columns of a Gaussian matrix (modified Gram-Schmidt).
Mat random_orthogonal(int n, Rng& rng) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    Mat q(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) q(i, j) = rng.gaussian();
    bool ok = true;
    for (int j = 0; j < n && ok; ++j) {
      Vec col = q.col(j);
      for (int k = 0; k < j; ++k) {
        const Vec prev = q.col(k);
        const double proj = dot(col, prev);
        for (int i = 0; i < n; ++i) col[i] -= proj * prev[i];
      }
      const double norm = two_norm(col);
      if (norm < 1e-8) {
        ok = false;
        break;
      }
      for (int i = 0; i < n; ++i) q(i, j) = col[i] / norm;
    }
    if (ok) return q;
  }
  throw GenerationFailed("random_orthogonal: degenerate draw");
}

}  // namespace

Diffeomorphism random_diffeomorphism(int n, std::uint64_t seed,
                                     double magnitude, double radius) {
  if (n <= 0) throw PreconditionFailed("random_diffeomorphism: n must be > 0");
  if (magnitude < 0.0)
    throw PreconditionFailed("random_diffeomorphism: magnitude must be >= 0");
  Rng rng(seed);
  const Mat u = random_orthogonal(n, rng);
  const Mat v = random_orthogonal(n, rng);
  Vec sing(static_cast<std::size_t>(n));
  for (auto& s : sing) s = std::exp(rng.uniform(std::log(0.6), std::log(1.8)));
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += u(i, k) * sing[k] * v(j, k);
      a(i, j) = acc;
    }

  std::vector<Expr> comps;
  comps.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    Expr qk = Expr::constant(a(k, 0)) * Expr::variable(0);
    for (int j = 1; j < n; ++j)
      qk = qk + Expr::constant(a(k, j)) * Expr::variable(j);
    if (magnitude > 0.0) {
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          const double c = magnitude * rng.uniform(-0.5, 0.5);
          qk = qk + Expr::constant(c) * Expr::variable(i) * Expr::variable(j);
        }
    }
    comps.push_back(qk);
  }

  Diffeomorphism diff = Diffeomorphism::from_components(std::move(comps), radius);

  // Invertibility and round-trip checks on the ball.
  Rng check(seed ^ 0xabcdef1234567890ull);
  for (int s = 0; s < 50; ++s) {
    const Vec y = check.ball_point(n, radius);
    if (std::fabs(determinant(diff.jacobian(y))) < 1e-6)
      throw GenerationFailed(
          "random_diffeomorphism: |det Dq| too small on the ball; retry with "
          "a smaller magnitude");
  }
  for (int s = 0; s < 10; ++s) {
    const Vec y = check.ball_point(n, 0.9 * radius);
    const Vec x = diff.forward(y);
    try {
      const Vec back = diff.inverse(x);
      if (inf_norm(diff.forward(back) - x) > 1e-10)
        throw GenerationFailed("random_diffeomorphism: round trip too loose");
    } catch (const NoConvergence&) {
      throw GenerationFailed(
          "random_diffeomorphism: Newton inverse failed on the ball; retry "
          "with a smaller magnitude");
    }
  }
  return diff;
}

TransformedProblem::TransformedProblem(const NLPInstance& source,
                                       const Diffeomorphism& q)
    : source_(source), q_(q) {
  if (q.dim() != source.n())
    throw PreconditionFailed("transform_problem: dimension mismatch");
  const std::span<const Expr> comps = q.components();
  objective_ = source.objective().substitute(comps);
  for (const Expr& h : source.equalities())
    equalities_.push_back(h.substitute(comps));
  for (const Expr& g : source.inequalities())
    inequalities_.push_back(g.substitute(comps));

  // Substitution is exact composition; a sampled identity check guards the
  // plumbing.
  Rng rng(0x5eed);
  for (int s = 0; s < 10; ++s) {
    const Vec y = rng.ball_point(source.n(), 0.1 * q.radius());
    const double direct = eval(source.objective(), q.forward(y));
    const double composed = eval(objective_, y);
    if (std::fabs(direct - composed) > 1e-12 * (1.0 + std::fabs(direct)))
      throw Error("transform_problem: composition mismatch");
  }

  // Shrink the transformed ball until its image stays inside the source ball.
  radius_ = std::min(q.radius(), source.radius());
  Rng dir(0x7ad105u);
  std::vector<Vec> dirs;
  for (int s = 0; s < 24; ++s) dirs.push_back(dir.unit_vector(source.n()));
  for (;;) {
    bool ok = true;
    for (const Vec& u : dirs) {
      Vec y = radius_ * u;
      if (two_norm(q_.forward(y)) > source.radius()) {
        ok = false;
        break;
      }
    }
    if (ok) break;
    radius_ *= 0.5;
    if (radius_ < 1e-8)
      throw RadiusError("transform_problem: image cannot be kept inside the "
                        "source ball");
  }
}

NLPInstance TransformedProblem::instance() const {
  std::vector<std::string> names(static_cast<std::size_t>(source_.n()));
  for (int i = 0; i < source_.n(); ++i) names[i] = "y" + std::to_string(i + 1);
  return NLPInstance(source_.n(), objective_, equalities_, inequalities_,
                     radius_, std::move(names), source_.equality_names(),
                     source_.inequality_names());
}

TransformedProblem transform_problem(const NLPInstance& p,
                                     const Diffeomorphism& q) {
  return TransformedProblem(p, q);
}

ChainRuleReport verify_chain_rules(const NLPInstance& p,
                                   const Diffeomorphism& q,
                                   std::span<const Vec> points) {
  ChainRuleReport report;
  const int n = p.n();

  std::vector<Expr> functions;
  functions.push_back(p.objective());
  for (const Expr& h : p.equalities()) functions.push_back(h);
  for (const Expr& g : p.inequalities()) functions.push_back(g);

  // Pure linear map sharing Dq(0), for the linear-change identities.
  const Mat a0 = q.jacobian_at_origin();
  std::vector<Expr> linear_comps;
  for (int k = 0; k < n; ++k) {
    Expr c = Expr::constant(a0(k, 0)) * Expr::variable(0);
    for (int j = 1; j < n; ++j)
      c = c + Expr::constant(a0(k, j)) * Expr::variable(j);
    linear_comps.push_back(c);
  }

  auto rel = [](const Vec& lhs, const Vec& rhs) {
    return inf_norm(lhs - rhs) / (1.0 + inf_norm(rhs));
  };
  auto rel_mat = [](const Mat& lhs, const Mat& rhs) {
    return inf_norm(lhs - rhs) / (1.0 + inf_norm(rhs));
  };

  for (const Expr& f : functions) {
    const Expr lin_composed = f.substitute(linear_comps);
    const Expr composed = f.substitute(q.components());
    for (const Vec& y : points) {
      // Linear identities at A y.
      const Vec ay = a0 * y;
      const Vec grad_at = gradient(f, ay);
      Vec rhs_lin = a0.transpose() * grad_at;
      report.lin_grad =
          std::max(report.lin_grad, rel(gradient(lin_composed, y), rhs_lin));
      const Mat rhs_lin_h = a0.transpose() * hessian(f, ay) * a0;
      report.lin_hess = std::max(report.lin_hess,
                                 rel_mat(hessian(lin_composed, y), rhs_lin_h));

      // Nonlinear identities at q(y).
      const Vec x = q.forward(y);
      const Mat dq = q.jacobian(y);
      const DerivativeBundle fb = derivatives(f, x);
      const Vec rhs_non = dq.transpose() * fb.gradient;
      const Vec lhs_non = gradient(composed, y);
      report.non_grad = std::max(report.non_grad, rel(lhs_non, rhs_non));

      Mat rhs_non_h = dq.transpose() * fb.hessian * dq;
      const std::vector<Mat> qh = q.component_hessians(y);
      for (int k = 0; k < n; ++k)
        rhs_non_h = rhs_non_h + fb.gradient[k] * qh[static_cast<std::size_t>(k)];
      const Mat lhs_non_h = hessian(composed, y);
      report.non_hess = std::max(report.non_hess, rel_mat(lhs_non_h, rhs_non_h));

      // Finite-difference route on the composed map.
      report.fd_grad = std::max(
          report.fd_grad, rel(fd_gradient(composed, y, 1e-5), rhs_non));
      report.fd_hess = std::max(
          report.fd_hess,
          rel_mat(fd_hessian(composed, y, 1e-3, /*richardson=*/true),
                  rhs_non_h));
    }
  }
  return report;
}

MultiplierInvarianceReport verify_multiplier_invariance(
    const NLPInstance& p, const Diffeomorphism& q, const Vec& lambda,
    const Vec& mu, double tol) {
  if (static_cast<int>(lambda.size()) != p.num_equalities() ||
      static_cast<int>(mu.size()) != p.num_inequalities())
    throw PreconditionFailed("verify_multiplier_invariance: size mismatch");

  const Vec origin(static_cast<std::size_t>(p.n()), 0.0);
  const TransformedProblem t(p, q);

  MultiplierInvarianceReport report;
  report.residual_source = first_order_residual(
      p.objective(), p.equalities(), p.inequalities(), origin, lambda, mu);
  report.residual_transformed =
      first_order_residual(t.objective(), t.equalities(), t.inequalities(),
                           origin, lambda, mu);
  const Vec sing = singular_values(q.jacobian_at_origin());
  report.condition = sing.front() / sing.back();
  report.tol_source = tol;
  report.tol_transformed = tol * report.condition;
  report.source_holds = report.residual_source <= report.tol_source;
  report.transformed_holds =
      report.residual_transformed <= report.tol_transformed;
  return report;
}

double second_order_term(const NLPInstance& p, const Vec& x, const Vec& lambda,
                         const Vec& mu, const Vec& d) {
  if (static_cast<int>(lambda.size()) != p.num_equalities() ||
      static_cast<int>(mu.size()) != p.num_inequalities() ||
      static_cast<int>(d.size()) != p.n() ||
      static_cast<int>(x.size()) != p.n())
    throw PreconditionFailed("second_order_term: size mismatch");
  const Mat l = lagrangian_hessian(p.objective(), p.equalities(),
                                   p.inequalities(), x, lambda, mu);
  return quad_form_local(l, d);
}

SecondOrderInvarianceReport verify_second_order_invariance(
    const NLPInstance& p, const Diffeomorphism& q, const Vec& lambda,
    const Vec& mu, int samples, double tol, std::uint64_t seed) {
  const Vec origin(static_cast<std::size_t>(p.n()), 0.0);
  const double first_order = first_order_residual(
      p.objective(), p.equalities(), p.inequalities(), origin, lambda, mu);
  if (first_order > 1e-8)
    throw PreconditionFailed(
        "verify_second_order_invariance: first-order residual " +
        std::to_string(first_order) +
        " too large; the curvature term would not cancel");

  const TransformedProblem t(p, q);
  const int n = p.n();
  const Mat a0_inv = inverse(q.jacobian_at_origin());

  const Mat l_src = lagrangian_hessian(p.objective(), p.equalities(),
                                       p.inequalities(), origin, lambda, mu);
  const Mat l_hat = lagrangian_hessian(t.objective(), t.equalities(),
                                       t.inequalities(), origin, lambda, mu);

  SecondOrderInvarianceReport report;
  const Mat j_src = combined_jacobian_of(p.equalities(), p.inequalities(), origin);
  const Mat j_hat = combined_jacobian_of(t.equalities(), t.inequalities(), origin);
  const Mat k_src = nullspace_basis(j_src, 1e-8);
  const Mat k_hat = nullspace_basis(j_hat, 1e-8);
  report.kernel_dim_source = k_src.cols();
  report.kernel_dim_transformed = k_hat.cols();

  // Kernel correspondence d <-> Dq(0)^{-1} d, both inclusions.
  bool correspond = k_src.cols() == k_hat.cols();
  const double scale_hat = 1.0 + inf_norm(j_hat);
  const double scale_src = 1.0 + inf_norm(j_src);
  for (int c = 0; c < k_src.cols() && correspond; ++c) {
    const Vec mapped = a0_inv * k_src.col(c);
    if (inf_norm(j_hat * mapped) > 1e-6 * scale_hat) correspond = false;
  }
  for (int c = 0; c < k_hat.cols() && correspond; ++c) {
    const Vec mapped = q.jacobian_at_origin() * k_hat.col(c);
    if (inf_norm(j_src * mapped) > 1e-6 * scale_src) correspond = false;
  }
  report.kernel_correspondence = correspond;

  Rng rng(seed);
  report.samples = samples;
  for (int s = 0; s < samples; ++s) {
    Vec d;
    if (k_src.cols() > 0) {
      Vec coef(static_cast<std::size_t>(k_src.cols()));
      for (auto& c : coef) c = rng.gaussian();
      d = k_src * coef;
      const double norm = two_norm(d);
      if (norm < 1e-12) continue;
      d = (1.0 / norm) * d;
    } else {
      d = rng.unit_vector(n);
    }
    const double s_src = quad_form_local(l_src, d);
    const Vec d_hat = a0_inv * d;
    const double s_hat = quad_form_local(l_hat, d_hat);
    report.max_deviation =
        std::max(report.max_deviation,
                 std::fabs(s_src - s_hat) / (1.0 + std::fabs(s_src)));
  }
  report.tolerance = tol;
  report.passed = report.max_deviation <= tol && report.kernel_correspondence;
  return report;
}

}  // namespace nlpcanon
