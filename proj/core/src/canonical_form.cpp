// SPDX-License-Identifier: Apache-2.0
#include "nlpcanon/canonical_form.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "nlpcanon/autodiff.hpp"
#include "nlpcanon/errors.hpp"
#include "nlpcanon/rng.hpp"

namespace nlpcanon {

InequalitySelection select_rank_completing_inequalities(const NLPInstance& p,
                                                        double tol) {
  const Vec origin(static_cast<std::size_t>(p.n()), 0.0);
  const Mat dh = jacobian(p.equalities(), origin);
  const int m = p.num_equalities();
  if (numeric_rank(dh, tol) < m)
    throw RankDeficientEqualities(
        "equality Jacobian has rank below m at the origin");

  const Mat dg = jacobian(p.inequalities(), origin);
  const int total = numeric_rank(vstack({dh, dg}), tol);
  const int r = total - m;

  InequalitySelection sel;
  sel.completing = r;
  std::vector<char> picked(static_cast<std::size_t>(dg.rows()), 0);
  Mat stack = dh;
  int stack_rank = m;
  for (int l = 0; l < dg.rows() && static_cast<int>(sel.permutation.size()) < r;
       ++l) {
    Mat grown(stack.rows() + 1, p.n());
    for (int i = 0; i < stack.rows(); ++i)
      for (int j = 0; j < p.n(); ++j) grown(i, j) = stack(i, j);
    for (int j = 0; j < p.n(); ++j) grown(stack.rows(), j) = dg(l, j);
    if (numeric_rank(grown, tol) > stack_rank) {
      sel.permutation.push_back(l);
      picked[static_cast<std::size_t>(l)] = 1;
      stack = grown;
      ++stack_rank;
    }
  }
  for (int l = 0; l < dg.rows(); ++l)
    if (!picked[static_cast<std::size_t>(l)]) sel.permutation.push_back(l);
  return sel;
}

Vec CanonicalChart::to_chart(const Vec& x) const {
  Vec t(static_cast<std::size_t>(n()));
  int at = 0;
  for (const Expr& h : source_.equalities()) t[at++] = eval(h, x);
  for (const Expr& g : selected_) t[at++] = eval(g, x);
  for (int k = 0; k < wdim(); ++k) {
    double acc = 0.0;
    for (int i = 0; i < n(); ++i) acc += w_basis_(i, k) * x[i];
    t[at++] = acc;
  }
  return t;
}

Mat CanonicalChart::phi_jacobian(const Vec& x) const {
  Mat j(n(), n());
  int at = 0;
  for (const Expr& h : source_.equalities()) j.set_row(at++, gradient(h, x));
  for (const Expr& g : selected_) j.set_row(at++, gradient(g, x));
  for (int k = 0; k < wdim(); ++k) j.set_row(at++, w_basis_.col(k));
  return j;
}

Vec CanonicalChart::from_chart(const Vec& t) const {
  Vec x = dphi0_inv_ * t;
  const double target = 1e-12 * (1.0 + inf_norm(t));
  double res = inf_norm(to_chart(x) - t);
  for (int it = 0; it < 50; ++it) {
    if (res <= target) return x;
    Vec step;
    try {
      step = lu_solve(phi_jacobian(x), to_chart(x) - t);
    } catch (const Error&) {
      throw NewtonDivergence("chart inverse: singular Jacobian encountered");
    }
    double damping = 1.0;
    bool improved = false;
    for (int half = 0; half < 12; ++half) {
      const Vec trial = x - damping * step;
      const double trial_res = inf_norm(to_chart(trial) - t);
      if (trial_res < res) {
        x = trial;
        res = trial_res;
        improved = true;
        break;
      }
      damping *= 0.5;
    }
    if (!improved)
      throw NewtonDivergence("chart inverse: damping stalled at residual " +
                             std::to_string(res));
  }
  if (res <= target) return x;
  throw NewtonDivergence("chart inverse: Newton cap exceeded");
}

Mat CanonicalChart::q_jacobian(const Vec& t) const {
  return inverse(phi_jacobian(from_chart(t)));
}

Vec CanonicalChart::h_hat(const Vec& t) const {
  return source_.equality_values(from_chart(t));
}

Vec CanonicalChart::g_hat_selected(const Vec& t) const {
  const Vec x = from_chart(t);
  Vec v(selected_.size());
  for (std::size_t i = 0; i < selected_.size(); ++i) v[i] = eval(selected_[i], x);
  return v;
}

Vec CanonicalChart::c_values(const Vec& t) const {
  const Vec x = from_chart(t);
  Vec v(residual_.size());
  for (std::size_t i = 0; i < residual_.size(); ++i) v[i] = eval(residual_[i], x);
  return v;
}

Vec CanonicalChart::lift_w(const Vec& w) const {
  Vec t(static_cast<std::size_t>(n()), 0.0);
  for (int k = 0; k < wdim(); ++k) t[static_cast<std::size_t>(m() + r() + k)] = w[k];
  return t;
}

Mat CanonicalChart::dwc_at_origin() const {
  const Vec origin(static_cast<std::size_t>(n()), 0.0);
  // Dc(t)|_0 = Dg_rest(0) DPhi(0)^{-1}; keep only the w columns.
  Mat dc(p(), n());
  for (int l = 0; l < p(); ++l)
    dc.set_row(l, gradient(residual_[static_cast<std::size_t>(l)], origin));
  const Mat full = dc * dphi0_inv_;
  Mat dwc(p(), wdim());
  for (int l = 0; l < p(); ++l)
    for (int k = 0; k < wdim(); ++k) dwc(l, k) = full(l, m() + r() + k);
  return dwc;
}

CanonicalChart build_canonical_chart(const NLPInstance& p, double tol) {
  InequalitySelection sel = select_rank_completing_inequalities(p, tol);
  const int r = sel.completing;
  CanonicalChart chart(p, std::move(sel));
  chart.tol_ = tol;

  for (int k = 0; k < static_cast<int>(chart.selection_.permutation.size());
       ++k) {
    const Expr& g = p.inequalities()[static_cast<std::size_t>(
        chart.selection_.permutation[static_cast<std::size_t>(k)])];
    if (k < r) {
      chart.selected_.push_back(g);
    } else {
      chart.residual_.push_back(g);
    }
  }

  const Vec origin(static_cast<std::size_t>(p.n()), 0.0);
  const Mat dh = jacobian(p.equalities(), origin);
  Mat dgsel(r, p.n());
  for (int k = 0; k < r; ++k)
    dgsel.set_row(k, gradient(chart.selected_[static_cast<std::size_t>(k)],
                              origin));
  const Mat stack = vstack({dh, dgsel});
  if (numeric_rank(stack, tol) < p.num_equalities() + r)
    throw RankError("selected gradient stack lost rank");
  chart.w_basis_ = nullspace_basis(stack, tol);

  try {
    chart.dphi0_inv_ = inverse(chart.phi_jacobian(origin));
  } catch (const Error&) {
    throw RankError("DPhi(0) is singular");
  }

  // Validity radius: halve until Newton converges on sampled boundary points
  // and the preimages stay inside the analysis ball. Heuristic, reported.
  double radius = p.radius();
  Rng rng(0xc4a87u);
  std::vector<Vec> dirs;
  for (int s = 0; s < 50; ++s) dirs.push_back(rng.unit_vector(p.n()));
  for (;;) {
    bool ok = true;
    for (const Vec& u : dirs) {
      const Vec t = radius * u;
      try {
        const Vec x = chart.from_chart(t);
        if (two_norm(x) > p.radius()) {
          ok = false;
          break;
        }
      } catch (const NewtonDivergence&) {
        ok = false;
        break;
      }
    }
    if (ok) break;
    radius *= 0.5;
    if (radius < 1e-6 * p.radius()) break;
  }
  chart.radius_ = radius;
  return chart;
}

ChartResidualReport canonical_residuals(const CanonicalChart& chart,
                                        int samples, std::uint64_t seed) {
  ChartResidualReport report;
  Rng rng(seed);
  const int m = chart.m();
  const int r = chart.r();
  const double tol = 1e-8;
  for (int s = 0; s < samples; ++s) {
    const Vec t = rng.ball_point(chart.n(), chart.radius());
    Vec x;
    try {
      x = chart.from_chart(t);
    } catch (const NewtonDivergence&) {
      ++report.samples_excluded;
      continue;
    }
    ++report.samples_used;
    const Vec h = chart.source().equality_values(x);
    for (int j = 0; j < m; ++j)
      report.max_h_residual =
          std::max(report.max_h_residual, std::fabs(h[j] - t[j]));
    const Vec g = chart.g_hat_selected(t);
    for (int k = 0; k < r; ++k)
      report.max_g_residual =
          std::max(report.max_g_residual, std::fabs(g[k] - t[m + k]));

    // Block-structure identity: the combined chart Jacobian exceeds m + r
    // exactly by the rank of D_w c.
    const Mat dq = inverse(chart.phi_jacobian(x));
    Mat dall(m + chart.r() + chart.p(), chart.n());
    int at = 0;
    for (const Expr& he : chart.source().equalities())
      dall.set_row(at++, gradient(he, x));
    {
      // selected then residual inequalities, chart order
      const auto& perm = chart.permutation();
      for (int k = 0; k < static_cast<int>(perm.size()); ++k)
        dall.set_row(at++,
                     gradient(chart.source().inequalities()[static_cast<std::size_t>(
                                  perm[static_cast<std::size_t>(k)])],
                              x));
    }
    const Mat chart_jac = dall * dq;
    Mat dwc(chart.p(), chart.wdim());
    for (int l = 0; l < chart.p(); ++l)
      for (int k = 0; k < chart.wdim(); ++k)
        dwc(l, k) = chart_jac(m + r + l, m + r + k);
    const int excess = numeric_rank(chart_jac, tol) - (m + r);
    if (excess != numeric_rank(dwc, tol)) report.rank_identity = false;
  }

  // Finite-difference D_w c(0), the independent route for the invariant.
  const double step = 1e-4;
  for (int l = 0; l < chart.p(); ++l)
    for (int k = 0; k < chart.wdim(); ++k) {
      Vec wp(static_cast<std::size_t>(chart.wdim()), 0.0);
      wp[static_cast<std::size_t>(k)] = step;
      const double fwd = chart.c_values(chart.lift_w(wp))[l];
      wp[static_cast<std::size_t>(k)] = -step;
      const double bwd = chart.c_values(chart.lift_w(wp))[l];
      report.dwc_inf_norm =
          std::max(report.dwc_inf_norm, std::fabs((fwd - bwd) / (2.0 * step)));
    }
  return report;
}

namespace {

Mat fd_hessian_of(const std::function<double(const Vec&)>& f, int dim,
                  double step) {
  auto stencil = [&](double s) {
    Mat h(dim, dim);
    Vec w(static_cast<std::size_t>(dim), 0.0);
    const double f0 = f(w);
    for (int i = 0; i < dim; ++i) {
      w[i] = s;
      const double fp = f(w);
      w[i] = -s;
      const double fm = f(w);
      w[i] = 0.0;
      h(i, i) = (fp - 2.0 * f0 + fm) / (s * s);
    }
    for (int i = 0; i < dim; ++i)
      for (int j = i + 1; j < dim; ++j) {
        w[i] = s; w[j] = s;
        const double fpp = f(w);
        w[j] = -s;
        const double fpm = f(w);
        w[i] = -s; w[j] = s;
        const double fmp = f(w);
        w[j] = -s;
        const double fmm = f(w);
        w[i] = 0.0; w[j] = 0.0;
        h(i, j) = h(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * s * s);
      }
    return h;
  };
  const Mat h1 = stencil(step);
  const Mat h2 = stencil(step / 2.0);
  Mat out(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) out(i, j) = (4.0 * h2(i, j) - h1(i, j)) / 3.0;
  return out;
}

}  // namespace

WRestriction restrict_to_w(const CanonicalChart& chart, const Expr& objective) {
  auto shared = std::make_shared<const CanonicalChart>(chart);
  WRestriction out;
  out.wdim = chart.wdim();

  const Expr f = objective;
  out.objective = [shared, f](const Vec& w) {
    return eval(f, shared->from_chart(shared->lift_w(w)));
  };
  for (int l = 0; l < chart.p(); ++l) {
    out.constraints.push_back([shared, l](const Vec& w) {
      return shared->c_values(shared->lift_w(w))[l];
    });
  }

  // First derivatives through the implicit inverse Jacobian.
  const Vec origin(static_cast<std::size_t>(chart.n()), 0.0);
  const Mat dq0 = inverse(chart.phi_jacobian(origin));
  const Vec grad_f = gradient(objective, origin);
  const Vec full = dq0.transpose() * grad_f;
  out.objective_gradient0.resize(static_cast<std::size_t>(out.wdim));
  for (int k = 0; k < out.wdim; ++k)
    out.objective_gradient0[k] = full[chart.m() + chart.r() + k];
  out.constraints_jacobian0 = chart.dwc_at_origin();

  const double step = 1e-4;
  out.objective_hessian0 = fd_hessian_of(out.objective, out.wdim, step);
  for (const auto& c : out.constraints)
    out.constraint_hessians0.push_back(fd_hessian_of(c, out.wdim, step));
  return out;
}

}  // namespace nlpcanon
