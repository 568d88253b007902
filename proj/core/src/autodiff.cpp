// SPDX-License-Identifier: Apache-2.0
#include "nlpcanon/autodiff.hpp"

#include <cmath>

#include "nlpcanon/errors.hpp"

namespace nlpcanon {

namespace {

// Second-order forward carrier.
struct D2 {
  double v = 0.0;
  Vec g;
  Mat h;

  explicit D2(int n) : g(n, 0.0), h(n, n) {}
};

void add_outer(Mat& h, double scale, const Vec& a, const Vec& b) {
  const int n = static_cast<int>(a.size());
  for (int i = 0; i < n; ++i) {
    const double sa = scale * a[i];
    if (sa == 0.0 && scale * b[i] == 0.0) continue;
    for (int j = 0; j < n; ++j) h(i, j) += sa * b[j] + scale * b[i] * a[j];
  }
}

// y = phi(u): y' = phi1 u', y'' = phi1 u'' + phi2 u' u'^T.
D2 scalar_chain(const D2& u, double value, double phi1, double phi2) {
  const int n = static_cast<int>(u.g.size());
  D2 out(n);
  out.v = value;
  for (int i = 0; i < n; ++i) out.g[i] = phi1 * u.g[i];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out.h(i, j) = phi1 * u.h(i, j) + phi2 * u.g[i] * u.g[j];
  return out;
}

double int_pow(double base, int k) {
  double out = 1.0;
  for (int i = 0; i < k; ++i) out *= base;
  return out;
}

D2 eval_d2(const Expr& e, const Vec& x) {
  const int n = static_cast<int>(x.size());
  switch (e.kind()) {
    case Expr::Kind::Constant: {
      D2 out(n);
      out.v = e.constant_value();
      return out;
    }
    case Expr::Kind::Variable: {
      const int i = e.variable_index();
      if (i >= n) throw Error("derivatives: variable beyond point dimension");
      D2 out(n);
      out.v = x[i];
      out.g[i] = 1.0;
      return out;
    }
    case Expr::Kind::Unary: {
      const D2 u = eval_d2(e.lhs(), x);
      switch (e.unary_op()) {
        case UnaryOp::Neg:
          return scalar_chain(u, -u.v, -1.0, 0.0);
        case UnaryOp::Sin:
          return scalar_chain(u, std::sin(u.v), std::cos(u.v), -std::sin(u.v));
        case UnaryOp::Cos:
          return scalar_chain(u, std::cos(u.v), -std::sin(u.v), -std::cos(u.v));
        case UnaryOp::Exp: {
          const double ev = std::exp(u.v);
          return scalar_chain(u, ev, ev, ev);
        }
        case UnaryOp::Log:
          if (u.v <= 0.0) throw DomainError("log of non-positive value");
          return scalar_chain(u, std::log(u.v), 1.0 / u.v,
                              -1.0 / (u.v * u.v));
        case UnaryOp::Sqrt: {
          if (u.v <= 0.0)
            throw DomainError("sqrt undefined or non-differentiable here");
          const double r = std::sqrt(u.v);
          return scalar_chain(u, r, 0.5 / r, -0.25 / (r * u.v));
        }
      }
      break;
    }
    case Expr::Kind::Power: {
      const D2 u = eval_d2(e.lhs(), x);
      const int k = e.exponent();
      const double phi1 = k == 0 ? 0.0 : k * int_pow(u.v, k - 1);
      const double phi2 =
          k <= 1 ? 0.0 : static_cast<double>(k) * (k - 1) * int_pow(u.v, k - 2);
      return scalar_chain(u, int_pow(u.v, k), phi1, phi2);
    }
    case Expr::Kind::Binary: {
      const D2 a = eval_d2(e.lhs(), x);
      const D2 b = eval_d2(e.rhs(), x);
      D2 out(n);
      switch (e.binary_op()) {
        case BinaryOp::Add:
          out.v = a.v + b.v;
          for (int i = 0; i < n; ++i) out.g[i] = a.g[i] + b.g[i];
          out.h = a.h + b.h;
          return out;
        case BinaryOp::Sub:
          out.v = a.v - b.v;
          for (int i = 0; i < n; ++i) out.g[i] = a.g[i] - b.g[i];
          out.h = a.h - b.h;
          return out;
        case BinaryOp::Mul:
          out.v = a.v * b.v;
          for (int i = 0; i < n; ++i) out.g[i] = a.g[i] * b.v + b.g[i] * a.v;
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
              out.h(i, j) = a.h(i, j) * b.v + b.h(i, j) * a.v;
          add_outer(out.h, 1.0, a.g, b.g);
          return out;
        case BinaryOp::Div: {
          if (b.v == 0.0) throw DomainError("division by zero");
          out.v = a.v / b.v;
          for (int i = 0; i < n; ++i)
            out.g[i] = (a.g[i] - out.v * b.g[i]) / b.v;
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
              out.h(i, j) = (a.h(i, j) - out.v * b.h(i, j)) / b.v;
          add_outer(out.h, -1.0 / b.v, out.g, b.g);
          return out;
        }
      }
      break;
    }
  }
  throw Error("derivatives: unreachable node kind");
}

struct D1 {
  double v = 0.0;
  Vec g;
  explicit D1(int n) : g(n, 0.0) {}
};

D1 eval_d1(const Expr& e, const Vec& x) {
  const int n = static_cast<int>(x.size());
  switch (e.kind()) {
    case Expr::Kind::Constant: {
      D1 out(n);
      out.v = e.constant_value();
      return out;
    }
    case Expr::Kind::Variable: {
      const int i = e.variable_index();
      if (i >= n) throw Error("derivatives: variable beyond point dimension");
      D1 out(n);
      out.v = x[i];
      out.g[i] = 1.0;
      return out;
    }
    case Expr::Kind::Unary: {
      D1 u = eval_d1(e.lhs(), x);
      double v = 0.0, phi1 = 0.0;
      switch (e.unary_op()) {
        case UnaryOp::Neg: v = -u.v; phi1 = -1.0; break;
        case UnaryOp::Sin: v = std::sin(u.v); phi1 = std::cos(u.v); break;
        case UnaryOp::Cos: v = std::cos(u.v); phi1 = -std::sin(u.v); break;
        case UnaryOp::Exp: v = std::exp(u.v); phi1 = v; break;
        case UnaryOp::Log:
          if (u.v <= 0.0) throw DomainError("log of non-positive value");
          v = std::log(u.v);
          phi1 = 1.0 / u.v;
          break;
        case UnaryOp::Sqrt:
          if (u.v <= 0.0)
            throw DomainError("sqrt undefined or non-differentiable here");
          v = std::sqrt(u.v);
          phi1 = 0.5 / v;
          break;
      }
      u.v = v;
      for (auto& gi : u.g) gi *= phi1;
      return u;
    }
    case Expr::Kind::Power: {
      D1 u = eval_d1(e.lhs(), x);
      const int k = e.exponent();
      const double phi1 = k == 0 ? 0.0 : k * int_pow(u.v, k - 1);
      u.v = int_pow(u.v, k);
      for (auto& gi : u.g) gi *= phi1;
      return u;
    }
    case Expr::Kind::Binary: {
      const D1 a = eval_d1(e.lhs(), x);
      const D1 b = eval_d1(e.rhs(), x);
      D1 out(n);
      switch (e.binary_op()) {
        case BinaryOp::Add:
          out.v = a.v + b.v;
          for (int i = 0; i < n; ++i) out.g[i] = a.g[i] + b.g[i];
          return out;
        case BinaryOp::Sub:
          out.v = a.v - b.v;
          for (int i = 0; i < n; ++i) out.g[i] = a.g[i] - b.g[i];
          return out;
        case BinaryOp::Mul:
          out.v = a.v * b.v;
          for (int i = 0; i < n; ++i) out.g[i] = a.g[i] * b.v + b.g[i] * a.v;
          return out;
        case BinaryOp::Div:
          if (b.v == 0.0) throw DomainError("division by zero");
          out.v = a.v / b.v;
          for (int i = 0; i < n; ++i)
            out.g[i] = (a.g[i] - out.v * b.g[i]) / b.v;
          return out;
      }
      break;
    }
  }
  throw Error("derivatives: unreachable node kind");
}

void require_finite(const DerivativeBundle& b) {
  bool ok = std::isfinite(b.value);
  for (double g : b.gradient) ok = ok && std::isfinite(g);
  for (int i = 0; i < b.hessian.rows() && ok; ++i)
    for (int j = 0; j < b.hessian.cols(); ++j)
      ok = ok && std::isfinite(b.hessian(i, j));
  if (!ok) throw NonFiniteError("derivatives: non-finite result");
}

}  // namespace

DerivativeBundle derivatives(const Expr& e, const Vec& x) {
  D2 d = eval_d2(e, x);
  DerivativeBundle out;
  out.value = d.v;
  out.gradient = std::move(d.g);
  // The carrier formulas are symmetric term by term, so this is a no-op in
  // exact arithmetic; it pins the returned matrix to exact symmetry.
  const int n = d.h.rows();
  out.hessian = Mat(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out.hessian(i, j) = 0.5 * (d.h(i, j) + d.h(j, i));
  require_finite(out);
  return out;
}

ValueGradient value_gradient(const Expr& e, const Vec& x) {
  D1 d = eval_d1(e, x);
  if (!std::isfinite(d.v)) throw NonFiniteError("derivatives: non-finite value");
  for (double g : d.g)
    if (!std::isfinite(g))
      throw NonFiniteError("derivatives: non-finite gradient");
  return {d.v, std::move(d.g)};
}

Vec gradient(const Expr& e, const Vec& x) { return value_gradient(e, x).gradient; }

Mat hessian(const Expr& e, const Vec& x) { return derivatives(e, x).hessian; }

Mat jacobian(std::span<const Expr> es, const Vec& x) {
  Mat j(static_cast<int>(es.size()), static_cast<int>(x.size()));
  for (std::size_t r = 0; r < es.size(); ++r)
    j.set_row(static_cast<int>(r), gradient(es[r], x));
  return j;
}

namespace {

Vec fd_gradient_step(const Expr& e, const Vec& x, double s) {
  const int n = static_cast<int>(x.size());
  Vec g(n);
  Vec p = x;
  for (int i = 0; i < n; ++i) {
    p[i] = x[i] + s;
    const double fp = eval(e, p);
    p[i] = x[i] - s;
    const double fm = eval(e, p);
    p[i] = x[i];
    g[i] = (fp - fm) / (2.0 * s);
  }
  return g;
}

Mat fd_hessian_step(const Expr& e, const Vec& x, double s) {
  const int n = static_cast<int>(x.size());
  Mat h(n, n);
  const double f0 = eval(e, x);
  Vec p = x;
  for (int i = 0; i < n; ++i) {
    p[i] = x[i] + s;
    const double fp = eval(e, p);
    p[i] = x[i] - s;
    const double fm = eval(e, p);
    p[i] = x[i];
    h(i, i) = (fp - 2.0 * f0 + fm) / (s * s);
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      p[i] = x[i] + s; p[j] = x[j] + s;
      const double fpp = eval(e, p);
      p[j] = x[j] - s;
      const double fpm = eval(e, p);
      p[i] = x[i] - s; p[j] = x[j] + s;
      const double fmp = eval(e, p);
      p[j] = x[j] - s;
      const double fmm = eval(e, p);
      p[i] = x[i]; p[j] = x[j];
      h(i, j) = h(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * s * s);
    }
  return h;
}

}  // namespace

Vec fd_gradient(const Expr& e, const Vec& x, double step, bool richardson) {
  Vec g = fd_gradient_step(e, x, step);
  if (!richardson) return g;
  const Vec g2 = fd_gradient_step(e, x, step / 2.0);
  Vec out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    out[i] = (4.0 * g2[i] - g[i]) / 3.0;
  return out;
}

Mat fd_hessian(const Expr& e, const Vec& x, double step, bool richardson) {
  Mat h = fd_hessian_step(e, x, step);
  if (!richardson) return h;
  const Mat h2 = fd_hessian_step(e, x, step / 2.0);
  Mat out(h.rows(), h.cols());
  for (int i = 0; i < h.rows(); ++i)
    for (int j = 0; j < h.cols(); ++j)
      out(i, j) = (4.0 * h2(i, j) - h(i, j)) / 3.0;
  return out;
}

std::pair<double, double> fd_check(const Expr& e, const Vec& x, double step) {
  if (!(step >= 1e-7 && step <= 1e-2))
    throw PreconditionFailed("fd_check: step must lie in [1e-7, 1e-2]");
  const DerivativeBundle ad = derivatives(e, x);
  const Vec gfd = fd_gradient(e, x, step);
  const Mat hfd = fd_hessian(e, x, step);
  double gerr = 0.0;
  for (std::size_t i = 0; i < gfd.size(); ++i)
    gerr = std::max(gerr, std::fabs(gfd[i] - ad.gradient[i]));
  double herr = 0.0;
  for (int i = 0; i < hfd.rows(); ++i)
    for (int j = 0; j < hfd.cols(); ++j)
      herr = std::max(herr, std::fabs(hfd(i, j) - ad.hessian(i, j)));
  return {gerr, herr};
}

}  // namespace nlpcanon
