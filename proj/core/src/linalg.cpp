// SPDX-License-Identifier: Apache-2.0
#include "nlpcanon/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nlpcanon/errors.hpp"

namespace nlpcanon {

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = static_cast<int>(rows.size());
  cols_ = rows_ == 0 ? 0 : static_cast<int>(rows.begin()->size());
  a_.reserve(static_cast<std::size_t>(rows_) * cols_);
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != cols_)
      throw Error("ragged matrix initializer");
    a_.insert(a_.end(), r.begin(), r.end());
  }
}

Mat Mat::identity(int n) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::column(const Vec& v) {
  Mat m(static_cast<int>(v.size()), 1);
  for (int i = 0; i < m.rows(); ++i) m(i, 0) = v[i];
  return m;
}

Vec Mat::row(int i) const {
  Vec v(cols_);
  for (int j = 0; j < cols_; ++j) v[j] = (*this)(i, j);
  return v;
}

Vec Mat::col(int j) const {
  Vec v(rows_);
  for (int i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
  return v;
}

void Mat::set_row(int i, const Vec& v) {
  for (int j = 0; j < cols_; ++j) (*this)(i, j) = v[j];
}

Mat Mat::transpose() const {
  Mat t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Mat operator+(const Mat& a, const Mat& b) {
  Mat c(a.rows_, a.cols_);
  for (std::size_t k = 0; k < c.a_.size(); ++k) c.a_[k] = a.a_[k] + b.a_[k];
  return c;
}

Mat operator-(const Mat& a, const Mat& b) {
  Mat c(a.rows_, a.cols_);
  for (std::size_t k = 0; k < c.a_.size(); ++k) c.a_[k] = a.a_[k] - b.a_[k];
  return c;
}

Mat operator*(const Mat& a, const Mat& b) {
  Mat c(a.rows_, b.cols_);
  for (int i = 0; i < a.rows_; ++i)
    for (int k = 0; k < a.cols_; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Mat operator*(double s, const Mat& a) {
  Mat c = a;
  for (auto& x : c.a_) x *= s;
  return c;
}

Vec operator*(const Mat& a, const Vec& x) {
  Vec y(a.rows_, 0.0);
  for (int i = 0; i < a.rows_; ++i) {
    double acc = 0.0;
    for (int j = 0; j < a.cols_; ++j) acc += a(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

Vec operator+(const Vec& a, const Vec& b) {
  Vec c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
  return c;
}

Vec operator-(const Vec& a, const Vec& b) {
  Vec c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
  return c;
}

Vec operator*(double s, const Vec& a) {
  Vec c = a;
  for (auto& x : c) x *= s;
  return c;
}

double dot(const Vec& a, const Vec& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double inf_norm(const Vec& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

double inf_norm(const Mat& m) {
  double best = 0.0;
  for (int i = 0; i < m.rows(); ++i) {
    double row = 0.0;
    for (int j = 0; j < m.cols(); ++j) row += std::fabs(m(i, j));
    best = std::max(best, row);
  }
  return best;
}

double two_norm(const Vec& v) { return std::sqrt(dot(v, v)); }

double frobenius_norm(const Mat& m) {
  double acc = 0.0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) acc += m(i, j) * m(i, j);
  return std::sqrt(acc);
}

double frobenius_dot(const Mat& a, const Mat& b) {
  double acc = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) acc += a(i, j) * b(i, j);
  return acc;
}

double max_abs_asymmetry(const Mat& m) {
  double worst = 0.0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = i + 1; j < m.cols(); ++j)
      worst = std::max(worst, std::fabs(m(i, j) - m(j, i)));
  return worst;
}

Mat vstack(const std::vector<Mat>& blocks) {
  int cols = 0;
  int rows = 0;
  for (const auto& b : blocks) {
    if (b.rows() == 0) continue;
    if (cols == 0) cols = b.cols();
    if (b.cols() != cols) throw Error("vstack: column mismatch");
    rows += b.rows();
  }
  Mat out(rows, cols);
  int at = 0;
  for (const auto& b : blocks)
    for (int i = 0; i < b.rows(); ++i, ++at)
      for (int j = 0; j < cols; ++j) out(at, j) = b(i, j);
  return out;
}

namespace {

void check_finite(const Mat& m, const char* where) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (!std::isfinite(m(i, j)))
        throw NonFiniteError(std::string(where) + ": non-finite entry");
}

// In-place LU with partial pivoting; returns permutation sign, pivot rows
// recorded in perm. Throws on exact singularity.
double lu_factor(Mat& a, std::vector<int>& perm) {
  const int n = a.rows();
  perm.resize(n);
  std::iota(perm.begin(), perm.end(), 0);
  double sign = 1.0;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    double best = std::fabs(a(k, k));
    for (int i = k + 1; i < n; ++i) {
      const double v = std::fabs(a(i, k));
      if (v > best) {
        best = v;
        piv = i;
      }
    }
    if (best == 0.0) throw Error("lu_solve: singular matrix");
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(perm[k], perm[piv]);
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i) {
      a(i, k) /= a(k, k);
      const double lik = a(i, k);
      if (lik == 0.0) continue;
      for (int j = k + 1; j < n; ++j) a(i, j) -= lik * a(k, j);
    }
  }
  return sign;
}

}  // namespace

Vec lu_solve(Mat a, Vec b) {
  if (a.rows() != a.cols() || a.rows() != static_cast<int>(b.size()))
    throw Error("lu_solve: shape mismatch");
  check_finite(a, "lu_solve");
  const int n = a.rows();
  std::vector<int> perm;
  lu_factor(a, perm);
  Vec x(n);
  for (int i = 0; i < n; ++i) x[i] = b[perm[i]];
  for (int i = 1; i < n; ++i)
    for (int j = 0; j < i; ++j) x[i] -= a(i, j) * x[j];
  for (int i = n - 1; i >= 0; --i) {
    for (int j = i + 1; j < n; ++j) x[i] -= a(i, j) * x[j];
    x[i] /= a(i, i);
  }
  return x;
}

Mat inverse(const Mat& a) {
  const int n = a.rows();
  Mat inv(n, n);
  Mat lu = a;
  std::vector<int> perm;
  check_finite(a, "inverse");
  lu_factor(lu, perm);
  for (int c = 0; c < n; ++c) {
    Vec x(n, 0.0);
    for (int i = 0; i < n; ++i) x[i] = (perm[i] == c) ? 1.0 : 0.0;
    for (int i = 1; i < n; ++i)
      for (int j = 0; j < i; ++j) x[i] -= lu(i, j) * x[j];
    for (int i = n - 1; i >= 0; --i) {
      for (int j = i + 1; j < n; ++j) x[i] -= lu(i, j) * x[j];
      x[i] /= lu(i, i);
    }
    for (int i = 0; i < n; ++i) inv(i, c) = x[i];
  }
  return inv;
}

double determinant(Mat a) {
  const int n = a.rows();
  std::vector<int> perm;
  double sign;
  try {
    sign = lu_factor(a, perm);
  } catch (const Error&) {
    return 0.0;
  }
  double det = sign;
  for (int i = 0; i < n; ++i) det *= a(i, i);
  return det;
}

namespace {

// One Jacobi rotation annihilating s(p, q); accumulates into v.
void jacobi_rotate(Mat& s, Mat& v, int p, int q) {
  const double apq = s(p, q);
  if (apq == 0.0) return;
  const double tau = (s(q, q) - s(p, p)) / (2.0 * apq);
  const double t =
      (tau >= 0.0 ? 1.0 : -1.0) / (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
  const double c = 1.0 / std::sqrt(1.0 + t * t);
  const double sn = t * c;
  const int n = s.rows();
  for (int k = 0; k < n; ++k) {
    const double skp = s(k, p);
    const double skq = s(k, q);
    s(k, p) = c * skp - sn * skq;
    s(k, q) = sn * skp + c * skq;
  }
  for (int k = 0; k < n; ++k) {
    const double spk = s(p, k);
    const double sqk = s(q, k);
    s(p, k) = c * spk - sn * sqk;
    s(q, k) = sn * spk + c * sqk;
  }
  for (int k = 0; k < n; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - sn * vkq;
    v(k, q) = sn * vkp + c * vkq;
  }
}

double off_diagonal_norm(const Mat& s) {
  double acc = 0.0;
  for (int i = 0; i < s.rows(); ++i)
    for (int j = i + 1; j < s.cols(); ++j) acc += 2.0 * s(i, j) * s(i, j);
  return std::sqrt(acc);
}

// Point each column's largest-magnitude entry in the positive direction so
// eigen/singular bases are reproducible across runs.
void normalize_column_signs(Mat& v) {
  for (int j = 0; j < v.cols(); ++j) {
    int arg = 0;
    double best = 0.0;
    for (int i = 0; i < v.rows(); ++i)
      if (std::fabs(v(i, j)) > best) {
        best = std::fabs(v(i, j));
        arg = i;
      }
    if (best > 0.0 && v(arg, j) < 0.0)
      for (int i = 0; i < v.rows(); ++i) v(i, j) = -v(i, j);
  }
}

}  // namespace

EigDecomp sym_eig(const Mat& s0) {
  if (s0.rows() != s0.cols()) throw Error("sym_eig: matrix not square");
  check_finite(s0, "sym_eig");
  const double scale = inf_norm(s0);
  if (max_abs_asymmetry(s0) > 1e-12 * (1.0 + scale))
    throw PreconditionFailed("sym_eig: matrix not symmetric at tolerance");

  const int n = s0.rows();
  Mat s = s0;
  // Symmetrize exactly so the rotations see a symmetric matrix.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double m = 0.5 * (s(i, j) + s(j, i));
      s(i, j) = m;
      s(j, i) = m;
    }
  Mat v = Mat::identity(n);
  const double target = 1e-14 * (1.0 + frobenius_norm(s));
  const int max_sweeps = 100;
  bool converged = (n <= 1);
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    if (off_diagonal_norm(s) <= target) {
      converged = true;
      break;
    }
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q)
        if (std::fabs(s(p, q)) > 0.0) jacobi_rotate(s, v, p, q);
  }
  if (!converged && off_diagonal_norm(s) > target)
    throw NoConvergence("sym_eig: Jacobi sweeps exceeded cap");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return s(a, a) > s(b, b); });
  EigDecomp out;
  out.values.resize(n);
  out.vectors = Mat(n, n);
  for (int k = 0; k < n; ++k) {
    out.values[k] = s(order[k], order[k]);
    for (int i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  normalize_column_signs(out.vectors);
  return out;
}

double lambda_min(const Mat& s) {
  if (s.rows() == 0) return 0.0;
  return sym_eig(s).values.back();
}

namespace {

// One-sided Jacobi: rotate column pairs of u until mutually orthogonal,
// accumulating the right-hand rotations in v. Column norms are the singular
// values.
void hestenes_svd(Mat& u, Mat& v) {
  const int n = u.cols();
  v = Mat::identity(n);
  if (u.rows() == 0 || n <= 1) return;
  const int max_sweeps = 60;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (int i = 0; i < n - 1; ++i)
      for (int j = i + 1; j < n; ++j) {
        double a = 0.0, b = 0.0, c = 0.0;
        for (int k = 0; k < u.rows(); ++k) {
          a += u(k, i) * u(k, i);
          b += u(k, j) * u(k, j);
          c += u(k, i) * u(k, j);
        }
        if (std::fabs(c) <= 1e-15 * std::sqrt(a * b) || c == 0.0) continue;
        rotated = true;
        const double zeta = (b - a) / (2.0 * c);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        for (int k = 0; k < u.rows(); ++k) {
          const double uki = u(k, i);
          const double ukj = u(k, j);
          u(k, i) = cs * uki - sn * ukj;
          u(k, j) = sn * uki + cs * ukj;
        }
        for (int k = 0; k < n; ++k) {
          const double vki = v(k, i);
          const double vkj = v(k, j);
          v(k, i) = cs * vki - sn * vkj;
          v(k, j) = sn * vki + cs * vkj;
        }
      }
    if (!rotated) return;
  }
}

struct SvdSmall {
  Vec sigma;  // descending
  Mat right;  // right singular vectors, columns ordered with sigma
};

SvdSmall svd_small(const Mat& m) {
  SvdSmall out;
  const int n = m.cols();
  if (n == 0) {
    out.right = Mat(0, 0);
    return out;
  }
  if (m.rows() == 0) {
    out.sigma.assign(n, 0.0);
    out.right = Mat::identity(n);
    return out;
  }
  check_finite(m, "svd");
  Mat u = m;
  Mat v;
  hestenes_svd(u, v);
  std::vector<std::pair<double, int>> order(n);
  for (int j = 0; j < n; ++j) {
    double norm2 = 0.0;
    for (int i = 0; i < u.rows(); ++i) norm2 += u(i, j) * u(i, j);
    order[j] = {std::sqrt(norm2), j};
  }
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return a.first > b.first;
  });
  out.sigma.resize(n);
  out.right = Mat(n, n);
  for (int k = 0; k < n; ++k) {
    out.sigma[k] = order[k].first;
    for (int i = 0; i < n; ++i) out.right(i, k) = v(i, order[k].second);
  }
  normalize_column_signs(out.right);
  return out;
}

}  // namespace

Vec singular_values(const Mat& m) { return svd_small(m).sigma; }

int numeric_rank(const Mat& m, double tol) {
  if (tol <= 0.0) throw Error("numeric_rank: tol must be positive");
  if (m.rows() == 0 || m.cols() == 0) return 0;
  const Vec sigma = singular_values(m);
  const double cutoff = tol * std::max(1.0, sigma.front());
  int rank = 0;
  for (double s : sigma)
    if (s > cutoff) ++rank;
  return rank;
}

Mat nullspace_basis(const Mat& m, double tol) {
  if (tol <= 0.0) throw Error("nullspace_basis: tol must be positive");
  const int n = m.cols();
  if (n == 0) return Mat(0, 0);
  if (m.rows() == 0) return Mat::identity(n);
  const SvdSmall svd = svd_small(m);
  const double cutoff = tol * std::max(1.0, svd.sigma.front());
  int rank = 0;
  for (double s : svd.sigma)
    if (s > cutoff) ++rank;
  Mat basis(n, n - rank);
  for (int k = rank; k < n; ++k)
    for (int i = 0; i < n; ++i) basis(i, k - rank) = svd.right(i, k);
  return basis;
}

}  // namespace nlpcanon
