// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <initializer_list>
#include <utility>
#include <vector>

namespace nlpcanon {

using Vec = std::vector<double>;

/// Dense row-major matrix sized for desk-scale problems (n <= ~200).
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols),
        a_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
           fill) {}

  /// Row-of-rows construction, e.g. Mat({{1, 0}, {0, 1}}).
  Mat(std::initializer_list<std::initializer_list<double>> rows);

  static Mat identity(int n);
  /// Column vector view of v (n x 1).
  static Mat column(const Vec& v);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double& operator()(int i, int j) {
    return a_[static_cast<std::size_t>(i) * cols_ + j];
  }
  double operator()(int i, int j) const {
    return a_[static_cast<std::size_t>(i) * cols_ + j];
  }

  Vec row(int i) const;
  Vec col(int j) const;
  void set_row(int i, const Vec& v);

  Mat transpose() const;

  friend Mat operator+(const Mat& a, const Mat& b);
  friend Mat operator-(const Mat& a, const Mat& b);
  friend Mat operator*(const Mat& a, const Mat& b);
  friend Mat operator*(double s, const Mat& a);
  friend Vec operator*(const Mat& a, const Vec& x);

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> a_;
};

Vec operator+(const Vec& a, const Vec& b);
Vec operator-(const Vec& a, const Vec& b);
Vec operator*(double s, const Vec& a);
double dot(const Vec& a, const Vec& b);

double inf_norm(const Vec& v);
double inf_norm(const Mat& m);
double two_norm(const Vec& v);
double frobenius_norm(const Mat& m);
/// Frobenius inner product <A, B> = sum_ij A_ij B_ij.
double frobenius_dot(const Mat& a, const Mat& b);
double max_abs_asymmetry(const Mat& m);

/// Stack blocks vertically; every block must share the column count.
Mat vstack(const std::vector<Mat>& blocks);

/// Solve A x = b by LU with partial pivoting. Throws Error on singularity.
Vec lu_solve(Mat a, Vec b);
Mat inverse(const Mat& a);
double determinant(Mat a);

/// Symmetric eigendecomposition, eigenvalues descending, orthonormal columns.
struct EigDecomp {
  Vec values;   // descending
  Mat vectors;  // orthonormal columns, vectors.col(k) pairs with values[k]
};

/// Cyclic Jacobi rotations. Requires ||S - S^T||_inf <= 1e-12 (1 + ||S||_inf);
/// throws PreconditionFailed otherwise and NoConvergence past the sweep cap.
EigDecomp sym_eig(const Mat& s);

/// Smallest eigenvalue of a symmetric matrix.
double lambda_min(const Mat& s);

/// Singular values (descending) by one-sided Jacobi orthogonalization.
/// Small singular values come out near rounding level rather than at the
/// sqrt(eps) floor an eigenvalue-of-M^T M route would give.
Vec singular_values(const Mat& m);

/// Number of singular values above tol * max(1, sigma_max). tol > 0.
int numeric_rank(const Mat& m, double tol);

/// Orthonormal basis of {d : M d = 0} at tolerance tol; columns satisfy
/// ||M basis||_inf <= tol (1 + ||M||_inf). A 0 x n matrix yields I_n; a
/// full-rank square matrix yields a basis with zero columns.
Mat nullspace_basis(const Mat& m, double tol);

}  // namespace nlpcanon
