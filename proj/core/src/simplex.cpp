// SPDX-License-Identifier: Apache-2.0
#include "nlpcanon/simplex.hpp"

#include <algorithm>
#include <cmath>

#include "nlpcanon/errors.hpp"

namespace nlpcanon {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-9;
constexpr double kFeasTol = 1e-9;
constexpr int kMaxPivots = 50000;

// x_i = shift + sign * u_j (single) or x_i = u_pos - u_neg (free split).
struct VarMap {
  double shift = 0.0;
  double sign = 1.0;
  int u = -1;
  int u_neg = -1;  // >= 0 only for free splits
};

struct Tableau {
  Mat t;                    // m x (ncols + 1), last column is the rhs
  std::vector<int> basis;   // basis[row] = column
  std::vector<char> can_enter;
  int ncols = 0;

  double rhs(int r) const { return t(r, ncols); }
};

// Reduced cost of column j for objective cost (indexed over columns).
double reduced_cost(const Tableau& tab, const Vec& cost, int j) {
  double r = cost[j];
  for (int row = 0; row < tab.t.rows(); ++row) {
    const double cb = cost[tab.basis[row]];
    if (cb != 0.0) r -= cb * tab.t(row, j);
  }
  return r;
}

void pivot(Tableau& tab, int row, int col) {
  const int ncols = tab.ncols;
  const double p = tab.t(row, col);
  for (int j = 0; j <= ncols; ++j) tab.t(row, j) /= p;
  tab.t(row, col) = 1.0;
  for (int r = 0; r < tab.t.rows(); ++r) {
    if (r == row) continue;
    const double f = tab.t(r, col);
    if (f == 0.0) continue;
    for (int j = 0; j <= ncols; ++j) tab.t(r, j) -= f * tab.t(row, j);
    tab.t(r, col) = 0.0;
  }
  tab.basis[row] = col;
}

// Bland: entering = smallest eligible column with negative reduced cost;
// leaving = min ratio, ties broken by smallest basic column index.
// Returns Optimal when no entering column exists.
LPStatus run_simplex(Tableau& tab, const Vec& cost, int& pivots) {
  const int m = tab.t.rows();
  for (;;) {
    int enter = -1;
    for (int j = 0; j < tab.ncols; ++j) {
      if (!tab.can_enter[j]) continue;
      if (reduced_cost(tab, cost, j) < -kCostTol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) return LPStatus::Optimal;

    int leave = -1;
    double best_ratio = 0.0;
    for (int r = 0; r < m; ++r) {
      const double a = tab.t(r, enter);
      if (a <= kPivotTol) continue;
      const double ratio = tab.rhs(r) / a;
      if (leave < 0 || ratio < best_ratio - kPivotTol ||
          (std::fabs(ratio - best_ratio) <= kPivotTol &&
           tab.basis[r] < tab.basis[leave])) {
        leave = r;
        best_ratio = ratio;
      }
    }
    if (leave < 0) return LPStatus::Unbounded;

    pivot(tab, leave, enter);
    if (++pivots > kMaxPivots)
      throw IterationCap("simplex: pivot cap exceeded");
  }
}

}  // namespace

LPResult simplex_solve_small(const Vec& c, const Mat& a_eq, const Vec& b_eq,
                             const Mat& a_le, const Vec& b_le,
                             const std::vector<VarBound>& bounds) {
  const int nx = static_cast<int>(c.size());
  if ((a_eq.rows() > 0 && a_eq.cols() != nx) ||
      (a_le.rows() > 0 && a_le.cols() != nx) ||
      static_cast<int>(bounds.size()) != nx)
    throw Error("simplex: shape mismatch");
  if (nx + a_eq.rows() + a_le.rows() > 200)
    throw Error("simplex: problem exceeds the small-LP size cap");

  // Substitute every variable by nonnegative ones.
  std::vector<VarMap> maps(nx);
  int nu = 0;
  int range_rows = 0;
  for (int i = 0; i < nx; ++i) {
    const auto& b = bounds[i];
    if (b.lo > b.hi) return {LPStatus::Infeasible, {}, 0.0, 0};
    if (std::isfinite(b.lo)) {
      maps[i] = {b.lo, 1.0, nu++, -1};
      if (std::isfinite(b.hi)) ++range_rows;
    } else if (std::isfinite(b.hi)) {
      maps[i] = {b.hi, -1.0, nu++, -1};
    } else {
      maps[i].u = nu++;
      maps[i].u_neg = nu++;
    }
  }

  const int m_eq = a_eq.rows();
  const int m_le = a_le.rows();
  const int m = m_eq + m_le + range_rows;
  const int n_slack = m_le + range_rows;

  // Assemble rows over u with rhs adjusted by the shifts; slack columns after
  // the structural ones, artificials appended as needed.
  Mat rows(m, nu + n_slack);
  Vec rhs(m, 0.0);
  std::vector<char> is_eq(m, 0);
  auto emit = [&](int row, const Vec& ax, double b, bool eq) {
    double adj = b;
    for (int i = 0; i < nx; ++i) {
      const double a = ax[i];
      if (a == 0.0) continue;
      adj -= a * maps[i].shift;
      rows(row, maps[i].u) += a * maps[i].sign;
      if (maps[i].u_neg >= 0) rows(row, maps[i].u_neg) -= a;
    }
    rhs[row] = adj;
    is_eq[row] = eq;
  };

  int at = 0;
  for (int r = 0; r < m_eq; ++r, ++at) emit(at, a_eq.row(r), b_eq[r], true);
  int slack = nu;
  for (int r = 0; r < m_le; ++r, ++at) {
    emit(at, a_le.row(r), b_le[r], false);
    rows(at, slack++) = 1.0;
  }
  for (int i = 0; i < nx; ++i) {
    if (!(std::isfinite(bounds[i].lo) && std::isfinite(bounds[i].hi))) continue;
    rows(at, maps[i].u) = 1.0;
    rows(at, slack++) = 1.0;
    rhs[at] = bounds[i].hi - bounds[i].lo;
    ++at;
  }

  // Flip rows to nonnegative rhs; rows whose slack flipped (or equalities)
  // need an artificial to complete the starting basis.
  std::vector<int> art_of_row(m, -1);
  int n_art = 0;
  for (int r = 0; r < m; ++r) {
    if (rhs[r] < 0.0) {
      for (int j = 0; j < rows.cols(); ++j) rows(r, j) = -rows(r, j);
      rhs[r] = -rhs[r];
      art_of_row[r] = n_art++;
    } else if (is_eq[r]) {
      art_of_row[r] = n_art++;
    }
  }

  Tableau tab;
  tab.ncols = nu + n_slack + n_art;
  tab.t = Mat(m, tab.ncols + 1);
  tab.basis.assign(m, -1);
  tab.can_enter.assign(tab.ncols, 1);
  for (int r = 0; r < m; ++r) {
    for (int j = 0; j < nu + n_slack; ++j) tab.t(r, j) = rows(r, j);
    tab.t(r, tab.ncols) = rhs[r];
    if (art_of_row[r] >= 0) {
      const int col = nu + n_slack + art_of_row[r];
      tab.t(r, col) = 1.0;
      tab.basis[r] = col;
    } else {
      // slack column of this row carries +1 and serves as the basis
      for (int j = nu; j < nu + n_slack; ++j)
        if (tab.t(r, j) == 1.0) {
          tab.basis[r] = j;
          break;
        }
    }
  }

  LPResult result;
  if (n_art > 0) {
    Vec phase1_cost(tab.ncols, 0.0);
    for (int j = nu + n_slack; j < tab.ncols; ++j) phase1_cost[j] = 1.0;
    if (run_simplex(tab, phase1_cost, result.iterations) != LPStatus::Optimal)
      throw Error("simplex: phase 1 unbounded");  // cannot happen: cost >= 0
    double infeas = 0.0;
    for (int r = 0; r < m; ++r)
      if (tab.basis[r] >= nu + n_slack) infeas += tab.rhs(r);
    if (infeas > kFeasTol * (1.0 + inf_norm(rhs))) {
      result.status = LPStatus::Infeasible;
      return result;
    }
    // Pivot zero-level artificials out where possible; leftover rows are
    // redundant and stay pinned at zero.
    for (int r = 0; r < m; ++r) {
      if (tab.basis[r] < nu + n_slack) continue;
      for (int j = 0; j < nu + n_slack; ++j)
        if (std::fabs(tab.t(r, j)) > 1e-7) {
          pivot(tab, r, j);
          break;
        }
    }
    for (int j = nu + n_slack; j < tab.ncols; ++j) tab.can_enter[j] = 0;
  }

  Vec phase2_cost(tab.ncols, 0.0);
  for (int i = 0; i < nx; ++i) {
    phase2_cost[maps[i].u] += c[i] * maps[i].sign;
    if (maps[i].u_neg >= 0) phase2_cost[maps[i].u_neg] -= c[i];
  }
  const LPStatus status = run_simplex(tab, phase2_cost, result.iterations);
  result.status = status;
  if (status != LPStatus::Optimal) return result;

  Vec u(tab.ncols, 0.0);
  for (int r = 0; r < m; ++r) u[tab.basis[r]] = tab.rhs(r);
  result.point.assign(nx, 0.0);
  for (int i = 0; i < nx; ++i) {
    double v = maps[i].shift + maps[i].sign * u[maps[i].u];
    if (maps[i].u_neg >= 0) v -= u[maps[i].u_neg];
    result.point[i] = v;
  }
  result.objective = dot(c, result.point);
  return result;
}

}  // namespace nlpcanon
