// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "nlpcanon/expr.hpp"
#include "nlpcanon/linalg.hpp"

namespace nlpcanon {

/// An NLP (f, h, g) analyzed at the origin of its ball: minimize f subject to
/// h = 0 (m rows) and g <= 0 (r + p rows, order significant). Construction
/// translates any nonzero base point to the origin and requires every
/// constraint to be active there.
class NLPInstance {
 public:
  explicit NLPInstance(const ProblemDoc& doc);

  /// Assemble directly from parts (used by transforms and tests); names are
  /// generated when omitted.
  NLPInstance(int n, Expr objective, std::vector<Expr> equalities,
              std::vector<Expr> inequalities, double radius,
              std::vector<std::string> variable_names = {},
              std::vector<std::string> equality_names = {},
              std::vector<std::string> inequality_names = {});

  int n() const { return n_; }
  int num_equalities() const { return static_cast<int>(equalities_.size()); }
  int num_inequalities() const {
    return static_cast<int>(inequalities_.size());
  }
  double radius() const { return radius_; }

  const Expr& objective() const { return objective_; }
  std::span<const Expr> equalities() const { return equalities_; }
  std::span<const Expr> inequalities() const { return inequalities_; }

  const std::vector<std::string>& variable_names() const {
    return variable_names_;
  }
  const std::vector<std::string>& equality_names() const {
    return equality_names_;
  }
  const std::vector<std::string>& inequality_names() const {
    return inequality_names_;
  }

  Vec equality_values(const Vec& x) const;
  Vec inequality_values(const Vec& x) const;

 private:
  void validate() const;

  int n_ = 0;
  double radius_ = 1.0;
  Expr objective_;
  std::vector<Expr> equalities_;
  std::vector<Expr> inequalities_;
  std::vector<std::string> variable_names_;
  std::vector<std::string> equality_names_;
  std::vector<std::string> inequality_names_;
};

}  // namespace nlpcanon
