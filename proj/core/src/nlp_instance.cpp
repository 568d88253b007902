// SPDX-License-Identifier: Apache-2.0
#include "nlpcanon/nlp_instance.hpp"

#include <cmath>

#include "nlpcanon/errors.hpp"

namespace nlpcanon {

namespace {

std::vector<std::string> default_names(const char* stem, std::size_t count) {
  std::vector<std::string> names(count);
  for (std::size_t i = 0; i < count; ++i)
    names[i] = std::string(stem) + std::to_string(i + 1);
  return names;
}

}  // namespace

NLPInstance::NLPInstance(const ProblemDoc& doc)
    : n_(doc.dimension()),
      radius_(doc.radius),
      objective_(doc.objective),
      variable_names_(doc.variables) {
  // Shift a nonzero base point to the origin so all analysis happens at 0.
  bool shifted = false;
  for (double c : doc.base_point)
    if (c != 0.0) shifted = true;
  std::vector<Expr> shift;
  if (shifted) {
    shift.reserve(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i)
      shift.push_back(Expr::constant(doc.base_point[i]) + Expr::variable(i));
    objective_ = objective_.substitute(shift);
  }
  for (const auto& ne : doc.equalities) {
    equalities_.push_back(shifted ? ne.expr.substitute(shift) : ne.expr);
    equality_names_.push_back(ne.name);
  }
  for (const auto& ne : doc.inequalities) {
    inequalities_.push_back(shifted ? ne.expr.substitute(shift) : ne.expr);
    inequality_names_.push_back(ne.name);
  }
  validate();
}

NLPInstance::NLPInstance(int n, Expr objective, std::vector<Expr> equalities,
                         std::vector<Expr> inequalities, double radius,
                         std::vector<std::string> variable_names,
                         std::vector<std::string> equality_names,
                         std::vector<std::string> inequality_names)
    : n_(n),
      radius_(radius),
      objective_(std::move(objective)),
      equalities_(std::move(equalities)),
      inequalities_(std::move(inequalities)),
      variable_names_(std::move(variable_names)),
      equality_names_(std::move(equality_names)),
      inequality_names_(std::move(inequality_names)) {
  if (variable_names_.empty())
    variable_names_ = default_names("x", static_cast<std::size_t>(n_));
  if (equality_names_.empty())
    equality_names_ = default_names("h", equalities_.size());
  if (inequality_names_.empty())
    inequality_names_ = default_names("g", inequalities_.size());
  validate();
}

void NLPInstance::validate() const {
  if (n_ <= 0) throw Error("NLPInstance: dimension must be positive");
  if (!(radius_ > 0.0)) throw Error("NLPInstance: radius must be positive");
  if (objective_.min_dimension() > n_)
    throw Error("NLPInstance: objective references undeclared variables");
  const Vec origin(static_cast<std::size_t>(n_), 0.0);
  for (const auto* group : {&equalities_, &inequalities_}) {
    for (std::size_t j = 0; j < group->size(); ++j) {
      const Expr& e = (*group)[j];
      if (e.min_dimension() > n_)
        throw Error("NLPInstance: constraint references undeclared variables");
      const double v = eval(e, origin);
      if (std::fabs(v) > 1e-10) {
        const std::string& name = (group == &equalities_)
                                      ? equality_names_[j]
                                      : inequality_names_[j];
        throw ActivityError("constraint '" + name +
                            "' is not active at the origin (value " +
                            std::to_string(v) + ")");
      }
    }
  }
}

Vec NLPInstance::equality_values(const Vec& x) const {
  Vec v(equalities_.size());
  for (std::size_t j = 0; j < equalities_.size(); ++j)
    v[j] = eval(equalities_[j], x);
  return v;
}

Vec NLPInstance::inequality_values(const Vec& x) const {
  Vec v(inequalities_.size());
  for (std::size_t j = 0; j < inequalities_.size(); ++j)
    v[j] = eval(inequalities_[j], x);
  return v;
}

}  // namespace nlpcanon
