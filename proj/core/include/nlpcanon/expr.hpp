// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nlpcanon/linalg.hpp"

namespace nlpcanon {

enum class UnaryOp { Neg, Sin, Cos, Exp, Log, Sqrt };
enum class BinaryOp { Add, Sub, Mul, Div };

/// Immutable arithmetic expression tree. Nodes are shared, so copies are
/// cheap and concurrent reads are safe after construction.
class Expr {
 public:
  enum class Kind { Constant, Variable, Unary, Binary, Power };

  Expr();  // constant 0

  static Expr constant(double value);
  static Expr variable(int index);  // 0-based
  static Expr unary(UnaryOp op, Expr operand);
  static Expr binary(BinaryOp op, Expr lhs, Expr rhs);
  static Expr power(Expr base, int exponent);  // exponent >= 0

  Kind kind() const;
  double constant_value() const;
  int variable_index() const;
  UnaryOp unary_op() const;
  BinaryOp binary_op() const;
  int exponent() const;
  const Expr& lhs() const;  // unary operand, binary lhs, power base
  const Expr& rhs() const;

  /// Smallest dimension n such that every variable index is < n.
  int min_dimension() const;
  std::size_t node_count() const;

  /// Replace variable i by replacements[i] everywhere.
  Expr substitute(std::span<const Expr> replacements) const;

  /// Precedence-aware rendering that re-parses to the same tree.
  std::string to_string(std::span<const std::string> names = {}) const;

  bool same_structure(const Expr& other) const;

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator+(double a, const Expr& b);
Expr operator*(double a, const Expr& b);
Expr pow(const Expr& base, int exponent);
Expr sin(const Expr& e);
Expr cos(const Expr& e);
Expr exp(const Expr& e);
Expr log(const Expr& e);
Expr sqrt(const Expr& e);

/// Value-only evaluation. Throws DomainError outside a node's domain and
/// NonFiniteError when the result overflows.
double eval(const Expr& e, std::span<const double> x);

/// Parse with variables x1..xn. Throws ParseError / UnknownVariable.
Expr parse_expr(std::string_view text, int dimension);

/// Parse against an explicit list of variable names.
Expr parse_expr(std::string_view text, std::span<const std::string> names);

struct NamedExpr {
  std::string name;
  Expr expr;
};

/// A parsed problem file: variables, objective, ordered constraints, analysis
/// radius, optional base point. Constraint order is load-bearing and is kept
/// exactly as written.
struct ProblemDoc {
  std::vector<std::string> variables;
  double radius = 1.0;
  Expr objective;
  std::vector<NamedExpr> equalities;    // h_1..h_m in file order
  std::vector<NamedExpr> inequalities;  // g_1..g_{r+p} in file order
  Vec base_point;                       // defaults to the origin

  int dimension() const { return static_cast<int>(variables.size()); }
};

/// Parse the line-oriented problem format:
///   vars x1 x2 x3
///   radius 0.5
///   objective x1^2 + x2
///   eq h1: x1 + x2
///   ineq g1: x2
///   point 0 0 0
/// '#' starts a comment. Every constraint must be active at the base point
/// (|value| <= 1e-10), otherwise ActivityError.
ProblemDoc parse_problem(std::string_view document);

}  // namespace nlpcanon
