// SPDX-License-Identifier: Apache-2.0
#include "nlpcanon/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <utility>

#include "nlpcanon/errors.hpp"

namespace nlpcanon {

struct Expr::Node {
  Kind kind = Kind::Constant;
  double value = 0.0;
  int var = 0;
  UnaryOp uop = UnaryOp::Neg;
  BinaryOp bop = BinaryOp::Add;
  int exp = 0;
  Expr a;
  Expr b;

  Node() = default;
  explicit Node(double v) : kind(Kind::Constant), value(v) {}
};

Expr::Expr() {
  static const auto zero = std::make_shared<const Node>(0.0);
  node_ = zero;
}

Expr Expr::constant(double value) {
  auto n = std::make_shared<Node>(value);
  return Expr(std::move(n));
}

Expr Expr::variable(int index) {
  if (index < 0) throw Error("Expr::variable: negative index");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Variable;
  n->var = index;
  return Expr(std::move(n));
}

Expr Expr::unary(UnaryOp op, Expr operand) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Unary;
  n->uop = op;
  n->a = std::move(operand);
  return Expr(std::move(n));
}

Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Binary;
  n->bop = op;
  n->a = std::move(lhs);
  n->b = std::move(rhs);
  return Expr(std::move(n));
}

Expr Expr::power(Expr base, int exponent) {
  if (exponent < 0) throw Error("Expr::power: exponent must be non-negative");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Power;
  n->exp = exponent;
  n->a = std::move(base);
  return Expr(std::move(n));
}

Expr::Kind Expr::kind() const { return node_->kind; }
double Expr::constant_value() const { return node_->value; }
int Expr::variable_index() const { return node_->var; }
UnaryOp Expr::unary_op() const { return node_->uop; }
BinaryOp Expr::binary_op() const { return node_->bop; }
int Expr::exponent() const { return node_->exp; }
const Expr& Expr::lhs() const { return node_->a; }
const Expr& Expr::rhs() const { return node_->b; }

int Expr::min_dimension() const {
  switch (kind()) {
    case Kind::Constant:
      return 0;
    case Kind::Variable:
      return variable_index() + 1;
    case Kind::Unary:
    case Kind::Power:
      return lhs().min_dimension();
    case Kind::Binary:
      return std::max(lhs().min_dimension(), rhs().min_dimension());
  }
  return 0;
}

std::size_t Expr::node_count() const {
  switch (kind()) {
    case Kind::Constant:
    case Kind::Variable:
      return 1;
    case Kind::Unary:
    case Kind::Power:
      return 1 + lhs().node_count();
    case Kind::Binary:
      return 1 + lhs().node_count() + rhs().node_count();
  }
  return 1;
}

Expr Expr::substitute(std::span<const Expr> replacements) const {
  switch (kind()) {
    case Kind::Constant:
      return *this;
    case Kind::Variable: {
      const int i = variable_index();
      if (i >= static_cast<int>(replacements.size()))
        throw Error("substitute: no replacement for variable " +
                    std::to_string(i + 1));
      return replacements[i];
    }
    case Kind::Unary:
      return unary(unary_op(), lhs().substitute(replacements));
    case Kind::Power:
      return power(lhs().substitute(replacements), exponent());
    case Kind::Binary:
      return binary(binary_op(), lhs().substitute(replacements),
                    rhs().substitute(replacements));
  }
  return *this;
}

bool Expr::same_structure(const Expr& other) const {
  if (kind() != other.kind()) return false;
  switch (kind()) {
    case Kind::Constant:
      return constant_value() == other.constant_value();
    case Kind::Variable:
      return variable_index() == other.variable_index();
    case Kind::Unary:
      return unary_op() == other.unary_op() &&
             lhs().same_structure(other.lhs());
    case Kind::Power:
      return exponent() == other.exponent() &&
             lhs().same_structure(other.lhs());
    case Kind::Binary:
      return binary_op() == other.binary_op() &&
             lhs().same_structure(other.lhs()) &&
             rhs().same_structure(other.rhs());
  }
  return false;
}

Expr operator+(const Expr& a, const Expr& b) {
  return Expr::binary(BinaryOp::Add, a, b);
}
Expr operator-(const Expr& a, const Expr& b) {
  return Expr::binary(BinaryOp::Sub, a, b);
}
Expr operator*(const Expr& a, const Expr& b) {
  return Expr::binary(BinaryOp::Mul, a, b);
}
Expr operator/(const Expr& a, const Expr& b) {
  return Expr::binary(BinaryOp::Div, a, b);
}
Expr operator-(const Expr& a) { return Expr::unary(UnaryOp::Neg, a); }
Expr operator+(double a, const Expr& b) { return Expr::constant(a) + b; }
Expr operator*(double a, const Expr& b) { return Expr::constant(a) * b; }
Expr pow(const Expr& base, int exponent) { return Expr::power(base, exponent); }
Expr sin(const Expr& e) { return Expr::unary(UnaryOp::Sin, e); }
Expr cos(const Expr& e) { return Expr::unary(UnaryOp::Cos, e); }
Expr exp(const Expr& e) { return Expr::unary(UnaryOp::Exp, e); }
Expr log(const Expr& e) { return Expr::unary(UnaryOp::Log, e); }
Expr sqrt(const Expr& e) { return Expr::unary(UnaryOp::Sqrt, e); }

double eval(const Expr& e, std::span<const double> x) {
  double out = 0.0;
  switch (e.kind()) {
    case Expr::Kind::Constant:
      out = e.constant_value();
      break;
    case Expr::Kind::Variable: {
      const int i = e.variable_index();
      if (i >= static_cast<int>(x.size()))
        throw Error("eval: variable index beyond point dimension");
      out = x[i];
      break;
    }
    case Expr::Kind::Unary: {
      const double v = eval(e.lhs(), x);
      switch (e.unary_op()) {
        case UnaryOp::Neg:
          out = -v;
          break;
        case UnaryOp::Sin:
          out = std::sin(v);
          break;
        case UnaryOp::Cos:
          out = std::cos(v);
          break;
        case UnaryOp::Exp:
          out = std::exp(v);
          break;
        case UnaryOp::Log:
          if (v <= 0.0) throw DomainError("log of non-positive value");
          out = std::log(v);
          break;
        case UnaryOp::Sqrt:
          if (v < 0.0) throw DomainError("sqrt of negative value");
          out = std::sqrt(v);
          break;
      }
      break;
    }
    case Expr::Kind::Power: {
      const double v = eval(e.lhs(), x);
      out = 1.0;
      for (int k = 0; k < e.exponent(); ++k) out *= v;
      break;
    }
    case Expr::Kind::Binary: {
      const double a = eval(e.lhs(), x);
      const double b = eval(e.rhs(), x);
      switch (e.binary_op()) {
        case BinaryOp::Add:
          out = a + b;
          break;
        case BinaryOp::Sub:
          out = a - b;
          break;
        case BinaryOp::Mul:
          out = a * b;
          break;
        case BinaryOp::Div:
          if (b == 0.0) throw DomainError("division by zero");
          out = a / b;
          break;
      }
      break;
    }
  }
  if (!std::isfinite(out)) throw NonFiniteError("eval: non-finite value");
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct Token {
  enum class Type { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen,
                    RParen, Colon, End };
  Type type = Type::End;
  double number = 0.0;
  bool number_is_integer = false;
  std::string ident;
  std::size_t offset = 0;
};

class Lexer {
 public:
  Lexer(std::string_view text, std::size_t base_offset)
      : text_(text), base_(base_offset) {
    advance();
  }

  const Token& peek() const { return current_; }

  Token take() {
    Token t = current_;
    advance();
    return t;
  }

  std::size_t offset_here() const { return current_.offset; }

 private:
  void advance() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    current_ = Token{};
    current_.offset = base_ + pos_;
    if (pos_ >= text_.size()) {
      current_.type = Token::Type::End;
      return;
    }
    const char c = text_[pos_];
    switch (c) {
      case '+': current_.type = Token::Type::Plus; ++pos_; return;
      case '-': current_.type = Token::Type::Minus; ++pos_; return;
      case '*': current_.type = Token::Type::Star; ++pos_; return;
      case '/': current_.type = Token::Type::Slash; ++pos_; return;
      case '^': current_.type = Token::Type::Caret; ++pos_; return;
      case '(': current_.type = Token::Type::LParen; ++pos_; return;
      case ')': current_.type = Token::Type::RParen; ++pos_; return;
      case ':': current_.type = Token::Type::Colon; ++pos_; return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* start = text_.data() + pos_;
      char* end = nullptr;
      current_.number = std::strtod(start, &end);
      if (end == start)
        throw ParseError("invalid number", base_ + pos_, {"number"});
      const std::string_view spelled(start, end - start);
      current_.number_is_integer =
          spelled.find_first_of(".eE") == std::string_view::npos;
      current_.type = Token::Type::Number;
      pos_ += static_cast<std::size_t>(end - start);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t len = 0;
      while (pos_ + len < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_ + len])) ||
              text_[pos_ + len] == '_'))
        ++len;
      current_.type = Token::Type::Ident;
      current_.ident = std::string(text_.substr(pos_, len));
      pos_ += len;
      return;
    }
    throw ParseError(std::string("unexpected character '") + c + "'",
                     base_ + pos_, {});
  }

  std::string_view text_;
  std::size_t base_;
  std::size_t pos_ = 0;
  Token current_;
};

bool is_function_name(const std::string& s) {
  return s == "sin" || s == "cos" || s == "exp" || s == "log" || s == "sqrt";
}

UnaryOp function_op(const std::string& s) {
  if (s == "sin") return UnaryOp::Sin;
  if (s == "cos") return UnaryOp::Cos;
  if (s == "exp") return UnaryOp::Exp;
  if (s == "log") return UnaryOp::Log;
  return UnaryOp::Sqrt;
}

class Parser {
 public:
  Parser(std::string_view text, std::span<const std::string> names,
         std::size_t base_offset)
      : lex_(text, base_offset), names_(names) {}

  Expr parse() {
    Expr e = parse_sum();
    const Token& t = lex_.peek();
    if (t.type != Token::Type::End)
      throw ParseError("trailing input after expression", t.offset,
                       {"operator", "end of input"});
    return e;
  }

 private:
  Expr parse_sum() {
    Expr e = parse_product();
    for (;;) {
      const Token::Type t = lex_.peek().type;
      if (t == Token::Type::Plus) {
        lex_.take();
        e = Expr::binary(BinaryOp::Add, e, parse_product());
      } else if (t == Token::Type::Minus) {
        lex_.take();
        e = Expr::binary(BinaryOp::Sub, e, parse_product());
      } else {
        return e;
      }
    }
  }

  Expr parse_product() {
    Expr e = parse_unary();
    for (;;) {
      const Token::Type t = lex_.peek().type;
      if (t == Token::Type::Star) {
        lex_.take();
        e = Expr::binary(BinaryOp::Mul, e, parse_unary());
      } else if (t == Token::Type::Slash) {
        lex_.take();
        e = Expr::binary(BinaryOp::Div, e, parse_unary());
      } else {
        return e;
      }
    }
  }

  Expr parse_unary() {
    if (lex_.peek().type == Token::Type::Minus) {
      lex_.take();
      return Expr::unary(UnaryOp::Neg, parse_unary());
    }
    return parse_power();
  }

  Expr parse_power() {
    Expr e = parse_atom();
    while (lex_.peek().type == Token::Type::Caret) {
      lex_.take();
      const Token t = lex_.peek();
      if (t.type != Token::Type::Number || !t.number_is_integer ||
          t.number < 0.0 || t.number > 1e9)
        throw ParseError("exponent must be a non-negative integer", t.offset,
                         {"integer"});
      lex_.take();
      e = Expr::power(e, static_cast<int>(t.number));
    }
    return e;
  }

  Expr parse_atom() {
    const Token t = lex_.peek();
    switch (t.type) {
      case Token::Type::Number:
        lex_.take();
        return Expr::constant(t.number);
      case Token::Type::LParen: {
        lex_.take();
        Expr e = parse_sum();
        if (lex_.peek().type != Token::Type::RParen)
          throw ParseError("unbalanced parenthesis", lex_.offset_here(),
                           {"')'"});
        lex_.take();
        return e;
      }
      case Token::Type::Ident: {
        lex_.take();
        if (lex_.peek().type == Token::Type::LParen) {
          if (!is_function_name(t.ident))
            throw ParseError("unknown function '" + t.ident + "'", t.offset,
                             {"sin", "cos", "exp", "log", "sqrt"});
          lex_.take();
          Expr arg = parse_sum();
          if (lex_.peek().type != Token::Type::RParen)
            throw ParseError("unbalanced parenthesis", lex_.offset_here(),
                             {"')'"});
          lex_.take();
          return Expr::unary(function_op(t.ident), arg);
        }
        for (std::size_t i = 0; i < names_.size(); ++i)
          if (names_[i] == t.ident)
            return Expr::variable(static_cast<int>(i));
        throw UnknownVariable(t.ident, t.offset);
      }
      default:
        throw ParseError("expected an operand", t.offset,
                         {"number", "variable", "'('", "'-'", "function"});
    }
  }

  Lexer lex_;
  std::span<const std::string> names_;
};

}  // namespace

Expr parse_expr(std::string_view text, std::span<const std::string> names) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos)
    throw ParseError("empty expression", 0,
                     {"number", "variable", "'('", "'-'", "function"});
  return Parser(text, names, 0).parse();
}

Expr parse_expr(std::string_view text, int dimension) {
  std::vector<std::string> names(static_cast<std::size_t>(std::max(0, dimension)));
  for (int i = 0; i < dimension; ++i) names[i] = "x" + std::to_string(i + 1);
  return parse_expr(text, names);
}

// ---------------------------------------------------------------------------
// Printing

namespace {

// Precedence levels: Add/Sub 1, Mul/Div 2, Neg 3, Pow 4, atom 5. need is the
// minimum level printable without parentheses at this position.
void print_expr(const Expr& e, std::span<const std::string> names, int need,
                std::string& out) {
  auto wrap = [&](int level, auto&& body) {
    const bool parens = level < need;
    if (parens) out += '(';
    body();
    if (parens) out += ')';
  };
  switch (e.kind()) {
    case Expr::Kind::Constant: {
      const double v = e.constant_value();
      char buf[48];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      if (v < 0.0) {
        wrap(3, [&] { out += buf; });
      } else {
        out += buf;
      }
      return;
    }
    case Expr::Kind::Variable: {
      const int i = e.variable_index();
      if (i < static_cast<int>(names.size())) {
        out += names[i];
      } else {
        out += 'x';
        out += std::to_string(i + 1);
      }
      return;
    }
    case Expr::Kind::Unary: {
      if (e.unary_op() == UnaryOp::Neg) {
        wrap(3, [&] {
          out += '-';
          print_expr(e.lhs(), names, 3, out);
        });
        return;
      }
      const char* fn = "";
      switch (e.unary_op()) {
        case UnaryOp::Sin: fn = "sin"; break;
        case UnaryOp::Cos: fn = "cos"; break;
        case UnaryOp::Exp: fn = "exp"; break;
        case UnaryOp::Log: fn = "log"; break;
        case UnaryOp::Sqrt: fn = "sqrt"; break;
        case UnaryOp::Neg: break;
      }
      out += fn;
      out += '(';
      print_expr(e.lhs(), names, 1, out);
      out += ')';
      return;
    }
    case Expr::Kind::Power:
      wrap(4, [&] {
        print_expr(e.lhs(), names, 4, out);
        out += '^';
        out += std::to_string(e.exponent());
      });
      return;
    case Expr::Kind::Binary: {
      const BinaryOp op = e.binary_op();
      const int level = (op == BinaryOp::Add || op == BinaryOp::Sub) ? 1 : 2;
      wrap(level, [&] {
        print_expr(e.lhs(), names, level, out);
        switch (op) {
          case BinaryOp::Add: out += " + "; break;
          case BinaryOp::Sub: out += " - "; break;
          case BinaryOp::Mul: out += "*"; break;
          case BinaryOp::Div: out += "/"; break;
        }
        print_expr(e.rhs(), names, level + 1, out);
      });
      return;
    }
  }
}

}  // namespace

std::string Expr::to_string(std::span<const std::string> names) const {
  std::string out;
  print_expr(*this, names, 1, out);
  return out;
}

// ---------------------------------------------------------------------------
// Problem documents

namespace {

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

ProblemDoc parse_problem(std::string_view document) {
  ProblemDoc doc;
  bool saw_vars = false;
  bool saw_objective = false;
  bool saw_point = false;
  std::vector<std::string> used_names;

  std::size_t line_start = 0;
  while (line_start <= document.size()) {
    const std::size_t eol = document.find('\n', line_start);
    std::string_view line =
        document.substr(line_start, eol == std::string_view::npos
                                        ? std::string_view::npos
                                        : eol - line_start);
    const std::size_t base = line_start;
    line_start = (eol == std::string_view::npos) ? document.size() + 1 : eol + 1;

    const std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;

    const std::size_t kw_begin = line.find_first_not_of(" \t");
    std::size_t kw_end = kw_begin;
    while (kw_end < line.size() &&
           !std::isspace(static_cast<unsigned char>(line[kw_end])))
      ++kw_end;
    const std::string_view keyword = line.substr(kw_begin, kw_end - kw_begin);
    const std::string_view rest = line.substr(std::min(kw_end, line.size()));
    const std::size_t rest_base = base + std::min(kw_end, line.size());

    if (keyword == "vars") {
      if (saw_vars)
        throw ParseError("duplicate vars line", base + kw_begin);
      saw_vars = true;
      std::size_t p = 0;
      while (p < rest.size()) {
        while (p < rest.size() &&
               std::isspace(static_cast<unsigned char>(rest[p])))
          ++p;
        if (p >= rest.size()) break;
        std::size_t q = p;
        while (q < rest.size() &&
               !std::isspace(static_cast<unsigned char>(rest[q])))
          ++q;
        std::string name(rest.substr(p, q - p));
        if (!std::isalpha(static_cast<unsigned char>(name[0])) &&
            name[0] != '_')
          throw ParseError("invalid variable name '" + name + "'",
                           rest_base + p, {"identifier"});
        for (const auto& existing : doc.variables)
          if (existing == name)
            throw ParseError("duplicate variable name '" + name + "'",
                             rest_base + p);
        doc.variables.push_back(std::move(name));
        p = q;
      }
      if (doc.variables.empty())
        throw ParseError("vars line declares no variables", rest_base,
                         {"identifier"});
      continue;
    }

    if (!saw_vars)
      throw ParseError("'" + std::string(keyword) +
                           "' before the vars declaration",
                       base + kw_begin, {"vars"});

    if (keyword == "radius") {
      char* end = nullptr;
      const std::string text(rest);
      doc.radius = std::strtod(text.c_str(), &end);
      if (end == text.c_str() || trim(std::string_view(end)) != "" ||
          !(doc.radius > 0.0))
        throw ParseError("radius must be a positive real", rest_base,
                         {"positive number"});
      continue;
    }

    if (keyword == "objective") {
      if (saw_objective)
        throw ParseError("duplicate objective line", base + kw_begin);
      saw_objective = true;
      doc.objective = Parser(rest, doc.variables, rest_base).parse();
      continue;
    }

    if (keyword == "eq" || keyword == "ineq") {
      const std::size_t colon = rest.find(':');
      if (colon == std::string_view::npos)
        throw ParseError("expected '<name>: <expression>'", rest_base,
                         {"':'"});
      const std::string name(trim(rest.substr(0, colon)));
      if (name.empty())
        throw ParseError("constraint needs a name", rest_base,
                         {"identifier"});
      for (const auto& existing : used_names)
        if (existing == name)
          throw ParseError("duplicate constraint name '" + name + "'",
                           rest_base);
      used_names.push_back(name);
      Expr e = Parser(rest.substr(colon + 1), doc.variables,
                      rest_base + colon + 1)
                   .parse();
      if (keyword == "eq") {
        doc.equalities.push_back({name, std::move(e)});
      } else {
        doc.inequalities.push_back({name, std::move(e)});
      }
      continue;
    }

    if (keyword == "point") {
      if (saw_point)
        throw ParseError("duplicate point line", base + kw_begin);
      saw_point = true;
      const std::string text(rest);
      const char* p = text.c_str();
      doc.base_point.clear();
      for (;;) {
        char* end = nullptr;
        const double v = std::strtod(p, &end);
        if (end == p) break;
        doc.base_point.push_back(v);
        p = end;
      }
      if (trim(std::string_view(p)) != "" ||
          doc.base_point.size() != doc.variables.size())
        throw ParseError("point needs exactly one value per variable",
                         rest_base, {"number list"});
      continue;
    }

    throw ParseError("unknown directive '" + std::string(keyword) + "'",
                     base + kw_begin,
                     {"vars", "radius", "objective", "eq", "ineq", "point"});
  }

  if (!saw_vars) throw ParseError("missing vars line", document.size(), {"vars"});
  if (!saw_objective)
    throw ParseError("missing objective line", document.size(), {"objective"});
  if (doc.base_point.empty())
    doc.base_point.assign(doc.variables.size(), 0.0);

  // Every constraint must be active at the base point.
  for (const auto& group : {&doc.equalities, &doc.inequalities})
    for (const auto& ne : *group) {
      const double v = eval(ne.expr, doc.base_point);
      if (std::fabs(v) > 1e-10)
        throw ActivityError("constraint '" + ne.name +
                            "' is not active at the base point (value " +
                            std::to_string(v) + ")");
    }
  return doc;
}

}  // namespace nlpcanon
