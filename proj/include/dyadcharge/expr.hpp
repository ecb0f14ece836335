#pragma once

// A small arithmetic expression language for command-line integrands:
// variables x, y, z; operators + - * / ^ (right-associative); unary minus;
// functions sin, cos, sqrt; decimal literals; parentheses.

#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace dyadcharge {

class Expr {
 public:
  /// Throws ValidationError with the offending position on malformed input.
  static Expr parse(std::string_view text);
  static Expr constant(double value);

  double eval(std::span<const double> x) const;
  /// Symbolic partial derivative with respect to variable `var` (0 = x).
  /// Exponents must not depend on the variables.
  Expr derivative(int var) const;
  /// Highest variable index referenced, or -1 for a constant expression.
  int max_variable() const;
  std::string to_string() const;

  struct Node;

 private:
  explicit Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
  std::shared_ptr<const Node> root_;
};

}  // namespace dyadcharge
