#include "dyadcharge/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "dyadcharge/errors.hpp"

namespace dyadcharge {

enum class Op { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Sqrt };

struct Expr::Node {
  Op op;
  double value = 0.0;
  int var = 0;
  std::shared_ptr<const Node> a;
  std::shared_ptr<const Node> b;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr num(double v) { return std::make_shared<const Expr::Node>(Expr::Node{Op::Num, v, 0, nullptr, nullptr}); }
NodePtr var(int i) { return std::make_shared<const Expr::Node>(Expr::Node{Op::Var, 0.0, i, nullptr, nullptr}); }

bool is_num(const NodePtr& n, double v) { return n->op == Op::Num && n->value == v; }

NodePtr unary(Op op, NodePtr a) {
  if (op == Op::Neg && a->op == Op::Num) return num(-a->value);
  return std::make_shared<const Expr::Node>(Expr::Node{op, 0.0, 0, std::move(a), nullptr});
}

// Binary node with light constant folding so derivatives stay readable.
NodePtr binary(Op op, NodePtr a, NodePtr b) {
  switch (op) {
    case Op::Add:
      if (is_num(a, 0)) return b;
      if (is_num(b, 0)) return a;
      break;
    case Op::Sub:
      if (is_num(b, 0)) return a;
      if (is_num(a, 0)) return unary(Op::Neg, b);
      break;
    case Op::Mul:
      if (is_num(a, 0) || is_num(b, 0)) return num(0);
      if (is_num(a, 1)) return b;
      if (is_num(b, 1)) return a;
      break;
    case Op::Div:
      if (is_num(a, 0)) return num(0);
      if (is_num(b, 1)) return a;
      break;
    case Op::Pow:
      if (is_num(b, 0)) return num(1);
      if (is_num(b, 1)) return a;
      break;
    default:
      break;
  }
  if (a->op == Op::Num && b->op == Op::Num) {
    switch (op) {
      case Op::Add: return num(a->value + b->value);
      case Op::Sub: return num(a->value - b->value);
      case Op::Mul: return num(a->value * b->value);
      case Op::Div: return num(a->value / b->value);
      case Op::Pow: return num(std::pow(a->value, b->value));
      default: break;
    }
  }
  return std::make_shared<const Expr::Node>(Expr::Node{op, 0.0, 0, std::move(a), std::move(b)});
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    auto n = expr();
    skip();
    if (pos_ != text_.size()) fail("unexpected character");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    std::ostringstream msg;
    msg << "expression error at position " << pos_ << ": " << what << " in \"" << text_ << "\"";
    throw ValidationError(msg.str());
  }

  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    auto lhs = term();
    for (;;) {
      if (accept('+')) lhs = binary(Op::Add, lhs, term());
      else if (accept('-')) lhs = binary(Op::Sub, lhs, term());
      else return lhs;
    }
  }

  NodePtr term() {
    auto lhs = signed_factor();
    for (;;) {
      if (accept('*')) lhs = binary(Op::Mul, lhs, signed_factor());
      else if (accept('/')) lhs = binary(Op::Div, lhs, signed_factor());
      else return lhs;
    }
  }

  NodePtr signed_factor() {
    if (accept('-')) return unary(Op::Neg, signed_factor());
    if (accept('+')) return signed_factor();
    return power();
  }

  NodePtr power() {
    auto base = primary();
    if (accept('^')) return binary(Op::Pow, base, signed_factor());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      auto n = expr();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const std::string rest(text_.substr(pos_));
      char* end = nullptr;
      const double v = std::strtod(rest.c_str(), &end);
      if (end == rest.c_str()) fail("bad number");
      pos_ += static_cast<std::size_t>(end - rest.c_str());
      return num(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      const std::string_view name = text_.substr(start, pos_ - start);
      if (name == "x") return var(0);
      if (name == "y") return var(1);
      if (name == "z") return var(2);
      Op op;
      if (name == "sin") op = Op::Sin;
      else if (name == "cos") op = Op::Cos;
      else if (name == "sqrt") op = Op::Sqrt;
      else {
        pos_ = start;
        fail("unknown identifier '" + std::string(name) + "'");
      }
      if (!accept('(')) fail("expected '(' after function name");
      auto arg = expr();
      if (!accept(')')) fail("expected ')'");
      return unary(op, std::move(arg));
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

double eval_node(const Expr::Node& n, std::span<const double> x) {
  switch (n.op) {
    case Op::Num: return n.value;
    case Op::Var:
      if (static_cast<std::size_t>(n.var) >= x.size()) throw ValidationError("expression uses a variable beyond the dimension");
      return x[static_cast<std::size_t>(n.var)];
    case Op::Neg: return -eval_node(*n.a, x);
    case Op::Add: return eval_node(*n.a, x) + eval_node(*n.b, x);
    case Op::Sub: return eval_node(*n.a, x) - eval_node(*n.b, x);
    case Op::Mul: return eval_node(*n.a, x) * eval_node(*n.b, x);
    case Op::Div: return eval_node(*n.a, x) / eval_node(*n.b, x);
    case Op::Pow: return std::pow(eval_node(*n.a, x), eval_node(*n.b, x));
    case Op::Sin: return std::sin(eval_node(*n.a, x));
    case Op::Cos: return std::cos(eval_node(*n.a, x));
    case Op::Sqrt: return std::sqrt(eval_node(*n.a, x));
  }
  return 0.0;
}

bool depends_on_vars(const NodePtr& n) {
  if (!n) return false;
  if (n->op == Op::Var) return true;
  return depends_on_vars(n->a) || depends_on_vars(n->b);
}

NodePtr derive(const NodePtr& n, int v) {
  switch (n->op) {
    case Op::Num: return num(0);
    case Op::Var: return num(n->var == v ? 1 : 0);
    case Op::Neg: return unary(Op::Neg, derive(n->a, v));
    case Op::Add: return binary(Op::Add, derive(n->a, v), derive(n->b, v));
    case Op::Sub: return binary(Op::Sub, derive(n->a, v), derive(n->b, v));
    case Op::Mul:
      return binary(Op::Add, binary(Op::Mul, derive(n->a, v), n->b), binary(Op::Mul, n->a, derive(n->b, v)));
    case Op::Div:
      return binary(Op::Div,
                    binary(Op::Sub, binary(Op::Mul, derive(n->a, v), n->b), binary(Op::Mul, n->a, derive(n->b, v))),
                    binary(Op::Pow, n->b, num(2)));
    case Op::Pow: {
      if (depends_on_vars(n->b)) throw ValidationError("cannot differentiate a variable exponent");
      const auto lowered = binary(Op::Sub, n->b, num(1));
      return binary(Op::Mul, binary(Op::Mul, n->b, binary(Op::Pow, n->a, lowered)), derive(n->a, v));
    }
    case Op::Sin: return binary(Op::Mul, unary(Op::Cos, n->a), derive(n->a, v));
    case Op::Cos: return unary(Op::Neg, binary(Op::Mul, unary(Op::Sin, n->a), derive(n->a, v)));
    case Op::Sqrt: return binary(Op::Div, derive(n->a, v), binary(Op::Mul, num(2), n));
  }
  return num(0);
}

int max_var(const NodePtr& n) {
  if (!n) return -1;
  if (n->op == Op::Var) return n->var;
  return std::max(max_var(n->a), max_var(n->b));
}

void print(const Expr::Node& n, std::ostringstream& out) {
  static const char* names[] = {"x", "y", "z"};
  switch (n.op) {
    case Op::Num: out << n.value; return;
    case Op::Var: out << names[n.var]; return;
    case Op::Neg: out << "(-"; print(*n.a, out); out << ")"; return;
    case Op::Sin: out << "sin("; print(*n.a, out); out << ")"; return;
    case Op::Cos: out << "cos("; print(*n.a, out); out << ")"; return;
    case Op::Sqrt: out << "sqrt("; print(*n.a, out); out << ")"; return;
    default: break;
  }
  const char sym = n.op == Op::Add ? '+' : n.op == Op::Sub ? '-' : n.op == Op::Mul ? '*' : n.op == Op::Div ? '/' : '^';
  out << "(";
  print(*n.a, out);
  out << sym;
  print(*n.b, out);
  out << ")";
}

}  // namespace

Expr Expr::parse(std::string_view text) { return Expr(Parser(text).parse()); }

Expr Expr::constant(double value) { return Expr(num(value)); }

double Expr::eval(std::span<const double> x) const { return eval_node(*root_, x); }

Expr Expr::derivative(int var) const { return Expr(derive(root_, var)); }

int Expr::max_variable() const { return max_var(root_); }

std::string Expr::to_string() const {
  std::ostringstream out;
  out.precision(17);
  print(*root_, out);
  return out.str();
}

}  // namespace dyadcharge
