#include <doctest.h>

#include <cmath>
#include <vector>

#include "dyadcharge/errors.hpp"
#include "dyadcharge/expr.hpp"
#include "dyadcharge/rng.hpp"

using namespace dyadcharge;

namespace {

double ev(const std::string& text, std::vector<double> x = {0.3, 0.7, 0.2}) { return Expr::parse(text).eval(x); }

}  // namespace

TEST_CASE("expression grammar") {
  CHECK(ev("1 + 2 * 3") == 7.0);
  CHECK(ev("(1 + 2) * 3") == 9.0);
  CHECK(ev("2 ^ 3 ^ 2") == 512.0);
  CHECK(ev("-2 ^ 2") == -4.0);
  CHECK(ev("2 * -3") == -6.0);
  CHECK(ev("8 / 4 / 2") == 1.0);
  CHECK(ev("1 - 2 - 3") == -4.0);
  CHECK(ev("1.5e1 + .5") == 15.5);
  CHECK(ev("x * y + z") == doctest::Approx(0.3 * 0.7 + 0.2));
  CHECK(ev("sin(x)^2 + cos(x)^2") == doctest::Approx(1.0));
  CHECK(ev("sqrt(4 * y)") == doctest::Approx(std::sqrt(2.8)));
  CHECK(Expr::parse("3").max_variable() == -1);
  CHECK(Expr::parse("x + z").max_variable() == 2);
  for (const char* bad : {"", "1 +", "(x", "x y", "foo(x)", "sin x", "2 $ 3", "x)"}) {
    CHECK_THROWS_AS(Expr::parse(bad), ValidationError);
  }
  const double short_x[] = {0.5};
  CHECK_THROWS_AS(Expr::parse("y").eval(short_x), ValidationError);
}

TEST_CASE("symbolic derivatives agree with central differences") {
  const std::vector<std::string> suite{"x^2*y - x*y^2", "sin(x*y) / (1 + x^2)", "sqrt(1 + x^2 + y^2)",
                                       "cos(x)^3 - 2*x/y", "-(x - y)^4 + 3", "x^2.5 * y"};
  const std::vector<double> p{0.37, 0.81};
  const double h = 1e-5;
  for (const auto& s : suite) {
    const auto e = Expr::parse(s);
    for (int v = 0; v < 2; ++v) {
      auto up = p, down = p;
      up[static_cast<std::size_t>(v)] += h;
      down[static_cast<std::size_t>(v)] -= h;
      const double fd = (e.eval(up) - e.eval(down)) / (2 * h);
      CHECK(e.derivative(v).eval(p) == doctest::Approx(fd).epsilon(1e-7));
    }
    // the printed form parses back to the same function
    CHECK(Expr::parse(e.to_string()).eval(p) == doctest::Approx(e.eval(p)).epsilon(1e-15));
  }
  CHECK(Expr::parse("x^2*y").derivative(2).to_string() == "0");
  CHECK_THROWS_AS(Expr::parse("2^x").derivative(0), ValidationError);
}

TEST_CASE("philox known-answer vectors") {
  using C = Philox4x32::Counter;
  CHECK(Philox4x32::apply({0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32::apply({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32::apply({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("normal streams") {
  const NormalStream s(42, 3);
  std::vector<double> block(1001);
  s.fill(block, 17);
  for (std::size_t i = 0; i < block.size(); ++i) CHECK(block[i] == s(17 + i));
  CHECK(NormalStream(42, 3)(5) == s(5));
  CHECK(NormalStream(42, 4)(5) != s(5));
  CHECK(NormalStream(43, 3)(5) != s(5));

  const std::size_t n = 200000;
  std::vector<double> z(n);
  NormalStream(7, 0).fill(z);
  double m1 = 0, m2 = 0, m4 = 0;
  for (double v : z) {
    m1 += v / n;
    m2 += v * v / n;
    m4 += v * v * v * v / n;
  }
  CHECK(std::abs(m1) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(m2 - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(m4 - 3.0) < 4.0 * std::sqrt(96.0 / n));

  CHECK(uniform_open(0) > 0.0);
  CHECK(uniform_open(~std::uint64_t{0}) < 1.0);
}
