#include <doctest.h>

#include <cmath>

#include "dyadcharge/dyadic.hpp"
#include "dyadcharge/errors.hpp"

using namespace dyadcharge;

namespace {

// Midpoint-rule inner product on a fine uniform grid; Haar functions are
// constant on generation-(n+1) cells, so level 6 is exact for n <= 5.
double haar_inner(const HaarIndex& a, const HaarIndex& b, int dim, int level) {
  const std::size_t side = static_cast<std::size_t>(pow2(level));
  std::size_t total = 1;
  for (int i = 0; i < dim; ++i) total *= side;
  std::vector<std::int64_t> pos(static_cast<std::size_t>(dim));
  std::vector<double> x(static_cast<std::size_t>(dim));
  double s = 0.0;
  for (std::size_t lin = 0; lin < total; ++lin) {
    decode_linear(lin, side, pos);
    for (int i = 0; i < dim; ++i) x[static_cast<std::size_t>(i)] = (pos[static_cast<std::size_t>(i)] + 0.5) / side;
    s += haar_eval(a, x) * haar_eval(b, x);
  }
  return s / static_cast<double>(total);
}

std::vector<HaarIndex> haar_family(int dim, int max_gen) {
  std::vector<HaarIndex> out{HaarIndex::make_exceptional(dim)};
  for (int n = 0; n <= max_gen; ++n) {
    for (std::size_t lin = 0; lin < cube_count(dim, n); ++lin) {
      for (unsigned e = 1; e <= pattern_count(dim); ++e) {
        out.push_back(HaarIndex::make_regular(CubeIndex::from_linear(dim, n, lin), e));
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("cube index linearization and hierarchy") {
  for (int d = 1; d <= 3; ++d) {
    for (int n = 0; n <= 3; ++n) {
      for (std::size_t lin = 0; lin < cube_count(d, n); ++lin) {
        const auto k = CubeIndex::from_linear(d, n, lin);
        CHECK(k.linear() == lin);
        for (unsigned c = 0; c < pow2(d); ++c) {
          const auto child = k.child(c);
          CHECK(child.parent() == k);
          CHECK(k.contains(child));
          CHECK(child.volume() == doctest::Approx(k.volume() / pow2(d)));
        }
      }
    }
  }
  const CubeIndex k(2, {1, 3});
  CHECK(k.linear() == 1 * 4 + 3);
  CHECK(k.lower_corner() == std::vector<double>{0.25, 0.75});
  CHECK(k.center() == std::vector<double>{0.375, 0.875});
  CHECK(!CubeIndex(1, {0, 0}).contains(CubeIndex(1, {0, 1})));
  CHECK_THROWS_AS(CubeIndex(1, {2, 0}), ValidationError);
}

TEST_CASE("haar functions take the documented values") {
  const double x[] = {0.25, 0.75};
  const int e11[] = {1, 1};
  CHECK(haar_eval(HaarIndex::make_regular(CubeIndex::root(2), e11), x) == -1.0);
  const int e10[] = {1, 0};
  CHECK(haar_eval(HaarIndex::make_regular(CubeIndex::root(2), e10), x) == 1.0);
  const int e01[] = {0, 1};
  CHECK(haar_eval(HaarIndex::make_regular(CubeIndex::root(2), e01), x) == -1.0);
  const double y[] = {0.6};
  const auto h = HaarIndex::make_regular(CubeIndex(1, {1}), 1u);
  CHECK(haar_eval(h, y) == doctest::Approx(std::sqrt(2.0)));
  const double z[] = {0.3};
  CHECK(haar_eval(h, z) == 0.0);
  const double one[] = {1.0};
  CHECK(haar_eval(HaarIndex::make_regular(CubeIndex::root(1), 1u), one) == -1.0);
}

TEST_CASE("haar system is orthonormal") {
  for (int d = 1; d <= 2; ++d) {
    const auto fam = haar_family(d, d == 1 ? 2 : 1);
    for (std::size_t i = 0; i < fam.size(); ++i) {
      for (std::size_t j = i; j < fam.size(); ++j) {
        const double ip = haar_inner(fam[i], fam[j], d, d == 1 ? 6 : 4);
        CHECK(ip == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12).scale(1.0));
      }
    }
  }
}

TEST_CASE("faber functions integrate haar functions") {
  CHECK(faber_eval_1d(HaarIndex::make_regular(CubeIndex::root(1), 1u), 0.5) == doctest::Approx(0.5));
  CHECK(faber_eval_1d(HaarIndex::make_exceptional(1), 0.3) == doctest::Approx(0.3));
  for (int n = 0; n <= 3; ++n) {
    for (std::int64_t k = 0; k < (1 << n); ++k) {
      const auto idx = HaarIndex::make_regular(CubeIndex(n, {k}), 1u);
      // running midpoint integral of the Haar function at level 10
      const int level = 10;
      const double h = std::ldexp(1.0, -level);
      double acc = 0.0;
      for (int j = 0; j < (1 << level); ++j) {
        const double xm[] = {(j + 0.5) * h};
        acc += haar_eval(idx, xm) * h;
        CHECK(faber_eval_1d(idx, (j + 1) * h) == doctest::Approx(acc).scale(1.0).epsilon(1e-12));
      }
      const double peak = std::ldexp(std::pow(2.0, -0.5 * n), -1);
      CHECK(faber_eval_1d(idx, (k + 0.5) * std::ldexp(1.0, -n)) == doctest::Approx(peak));
    }
  }
}

TEST_CASE("rectangular increments and vitali variation") {
  const auto f = sample_vertices([](std::span<const double> x) { return x[0] * x[1]; }, 2, 4);
  const std::int64_t lo[] = {2, 4}, hi[] = {10, 16};
  CHECK(rect_increment(f, lo, hi) == doctest::Approx((8.0 / 16) * (12.0 / 16)));
  const double rlo[] = {0.125, 0.25}, rhi[] = {0.625, 1.0};
  CHECK(rect_increment_at(f, rlo, rhi) == doctest::Approx(0.5 * 0.75));
  const double off[] = {0.1, 0.25};
  CHECK_THROWS_AS(rect_increment_at(f, off, rhi), ValidationError);

  auto indicator = [](double a, double b) {
    return [a, b](std::span<const double> x) {
      return (x[0] >= a && x[0] <= b && x[1] >= a && x[1] <= b) ? 1.0 : 0.0;
    };
  };
  for (int n = 2; n <= 6; ++n) {
    CHECK(vitali_variation_dyadic(sample_vertices(indicator(0.25, 0.75), 2, n), n) == 4.0);
  }
  // only the corner (1/2,1/2) is interior to the unit square
  CHECK(vitali_variation_dyadic(sample_vertices(indicator(0.0, 0.5), 2, 4), 4) == 1.0);

  const auto diamond = sample_vertices(
      [](std::span<const double> x) { return std::abs(x[0] - 0.5) + std::abs(x[1] - 0.5) <= 0.3 ? 1.0 : 0.0; }, 2, 7);
  const double v3 = vitali_variation_dyadic(diamond, 3);
  const double v5 = vitali_variation_dyadic(diamond, 5);
  const double v7 = vitali_variation_dyadic(diamond, 7);
  CHECK(v5 > 1.5 * v3);
  CHECK(v7 > 1.5 * v5);
}

TEST_CASE("dyadic figures and their geometry") {
  const DyadicFigure l({CubeIndex(1, {0, 0}), CubeIndex(1, {0, 1}), CubeIndex(1, {1, 0})});
  const auto g = figure_geometry(l);
  CHECK(g.volume == doctest::Approx(0.75));
  CHECK(g.perimeter == doctest::Approx(4.0));
  CHECK(g.diameter == doctest::Approx(std::sqrt(2.0)));
  CHECK(g.reg == doctest::Approx(0.75 / (4.0 * std::sqrt(2.0))));
  CHECK(g.isop == doctest::Approx(std::sqrt(0.75) / 4.0));

  const auto unit = figure_geometry(DyadicFigure({CubeIndex::root(3)}));
  CHECK(unit.perimeter == doctest::Approx(6.0));
  CHECK(unit.diameter == doctest::Approx(std::sqrt(3.0)));

  std::vector<CubeIndex> quarters;
  for (unsigned c = 0; c < 4; ++c) quarters.push_back(CubeIndex::root(2).child(c));
  CHECK(DyadicFigure(quarters).normalized() == std::vector<CubeIndex>{CubeIndex::root(2)});
  CHECK(DyadicFigure(quarters) == DyadicFigure({CubeIndex::root(2)}));
  CHECK_THROWS_AS(DyadicFigure({CubeIndex::root(2), CubeIndex(1, {0, 0})}), ValidationError);
}

TEST_CASE("gauss legendre rules are exact to degree 2q-1") {
  for (int q = 1; q <= 10; ++q) {
    const auto rule = gauss_legendre(q);
    for (int p = 0; p <= 2 * q - 1; ++p) {
      double s = 0.0;
      for (int i = 0; i < q; ++i) s += rule.weights[static_cast<std::size_t>(i)] * std::pow(rule.nodes[static_cast<std::size_t>(i)], p);
      CHECK(s == doctest::Approx(1.0 / (p + 1)).epsilon(1e-13));
    }
  }
}

TEST_CASE("cell averages of polynomials are exact") {
  const auto c = sample_cell_averages([](std::span<const double> x) { return x[0] * x[0] * x[1]; }, 2, 3);
  const double h = 0.125;
  for (std::size_t lin = 0; lin < c.values().size(); ++lin) {
    const double a = static_cast<double>(lin / 8) * h, b = static_cast<double>(lin % 8) * h;
    const double exact = ((std::pow(a + h, 3) - std::pow(a, 3)) / 3.0) * ((std::pow(b + h, 2) - b * b) / 2.0) / (h * h);
    CHECK(c[lin] == doctest::Approx(exact).epsilon(1e-13));
  }
}
