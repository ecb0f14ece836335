#include <doctest.h>

#include <cmath>

#include "dyadcharge/charge.hpp"
#include "dyadcharge/rng.hpp"

using namespace dyadcharge;

namespace {

CubeCharge random_charge(int dim, int depth, std::uint64_t seed) {
  auto a = CubeArrays::zeros(dim, depth);
  NormalStream(seed, static_cast<std::uint64_t>(dim)).fill(a.values.back());
  a.sum_up();
  return CubeCharge(std::move(a));
}

// Piecewise-constant density on level-`res` cells with |rho| <= 1.
CellField random_density(int dim, int res, std::uint64_t seed) {
  std::vector<double> v(cube_count(dim, res));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 2.0 * uniform_open(philox_bits(seed, 7, i)) - 1.0;
  return CellField(dim, res, std::move(v));
}

// <rho, h> by summing over the density's own cells.
double haar_pairing(const CellField& rho, const HaarIndex& h) {
  const int d = rho.dim();
  const std::size_t side = rho.side();
  std::vector<std::int64_t> pos(static_cast<std::size_t>(d));
  std::vector<double> x(static_cast<std::size_t>(d));
  const double vol = std::pow(static_cast<double>(side), -d);
  double s = 0.0;
  for (std::size_t lin = 0; lin < rho.values().size(); ++lin) {
    decode_linear(lin, side, pos);
    for (int i = 0; i < d; ++i) x[static_cast<std::size_t>(i)] = (pos[static_cast<std::size_t>(i)] + 0.5) / static_cast<double>(side);
    s += rho[lin] * haar_eval(h, x) * vol;
  }
  return s;
}

double max_abs_diff(const CubeCharge& a, const CubeCharge& b) {
  double m = 0.0;
  for (int n = 0; n <= a.depth(); ++n) {
    for (std::size_t i = 0; i < a.generation(n).size(); ++i) {
      m = std::max(m, std::abs(a.generation(n)[i] - b.generation(n)[i]));
    }
  }
  return m;
}

}  // namespace

TEST_CASE("additivity is enforced") {
  CHECK_NOTHROW(charge_from_cube_values(1, 1, {{3.0}, {1.0, 2.0}}));
  CHECK_THROWS_AS(charge_from_cube_values(1, 1, {{3.5}, {1.0, 2.0}}), AdditivityViolation);
  CHECK_THROWS_AS(charge_from_cube_values(1, 1, {{3.0}, {1.0}}), ValidationError);
  CHECK_THROWS_AS(charge_from_cube_values(1, 0, {{NAN}}), ValidationError);
  try {
    charge_from_cube_values(2, 1, {{1.0}, {0.25, 0.25, 0.25, 0.5}});
    FAIL("expected a violation");
  } catch (const AdditivityViolation& e) {
    CHECK(e.worst() == CubeIndex::root(2));
    CHECK(e.residual() == doctest::Approx(0.25));
  }
}

TEST_CASE("lebesgue and increment charges measure volume") {
  const auto leb = lebesgue_charge(3, 3);
  CHECK(leb.value(CubeIndex(2, {1, 2, 3})) == doctest::Approx(1.0 / 64));
  const auto inc = charge_from_increments(
      sample_vertices([](std::span<const double> x) { return x[0] * x[1] + x[0] * x[0]; }, 2, 5), 5);
  CHECK(max_abs_diff(inc, lebesgue_charge(2, 5)) < 1e-14);
  const DyadicFigure l({CubeIndex(1, {0, 0}), CubeIndex(1, {0, 1}), CubeIndex(1, {1, 0})});
  CHECK(eval_figure(lebesgue_charge(2, 3), l) == doctest::Approx(0.75));
}

TEST_CASE("faber round trip on random charges") {
  for (int d = 1; d <= 3; ++d) {
    for (int depth = 0; depth <= 5; ++depth) {
      const auto cc = random_charge(d, depth, 100 + static_cast<std::uint64_t>(depth));
      const auto back = from_faber_coeffs(to_faber_coeffs(cc));
      CHECK(max_abs_diff(cc, back) <= 1e-12 * cc.scale());
    }
  }
}

TEST_CASE("faber coefficients of a density are its haar pairings") {
  for (int d = 1; d <= 2; ++d) {
    const int res = d == 1 ? 6 : 4;
    const auto rho = random_density(d, res, 5);
    const auto fc = to_faber_coeffs(charge_from_density(rho, res));
    CHECK(fc.exceptional == doctest::Approx(haar_pairing(rho, HaarIndex::make_exceptional(d))));
    for (int n = 0; n < res; ++n) {
      for (std::size_t lin = 0; lin < cube_count(d, n); ++lin) {
        for (unsigned e = 1; e <= pattern_count(d); ++e) {
          const auto h = HaarIndex::make_regular(CubeIndex::from_linear(d, n, lin), e);
          CHECK(fc.coefficient(h) == doctest::Approx(haar_pairing(rho, h)).scale(1.0).epsilon(1e-13));
        }
      }
    }
  }
}

TEST_CASE("density coefficients obey the 2^{-nd/2} bound") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const int d = 1 + static_cast<int>(s % 3);
    const int res = d == 3 ? 4 : 6;
    const auto fc = to_faber_coeffs(charge_from_density(random_density(d, res, s), res));
    for (int n = 0; n < res; ++n) {
      const double bound = std::pow(2.0, -0.5 * n * d);
      for (double a : fc.generations[static_cast<std::size_t>(n)]) CHECK(std::abs(a) <= bound * (1 + 1e-12));
    }
  }
}

TEST_CASE("flux charges") {
  const auto radial = flux_charge([](std::span<const double> x, std::span<double> out) {
    out[0] = x[0];
    out[1] = x[1];
  }, 2, 4);
  for (int n = 0; n <= 4; ++n) {
    for (double v : radial.generation(n)) CHECK(v == doctest::Approx(2.0 * std::ldexp(1.0, -2 * n)));
  }
  const auto constant = flux_charge([](std::span<const double>, std::span<double> out) {
    out[0] = 3.0;
    out[1] = -1.0;
    out[2] = 0.5;
  }, 3, 3);
  for (int n = 0; n <= 3; ++n) {
    for (double v : constant.generation(n)) CHECK(std::abs(v) < 1e-14);
  }
  // cubic field: divergence 3x^2 + 3y^2, integral over a cube by hand
  const auto cubic = flux_charge([](std::span<const double> x, std::span<double> out) {
    out[0] = x[0] * x[0] * x[0];
    out[1] = x[1] * x[1] * x[1];
  }, 2, 3);
  const CubeIndex k(3, {2, 5});
  const double a = 0.25, b = 0.375, c = 0.625, d = 0.75;
  const double exact = (std::pow(b, 3) - std::pow(a, 3)) * (d - c) + (std::pow(d, 3) - std::pow(c, 3)) * (b - a);
  CHECK(cubic.value(k) == doctest::Approx(exact).epsilon(1e-13));
  CHECK_THROWS_AS(flux_charge([](std::span<const double>, std::span<double> out) { out[0] = NAN; }, 1, 2),
                  NonFiniteSample);
}

TEST_CASE("fractional profile and holder control") {
  const auto leb = lebesgue_charge(2, 6);
  const double gamma = 0.5;
  const double delta = fractional_delta(2, gamma);
  CHECK(delta == doctest::Approx(0.75));
  const auto p = fractional_profile(leb, gamma);
  CHECK(p.holder_constant == doctest::Approx(1.0));
  CHECK(p.consistent);
  CHECK(p.decay_slope == -std::numeric_limits<double>::infinity());
  const auto ok = holder_control_check(leb, 1.0, gamma);
  CHECK(ok.holds);
  const auto bad = holder_control_check(leb, 0.5, gamma);
  CHECK(!bad.holds);
  CHECK(*bad.worst == CubeIndex::root(2));

  // a smooth density decays no slower than the predicted slope
  const auto rho = charge_from_density(
      sample_cell_averages([](std::span<const double> x) { return std::exp(x[0] - 2 * x[1]); }, 2, 7), 7);
  const auto q = fractional_profile(rho, 0.9);
  CHECK(q.consistent);
}

TEST_CASE("json round trip") {
  const auto cc = random_charge(2, 3, 9);
  const auto back = cube_charge_from_json(nlohmann::json::parse(to_json(cc).dump()));
  CHECK(max_abs_diff(cc, back) == 0.0);
  const auto fc = to_faber_coeffs(cc);
  const auto fc2 = faber_coeffs_from_json(nlohmann::json::parse(to_json(fc).dump()));
  CHECK(fc2.generations == fc.generations);
  CHECK(fc2.exceptional == fc.exceptional);
  CHECK_THROWS_AS(cube_charge_from_json(nlohmann::json{{"kind", "faber_coeffs"}}), ValidationError);
}

TEST_CASE("fit_slope") {
  const double xs[] = {0, 1, 2, 3};
  const double ys[] = {1, 3, 5, 7};
  CHECK(fit_slope(xs, ys) == doctest::Approx(2.0));
  CHECK(std::isnan(fit_slope(std::span<const double>(xs, 1), std::span<const double>(ys, 1))));
}
