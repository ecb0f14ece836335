#include <doctest.h>

#include <cmath>

#include "dyadcharge/holder.hpp"
#include "dyadcharge/rng.hpp"

using namespace dyadcharge;

namespace {

VertexField sampled(double (*f)(double), int res) {
  return sample_vertices([f](std::span<const double> x) { return f(x[0]); }, 1, res);
}

FaberCoeffs random_coeffs(int depth, std::uint64_t seed) {
  auto c = FaberCoeffs::zeros(1, depth);
  const NormalStream z(seed, 0);
  c.exceptional = z(0);
  std::uint64_t i = 1;
  for (auto& g : c.generations) {
    for (auto& a : g) a = z(i++);
  }
  return c;
}

double max_abs_diff(const VertexField& a, const VertexField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::vector<VertexField> corpus() {
  std::vector<VertexField> out;
  out.push_back(sampled([](double x) { return x; }, 8));
  out.push_back(sampled([](double x) { return std::sin(M_PI * x); }, 9));
  out.push_back(sampled([](double x) { return std::pow(std::abs(x - 1.0 / 3.0), 0.3); }, 10));
  out.push_back(sampled([](double x) { return x < 0.4 ? 0.0 : 1.0; }, 8));
  out.push_back(sampled([](double x) { return std::cos(40 * x) * x; }, 10));
  for (std::uint64_t s = 0; s < 4; ++s) out.push_back(levy_ciesielski(10, 8, s));
  out.push_back(synthesize_1d(random_coeffs(7, 4), 9, 0.25));
  return out;
}

}  // namespace

TEST_CASE("analysis of basis elements") {
  const auto lin = analyze_1d(sampled([](double x) { return x; }, 6));
  CHECK(lin.coeffs.exceptional == doctest::Approx(1.0));
  for (const auto& g : lin.coeffs.generations) {
    for (double a : g) CHECK(std::abs(a) < 1e-14);
  }
  const auto tent = analyze_1d(sample_vertices(
      [](std::span<const double> x) { return faber_eval_1d(HaarIndex::make_regular(CubeIndex::root(1), 1u), x[0]); }, 1, 6));
  CHECK(tent.coeffs.exceptional == doctest::Approx(0.0));
  CHECK(tent.coeffs.generations[0][0] == doctest::Approx(1.0));
  for (std::size_t n = 1; n < tent.coeffs.generations.size(); ++n) {
    for (double a : tent.coeffs.generations[n]) CHECK(std::abs(a) < 1e-14);
  }
  const auto shifted = analyze_1d(sampled([](double x) { return 2.0 + x * x; }, 5));
  CHECK(shifted.offset == 2.0);
  CHECK_THROWS_AS(analyze_1d(sampled([](double x) { return x; }, 4), 5), ValidationError);
}

TEST_CASE("synthesis matches term-by-term summation and inverts analysis") {
  const auto c = random_coeffs(6, 1);
  const auto v = synthesize_1d(c, 8);
  for (std::size_t j = 0; j < v.values().size(); j += 7) {
    const double x = static_cast<double>(j) / 256.0;
    double s = c.exceptional * faber_eval_1d(HaarIndex::make_exceptional(1), x);
    for (int n = 0; n < 6; ++n) {
      for (std::int64_t k = 0; k < (1 << n); ++k) {
        s += c.generations[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)] *
             faber_eval_1d(HaarIndex::make_regular(CubeIndex(n, {k}), 1u), x);
      }
    }
    CHECK(v[j] == doctest::Approx(s).epsilon(1e-13));
  }
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = random_coeffs(9, seed);
    const auto back = analyze_1d(synthesize_1d(r, 9)).coeffs;
    CHECK(std::abs(back.exceptional - r.exceptional) < 1e-12);
    for (std::size_t n = 0; n < r.generations.size(); ++n) {
      for (std::size_t k = 0; k < r.generations[n].size(); ++k) {
        CHECK(std::abs(back.generations[n][k] - r.generations[n][k]) < 1e-12);
      }
    }
  }
  const auto s = sampled([](double x) { return std::sin(M_PI * x); }, 10);
  const auto e = analyze_1d(s);
  CHECK(max_abs_diff(synthesize_1d(e.coeffs, 10, e.offset), s) < 1e-12);
  const auto only = [] {
    auto c = FaberCoeffs::zeros(1, 3);
    c.exceptional = 2.5;
    return c;
  }();
  const auto line = synthesize_1d(only, 5);
  for (std::size_t j = 0; j < 33; ++j) CHECK(line[j] == doctest::Approx(2.5 * j / 32.0));
}

TEST_CASE("sup norm of one generation") {
  for (int n = 0; n < 6; ++n) {
    auto c = FaberCoeffs::zeros(1, 6);
    double mx = 0.0;
    for (std::size_t k = 0; k < c.generations[static_cast<std::size_t>(n)].size(); ++k) {
      const double a = std::sin(3.0 * k + n) + 0.1;
      c.generations[static_cast<std::size_t>(n)][k] = a;
      mx = std::max(mx, std::abs(a));
    }
    const auto v = synthesize_1d(c, 8);
    double sup = 0.0;
    for (double x : v.values()) sup = std::max(sup, std::abs(x));
    CHECK(sup == doctest::Approx(std::pow(2.0, -0.5 * n - 1) * mx));
  }
}

TEST_CASE("analysis is linear") {
  const auto a = levy_ciesielski(8, 1, 0);
  const auto b = sampled([](double x) { return std::exp(x); }, 8);
  std::vector<double> mix(a.values().size());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 2.0 * a[i] - 3.0 * b[i];
  const auto ca = analyze_1d(a).coeffs, cb = analyze_1d(b).coeffs, cm = analyze_1d(VertexField(1, 8, mix)).coeffs;
  for (std::size_t n = 0; n < cm.generations.size(); ++n) {
    for (std::size_t k = 0; k < cm.generations[n].size(); ++k) {
      CHECK(cm.generations[n][k] == doctest::Approx(2.0 * ca.generations[n][k] - 3.0 * cb.generations[n][k]).scale(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("one-sided coefficient bound holds on the corpus") {
  for (const auto& f : corpus()) {
    for (double gamma : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const auto est = holder_estimate(f, gamma);
      CHECK(est.bound_holds);
      CHECK(est.bound_ratio <= 1.0 + 1e-12);
      CHECK(est.coefficient_norm >= 0.0);
      CHECK(est.grid_seminorm >= 0.0);
    }
  }
}

TEST_CASE("holder estimates") {
  const auto lin = holder_estimate(sampled([](double x) { return x; }, 8), 0.5);
  CHECK(lin.coefficient_norm == doctest::Approx(1.0));
  CHECK(lin.grid_seminorm == doctest::Approx(1.0));
  CHECK(std::isinf(lin.gamma_hat));

  // smooth functions: coefficients fall like 2^{-3n/2}, so gamma_hat >= 0.99 once capped
  for (auto f : {+[](double x) { return std::sin(M_PI * x); }, +[](double x) { return std::exp(2 * x); },
                 +[](double x) { return x * x * x - x; }}) {
    const auto est = holder_estimate(sampled(f, 12), 0.5);
    CHECK(std::min(est.gamma_hat, 1.0) >= 0.99);
    CHECK(0.5 - est.gamma_hat <= -1.5 + 0.1);
  }
  const auto rough = holder_estimate(levy_ciesielski(12, 3, 0), 0.4);
  CHECK(rough.gamma_hat < 0.5);
  CHECK(rough.gamma_hat > 0.2);
  CHECK(rough.gens.front() == 2);
  CHECK(rough.gens.back() == 10);
  CHECK_THROWS_AS(holder_estimate(levy_ciesielski(4, 0), 1.0), ValidationError);
}

TEST_CASE("axis-pair seminorm in two dimensions") {
  const auto f = sample_vertices([](std::span<const double> x) { return x[0] + 2.0 * x[1]; }, 2, 5);
  CHECK(axis_holder_seminorm(f, 0.5) == doctest::Approx(2.0));
  const auto g = sample_vertices([](std::span<const double> x) { return std::sqrt(x[0]); }, 2, 6);
  CHECK(axis_holder_seminorm(g, 0.5) == doctest::Approx(1.0));
}
