#include "dyadcharge/holder.hpp"

#include <cmath>
#include <limits>

#include "dyadcharge/parallel.hpp"
#include "dyadcharge/rng.hpp"

namespace dyadcharge {

namespace {

void require_1d(const VertexField& f) {
  if (f.dim() != 1) throw ValidationError("expected a one-dimensional field");
}

}  // namespace

SchauderExpansion analyze_1d(const VertexField& f, int depth) {
  require_1d(f);
  const int res = f.resolution();
  if (depth < 0) depth = res;
  if (depth > res) throw ValidationError("resolution " + std::to_string(res) + " is too shallow for depth " + std::to_string(depth));
  SchauderExpansion out;
  out.offset = f[0];
  out.coeffs = FaberCoeffs::zeros(1, depth);
  const std::size_t last = static_cast<std::size_t>(pow2(res));
  out.coeffs.exceptional = f[last] - f[0];
  for (int n = 0; n < depth; ++n) {
    const std::size_t step = last >> n;
    const double scale = std::ldexp(std::pow(2.0, 0.5 * n), 1);
    auto& gen = out.coeffs.generations[static_cast<std::size_t>(n)];
    for (std::size_t k = 0; k < gen.size(); ++k) {
      const std::size_t l = k * step;
      // the offset cancels in the second difference
      gen[k] = scale * (f[l + step / 2] - 0.5 * (f[l] + f[l + step]));
    }
  }
  return out;
}

VertexField synthesize_1d(const FaberCoeffs& coeffs, int resolution, double offset) {
  if (coeffs.dim != 1) throw ValidationError("expected one-dimensional coefficients");
  coeffs.check_shape();
  if (resolution < coeffs.depth) throw ValidationError("resolution must be at least the coefficient depth");
  const std::size_t last = static_cast<std::size_t>(pow2(resolution));
  std::vector<double> v(last + 1, 0.0);
  v[last] = coeffs.exceptional;
  // Each generation is linear between the vertices of the previous one, so
  // midpoints interpolate and then receive the tent peaks 2^{-n/2-1} a_{n,k}.
  for (int n = 0; n < resolution; ++n) {
    const std::size_t step = last >> n;
    const bool has = n < coeffs.depth;
    const double peak = std::ldexp(std::pow(2.0, -0.5 * n), -1);
    for (std::size_t k = 0; k < pow2(n); ++k) {
      const std::size_t l = k * step;
      double mid = 0.5 * (v[l] + v[l + step]);
      if (has) mid += peak * coeffs.generations[static_cast<std::size_t>(n)][k];
      v[l + step / 2] = mid;
    }
  }
  if (offset != 0.0) {
    for (auto& x : v) x += offset;
  }
  return VertexField(1, resolution, std::move(v));
}

double fitted_holder_exponent(const FaberCoeffs& coeffs) {
  std::vector<double> xs, ys;
  bool any_nonzero = false;
  for (int n = 2; n <= coeffs.depth - 2; ++n) {
    double m = 0.0;
    for (double a : coeffs.generations[static_cast<std::size_t>(n)]) m = std::max(m, std::abs(a));
    if (m > 0.0) {
      any_nonzero = true;
      xs.push_back(n);
      ys.push_back(std::log2(m));
    }
  }
  if (!any_nonzero) return std::numeric_limits<double>::infinity();
  if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  return 0.5 - fit_slope(xs, ys);
}

HolderEstimate holder_estimate(const VertexField& f, double gamma) {
  require_1d(f);
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("gamma must lie in (0,1)");
  HolderEstimate est;
  est.gamma = gamma;
  const auto expansion = analyze_1d(f);
  const auto& c = expansion.coeffs;
  const int res = f.resolution();
  const std::size_t last = static_cast<std::size_t>(pow2(res));
  const double h = 1.0 / static_cast<double>(last);

  est.all_pairs = res <= 12;
  if (est.all_pairs) {
    std::vector<double> row(last + 1, 0.0);
    std::vector<double> pow_lag(last + 1, 0.0);
    for (std::size_t lag = 1; lag <= last; ++lag) pow_lag[lag] = std::pow(lag * h, gamma);
    parallel_for(last + 1, [&](std::size_t i) {
      double m = 0.0;
      for (std::size_t j = i + 1; j <= last; ++j) m = std::max(m, std::abs(f[j] - f[i]) / pow_lag[j - i]);
      row[i] = m;
    });
    for (double m : row) est.grid_seminorm = std::max(est.grid_seminorm, m);
  } else {
    est.grid_seminorm = axis_holder_seminorm(f, gamma);
  }

  double coeff_sup = 0.0;
  const double rhs = std::pow(2.0, 1.0 - gamma) * est.grid_seminorm;
  for (int n = 0; n < c.depth; ++n) {
    const double w = std::pow(2.0, n * (gamma - 0.5));
    double m = 0.0;
    for (double a : c.generations[static_cast<std::size_t>(n)]) m = std::max(m, std::abs(a));
    coeff_sup = std::max(coeff_sup, w * m);
    est.log2_max.push_back(m > 0.0 ? std::log2(m) : -std::numeric_limits<double>::infinity());
    if (m > 0.0) {
      const double ratio = rhs > 0.0 ? w * m / rhs : std::numeric_limits<double>::infinity();
      est.bound_ratio = std::max(est.bound_ratio, ratio);
    }
  }
  est.bound_holds = est.bound_ratio <= 1.0 + 1e-12;
  est.coefficient_norm = std::max(std::abs(c.exceptional), coeff_sup);
  const double direct = std::max(std::abs(c.exceptional), est.grid_seminorm);
  est.norm_ratio = direct > 0.0 ? est.coefficient_norm / direct : 0.0;

  for (int n = 2; n <= c.depth - 2; ++n) est.gens.push_back(n);
  est.gamma_hat = fitted_holder_exponent(c);
  if (std::isnan(est.gamma_hat)) {
    est.warnings.push_back("too few generations to fit an exponent");
  } else if (!(est.gamma_hat > 0.0 && est.gamma_hat < 1.0)) {
    est.warnings.push_back("fitted exponent lies outside (0,1)");
  }
  return est;
}

double axis_holder_seminorm(const VertexField& f, double gamma) {
  const int d = f.dim();
  const int res = f.resolution();
  const std::size_t side = f.side();
  const std::size_t total = f.values().size();
  const double h = std::ldexp(1.0, -res);
  std::vector<double> best(total, 0.0);
  parallel_for(total, [&](std::size_t lin) {
    std::int64_t pos[kMaxDim];
    decode_linear(lin, side, std::span<std::int64_t>(pos, static_cast<std::size_t>(d)));
    double m = 0.0;
    std::size_t stride = 1;
    for (int axis = d - 1; axis >= 0; --axis) {
      for (int j = 0; j <= res; ++j) {
        const std::int64_t lag = std::int64_t{1} << j;
        if (pos[axis] + lag >= static_cast<std::int64_t>(side)) break;
        const double diff = std::abs(f[lin + static_cast<std::size_t>(lag) * stride] - f[lin]);
        m = std::max(m, diff / std::pow(static_cast<double>(lag) * h, gamma));
      }
      stride *= side;
    }
    best[lin] = m;
  });
  double out = 0.0;
  for (double m : best) out = std::max(out, m);
  return out;
}

VertexField levy_ciesielski(int depth, std::uint64_t seed, std::uint64_t stream) {
  if (depth < 0 || depth > 20) throw ValidationError("Levy-Ciesielski depth must lie in [0,20]");
  const NormalStream normals(seed, stream);
  auto coeffs = FaberCoeffs::zeros(1, depth);
  coeffs.exceptional = normals(0);
  for (int n = 0; n < depth; ++n) {
    auto& gen = coeffs.generations[static_cast<std::size_t>(n)];
    normals.fill(gen, pow2(n));
  }
  return synthesize_1d(coeffs, depth);
}

}  // namespace dyadcharge
