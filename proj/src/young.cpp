#include "dyadcharge/young.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "dyadcharge/parallel.hpp"

namespace dyadcharge {

namespace {

// Calls fn(n, lin, |eta(K) - sum of children of K|) for every cube K above the finest generation.
template <class Fn>
void for_each_parent_residual(const CubeArrays& eta, Fn&& fn) {
  const int d = eta.dim;
  const std::size_t nchild = static_cast<std::size_t>(pow2(d));
  std::vector<std::int64_t> pos(static_cast<std::size_t>(d)), child(pos.size());
  for (int n = 0; n < eta.depth; ++n) {
    const auto& parent = eta.values[static_cast<std::size_t>(n)];
    const auto& kids = eta.values[static_cast<std::size_t>(n) + 1];
    const auto side = static_cast<std::size_t>(pow2(n));
    for (std::size_t lin = 0; lin < parent.size(); ++lin) {
      decode_linear(lin, side, pos);
      double s = 0.0;
      for (unsigned c = 0; c < nchild; ++c) {
        for (int i = 0; i < d; ++i) {
          child[static_cast<std::size_t>(i)] = 2 * pos[static_cast<std::size_t>(i)] + ((c >> (d - 1 - i)) & 1u);
        }
        s += kids[encode_linear(child, 2 * side)];
      }
      fn(n, lin, std::abs(parent[lin] - s));
    }
  }
}

struct GermResidual {
  std::vector<double> per_gen;  // max residual per parent generation
  double worst_ratio = 0.0;     // max |residual| / |K|^{1+eps}
};

GermResidual germ_residual(const CubeArrays& eta, double epsilon) {
  GermResidual out;
  out.per_gen.assign(static_cast<std::size_t>(eta.depth), 0.0);
  for_each_parent_residual(eta, [&](int n, std::size_t, double r) {
    auto& g = out.per_gen[static_cast<std::size_t>(n)];
    g = std::max(g, r);
    out.worst_ratio = std::max(out.worst_ratio, r / std::pow(std::ldexp(1.0, -n * eta.dim), 1.0 + epsilon));
  });
  return out;
}

// Fitted e in values_n ~ |K|^e = 2^{-n d e}, over entries with positive value.
double volume_exponent(const std::vector<double>& values, const std::vector<int>& gens, int dim) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > 0.0) {
      xs.push_back(-static_cast<double>(gens[i] * dim));
      ys.push_back(std::log2(values[i]));
    }
  }
  return fit_slope(xs, ys);
}

std::int64_t vertex_of(std::int64_t k, int gen, int resolution) { return k << (resolution - gen); }

}  // namespace

RawGerm::RawGerm(CubeArrays arrays) : data_(std::move(arrays)) { data_.check_shape(); }

AlmostAdditivityViolation::AlmostAdditivityViolation(CubeIndex worst, double residual, double bound)
    : ValidationError("almost-additivity violated at generation " + std::to_string(worst.gen()) + " cube " +
                      std::to_string(worst.linear()) + ": residual " + std::to_string(residual) + " > bound " +
                      std::to_string(bound)),
      worst_(std::move(worst)),
      residual_(residual),
      bound_(bound) {}

SewReport sew(const RawGerm& eta, double constant, double epsilon) {
  if (!(epsilon > 0.0)) throw ValidationError("sewing exponent epsilon must be positive");
  if (!(constant >= 0.0)) throw ValidationError("sewing constant must be nonnegative");
  const int d = eta.dim();
  const int depth = eta.depth();

  double scale = 0.0;
  for (double v : eta.generation(depth)) scale += std::abs(v);
  const double floor = 1e-12 * scale;

  double worst_excess = 0.0;
  std::optional<AlmostAdditivityViolation> violation;
  for_each_parent_residual(eta.arrays(), [&](int n, std::size_t lin, double r) {
    const double bound = constant * std::pow(std::ldexp(1.0, -n * d), 1.0 + epsilon);
    const double excess = r - (bound * (1.0 + kSewSlack) + floor);
    if (excess > worst_excess) {
      worst_excess = excess;
      violation.emplace(CubeIndex::from_linear(d, n, lin), r, bound);
    }
  });
  if (violation) throw *violation;

  auto sewn = CubeArrays::zeros(d, depth);
  sewn.values.back() = eta.arrays().values.back();
  sewn.sum_up();

  SewReport report{CubeCharge(std::move(sewn)), constant, epsilon, {}, 0.0, 0.0, {}};
  std::vector<int> gens;
  for (int n = 0; n <= depth; ++n) {
    const auto w = report.result.generation(n);
    const auto e = eta.generation(n);
    const double unit = std::pow(std::ldexp(1.0, -n * d), 1.0 + epsilon);
    double r = 0.0;
    for (std::size_t lin = 0; lin < w.size(); ++lin) r = std::max(r, std::abs(w[lin] - e[lin]));
    report.residual.push_back(r);
    gens.push_back(n);
    if (r > floor) {
      const double k = constant > 0.0 ? r / (constant * unit) : std::numeric_limits<double>::infinity();
      report.kappa = std::max(report.kappa, k);
    }
  }
  report.residual_exponent = volume_exponent(report.residual, gens, d);
  return report;
}

RawGerm germ_young(const VertexField& f, const CubeCharge& cc, TagRule rule) {
  if (f.dim() != cc.dim()) throw ValidationError("germ_young: field and charge dimensions differ");
  const int res = f.resolution();
  if (res < cc.depth()) throw ValidationError("germ_young: field resolution below charge depth");
  if (rule == TagRule::Center && res < cc.depth() + 1) {
    throw ValidationError("germ_young: center tags need field resolution > charge depth");
  }
  const int d = cc.dim();
  auto a = CubeArrays::zeros(d, cc.depth());
  for (int n = 0; n <= cc.depth(); ++n) {
    const auto w = cc.generation(n);
    auto& out = a.values[static_cast<std::size_t>(n)];
    const auto side = static_cast<std::size_t>(pow2(n));
    parallel_for(w.size(), [&](std::size_t lin) {
      std::int64_t pos[kMaxDim];
      std::span<std::int64_t> p(pos, static_cast<std::size_t>(d));
      decode_linear(lin, side, p);
      for (auto& k : p) {
        k = rule == TagRule::LowerCorner ? vertex_of(k, n, res) : vertex_of(2 * k + 1, n + 1, res);
      }
      out[lin] = f.at(p) * w[lin];
    });
  }
  return RawGerm(std::move(a));
}

SewReport young_integral(const VertexField& f, const CubeCharge& cc, double beta, double gamma, TagRule rule) {
  if (!(beta > 0.0 && beta < 1.0) || !(gamma > 0.0 && gamma < 1.0)) {
    throw ValidationError("young_integral: beta and gamma must lie in (0,1)");
  }
  if (!(beta + gamma > 1.0)) {
    std::ostringstream msg;
    msg << "young_integral needs beta + gamma > 1, got " << beta << " + " << gamma;
    throw YoungConditionViolated(msg.str());
  }
  const int d = cc.dim();
  const double epsilon = (beta + gamma - 1.0) / d;
  const auto eta = germ_young(f, cc, rule);
  const auto res = germ_residual(eta.arrays(), epsilon);

  auto report = sew(eta, res.worst_ratio, epsilon);

  std::vector<int> gens;
  for (int n = 0; n < eta.depth(); ++n) gens.push_back(n);
  std::vector<double> tail(res.per_gen.begin(), res.per_gen.end());
  // the coarsest two generations are pre-asymptotic
  if (tail.size() > 4) {
    tail.erase(tail.begin(), tail.begin() + 2);
    gens.erase(gens.begin(), gens.begin() + 2);
  }
  const double observed = volume_exponent(tail, gens, d);
  if (std::isfinite(observed) && observed < 1.0 + epsilon - 0.1) {
    std::ostringstream msg;
    msg << "germ residuals decay like |K|^" << observed << ", below the declared 1+eps = " << 1.0 + epsilon
        << "; the declared beta/gamma may overstate the regularity of the inputs";
    report.warnings.push_back(msg.str());
  }
  return report;
}

Young1DResult young_1d(const FaberCoeffs& haar_f, const FaberCoeffs& faber_g) {
  if (haar_f.dim != 1 || faber_g.dim != 1) throw ValidationError("young_1d needs one-dimensional coefficients");
  if (haar_f.depth != faber_g.depth) throw ValidationError("young_1d: coefficient depths differ");
  haar_f.check_shape();
  faber_g.check_shape();
  Young1DResult r;
  double s = haar_f.exceptional * faber_g.exceptional;
  r.partial_sums.push_back(s);
  for (int n = 0; n < haar_f.depth; ++n) {
    const auto& a = haar_f.generations[static_cast<std::size_t>(n)];
    const auto& b = faber_g.generations[static_cast<std::size_t>(n)];
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    r.partial_sums.push_back(s);
  }
  r.value = s;
  return r;
}

FaberCoeffs haar_coeffs_1d(const VertexField& f, int depth) {
  if (f.dim() != 1) throw ValidationError("haar_coeffs_1d needs a one-dimensional field");
  if (depth < 1 || depth > f.resolution()) throw ValidationError("haar_coeffs_1d: depth must be in [1, resolution]");
  const int res = f.resolution();
  auto a = CubeArrays::zeros(1, res);
  const double h = std::ldexp(1.0, -res);
  auto& leaves = a.values.back();
  for (std::size_t j = 0; j < leaves.size(); ++j) leaves[j] = 0.5 * (f[j] + f[j + 1]) * h;
  a.sum_up();
  auto fc = to_faber_coeffs(CubeCharge(std::move(a)));
  fc.generations.resize(static_cast<std::size_t>(depth));
  fc.depth = depth;
  return fc;
}

YoungLoeveReport young_loeve_report(const VertexField& f, const CubeCharge& cc, const CubeCharge& result,
                                    const std::vector<DyadicFigure>& figures, double beta, double gamma, int gen_lo,
                                    int gen_hi) {
  if (!(beta > 0.0 && beta < 1.0) || !(gamma > 0.0 && gamma < 1.0)) {
    throw ValidationError("young_loeve_report: beta and gamma must lie in (0,1)");
  }
  if (f.dim() != cc.dim() || result.dim() != cc.dim()) throw ValidationError("young_loeve_report: dimension mismatch");
  if (result.depth() != cc.depth()) throw ValidationError("young_loeve_report: result and charge depths differ");
  if (f.resolution() < cc.depth()) throw ValidationError("young_loeve_report: field resolution below charge depth");
  const int d = cc.dim();
  YoungLoeveReport rep;
  rep.beta = beta;
  rep.gamma = gamma;
  rep.delta = fractional_delta(d, gamma);
  rep.predicted_slope = rep.delta + beta / d;
  rep.charge_norm_proxy = fractional_profile(cc, gamma).holder_constant;

  for (const auto& fig : figures) {
    if (fig.dim() != d) throw ValidationError("young_loeve_report: figure dimension mismatch");
    auto cubes = fig.normalized();
    const auto first = *std::min_element(cubes.begin(), cubes.end(), [](const CubeIndex& a, const CubeIndex& b) {
      const auto ca = a.lower_corner();
      const auto cb = b.lower_corner();
      return ca < cb;
    });
    std::vector<std::int64_t> v(first.pos().size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = vertex_of(first.pos()[i], first.gen(), f.resolution());
    YoungLoeveRow row;
    row.geometry = figure_geometry(fig);
    row.integral = eval_figure(result, fig);
    row.lhs = std::abs(row.integral - f.at(v) * eval_figure(cc, fig));
    row.structural = std::pow(row.geometry.volume, rep.delta) * std::pow(row.geometry.diameter, beta) /
                     std::pow(row.geometry.isop, 1.0 - gamma);
    row.ratio = row.lhs / row.structural;
    rep.max_ratio = std::max(rep.max_ratio, row.ratio);
    rep.rows.push_back(row);
  }

  const int hi = std::min(gen_hi, cc.depth());
  for (int n = std::max(0, gen_lo); n <= hi; ++n) {
    const auto w = cc.generation(n);
    const auto y = result.generation(n);
    const auto side = static_cast<std::size_t>(pow2(n));
    std::vector<std::int64_t> pos(static_cast<std::size_t>(d));
    double worst = 0.0;
    for (std::size_t lin = 0; lin < w.size(); ++lin) {
      decode_linear(lin, side, pos);
      for (auto& k : pos) k = vertex_of(k, n, f.resolution());
      worst = std::max(worst, std::abs(y[lin] - f.at(pos) * w[lin]));
    }
    rep.cube_gens.push_back(n);
    rep.cube_error.push_back(worst);
  }
  rep.cube_slope = volume_exponent(rep.cube_error, rep.cube_gens, d);
  return rep;
}

}  // namespace dyadcharge
