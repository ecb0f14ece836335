#include "dyadcharge/charge.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dyadcharge/parallel.hpp"

namespace dyadcharge {

namespace {

constexpr double kAdditivityTol = 1e-12;

std::size_t parent_linear(std::size_t lin, int dim, int gen) {
  std::int64_t pos[kMaxDim];
  std::span<std::int64_t> p(pos, static_cast<std::size_t>(dim));
  decode_linear(lin, static_cast<std::size_t>(pow2(gen)), p);
  for (auto& k : p) k >>= 1;
  return encode_linear(p, static_cast<std::size_t>(pow2(gen - 1)));
}

// Linear indices of the 2^d children of a generation-n cube, ordered by child bits.
void children_linear(std::size_t lin, int dim, int gen, std::span<std::size_t> out) {
  std::int64_t pos[kMaxDim];
  std::int64_t child[kMaxDim];
  std::span<std::int64_t> p(pos, static_cast<std::size_t>(dim));
  std::span<std::int64_t> c(child, static_cast<std::size_t>(dim));
  decode_linear(lin, static_cast<std::size_t>(pow2(gen)), p);
  const auto side = static_cast<std::size_t>(pow2(gen + 1));
  for (unsigned bits = 0; bits < out.size(); ++bits) {
    for (int i = 0; i < dim; ++i) c[static_cast<std::size_t>(i)] = 2 * pos[i] + ((bits >> (dim - 1 - i)) & 1u);
    out[bits] = encode_linear(c, side);
  }
}

void require_depth(int dim, int depth) {
  if (depth < 0 || depth * dim > 30) {
    throw ValidationError("charge depth " + std::to_string(depth) + " out of range for d=" + std::to_string(dim));
  }
}

}  // namespace

int default_depth(int dim) { return dim <= 2 ? 8 : (dim == 3 ? 5 : 3); }

double fractional_delta(int dim, double gamma) { return (dim - 1 + gamma) / dim; }

double fit_slope(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(ys.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / sxx;
}

// ---------------------------------------------------------------------------
// CubeArrays

CubeArrays CubeArrays::zeros(int dim, int depth) {
  require_depth(dim, depth);
  CubeArrays a;
  a.dim = dim;
  a.depth = depth;
  a.values.resize(static_cast<std::size_t>(depth) + 1);
  for (int n = 0; n <= depth; ++n) a.values[static_cast<std::size_t>(n)].assign(cube_count(dim, n), 0.0);
  return a;
}

void CubeArrays::check_shape() const {
  if (dim < 1 || dim > kMaxDim) throw ValidationError("charge dimension out of range");
  require_depth(dim, depth);
  if (values.size() != static_cast<std::size_t>(depth) + 1) {
    throw ValidationError("expected " + std::to_string(depth + 1) + " generations, got " +
                          std::to_string(values.size()));
  }
  for (int n = 0; n <= depth; ++n) {
    const auto& g = values[static_cast<std::size_t>(n)];
    if (g.size() != cube_count(dim, n)) {
      throw ValidationError("generation " + std::to_string(n) + " needs " + std::to_string(cube_count(dim, n)) +
                            " values, got " + std::to_string(g.size()));
    }
    for (double v : g) {
      if (!std::isfinite(v)) throw ValidationError("non-finite cube value at generation " + std::to_string(n));
    }
  }
}

void CubeArrays::sum_up() {
  for (int n = depth; n > 0; --n) {
    auto& parent = values[static_cast<std::size_t>(n - 1)];
    const auto& child = values[static_cast<std::size_t>(n)];
    std::fill(parent.begin(), parent.end(), 0.0);
    for (std::size_t lin = 0; lin < child.size(); ++lin) parent[parent_linear(lin, dim, n)] += child[lin];
  }
}

double CubeArrays::value(const CubeIndex& k) const {
  if (k.dim() != dim) throw ValidationError("cube dimension differs from charge dimension");
  if (k.gen() > depth) throw ValidationError("cube generation " + std::to_string(k.gen()) + " deeper than stored depth");
  return values[static_cast<std::size_t>(k.gen())][k.linear()];
}

// ---------------------------------------------------------------------------
// CubeCharge

AdditivityViolation::AdditivityViolation(CubeIndex worst, double residual, double tolerance)
    : ValidationError("additivity violated at generation " + std::to_string(worst.gen()) + " cube " +
                      std::to_string(worst.linear()) + ": residual " + std::to_string(residual) +
                      " exceeds " + std::to_string(tolerance)),
      worst_(std::move(worst)),
      residual_(residual) {}

CubeCharge::CubeCharge(CubeArrays arrays) : data_(std::move(arrays)) {
  data_.check_shape();
  const double tol = kAdditivityTol * scale();
  const std::size_t nchild = static_cast<std::size_t>(pow2(data_.dim));
  std::vector<std::size_t> kids(nchild);
  double worst = -1.0;
  int worst_gen = 0;
  std::size_t worst_lin = 0;
  for (int n = 0; n < data_.depth; ++n) {
    const auto& parent = data_.values[static_cast<std::size_t>(n)];
    const auto& child = data_.values[static_cast<std::size_t>(n) + 1];
    for (std::size_t lin = 0; lin < parent.size(); ++lin) {
      children_linear(lin, data_.dim, n, kids);
      double s = 0.0;
      for (auto c : kids) s += child[c];
      const double r = std::abs(parent[lin] - s);
      if (r > worst) {
        worst = r;
        worst_gen = n;
        worst_lin = lin;
      }
    }
  }
  if (worst > tol) throw AdditivityViolation(CubeIndex::from_linear(data_.dim, worst_gen, worst_lin), worst, tol);
}

double CubeCharge::scale() const {
  double s = 0.0;
  for (double v : data_.values.back()) s += std::abs(v);
  return s;
}

// ---------------------------------------------------------------------------
// FaberCoeffs

FaberCoeffs FaberCoeffs::zeros(int dim, int depth) {
  require_depth(dim, depth);
  FaberCoeffs fc;
  fc.dim = dim;
  fc.depth = depth;
  fc.generations.resize(static_cast<std::size_t>(depth));
  for (int n = 0; n < depth; ++n) {
    fc.generations[static_cast<std::size_t>(n)].assign(cube_count(dim, n) * pattern_count(dim), 0.0);
  }
  return fc;
}

void FaberCoeffs::check_shape() const {
  if (dim < 1 || dim > kMaxDim) throw ValidationError("coefficient dimension out of range");
  require_depth(dim, depth);
  if (generations.size() != static_cast<std::size_t>(depth)) {
    throw ValidationError("expected " + std::to_string(depth) + " coefficient generations");
  }
  if (!std::isfinite(exceptional)) throw ValidationError("non-finite exceptional coefficient");
  for (int n = 0; n < depth; ++n) {
    const auto& g = generations[static_cast<std::size_t>(n)];
    if (g.size() != cube_count(dim, n) * pattern_count(dim)) {
      throw ValidationError("coefficient generation " + std::to_string(n) + " has the wrong size");
    }
    for (double v : g) {
      if (!std::isfinite(v)) throw ValidationError("non-finite coefficient");
    }
  }
}

double FaberCoeffs::coefficient(const HaarIndex& idx) const {
  if (idx.dim != dim) throw ValidationError("Haar index dimension differs from coefficient tree");
  if (idx.exceptional) return exceptional;
  if (idx.gen() >= depth) return 0.0;
  return generations[static_cast<std::size_t>(idx.gen())][idx.cube.linear() * pattern_count(dim) + idx.pattern - 1];
}

double& FaberCoeffs::coefficient(const CubeIndex& cube, unsigned pattern) {
  if (cube.dim() != dim || cube.gen() >= depth || pattern == 0 || pattern > pattern_count(dim)) {
    throw ValidationError("coefficient index out of range");
  }
  return generations[static_cast<std::size_t>(cube.gen())][cube.linear() * pattern_count(dim) + pattern - 1];
}

// ---------------------------------------------------------------------------
// Constructors

CubeCharge charge_from_cube_values(int dim, int depth, std::vector<std::vector<double>> values) {
  CubeArrays a;
  a.dim = dim;
  a.depth = depth;
  a.values = std::move(values);
  return CubeCharge(std::move(a));
}

CubeCharge lebesgue_charge(int dim, int depth) {
  auto a = CubeArrays::zeros(dim, depth);
  for (int n = 0; n <= depth; ++n) {
    auto& g = a.values[static_cast<std::size_t>(n)];
    std::fill(g.begin(), g.end(), std::ldexp(1.0, -n * dim));
  }
  return CubeCharge(std::move(a));
}

CubeCharge charge_from_density(const CellField& f, int depth) {
  if (depth > f.resolution()) throw ValidationError("charge depth exceeds density resolution");
  const int d = f.dim();
  auto a = CubeArrays::zeros(d, depth);
  const int shift = f.resolution() - depth;
  const double cell_volume = std::ldexp(1.0, -f.resolution() * d);
  auto& leaves = a.values.back();
  const auto fine_side = f.side();
  const auto leaf_side = static_cast<std::size_t>(pow2(depth));
  std::vector<std::int64_t> pos(static_cast<std::size_t>(d));
  for (std::size_t lin = 0; lin < f.values().size(); ++lin) {
    decode_linear(lin, fine_side, pos);
    for (auto& k : pos) k >>= shift;
    leaves[encode_linear(pos, leaf_side)] += f[lin] * cell_volume;
  }
  a.sum_up();
  return CubeCharge(std::move(a));
}

CubeCharge charge_from_increments(const VertexField& g, int depth) {
  if (depth > g.resolution()) throw ValidationError("charge depth exceeds field resolution");
  const int d = g.dim();
  auto a = CubeArrays::zeros(d, depth);
  const auto step = static_cast<std::int64_t>(pow2(g.resolution() - depth));
  auto& leaves = a.values.back();
  const auto side = static_cast<std::size_t>(pow2(depth));
  std::vector<std::int64_t> k(static_cast<std::size_t>(d)), lo(k.size()), hi(k.size());
  for (std::size_t lin = 0; lin < leaves.size(); ++lin) {
    decode_linear(lin, side, k);
    for (std::size_t i = 0; i < k.size(); ++i) {
      lo[i] = k[i] * step;
      hi[i] = lo[i] + step;
    }
    leaves[lin] = rect_increment(g, lo, hi);
  }
  a.sum_up();
  return CubeCharge(std::move(a));
}

CubeCharge flux_charge(const VectorFn& v, int dim, int depth, int order) {
  auto a = CubeArrays::zeros(dim, depth);
  const auto rule = gauss_legendre(order);
  const auto q = static_cast<std::size_t>(order);
  const auto side = static_cast<std::size_t>(pow2(depth));
  const double h = std::ldexp(1.0, -depth);
  const double face_area = std::pow(h, dim - 1);
  const auto d = static_cast<std::size_t>(dim);

  std::size_t nodes_per_face = 1;
  for (std::size_t i = 0; i + 1 < d; ++i) nodes_per_face *= q;
  std::size_t cells_per_slab = 1;
  for (std::size_t i = 0; i + 1 < d; ++i) cells_per_slab *= side;

  auto& leaves = a.values.back();
  for (std::size_t axis = 0; axis < d; ++axis) {
    // flux[j * cells_per_slab + s]: face at x_axis = j h, transverse cell s
    std::vector<double> flux((side + 1) * cells_per_slab);
    parallel_for(flux.size(), [&](std::size_t idx) {
      const std::size_t j = idx / cells_per_slab;
      const std::size_t s = idx % cells_per_slab;
      std::int64_t tpos[kMaxDim];
      std::int64_t node[kMaxDim];
      double x[kMaxDim];
      double val[kMaxDim];
      std::span<std::int64_t> tp(tpos, d - 1);
      std::span<std::int64_t> nd(node, d - 1);
      decode_linear(s, side, tp);
      double acc = 0.0;
      for (std::size_t m = 0; m < nodes_per_face; ++m) {
        decode_linear(m, q, nd);
        double w = 1.0;
        std::size_t t = 0;
        for (std::size_t i = 0; i < d; ++i) {
          if (i == axis) {
            x[i] = static_cast<double>(j) * h;
            continue;
          }
          const auto ni = static_cast<std::size_t>(node[t]);
          x[i] = (static_cast<double>(tpos[t]) + rule.nodes[ni]) * h;
          w *= rule.weights[ni];
          ++t;
        }
        v(std::span<const double>(x, d), std::span<double>(val, d));
        if (!std::isfinite(val[axis])) throw NonFiniteSample("flux_charge: non-finite field value");
        acc += w * val[axis];
      }
      flux[idx] = acc * face_area;
    });
    std::vector<std::int64_t> pos(d), tp(d - 1);
    for (std::size_t lin = 0; lin < leaves.size(); ++lin) {
      decode_linear(lin, side, pos);
      std::size_t t = 0;
      for (std::size_t i = 0; i < d; ++i) {
        if (i != axis) tp[t++] = pos[i];
      }
      const std::size_t s = encode_linear(tp, side);
      const auto j = static_cast<std::size_t>(pos[axis]);
      leaves[lin] += flux[(j + 1) * cells_per_slab + s] - flux[j * cells_per_slab + s];
    }
  }
  a.sum_up();
  return CubeCharge(std::move(a));
}

// ---------------------------------------------------------------------------
// Transforms

FaberCoeffs to_faber_coeffs(const CubeCharge& cc) {
  const int d = cc.dim();
  auto fc = FaberCoeffs::zeros(d, cc.depth());
  fc.exceptional = cc.total();
  const unsigned np = pattern_count(d);
  const std::size_t nchild = static_cast<std::size_t>(pow2(d));
  for (int n = 0; n < cc.depth(); ++n) {
    const auto child = cc.generation(n + 1);
    auto& out = fc.generations[static_cast<std::size_t>(n)];
    const double scale = std::pow(2.0, 0.5 * n * d);
    parallel_for(cube_count(d, n), [&](std::size_t lin) {
      std::size_t kids[1u << kMaxDim];
      children_linear(lin, d, n, std::span<std::size_t>(kids, nchild));
      for (unsigned e = 1; e <= np; ++e) {
        double s = 0.0;
        for (unsigned c = 0; c < nchild; ++c) s += pattern_sign(e, c) * child[kids[c]];
        out[lin * np + e - 1] = scale * s;
      }
    });
  }
  return fc;
}

CubeCharge from_faber_coeffs(const FaberCoeffs& fc) {
  fc.check_shape();
  const int d = fc.dim;
  auto a = CubeArrays::zeros(d, fc.depth);
  a.values[0][0] = fc.exceptional;
  const unsigned np = pattern_count(d);
  const std::size_t nchild = static_cast<std::size_t>(pow2(d));
  const double share = 1.0 / static_cast<double>(nchild);
  for (int n = 0; n < fc.depth; ++n) {
    const auto& parent = a.values[static_cast<std::size_t>(n)];
    auto& child = a.values[static_cast<std::size_t>(n) + 1];
    const auto& coeffs = fc.generations[static_cast<std::size_t>(n)];
    const double scale = share * std::pow(2.0, -0.5 * n * d);
    parallel_for(parent.size(), [&](std::size_t lin) {
      std::size_t kids[1u << kMaxDim];
      children_linear(lin, d, n, std::span<std::size_t>(kids, nchild));
      for (unsigned c = 0; c < nchild; ++c) {
        double s = 0.0;
        for (unsigned e = 1; e <= np; ++e) s += pattern_sign(e, c) * coeffs[lin * np + e - 1];
        child[kids[c]] = share * parent[lin] + scale * s;
      }
    });
  }
  return CubeCharge(std::move(a));
}

double eval_figure(const CubeCharge& cc, const DyadicFigure& fig) {
  if (fig.dim() != cc.dim()) throw ValidationError("figure dimension differs from charge dimension");
  if (fig.max_gen() > cc.depth()) throw ValidationError("figure has cubes deeper than the stored depth");
  double s = 0.0;
  for (const auto& k : fig.cubes()) s += cc.value(k);
  return s;
}

// ---------------------------------------------------------------------------
// Fractional diagnostics

FractionalProfile fractional_profile(const CubeCharge& cc, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("gamma must lie in (0,1)");
  const int d = cc.dim();
  FractionalProfile p;
  p.gamma = gamma;
  p.delta = fractional_delta(d, gamma);
  p.predicted_slope = 1.0 - gamma - 0.5 * d;
  for (int n = 0; n <= cc.depth(); ++n) {
    const double vol_pow = std::pow(std::ldexp(1.0, -n * d), p.delta);
    double m = 0.0;
    for (double v : cc.generation(n)) m = std::max(m, std::abs(v));
    p.sup_ratio.push_back(m / vol_pow);
    p.holder_constant = std::max(p.holder_constant, m / vol_pow);
  }
  if (cc.depth() >= 1) {
    const auto fc = to_faber_coeffs(cc);
    for (const auto& g : fc.generations) {
      double m = 0.0;
      for (double v : g) m = std::max(m, std::abs(v));
      p.coeff_max.push_back(m);
    }
  }
  std::vector<double> xs, ys;
  bool all_zero = true;
  for (std::size_t n = 2; n < p.coeff_max.size(); ++n) {
    if (p.coeff_max[n] > 0.0) {
      all_zero = false;
      xs.push_back(static_cast<double>(n));
      ys.push_back(std::log2(p.coeff_max[n]));
    }
  }
  if (p.coeff_max.size() > 2 && all_zero) {
    p.decay_slope = -std::numeric_limits<double>::infinity();
    p.consistent = true;
  } else {
    p.decay_slope = fit_slope(xs, ys);
    p.consistent = std::isfinite(p.decay_slope) && p.decay_slope <= p.predicted_slope + 0.1;
  }
  return p;
}

HolderControlResult holder_control_check(const CubeCharge& cc, double constant, double gamma) {
  if (constant < 0.0) throw ValidationError("Hölder control constant must be nonnegative");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("gamma must lie in (0,1)");
  const int d = cc.dim();
  const double delta = fractional_delta(d, gamma);
  HolderControlResult r;
  for (int n = 0; n <= cc.depth(); ++n) {
    const double vol_pow = std::pow(std::ldexp(1.0, -n * d), delta);
    const auto g = cc.generation(n);
    for (std::size_t lin = 0; lin < g.size(); ++lin) {
      const double ratio = std::abs(g[lin]) / vol_pow;
      if (!r.worst || ratio > r.worst_ratio) {
        r.worst_ratio = ratio;
        r.worst = CubeIndex::from_linear(d, n, lin);
      }
      if (std::abs(g[lin]) > constant * vol_pow) r.holds = false;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const CubeCharge& cc) {
  return {{"kind", "cube_charge"},
          {"dim", cc.dim()},
          {"depth", cc.depth()},
          {"layout", "row-major"},
          {"generations", cc.arrays().values}};
}

nlohmann::json to_json(const FaberCoeffs& fc) {
  return {{"kind", "faber_coeffs"},
          {"dim", fc.dim},
          {"depth", fc.depth},
          {"layout", "row-major"},
          {"exceptional", fc.exceptional},
          {"generations", fc.generations}};
}

CubeCharge cube_charge_from_json(const nlohmann::json& j) {
  try {
    if (j.at("kind").get<std::string>() != "cube_charge") throw ValidationError("expected kind cube_charge");
    if (j.value("layout", "row-major") != "row-major") throw ValidationError("unsupported layout");
    return charge_from_cube_values(j.at("dim").get<int>(), j.at("depth").get<int>(),
                                   j.at("generations").get<std::vector<std::vector<double>>>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed cube charge: ") + e.what());
  }
}

FaberCoeffs faber_coeffs_from_json(const nlohmann::json& j) {
  try {
    if (j.at("kind").get<std::string>() != "faber_coeffs") throw ValidationError("expected kind faber_coeffs");
    if (j.value("layout", "row-major") != "row-major") throw ValidationError("unsupported layout");
    FaberCoeffs fc;
    fc.dim = j.at("dim").get<int>();
    fc.depth = j.at("depth").get<int>();
    fc.exceptional = j.at("exceptional").get<double>();
    fc.generations = j.at("generations").get<std::vector<std::vector<double>>>();
    fc.check_shape();
    return fc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed coefficient tree: ") + e.what());
  }
}

}  // namespace dyadcharge
