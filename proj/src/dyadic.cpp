#include "dyadcharge/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "dyadcharge/errors.hpp"

namespace dyadcharge {

namespace {

void require_dim(int dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw ValidationError("dimension must be in [1, " + std::to_string(kMaxDim) +
                          "], got " + std::to_string(dim));
  }
}

void require_finite(const std::vector<double>& values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError(std::string(what) + " contains non-finite values");
  }
}

std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

// Index of the closed-last half-open cell of generation n containing t.
std::int64_t cell_of(double t, int gen) {
  const auto side = static_cast<std::int64_t>(pow2(gen));
  auto j = static_cast<std::int64_t>(std::floor(t * static_cast<double>(side)));
  return std::clamp<std::int64_t>(j, 0, side - 1);
}

}  // namespace

void decode_linear(std::size_t lin, std::size_t side, std::span<std::int64_t> out) {
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = static_cast<std::int64_t>(lin % side);
    lin /= side;
  }
}

std::size_t encode_linear(std::span<const std::int64_t> pos, std::size_t side) {
  std::size_t lin = 0;
  for (auto k : pos) lin = lin * side + static_cast<std::size_t>(k);
  return lin;
}

// ---------------------------------------------------------------------------
// CubeIndex

CubeIndex::CubeIndex(int gen, std::vector<std::int64_t> pos) : gen_(gen), pos_(std::move(pos)) {
  require_dim(static_cast<int>(pos_.size()));
  if (gen_ < 0 || gen_ * static_cast<int>(pos_.size()) > 62) {
    throw ValidationError("cube generation out of range: " + std::to_string(gen_));
  }
  const auto side = static_cast<std::int64_t>(pow2(gen_));
  for (auto k : pos_) {
    if (k < 0 || k >= side) {
      throw ValidationError("cube position " + std::to_string(k) + " outside [0, 2^" +
                            std::to_string(gen_) + ")");
    }
  }
}

CubeIndex CubeIndex::root(int dim) {
  require_dim(dim);
  return CubeIndex(0, std::vector<std::int64_t>(static_cast<std::size_t>(dim), 0));
}

CubeIndex CubeIndex::from_linear(int dim, int gen, std::size_t lin) {
  require_dim(dim);
  std::vector<std::int64_t> pos(static_cast<std::size_t>(dim));
  decode_linear(lin, static_cast<std::size_t>(pow2(gen)), pos);
  return CubeIndex(gen, std::move(pos));
}

std::size_t CubeIndex::linear() const {
  return encode_linear(pos_, static_cast<std::size_t>(pow2(gen_)));
}

double CubeIndex::side() const { return std::ldexp(1.0, -gen_); }

double CubeIndex::volume() const { return std::ldexp(1.0, -gen_ * dim()); }

std::vector<double> CubeIndex::lower_corner() const {
  std::vector<double> y(pos_.size());
  for (std::size_t i = 0; i < pos_.size(); ++i) y[i] = std::ldexp(static_cast<double>(pos_[i]), -gen_);
  return y;
}

std::vector<double> CubeIndex::center() const {
  std::vector<double> c(pos_.size());
  for (std::size_t i = 0; i < pos_.size(); ++i) {
    c[i] = std::ldexp(2.0 * static_cast<double>(pos_[i]) + 1.0, -gen_ - 1);
  }
  return c;
}

CubeIndex CubeIndex::child(unsigned bits) const {
  const int d = dim();
  std::vector<std::int64_t> pos(pos_.size());
  for (int i = 0; i < d; ++i) {
    pos[static_cast<std::size_t>(i)] =
        2 * pos_[static_cast<std::size_t>(i)] + ((bits >> (d - 1 - i)) & 1u);
  }
  return CubeIndex(gen_ + 1, std::move(pos));
}

CubeIndex CubeIndex::parent() const {
  if (gen_ == 0) throw ValidationError("the root cube has no parent");
  std::vector<std::int64_t> pos(pos_.size());
  for (std::size_t i = 0; i < pos_.size(); ++i) pos[i] = pos_[i] / 2;
  return CubeIndex(gen_ - 1, std::move(pos));
}

bool CubeIndex::contains(const CubeIndex& other) const {
  if (other.dim() != dim() || other.gen_ < gen_) return false;
  const int shift = other.gen_ - gen_;
  for (std::size_t i = 0; i < pos_.size(); ++i) {
    if ((other.pos_[i] >> shift) != pos_[i]) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// DyadicFigure

DyadicFigure::DyadicFigure(std::vector<CubeIndex> cubes) : dim_(0), max_gen_(0), cubes_(std::move(cubes)) {
  if (cubes_.empty()) throw ValidationError("a dyadic figure needs at least one cube");
  dim_ = cubes_.front().dim();
  for (const auto& c : cubes_) {
    if (c.dim() != dim_) throw ValidationError("dyadic figure mixes cube dimensions");
    max_gen_ = std::max(max_gen_, c.gen());
  }
  if (static_cast<std::size_t>(max_gen_ * dim_) > 40) {
    throw ValidationError("dyadic figure is too fine to normalize");
  }
  auto cells = cells_at(max_gen_);
  if (std::adjacent_find(cells.begin(), cells.end()) != cells.end()) {
    throw ValidationError("dyadic figure has overlapping cubes");
  }
}

std::vector<std::size_t> DyadicFigure::cells_at(int gen) const {
  if (gen < max_gen_) throw ValidationError("cells_at: generation below the figure's finest cube");
  const auto side = static_cast<std::size_t>(pow2(gen));
  std::vector<std::size_t> out;
  std::vector<std::int64_t> off(static_cast<std::size_t>(dim_));
  std::vector<std::int64_t> pos(static_cast<std::size_t>(dim_));
  for (const auto& c : cubes_) {
    const int shift = gen - c.gen();
    const auto w = static_cast<std::size_t>(pow2(shift));
    const std::size_t count = ipow(w, dim_);
    for (std::size_t s = 0; s < count; ++s) {
      decode_linear(s, w, off);
      for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = (c.pos()[i] << shift) + off[i];
      out.push_back(encode_linear(pos, side));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<CubeIndex> DyadicFigure::normalized() const {
  const unsigned nchild = static_cast<unsigned>(pow2(dim_));
  std::vector<CubeIndex> result;
  // cells of the current generation, as positions
  std::map<std::vector<std::int64_t>, unsigned> counts;
  std::vector<std::vector<std::int64_t>> current;
  for (auto lin : cells_at(max_gen_)) current.push_back(CubeIndex::from_linear(dim_, max_gen_, lin).pos());
  for (int g = max_gen_; g > 0; --g) {
    counts.clear();
    for (const auto& p : current) {
      auto parent = p;
      for (auto& k : parent) k /= 2;
      ++counts[parent];
    }
    std::vector<std::vector<std::int64_t>> next;
    for (const auto& p : current) {
      auto parent = p;
      for (auto& k : parent) k /= 2;
      if (counts[parent] == nchild) continue;
      result.emplace_back(g, p);
    }
    for (const auto& [parent, n] : counts) {
      if (n == nchild) next.push_back(parent);
    }
    current = std::move(next);
  }
  for (const auto& p : current) result.emplace_back(0, p);
  std::sort(result.begin(), result.end());
  return result;
}

bool DyadicFigure::operator==(const DyadicFigure& other) const {
  return dim_ == other.dim_ && normalized() == other.normalized();
}

// ---------------------------------------------------------------------------
// HaarIndex

HaarIndex HaarIndex::make_exceptional(int dim) {
  HaarIndex h;
  h.dim = dim;
  h.exceptional = true;
  h.cube = CubeIndex::root(dim);
  h.pattern = 0;
  return h;
}

HaarIndex HaarIndex::make_regular(CubeIndex cube, unsigned pattern) {
  const int d = cube.dim();
  if (pattern == 0 || pattern > pattern_count(d)) {
    throw ValidationError("Haar pattern must be a nonzero element of {0,1}^d");
  }
  HaarIndex h;
  h.dim = d;
  h.exceptional = false;
  h.cube = std::move(cube);
  h.pattern = pattern;
  return h;
}

HaarIndex HaarIndex::make_regular(CubeIndex cube, std::span<const int> e) {
  if (static_cast<int>(e.size()) != cube.dim()) throw ValidationError("pattern length differs from cube dimension");
  unsigned bits = 0;
  for (int v : e) {
    if (v != 0 && v != 1) throw ValidationError("pattern entries must be 0 or 1");
    bits = (bits << 1) | static_cast<unsigned>(v);
  }
  return make_regular(std::move(cube), bits);
}

// ---------------------------------------------------------------------------
// Fields

VertexField::VertexField(int dim, int resolution, std::vector<double> values)
    : dim_(dim), resolution_(resolution), values_(std::move(values)) {
  require_dim(dim_);
  if (resolution_ < 0 || resolution_ > 30) throw ValidationError("vertex field resolution out of range");
  if (values_.size() != ipow(side(), dim_)) {
    throw ValidationError("vertex field needs (2^N+1)^d values, got " + std::to_string(values_.size()));
  }
  require_finite(values_, "vertex field");
}

std::size_t VertexField::linear(std::span<const std::int64_t> j) const {
  if (static_cast<int>(j.size()) != dim_) throw ValidationError("vertex index dimension mismatch");
  for (auto v : j) {
    if (v < 0 || static_cast<std::size_t>(v) >= side()) throw ValidationError("vertex index outside the grid");
  }
  return encode_linear(j, side());
}

CellField::CellField(int dim, int resolution, std::vector<double> values)
    : dim_(dim), resolution_(resolution), values_(std::move(values)) {
  require_dim(dim_);
  if (resolution_ < 0 || resolution_ * dim_ > 40) throw ValidationError("cell field resolution out of range");
  if (values_.size() != ipow(side(), dim_)) {
    throw ValidationError("cell field needs 2^{Nd} values, got " + std::to_string(values_.size()));
  }
  require_finite(values_, "cell field");
}

// ---------------------------------------------------------------------------
// Haar / Faber-Schauder

double haar_eval(const HaarIndex& idx, std::span<const double> x) {
  if (static_cast<int>(x.size()) != idx.dim) throw ValidationError("haar_eval: dimension mismatch");
  for (double t : x) {
    if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("haar_eval: point outside [0,1]^d");
  }
  if (idx.exceptional) return 1.0;
  const int n = idx.gen();
  const int d = idx.dim;
  double value = std::pow(2.0, 0.5 * n * d);
  for (int i = 0; i < d; ++i) {
    const auto k = idx.cube.pos()[static_cast<std::size_t>(i)];
    const double t = x[static_cast<std::size_t>(i)];
    if (cell_of(t, n) != k) return 0.0;
    if ((idx.pattern >> (d - 1 - i)) & 1u) {
      // finer cell decides the half, with the same closed-last convention
      const bool upper = (cell_of(t, n + 1) & 1) != 0;
      if (upper) value = -value;
    }
  }
  return value;
}

double faber_eval_1d(const HaarIndex& idx, double x) {
  if (idx.dim != 1) throw ValidationError("faber_eval_1d needs a one-dimensional index");
  if (!(x >= 0.0 && x <= 1.0)) throw ValidationError("faber_eval_1d: point outside [0,1]");
  if (idx.exceptional) return x;
  const int n = idx.gen();
  const double h = std::ldexp(1.0, -n);
  const double left = static_cast<double>(idx.cube.pos()[0]) * h;
  const double mid = left + 0.5 * h;
  const double right = left + h;
  const double scale = std::pow(2.0, 0.5 * n);
  if (x <= left || x >= right) return 0.0;
  return x <= mid ? scale * (x - left) : scale * (right - x);
}

// ---------------------------------------------------------------------------
// Increments and variation

double rect_increment(const VertexField& f, std::span<const std::int64_t> lo,
                      std::span<const std::int64_t> hi) {
  const int d = f.dim();
  if (static_cast<int>(lo.size()) != d || static_cast<int>(hi.size()) != d) {
    throw ValidationError("rect_increment: dimension mismatch");
  }
  for (int i = 0; i < d; ++i) {
    if (lo[static_cast<std::size_t>(i)] > hi[static_cast<std::size_t>(i)]) {
      throw ValidationError("rect_increment: lo must not exceed hi");
    }
  }
  std::int64_t corner[kMaxDim];
  double sum = 0.0;
  for (unsigned c = 0; c < pow2(d); ++c) {
    int lower = 0;
    for (int i = 0; i < d; ++i) {
      const bool up = (c >> (d - 1 - i)) & 1u;
      corner[i] = up ? hi[static_cast<std::size_t>(i)] : lo[static_cast<std::size_t>(i)];
      lower += up ? 0 : 1;
    }
    const double v = f.at(std::span<const std::int64_t>(corner, static_cast<std::size_t>(d)));
    sum += (lower & 1) ? -v : v;
  }
  return sum;
}

double rect_increment_at(const VertexField& f, std::span<const double> lo, std::span<const double> hi) {
  const int d = f.dim();
  if (static_cast<int>(lo.size()) != d || static_cast<int>(hi.size()) != d) {
    throw ValidationError("rect_increment: dimension mismatch");
  }
  const double scale = static_cast<double>(pow2(f.resolution()));
  auto to_grid = [&](double t) {
    const double s = t * scale;
    const double r = std::round(s);
    if (std::abs(s - r) > 1e-9 || r < 0 || r > scale) {
      throw ValidationError("rect_increment: point is not on the vertex grid");
    }
    return static_cast<std::int64_t>(r);
  };
  std::vector<std::int64_t> a(static_cast<std::size_t>(d)), b(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = to_grid(lo[i]);
    b[i] = to_grid(hi[i]);
  }
  return rect_increment(f, a, b);
}

double vitali_variation_dyadic(const VertexField& f, int gen) {
  if (gen < 0 || gen > f.resolution()) {
    throw ValidationError("vitali_variation_dyadic: generation exceeds field resolution");
  }
  const int d = f.dim();
  const auto step = static_cast<std::int64_t>(pow2(f.resolution() - gen));
  const std::size_t count = cube_count(d, gen);
  const auto side = static_cast<std::size_t>(pow2(gen));
  std::vector<std::int64_t> k(static_cast<std::size_t>(d)), lo(k.size()), hi(k.size());
  double total = 0.0;
  for (std::size_t lin = 0; lin < count; ++lin) {
    decode_linear(lin, side, k);
    for (std::size_t i = 0; i < k.size(); ++i) {
      lo[i] = k[i] * step;
      hi[i] = lo[i] + step;
    }
    total += std::abs(rect_increment(f, lo, hi));
  }
  return total;
}

// ---------------------------------------------------------------------------
// Geometry

FigureGeometry figure_geometry(const DyadicFigure& fig) {
  const int d = fig.dim();
  const int m = fig.max_gen();
  const auto side = static_cast<std::size_t>(pow2(m));
  const auto cells = fig.cells_at(m);

  auto member = [&](std::size_t lin) { return std::binary_search(cells.begin(), cells.end(), lin); };

  std::size_t faces = 0;
  std::vector<std::int64_t> pos(static_cast<std::size_t>(d));
  for (auto lin : cells) {
    decode_linear(lin, side, pos);
    for (std::size_t i = 0; i < pos.size(); ++i) {
      for (int dir : {-1, 1}) {
        const auto saved = pos[i];
        pos[i] += dir;
        const bool inside = pos[i] >= 0 && static_cast<std::size_t>(pos[i]) < side;
        if (!inside || !member(encode_linear(pos, side))) ++faces;
        pos[i] = saved;
      }
    }
  }

  FigureGeometry g;
  g.volume = static_cast<double>(cells.size()) * std::ldexp(1.0, -m * d);
  g.perimeter = static_cast<double>(faces) * std::ldexp(1.0, -m * (d - 1));

  // Max distance between the corners of two boxes, in units of 2^-m.
  const auto boxes = fig.normalized();
  double best = 0.0;
  for (std::size_t a = 0; a < boxes.size(); ++a) {
    for (std::size_t b = a; b < boxes.size(); ++b) {
      const int sa = m - boxes[a].gen();
      const int sb = m - boxes[b].gen();
      double sq = 0.0;
      for (std::size_t i = 0; i < static_cast<std::size_t>(d); ++i) {
        const std::int64_t alo = boxes[a].pos()[i] << sa;
        const std::int64_t ahi = (boxes[a].pos()[i] + 1) << sa;
        const std::int64_t blo = boxes[b].pos()[i] << sb;
        const std::int64_t bhi = (boxes[b].pos()[i] + 1) << sb;
        const auto span = static_cast<double>(std::max(ahi - blo, bhi - alo));
        sq += span * span;
      }
      best = std::max(best, sq);
    }
  }
  g.diameter = std::ldexp(std::sqrt(best), -m);
  g.reg = g.volume / (g.perimeter * g.diameter);
  g.isop = std::pow(g.volume, static_cast<double>(d - 1) / d) / g.perimeter;
  return g;
}

// ---------------------------------------------------------------------------
// Sampling

VertexField sample_vertices(const ScalarFn& fn, int dim, int resolution) {
  require_dim(dim);
  const std::size_t side = static_cast<std::size_t>(pow2(resolution)) + 1;
  const std::size_t total = ipow(side, dim);
  std::vector<double> values(total);
  std::vector<std::int64_t> j(static_cast<std::size_t>(dim));
  std::vector<double> x(j.size());
  for (std::size_t lin = 0; lin < total; ++lin) {
    decode_linear(lin, side, j);
    for (std::size_t i = 0; i < j.size(); ++i) x[i] = std::ldexp(static_cast<double>(j[i]), -resolution);
    values[lin] = fn(x);
  }
  return VertexField(dim, resolution, std::move(values));
}

CellField sample_cell_averages(const ScalarFn& fn, int dim, int resolution, int order) {
  require_dim(dim);
  const auto rule = gauss_legendre(order);
  const auto q = static_cast<std::size_t>(order);
  const std::size_t side = static_cast<std::size_t>(pow2(resolution));
  const std::size_t total = ipow(side, dim);
  const std::size_t nodes = ipow(q, dim);
  const double h = std::ldexp(1.0, -resolution);
  std::vector<double> values(total);
  std::vector<std::int64_t> j(static_cast<std::size_t>(dim)), node(j.size());
  std::vector<double> x(j.size());
  for (std::size_t lin = 0; lin < total; ++lin) {
    decode_linear(lin, side, j);
    double acc = 0.0;
    for (std::size_t s = 0; s < nodes; ++s) {
      decode_linear(s, q, node);
      double w = 1.0;
      for (std::size_t i = 0; i < j.size(); ++i) {
        const auto ni = static_cast<std::size_t>(node[i]);
        x[i] = (static_cast<double>(j[i]) + rule.nodes[ni]) * h;
        w *= rule.weights[ni];
      }
      acc += w * fn(x);
    }
    values[lin] = acc;
  }
  return CellField(dim, resolution, std::move(values));
}

QuadratureRule gauss_legendre(int order) {
  if (order < 1 || order > 64) throw ValidationError("Gauss-Legendre order must be in [1, 64]");
  const int n = order;
  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    rule.nodes[lo] = 0.5 * (1.0 - z);
    rule.nodes[hi] = 0.5 * (1.0 + z);
    rule.weights[lo] = 0.5 * w;
    rule.weights[hi] = 0.5 * w;
  }
  return rule;
}

}  // namespace dyadcharge
