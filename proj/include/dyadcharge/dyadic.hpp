#pragma once

// Dyadic cubes, dyadic figures, Haar / Faber-Schauder functions and sampled
// fields on the unit cube [0,1]^d.
//
// Linear indices are row-major: for a generation-n cube with position
// (k_1, ..., k_d), lin = sum_i k_i * (2^n)^(d-1-i), so k_1 varies slowest.
// Vertex and cell grids use the same ordering.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace dyadcharge {

using ScalarFn = std::function<double(std::span<const double>)>;

inline constexpr int kMaxDim = 8;

constexpr std::uint64_t pow2(int n) { return std::uint64_t{1} << n; }

/// Number of generation-n cubes in [0,1]^d.
constexpr std::size_t cube_count(int dim, int gen) {
  return static_cast<std::size_t>(pow2(gen * dim));
}

/// The dyadic cube Q_{n,k} = prod_i [k_i 2^-n, (k_i+1) 2^-n].
class CubeIndex {
 public:
  CubeIndex(int gen, std::vector<std::int64_t> pos);

  static CubeIndex root(int dim);
  static CubeIndex from_linear(int dim, int gen, std::size_t lin);

  int dim() const { return static_cast<int>(pos_.size()); }
  int gen() const { return gen_; }
  const std::vector<std::int64_t>& pos() const { return pos_; }

  std::size_t linear() const;
  double side() const;
  double volume() const;
  std::vector<double> lower_corner() const;
  std::vector<double> center() const;

  /// Child selected by `bits`: bit (d-1-i) set means the upper half along axis i.
  CubeIndex child(unsigned bits) const;
  CubeIndex parent() const;
  /// The generation-g descendant-or-ancestor relation: true when *this contains other.
  bool contains(const CubeIndex& other) const;

  auto operator<=>(const CubeIndex&) const = default;

 private:
  int gen_;
  std::vector<std::int64_t> pos_;
};

/// A finite union of dyadic cubes with pairwise disjoint interiors.
class DyadicFigure {
 public:
  explicit DyadicFigure(std::vector<CubeIndex> cubes);

  int dim() const { return dim_; }
  int max_gen() const { return max_gen_; }
  const std::vector<CubeIndex>& cubes() const { return cubes_; }

  /// Sorted linear indices of the generation-g cells covering the figure; g >= max_gen().
  std::vector<std::size_t> cells_at(int gen) const;

  /// Canonical form: sibling groups merged as far as possible, sorted.
  std::vector<CubeIndex> normalized() const;

  bool operator==(const DyadicFigure& other) const;

 private:
  int dim_;
  int max_gen_;
  std::vector<CubeIndex> cubes_;
};

/// Haar index: either the exceptional constant h_{-1}, or (n, k, e) with a
/// nonzero pattern e in {0,1}^d.  Pattern bit (d-1-i) set means the factor
/// along axis i oscillates (+1 on the lower half, -1 on the upper half);
/// a clear bit means the factor is constant.
struct HaarIndex {
  int dim = 1;
  bool exceptional = true;
  CubeIndex cube = CubeIndex::root(1);
  unsigned pattern = 0;

  static HaarIndex make_exceptional(int dim);
  static HaarIndex make_regular(CubeIndex cube, unsigned pattern);
  static HaarIndex make_regular(CubeIndex cube, std::span<const int> e);

  int gen() const { return cube.gen(); }
};

/// Number of nonzero patterns, 2^d - 1.
constexpr unsigned pattern_count(int dim) {
  return static_cast<unsigned>(pow2(dim)) - 1u;
}

/// Sign of the pattern-e Haar function on the child selected by `child_bits`.
constexpr double pattern_sign(unsigned pattern, unsigned child_bits) {
  return (__builtin_popcount(pattern & child_bits) & 1) ? -1.0 : 1.0;
}

/// Samples f(j 2^-N) for j in {0..2^N}^d.
class VertexField {
 public:
  VertexField(int dim, int resolution, std::vector<double> values);

  int dim() const { return dim_; }
  int resolution() const { return resolution_; }
  std::size_t side() const { return static_cast<std::size_t>(pow2(resolution_)) + 1; }
  const std::vector<double>& values() const { return values_; }

  std::size_t linear(std::span<const std::int64_t> j) const;
  double at(std::span<const std::int64_t> j) const { return values_[linear(j)]; }
  double operator[](std::size_t lin) const { return values_[lin]; }

 private:
  int dim_;
  int resolution_;
  std::vector<double> values_;
};

/// Cell averages of f over the 2^{Nd} generation-N cells.
class CellField {
 public:
  CellField(int dim, int resolution, std::vector<double> values);

  int dim() const { return dim_; }
  int resolution() const { return resolution_; }
  std::size_t side() const { return static_cast<std::size_t>(pow2(resolution_)); }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t lin) const { return values_[lin]; }

 private:
  int dim_;
  int resolution_;
  std::vector<double> values_;
};

struct FigureGeometry {
  double volume = 0.0;
  double perimeter = 0.0;
  double diameter = 0.0;
  double reg = 0.0;
  double isop = 0.0;
};

/// Haar function value at x. Cells are half-open [a,b) except the last one
/// along each axis, which is closed.
double haar_eval(const HaarIndex& idx, std::span<const double> x);

/// One-dimensional Faber-Schauder function, the indefinite integral of the Haar function.
double faber_eval_1d(const HaarIndex& idx, double x);

/// Alternating corner sum of f over prod_i [lo_i, hi_i]; lo, hi are vertex indices.
double rect_increment(const VertexField& f, std::span<const std::int64_t> lo,
                      std::span<const std::int64_t> hi);

/// Same, with real corner coordinates that must lie on the vertex grid.
double rect_increment_at(const VertexField& f, std::span<const double> lo,
                         std::span<const double> hi);

/// Sum of |increment| over all generation-n dyadic cubes.
double vitali_variation_dyadic(const VertexField& f, int gen);

FigureGeometry figure_geometry(const DyadicFigure& fig);

VertexField sample_vertices(const ScalarFn& fn, int dim, int resolution);
CellField sample_cell_averages(const ScalarFn& fn, int dim, int resolution, int order = 4);

/// Gauss-Legendre nodes and weights on [0,1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
QuadratureRule gauss_legendre(int order);

/// Row-major decode of a linear index over a `side`^dim grid.
void decode_linear(std::size_t lin, std::size_t side, std::span<std::int64_t> out);
std::size_t encode_linear(std::span<const std::int64_t> pos, std::size_t side);

}  // namespace dyadcharge
