#pragma once

// Gauge integration: Cousin partitions, an adaptive Henstock-Kurzweil
// integrator on intervals, the Alexiewicz norm, the dyadic Henstock integral
// on [0,1]^d, and a divergence-theorem harness.

#include <cstddef>
#include <functional>
#include <vector>

#include "dyadcharge/charge.hpp"

namespace dyadcharge {

using GaugeFn = std::function<double(double)>;
using Fn1D = std::function<double(double)>;

struct TaggedPartition1D {
  std::vector<double> breakpoints;  // strictly increasing, from 0 to 1
  std::vector<double> tags;         // tags[i] in [breakpoints[i], breakpoints[i+1]]

  std::size_t size() const { return tags.size(); }
  /// Every interval is shorter than the gauge at its tag.
  bool is_fine(const GaugeFn& delta) const;
};

/// Bisects [0,1] until each piece [a,b] satisfies b - a < delta(midpoint).
/// Throws DepthExceeded past max_depth bisections.
TaggedPartition1D cousin_partition_1d(const GaugeFn& delta, int max_depth = 60);

struct IntegralResult {
  double value = 0.0;
  std::size_t pieces = 0;       // intervals or cubes in the final partition
  double finest_mesh = 0.0;
  bool converged = false;
  std::vector<double> history;  // Riemann sum after each refinement round
};

inline constexpr std::size_t kDefaultBudget1D = std::size_t{1} << 20;
inline constexpr std::size_t kDefaultBudgetCubes = std::size_t{1} << 22;

/// Adaptive Riemann sums over tagged partitions of [a,b]. Interior intervals
/// carry midpoint tags and are trisected while their one-point and
/// three-point sums differ by more than tol times their length. The two end
/// intervals are tagged at the endpoint (the midpoint if f is not finite
/// there) and halved every round, so integrable endpoint blow-up and
/// oscillation are exhausted from the outside. Converged when no interval is
/// flagged, or when two consecutive rounds change the sum by less than tol.
/// Running out of budget returns the last sum with converged = false.
IntegralResult hk_integrate(const Fn1D& f, double a, double b, double tol,
                            std::size_t budget = kDefaultBudget1D);

inline IntegralResult hk_integrate_1d(const Fn1D& f, double tol, std::size_t budget = kDefaultBudget1D) {
  return hk_integrate(f, 0.0, 1.0, tol, budget);
}

/// max_x |integral_0^x f| over dyadic grids, refined until the maximum
/// changes by less than tol (grids up to 2^max_level cells).
double alexiewicz_norm_1d(const Fn1D& f, double tol, int max_level = 12);

/// Adaptive dyadic-cube Riemann sums with centre tags, starting from `roots`.
/// A cube splits into its 2^d children while |f(c_K)|K| - sum of child terms|
/// exceeds tol |K|. Convergence as in the 1D integrator.
IntegralResult dyadic_henstock(const ScalarFn& f, const std::vector<CubeIndex>& roots, double tol,
                               std::size_t budget = kDefaultBudgetCubes);

inline IntegralResult dyadic_henstock(const ScalarFn& f, int dim, double tol,
                                      std::size_t budget = kDefaultBudgetCubes) {
  return dyadic_henstock(f, {CubeIndex::root(dim)}, tol, budget);
}

/// Centre-tag Riemann sum over every generation-`gen` cell of the figure.
double dyadic_riemann_sum(const ScalarFn& f, const DyadicFigure& fig, int gen);

struct DivergenceCheck {
  double lhs = 0.0;  // integral of the divergence over the figure
  double rhs = 0.0;  // outward boundary flux
  double gap = 0.0;
  bool passed = false;
  IntegralResult lhs_detail;
};

/// lhs by dyadic_henstock of `divergence` over the figure's cubes, rhs from
/// the flux charge (Gauss order `order`) at the figure's finest generation.
DivergenceCheck divergence_check(const VectorFn& v, const ScalarFn& divergence, const DyadicFigure& fig,
                                 double tol, int order = 4);

}  // namespace dyadcharge
