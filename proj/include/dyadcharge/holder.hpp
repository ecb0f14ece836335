#pragma once

// Faber-Schauder analysis and synthesis of sampled 1D functions, and Hölder
// estimates read off the coefficient decay.

#include <string>
#include <vector>

#include "dyadcharge/charge.hpp"

namespace dyadcharge {

struct SchauderExpansion {
  double offset = 0.0;  // f(0), removed before analysis
  FaberCoeffs coeffs;   // a_{-1} = f(1) - f(0); a_{n,k} = 2^{n/2+1}(f(m) - (f(l)+f(r))/2)
};

/// depth < 0 means depth = resolution. Requires depth <= resolution.
SchauderExpansion analyze_1d(const VertexField& f, int depth = -1);

/// Partial sum offset + a_{-1} x + sum a_{n,k} f_{n,k}(x) at the 2^resolution + 1 vertices.
VertexField synthesize_1d(const FaberCoeffs& coeffs, int resolution, double offset = 0.0);

struct HolderEstimate {
  double gamma = 0.0;
  double coefficient_norm = 0.0;  // max(|a_{-1}|, sup 2^{n(gamma-1/2)} |a_{n,k}|)
  double grid_seminorm = 0.0;     // sup |f(y)-f(x)| / |y-x|^gamma over grid pairs
  bool all_pairs = true;          // false when only dyadic lags were scanned
  double norm_ratio = 0.0;        // coefficient_norm / max(|a_{-1}|, grid_seminorm)
  bool bound_holds = true;        // 2^{n(gamma-1/2)} |a_{n,k}| <= 2^{1-gamma} grid_seminorm
  double bound_ratio = 0.0;       // worst left/right ratio of that bound
  std::vector<int> gens;          // generations entering the decay fit
  std::vector<double> log2_max;   // log2 max_k |a_{n,k}| for every generation
  double gamma_hat = 0.0;         // 1/2 - fitted slope; +inf if no coefficient is nonzero
  std::vector<std::string> warnings;
};

/// All grid pairs for resolution <= 12, dyadic lags 2^j grid steps beyond.
HolderEstimate holder_estimate(const VertexField& f, double gamma);

/// 1/2 minus the slope of log2 max_k |a_{n,k}| over generations 2..depth-2.
double fitted_holder_exponent(const FaberCoeffs& coeffs);

/// Hölder seminorm along axis-parallel pairs at dyadic lags, for any d.
double axis_holder_seminorm(const VertexField& f, double gamma);

/// Brownian path B = X_{-1} f_{-1} + sum_{n<depth} sum_k X_{n,k} f_{n,k} with
/// X drawn from stream `stream` of `seed`; X_{-1} has index 0 and X_{n,k}
/// index 2^n + k. Requires depth <= 20.
VertexField levy_ciesielski(int depth, std::uint64_t seed, std::uint64_t stream = 0);

}  // namespace dyadcharge
