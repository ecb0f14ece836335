#pragma once

// Charges on the dyadic cubes of [0,1]^d, stored to a finite depth N, and
// their Faber-Schauder coefficient trees.

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "dyadcharge/dyadic.hpp"
#include "dyadcharge/errors.hpp"

namespace dyadcharge {

/// v(x) written into out; both spans have length d.
using VectorFn = std::function<void(std::span<const double> x, std::span<double> out)>;

/// Default storage depth: 8 for d <= 2, 5 for d = 3, 3 beyond.
int default_depth(int dim);

/// Per-generation arrays of cube values, generations 0..depth, row-major.
struct CubeArrays {
  int dim = 1;
  int depth = 0;
  std::vector<std::vector<double>> values;

  /// Zero-filled arrays of the right shape.
  static CubeArrays zeros(int dim, int depth);
  /// Throws ValidationError unless sizes match 2^{nd} and all entries are finite.
  void check_shape() const;
  /// Fills generations depth-1..0 by summing children.
  void sum_up();
  double value(const CubeIndex& k) const;
};

class AdditivityViolation : public ValidationError {
 public:
  AdditivityViolation(CubeIndex worst, double residual, double tolerance);
  const CubeIndex& worst() const { return worst_; }
  double residual() const { return residual_; }

 private:
  CubeIndex worst_;
  double residual_;
};

/// An additive set function on all dyadic cubes up to generation `depth`.
/// Every generation is stored; additivity is validated on construction to
/// 1e-12 times the sum of |value| over the finest generation.
class CubeCharge {
 public:
  explicit CubeCharge(CubeArrays arrays);

  int dim() const { return data_.dim; }
  int depth() const { return data_.depth; }
  double value(const CubeIndex& k) const { return data_.value(k); }
  double total() const { return data_.values[0][0]; }
  std::span<const double> generation(int n) const { return data_.values.at(static_cast<std::size_t>(n)); }
  const CubeArrays& arrays() const { return data_; }
  /// Sum of |value| over the finest generation.
  double scale() const;

 private:
  CubeArrays data_;
};

/// Faber-Schauder coefficients: a_{-1} plus a_{n,k,e} for n = 0..depth-1.
/// Generation n holds 2^{nd}(2^d-1) entries at index lin(k)*(2^d-1) + (e-1),
/// with e the pattern bitmask of HaarIndex.
struct FaberCoeffs {
  int dim = 1;
  int depth = 0;
  double exceptional = 0.0;
  std::vector<std::vector<double>> generations;

  static FaberCoeffs zeros(int dim, int depth);
  void check_shape() const;
  double coefficient(const HaarIndex& idx) const;
  double& coefficient(const CubeIndex& cube, unsigned pattern);
};

struct FractionalProfile {
  double gamma = 0.0;
  double delta = 0.0;
  std::vector<double> sup_ratio;      // M_n = max_K |w(K)| / |K|^delta, n = 0..N
  std::vector<double> coeff_max;      // C_n = max_{k,e} |a_{n,k,e}|, n = 0..N-1
  double decay_slope = std::numeric_limits<double>::quiet_NaN();  // fit of log2 C_n against n, n >= 2
  double predicted_slope = 0.0;       // 1 - gamma - d/2
  double holder_constant = 0.0;       // max_n M_n
  bool consistent = false;            // decay_slope <= predicted_slope + 0.1
};

struct HolderControlResult {
  bool holds = true;
  std::optional<CubeIndex> worst;     // cube with the largest |w(K)| / |K|^delta
  double worst_ratio = 0.0;
};

/// (d - 1 + gamma) / d
double fractional_delta(int dim, double gamma);

/// Validates additivity of raw per-cube values.
CubeCharge charge_from_cube_values(int dim, int depth, std::vector<std::vector<double>> values);

CubeCharge lebesgue_charge(int dim, int depth);

/// w(K) = integral over K of the piecewise-constant density.
CubeCharge charge_from_density(const CellField& f, int depth);

/// w(K) = rectangular increment of the sampled function over K.
CubeCharge charge_from_increments(const VertexField& g, int depth);

/// Outward flux of v through the boundary of each cube, Gauss order `order`
/// per face axis. Leaf fluxes share face integrals, so interior faces cancel.
CubeCharge flux_charge(const VectorFn& v, int dim, int depth, int order = 4);

FaberCoeffs to_faber_coeffs(const CubeCharge& cc);
CubeCharge from_faber_coeffs(const FaberCoeffs& fc);

double eval_figure(const CubeCharge& cc, const DyadicFigure& fig);

FractionalProfile fractional_profile(const CubeCharge& cc, double gamma);

HolderControlResult holder_control_check(const CubeCharge& cc, double constant, double gamma);

nlohmann::json to_json(const CubeCharge& cc);
nlohmann::json to_json(const FaberCoeffs& fc);
CubeCharge cube_charge_from_json(const nlohmann::json& j);
FaberCoeffs faber_coeffs_from_json(const nlohmann::json& j);

/// Least-squares slope of ys against xs.
double fit_slope(std::span<const double> xs, std::span<const double> ys);

}  // namespace dyadcharge
