#pragma once

// Sewing of almost-additive cube germs and Young integration against charges.

#include <string>
#include <vector>

#include "dyadcharge/charge.hpp"

namespace dyadcharge {

/// Per-cube values for generations 0..depth with no additivity requirement.
class RawGerm {
 public:
  explicit RawGerm(CubeArrays arrays);
  int dim() const { return data_.dim; }
  int depth() const { return data_.depth; }
  double value(const CubeIndex& k) const { return data_.value(k); }
  std::span<const double> generation(int n) const { return data_.values.at(static_cast<std::size_t>(n)); }
  const CubeArrays& arrays() const { return data_; }

 private:
  CubeArrays data_;
};

class AlmostAdditivityViolation : public ValidationError {
 public:
  AlmostAdditivityViolation(CubeIndex worst, double residual, double bound);
  const CubeIndex& worst() const { return worst_; }
  double residual() const { return residual_; }
  double bound() const { return bound_; }

 private:
  CubeIndex worst_;
  double residual_;
  double bound_;
};

struct SewReport {
  CubeCharge result;
  double constant = 0.0;
  double epsilon = 0.0;
  std::vector<double> residual;   // r_n = max_K |w(K) - eta(K)|, n = 0..depth
  double residual_exponent = 0.0; // fitted e in r_n ~ |K|^e over generations with r_n > 0
  double kappa = 0.0;             // max_K |w(K) - eta(K)| / (C |K|^{1+eps})
  std::vector<std::string> warnings;
};

/// Relative slack on the almost-additivity bound, plus an absolute floor of
/// 1e-12 times the sum of |eta| over the finest generation.
inline constexpr double kSewSlack = 1e-9;

/// w(K) = sum of eta over the generation-depth descendants of K. Throws
/// AlmostAdditivityViolation when |eta(K) - sum of children| exceeds
/// C |K|^{1+eps} (with slack) at some cube.
SewReport sew(const RawGerm& eta, double constant, double epsilon);

enum class TagRule { LowerCorner, Center };

/// eta(K) = f(x_K) w(K). Center tags need f.resolution() > cc.depth().
RawGerm germ_young(const VertexField& f, const CubeCharge& cc, TagRule rule = TagRule::LowerCorner);

/// Sewn Young integral of f against cc with eps = (beta + gamma - 1)/d and C
/// the largest observed germ residual ratio.
SewReport young_integral(const VertexField& f, const CubeCharge& cc, double beta, double gamma,
                         TagRule rule = TagRule::LowerCorner);

struct Young1DResult {
  double value = 0.0;
  /// partial_sums[0] = a_{-1} b_{-1}; partial_sums[n+1] adds generation n.
  std::vector<double> partial_sums;
};

/// Coefficient pairing a_{-1} b_{-1} + sum_{n<N} sum_k a_{n,k} b_{n,k}, where a
/// holds Haar coefficients of f and b Faber-Schauder coefficients of g.
Young1DResult young_1d(const FaberCoeffs& haar_f, const FaberCoeffs& faber_g);

/// Haar coefficients of a sampled 1D function: trapezoid cell integrals at the
/// field resolution, analyzed and truncated to `depth` generations.
FaberCoeffs haar_coeffs_1d(const VertexField& f, int depth);

struct YoungLoeveRow {
  FigureGeometry geometry;
  double integral = 0.0;    // (Y) integral over B
  double lhs = 0.0;         // |(Y) integral over B - f(x) w(B)|
  double structural = 0.0;  // |B|^delta (diam B)^beta / (isop B)^(1-gamma)
  double ratio = 0.0;
};

struct YoungLoeveReport {
  double beta = 0.0;
  double gamma = 0.0;
  double delta = 0.0;
  std::vector<YoungLoeveRow> rows;
  double max_ratio = 0.0;
  std::vector<int> cube_gens;
  std::vector<double> cube_error;  // max over generation-n cubes of |Y - f(y_K) w(K)|
  double cube_slope = 0.0;         // fitted e in cube_error ~ |K|^e
  double predicted_slope = 0.0;    // delta + beta/d
  double charge_norm_proxy = 0.0;  // max_n M_n from fractional_profile(cc, gamma)
};

YoungLoeveReport young_loeve_report(const VertexField& f, const CubeCharge& cc, const CubeCharge& result,
                                    const std::vector<DyadicFigure>& figures, double beta, double gamma,
                                    int gen_lo = 3, int gen_hi = 8);

}  // namespace dyadcharge
