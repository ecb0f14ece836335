#pragma once

// Exact fractional Brownian sheet sampling on dyadic vertex grids, increment
// moments, and the moment-based chargeability diagnostic.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dyadcharge/dyadic.hpp"

namespace dyadcharge {

class HurstVector {
 public:
  /// Throws ValidationError unless every component lies in (0,1).
  explicit HurstVector(std::vector<double> h);
  int dim() const { return static_cast<int>(h_.size()); }
  double operator[](int i) const { return h_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& components() const { return h_; }
  double mean() const;

 private:
  std::vector<double> h_;
};

/// (s^{2H} + t^{2H} - |t-s|^{2H}) / 2
double fbm_cov_1d(double hurst, double s, double t);

/// Samples the sheet with covariance prod_i fbm_cov_1d(H_i, s_i, t_i) exactly.
/// Each axis covariance on the nonzero grid points is factored once; a member
/// is L_1 (x) ... (x) L_d applied to normals from stream `member` of `seed`.
class FbsSampler {
 public:
  /// Requires (2^N + 1)^d <= 2^22. A failed factorization is retried once
  /// with a 1e-12 ridge before FactorizationFailure is thrown.
  FbsSampler(HurstVector hurst, int resolution);

  const HurstVector& hurst() const { return hurst_; }
  int resolution() const { return resolution_; }
  /// Ridge added to axis i, 0 when the plain factorization succeeded.
  const std::vector<double>& jitter() const { return jitter_; }

  VertexField sample(std::uint64_t seed, std::uint64_t member) const;

 private:
  HurstVector hurst_;
  int resolution_;
  std::vector<std::vector<double>> factors_;  // row-major lower-triangular, M x M
  std::vector<double> jitter_;
};

std::vector<VertexField> sample_fbs(const HurstVector& hurst, int resolution, std::uint64_t seed,
                                    std::size_t ensemble);

/// Mean of |increment(K)|^q pooled over generation-n cubes and all members.
double increment_moment(const std::vector<VertexField>& ensemble, int gen, double q);

/// E|Z|^q for a standard normal Z and even q: (q-1)!!.
double gaussian_abs_moment(int q);

struct RectangleVariance {
  std::vector<std::int64_t> lo, hi;  // vertex indices
  double empirical = 0.0;            // mean of increment^2 (the mean is zero)
  double expected = 0.0;             // prod_i |b_i - a_i|^{2 H_i}
  double std_error = 0.0;            // expected * sqrt(2 / ensemble)
  double z = 0.0;
};

struct VarianceCheck {
  std::vector<RectangleVariance> rows;
  double max_abs_z = 0.0;
  bool passed = false;  // every |z| <= z_limit
};

/// Draws `rectangles` random grid rectangles from `rect_seed`, streams
/// `ensemble` members of the sampler and compares increment variances with
/// the product law.
VarianceCheck check_increment_variance(const FbsSampler& sampler, std::uint64_t seed, std::size_t ensemble,
                                       std::size_t rectangles, std::uint64_t rect_seed, double z_limit = 4.0);

enum class Verdict { ChargeableConsistent, NotChargeableConsistent, Inconclusive };
std::string to_string(Verdict v);

struct ChargeabilityReport {
  int dim = 1;
  double q = 8.0;
  std::vector<int> gens;
  std::vector<double> moments;        // m_n
  std::vector<double> log2_moments;
  double eta_hat = 0.0;               // slope of log2 m_n against n d is -(1 + eta_hat)
  double eta_se = 0.0;                // standard error of eta_hat
  double ratio = 0.0;                 // eta_hat / q
  double threshold = 0.0;             // (d-1)/d
  double band = 0.0;                  // half-width of the inconclusive zone around the threshold
  bool below_upper = true;            // eta_hat / q <= 1
  std::optional<double> gamma_upper;  // d eta_hat / q - (d-1), when the threshold is exceeded
  Verdict verdict = Verdict::Inconclusive;
  std::optional<double> model_eta;    // q Hbar - 1, Gaussian moment scaling, even q only
  std::optional<double> c_q;
  std::vector<std::string> notes;
};

/// Needs at least 3 generations and 100 members. Verdicts are statistical
/// statements about the ensemble, never proofs about sample paths.
ChargeabilityReport chargeability_diagnostic(const std::vector<VertexField>& ensemble, double q, int gen_lo,
                                             int gen_hi, std::optional<double> hurst_mean = std::nullopt);

}  // namespace dyadcharge
