#include "dyadcharge/stochastic.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "dyadcharge/charge.hpp"
#include "dyadcharge/errors.hpp"
#include "dyadcharge/parallel.hpp"
#include "dyadcharge/rng.hpp"

namespace dyadcharge {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<double> factor_axis(double hurst, std::size_t m, double& ridge) {
  RowMatrix cov(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      cov(i, j) = fbm_cov_1d(hurst, (i + 1.0) / m, (j + 1.0) / m);
    }
  }
  ridge = 0.0;
  Eigen::LLT<RowMatrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    ridge = 1e-12;
    cov.diagonal().array() += ridge;
    llt.compute(cov);
    if (llt.info() != Eigen::Success) {
      throw FactorizationFailure("covariance factorization failed for H = " + std::to_string(hurst));
    }
  }
  RowMatrix l = llt.matrixL();
  return std::vector<double>(l.data(), l.data() + l.size());
}

}  // namespace

HurstVector::HurstVector(std::vector<double> h) : h_(std::move(h)) {
  if (h_.empty() || h_.size() > static_cast<std::size_t>(kMaxDim)) throw ValidationError("Hurst vector has a bad length");
  for (double x : h_) {
    if (!(x > 0.0 && x < 1.0)) throw ValidationError("Hurst exponents must lie in (0,1)");
  }
}

double HurstVector::mean() const {
  double s = 0.0;
  for (double x : h_) s += x;
  return s / static_cast<double>(h_.size());
}

double fbm_cov_1d(double hurst, double s, double t) {
  const double e = 2.0 * hurst;
  return 0.5 * (std::pow(s, e) + std::pow(t, e) - std::pow(std::abs(t - s), e));
}

FbsSampler::FbsSampler(HurstVector hurst, int resolution) : hurst_(std::move(hurst)), resolution_(resolution) {
  const int d = hurst_.dim();
  if (resolution < 1) throw ValidationError("resolution must be positive");
  const double points = std::pow(std::ldexp(1.0, resolution) + 1.0, d);
  if (points > std::ldexp(1.0, 22)) throw ValidationError("grid exceeds 2^22 vertices");
  const std::size_t m = static_cast<std::size_t>(pow2(resolution));
  jitter_.assign(static_cast<std::size_t>(d), 0.0);
  for (int i = 0; i < d; ++i) {
    // Axes with equal exponents share a factor.
    int same = -1;
    for (int j = 0; j < i; ++j) {
      if (hurst_[j] == hurst_[i]) same = j;
    }
    if (same >= 0) {
      factors_.push_back(factors_[static_cast<std::size_t>(same)]);
      jitter_[static_cast<std::size_t>(i)] = jitter_[static_cast<std::size_t>(same)];
    } else {
      factors_.push_back(factor_axis(hurst_[i], m, jitter_[static_cast<std::size_t>(i)]));
    }
  }
}

VertexField FbsSampler::sample(std::uint64_t seed, std::uint64_t member) const {
  const int d = hurst_.dim();
  const std::size_t m = static_cast<std::size_t>(pow2(resolution_));
  std::size_t interior = 1;
  for (int i = 0; i < d; ++i) interior *= m;
  std::vector<double> x(interior), y(interior);
  NormalStream(seed, member).fill(x);

  // Mode-i product: view x as (outer, m, inner) and apply L_i to each m x inner slab.
  std::size_t outer = interior / m;
  std::size_t inner = 1;
  for (int axis = d - 1; axis >= 0; --axis) {
    const Eigen::Map<const RowMatrix> l(factors_[static_cast<std::size_t>(axis)].data(), m, m);
    for (std::size_t a = 0; a < outer; ++a) {
      const Eigen::Map<const RowMatrix> src(x.data() + a * m * inner, m, inner);
      Eigen::Map<RowMatrix> dst(y.data() + a * m * inner, m, inner);
      dst.noalias() = l.triangularView<Eigen::Lower>() * src;
    }
    std::swap(x, y);
    inner *= m;
    outer /= m;
  }

  const std::size_t side = m + 1;
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= side;
  std::vector<double> values(total, 0.0);
  std::int64_t pos[kMaxDim];
  const std::span<std::int64_t> p(pos, static_cast<std::size_t>(d));
  for (std::size_t lin = 0; lin < interior; ++lin) {
    decode_linear(lin, m, p);
    for (auto& c : p) c += 1;
    values[encode_linear(p, side)] = x[lin];
  }
  return VertexField(d, resolution_, std::move(values));
}

std::vector<VertexField> sample_fbs(const HurstVector& hurst, int resolution, std::uint64_t seed,
                                    std::size_t ensemble) {
  const FbsSampler sampler(hurst, resolution);
  std::vector<std::optional<VertexField>> slots(ensemble);
  parallel_for(ensemble, [&](std::size_t i) { slots[i].emplace(sampler.sample(seed, i)); });
  std::vector<VertexField> out;
  out.reserve(ensemble);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

double increment_moment(const std::vector<VertexField>& ensemble, int gen, double q) {
  if (ensemble.empty()) throw ValidationError("empty ensemble");
  const int d = ensemble.front().dim();
  const int res = ensemble.front().resolution();
  if (gen < 0 || gen > res) throw ValidationError("generation exceeds the field resolution");
  for (const auto& f : ensemble) {
    if (f.dim() != d || f.resolution() != res) throw ValidationError("ensemble members differ in shape");
  }
  const std::size_t cubes = cube_count(d, gen);
  const std::int64_t scale = std::int64_t{1} << (res - gen);
  std::vector<double> sums(ensemble.size(), 0.0);
  parallel_for(ensemble.size(), [&](std::size_t e) {
    std::int64_t lo[kMaxDim], hi[kMaxDim];
    const std::span<std::int64_t> lo_s(lo, static_cast<std::size_t>(d)), hi_s(hi, static_cast<std::size_t>(d));
    double s = 0.0;
    for (std::size_t lin = 0; lin < cubes; ++lin) {
      decode_linear(lin, static_cast<std::size_t>(pow2(gen)), lo_s);
      for (int i = 0; i < d; ++i) {
        lo[i] *= scale;
        hi[i] = lo[i] + scale;
      }
      s += std::pow(std::abs(rect_increment(ensemble[e], lo_s, hi_s)), q);
    }
    sums[e] = s;
  });
  double total = 0.0;
  for (double s : sums) total += s;
  return total / (static_cast<double>(cubes) * static_cast<double>(ensemble.size()));
}

VarianceCheck check_increment_variance(const FbsSampler& sampler, std::uint64_t seed, std::size_t ensemble,
                                       std::size_t rectangles, std::uint64_t rect_seed, double z_limit) {
  if (ensemble < 2) throw ValidationError("variance check needs at least two members");
  const int d = sampler.hurst().dim();
  const std::int64_t last = std::int64_t{1} << sampler.resolution();
  VarianceCheck out;
  std::uint64_t counter = 0;
  for (std::size_t r = 0; r < rectangles; ++r) {
    RectangleVariance row;
    row.expected = 1.0;
    for (int i = 0; i < d; ++i) {
      std::int64_t a = 0, b = 0;
      while (a == b) {
        a = static_cast<std::int64_t>(philox_bits(rect_seed, r, counter++) % static_cast<std::uint64_t>(last + 1));
        b = static_cast<std::int64_t>(philox_bits(rect_seed, r, counter++) % static_cast<std::uint64_t>(last + 1));
      }
      row.lo.push_back(std::min(a, b));
      row.hi.push_back(std::max(a, b));
      row.expected *= std::pow(static_cast<double>(std::abs(b - a)) / static_cast<double>(last), 2.0 * sampler.hurst()[i]);
    }
    out.rows.push_back(std::move(row));
  }
  std::vector<double> squares(ensemble * rectangles);
  parallel_for(ensemble, [&](std::size_t m) {
    const auto field = sampler.sample(seed, m);
    for (std::size_t r = 0; r < rectangles; ++r) {
      const double inc = rect_increment(field, out.rows[r].lo, out.rows[r].hi);
      squares[m * rectangles + r] = inc * inc;
    }
  });
  out.passed = true;
  for (std::size_t r = 0; r < rectangles; ++r) {
    auto& row = out.rows[r];
    double s = 0.0;
    for (std::size_t m = 0; m < ensemble; ++m) s += squares[m * rectangles + r];
    row.empirical = s / static_cast<double>(ensemble);
    row.std_error = row.expected * std::sqrt(2.0 / static_cast<double>(ensemble));
    row.z = (row.empirical - row.expected) / row.std_error;
    out.max_abs_z = std::max(out.max_abs_z, std::abs(row.z));
    if (!(std::abs(row.z) <= z_limit)) out.passed = false;
  }
  return out;
}

double gaussian_abs_moment(int q) {
  if (q < 0 || q % 2 != 0) throw ValidationError("closed-form Gaussian moment needs an even order");
  double c = 1.0;
  for (int k = q - 1; k > 1; k -= 2) c *= k;
  return c;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::ChargeableConsistent: return "chargeable-consistent";
    case Verdict::NotChargeableConsistent: return "not-chargeable-consistent";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

ChargeabilityReport chargeability_diagnostic(const std::vector<VertexField>& ensemble, double q, int gen_lo,
                                             int gen_hi, std::optional<double> hurst_mean) {
  if (!(q > 0.0)) throw ValidationError("moment order must be positive");
  if (gen_hi - gen_lo + 1 < 3) throw ValidationError("at least three generations are required");
  if (gen_lo < 0) throw ValidationError("generations must be nonnegative");
  if (ensemble.size() < 100) throw ValidationError("ensemble must hold at least 100 fields");
  ChargeabilityReport r;
  r.dim = ensemble.front().dim();
  r.q = q;
  const double d = r.dim;
  std::vector<double> xs;
  for (int n = gen_lo; n <= gen_hi; ++n) {
    const double m = increment_moment(ensemble, n, q);
    if (!(m > 0.0) || !std::isfinite(m)) throw DegenerateFit("increment moment is zero or non-finite at generation " + std::to_string(n));
    r.gens.push_back(n);
    r.moments.push_back(m);
    r.log2_moments.push_back(std::log2(m));
    xs.push_back(n * d);
  }
  const double slope = fit_slope(xs, r.log2_moments);
  r.eta_hat = -slope - 1.0;

  const double k = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i] / k;
    my += r.log2_moments[i] / k;
  }
  double sxx = 0.0, rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    const double fit = my + slope * (xs[i] - mx);
    rss += (r.log2_moments[i] - fit) * (r.log2_moments[i] - fit);
  }
  r.eta_se = std::sqrt(rss / (k - 2.0) / sxx);

  r.ratio = r.eta_hat / q;
  r.threshold = (d - 1.0) / d;
  r.band = std::max(0.02, 2.0 * r.eta_se / q);
  r.below_upper = r.ratio <= 1.0;
  const double margin = r.ratio - r.threshold;
  if (std::abs(margin) <= r.band) {
    r.verdict = Verdict::Inconclusive;
    r.notes.push_back("eta/q is within the uncertainty band of the threshold (d-1)/d");
  } else if (margin > 0.0) {
    r.verdict = Verdict::ChargeableConsistent;
    r.gamma_upper = d * r.ratio - (d - 1.0);
    if (!r.below_upper) r.notes.push_back("eta/q exceeds 1; the moment bound is outside its stated range");
  } else {
    r.verdict = Verdict::NotChargeableConsistent;
  }
  if (r.dim == 1) {
    r.notes.push_back("in one dimension every continuous path is chargeable; the moment test is only sufficient");
  }
  const int qi = static_cast<int>(q);
  if (qi == q && qi % 2 == 0) {
    r.c_q = gaussian_abs_moment(qi);
    if (hurst_mean) {
      r.model_eta = q * *hurst_mean - 1.0;
      r.notes.push_back("model_eta assumes Gaussian increments with variance |K|^{2 Hbar}");
    }
  }
  r.notes.push_back("statements are consistency checks on a finite ensemble, not almost-sure claims");
  return r;
}

}  // namespace dyadcharge
