#include "dyadcharge/gauge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dyadcharge/errors.hpp"
#include "dyadcharge/parallel.hpp"

namespace dyadcharge {

bool TaggedPartition1D::is_fine(const GaugeFn& delta) const {
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (!(breakpoints[i + 1] - breakpoints[i] < delta(tags[i]))) return false;
  }
  return true;
}

TaggedPartition1D cousin_partition_1d(const GaugeFn& delta, int max_depth) {
  TaggedPartition1D p;
  p.breakpoints.push_back(0.0);
  struct Piece {
    double a, b;
    int depth;
  };
  std::vector<Piece> stack{{0.0, 1.0, 0}};
  while (!stack.empty()) {
    const Piece piece = stack.back();
    stack.pop_back();
    const double m = 0.5 * (piece.a + piece.b);
    const double g = delta(m);
    if (!(g > 0.0)) throw ValidationError("gauge must be positive at " + std::to_string(m));
    if (piece.b - piece.a < g) {
      p.breakpoints.push_back(piece.b);
      p.tags.push_back(m);
      continue;
    }
    if (piece.depth >= max_depth) {
      throw DepthExceeded("Cousin bisection passed depth " + std::to_string(max_depth) + " near " + std::to_string(m));
    }
    // right half first so the left half is popped next
    stack.push_back({m, piece.b, piece.depth + 1});
    stack.push_back({piece.a, m, piece.depth + 1});
  }
  return p;
}

namespace {

double sample_finite(const Fn1D& f, double x) {
  const double v = f(x);
  if (!std::isfinite(v)) throw NonFiniteSample("integrand is not finite at x = " + std::to_string(x));
  return v;
}

struct Interval {
  double a, b;
  double tag;
  double f_tag;
  double disc = -1.0;  // |one-point - three-point|, negative until probed
  double fine = 0.0;   // the three-point sum
  double f_lo = 0.0, f_hi = 0.0;
  double len() const { return b - a; }
};

// End pieces are tagged at the outer endpoint when f is finite there.
struct EndPiece {
  double a, b;
  bool left;
  double tag;
  double f_tag;
};

EndPiece make_end(const Fn1D& f, double a, double b, bool left) {
  const double x = left ? a : b;
  const double v = f(x);
  if (std::isfinite(v)) return {a, b, left, x, v};
  const double m = 0.5 * (a + b);
  return {a, b, left, m, sample_finite(f, m)};
}

double end_disc(const Fn1D& f, const EndPiece& e) {
  const double h = e.b - e.a;
  const double probe = e.left ? e.a + 0.75 * h : e.a + 0.25 * h;
  const double fp = sample_finite(f, probe);
  return std::abs(e.f_tag * h - 0.5 * h * (e.f_tag + fp));
}

}  // namespace

IntegralResult hk_integrate(const Fn1D& f, double a, double b, double tol, std::size_t budget) {
  if (!(b > a)) throw ValidationError("integration interval must have b > a");
  if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
  if (budget < 4) throw ValidationError("budget must allow at least 4 intervals");
  IntegralResult res;
  const double q = 0.25 * (b - a);
  EndPiece left = make_end(f, a, a + q, true);
  EndPiece right = make_end(f, b - q, b, false);
  std::vector<Interval> inner;
  for (int i = 1; i <= 2; ++i) {
    const double lo = a + i * q, hi = a + (i + 1) * q;
    const double m = 0.5 * (lo + hi);
    inner.push_back({lo, hi, m, sample_finite(f, m)});
  }

  auto total = [&] {
    double s = left.f_tag * (left.b - left.a) + right.f_tag * (right.b - right.a);
    for (const auto& iv : inner) s += iv.f_tag * iv.len();
    return s;
  };
  auto pieces = [&] { return inner.size() + 2; };
  bool out_of_budget = false;

  // Trisects flagged interior intervals until none remain flagged.
  auto resolve_interior = [&] {
    for (;;) {
      parallel_for(inner.size(), [&](std::size_t i) {
        auto& iv = inner[i];
        if (iv.disc >= 0.0) return;
        const double h = iv.len();
        iv.f_lo = sample_finite(f, iv.a + h / 6.0);
        iv.f_hi = sample_finite(f, iv.a + 5.0 * h / 6.0);
        iv.fine = h / 3.0 * (iv.f_lo + iv.f_tag + iv.f_hi);
        iv.disc = std::abs(iv.f_tag * h - iv.fine);
      });
      std::vector<std::size_t> flagged;
      for (std::size_t i = 0; i < inner.size(); ++i) {
        if (inner[i].disc > tol * inner[i].len()) flagged.push_back(i);
      }
      if (flagged.empty()) return;
      if (pieces() + 2 * flagged.size() > budget) {
        out_of_budget = true;
        std::stable_sort(flagged.begin(), flagged.end(),
                         [&](std::size_t x, std::size_t y) { return inner[x].disc > inner[y].disc; });
        flagged.resize((budget - std::min(budget, pieces())) / 2);
        std::sort(flagged.begin(), flagged.end());
      }
      if (flagged.empty()) return;
      std::vector<Interval> next;
      next.reserve(inner.size() + 2 * flagged.size());
      std::size_t fi = 0;
      for (std::size_t i = 0; i < inner.size(); ++i) {
        const auto& iv = inner[i];
        if (fi < flagged.size() && flagged[fi] == i) {
          ++fi;
          const double h = iv.len() / 3.0;
          next.push_back({iv.a, iv.a + h, iv.a + h / 2.0, iv.f_lo});
          next.push_back({iv.a + h, iv.a + 2.0 * h, iv.tag, iv.f_tag});
          next.push_back({iv.a + 2.0 * h, iv.b, iv.b - h / 2.0, iv.f_hi});
        } else {
          next.push_back(iv);
        }
      }
      inner = std::move(next);
      if (out_of_budget) return;
    }
  };

  int quiet_steps = 0;
  for (;;) {
    resolve_interior();
    const double s = total();
    if (!res.history.empty() && std::abs(s - res.history.back()) < tol) {
      ++quiet_steps;
    } else {
      quiet_steps = 0;
    }
    res.history.push_back(s);
    if (out_of_budget) break;
    const double end_tol_l = tol * (left.b - left.a), end_tol_r = tol * (right.b - right.a);
    const bool left_ok = end_disc(f, left) <= end_tol_l;
    const bool right_ok = end_disc(f, right) <= end_tol_r;
    if ((left_ok && right_ok) || quiet_steps >= 2) {
      res.converged = true;
      break;
    }
    if (pieces() + 2 > budget) {
      out_of_budget = true;
      break;
    }
    // Halve the end pieces; the released halves join the interior.
    const double lm = 0.5 * (left.a + left.b);
    const double rm = 0.5 * (right.a + right.b);
    const Interval lnew{lm, left.b, 0.5 * (lm + left.b), sample_finite(f, 0.5 * (lm + left.b))};
    const Interval rnew{right.a, rm, 0.5 * (right.a + rm), sample_finite(f, 0.5 * (right.a + rm))};
    left = make_end(f, left.a, lm, true);
    right = make_end(f, rm, right.b, false);
    inner.insert(inner.begin(), lnew);
    inner.push_back(rnew);
  }
  res.value = res.history.back();
  res.pieces = pieces();
  res.finest_mesh = std::min(left.b - left.a, right.b - right.a);
  for (const auto& iv : inner) res.finest_mesh = std::min(res.finest_mesh, iv.len());
  return res;
}

double alexiewicz_norm_1d(const Fn1D& f, double tol, int max_level) {
  if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
  double previous = std::numeric_limits<double>::quiet_NaN();
  double norm = 0.0;
  for (int m = 1; m <= max_level; ++m) {
    const std::size_t cells = static_cast<std::size_t>(pow2(m));
    const double cell_tol = tol * std::ldexp(0.5, -m);
    std::vector<double> pieces(cells);
    for (std::size_t j = 0; j < cells; ++j) {
      const double lo = std::ldexp(static_cast<double>(j), -m);
      const double hi = std::ldexp(static_cast<double>(j + 1), -m);
      pieces[j] = hk_integrate(f, lo, hi, cell_tol).value;
    }
    double partial = 0.0;
    norm = 0.0;
    for (double p : pieces) {
      partial += p;
      norm = std::max(norm, std::abs(partial));
    }
    if (m >= 2 && std::abs(norm - previous) < tol) break;
    previous = norm;
  }
  return norm;
}

namespace {

struct Cell {
  CubeIndex cube;
  double one;  // f(centre) |K|
};

}  // namespace

IntegralResult dyadic_henstock(const ScalarFn& f, const std::vector<CubeIndex>& roots, double tol,
                               std::size_t budget) {
  if (roots.empty()) throw ValidationError("no cubes to integrate over");
  if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
  const int d = roots.front().dim();
  const unsigned kids = static_cast<unsigned>(pow2(d));
  constexpr int kMaxGen = 40;

  auto term = [&](const CubeIndex& k) {
    const auto c = k.center();
    const double v = f(c);
    if (!std::isfinite(v)) throw NonFiniteSample("integrand is not finite at a cube centre");
    return v * k.volume();
  };

  IntegralResult res;
  std::vector<Cell> active(roots.size(), Cell{roots.front(), 0.0});
  parallel_for(roots.size(), [&](std::size_t i) { active[i] = Cell{roots[i], term(roots[i])}; });
  double accepted = 0.0;
  std::size_t accepted_count = 0;
  double finest = 1.0;
  for (const auto& c : active) finest = std::min(finest, c.cube.side());
  {
    double s = 0.0;
    for (const auto& c : active) s += c.one;
    res.history.push_back(s);
  }

  int quiet = 0;
  bool out_of_budget = false;
  while (!active.empty()) {
    std::vector<std::vector<double>> child_terms(active.size());
    std::vector<double> disc(active.size());
    parallel_for(active.size(), [&](std::size_t i) {
      auto& terms = child_terms[i];
      terms.resize(kids);
      double s = 0.0;
      for (unsigned c = 0; c < kids; ++c) {
        terms[c] = term(active[i].cube.child(c));
        s += terms[c];
      }
      disc[i] = std::abs(active[i].one - s);
    });

    std::vector<std::size_t> split;
    for (std::size_t i = 0; i < active.size(); ++i) {
      if (disc[i] > tol * active[i].cube.volume() && active[i].cube.gen() < kMaxGen) split.push_back(i);
    }
    const std::size_t held = accepted_count + active.size();
    if (held + split.size() * (kids - 1) > budget) {
      out_of_budget = true;
      std::stable_sort(split.begin(), split.end(), [&](std::size_t x, std::size_t y) { return disc[x] > disc[y]; });
      split.resize((budget - std::min(budget, held)) / (kids - 1));
      std::sort(split.begin(), split.end());
    }

    std::vector<Cell> next;
    std::size_t si = 0;
    for (std::size_t i = 0; i < active.size(); ++i) {
      if (si < split.size() && split[si] == i) {
        ++si;
        for (unsigned c = 0; c < kids; ++c) next.push_back({active[i].cube.child(c), child_terms[i][c]});
        finest = std::min(finest, 0.5 * active[i].cube.side());
      } else {
        // Accepted cubes keep the finer child sum.
        accepted += std::accumulate(child_terms[i].begin(), child_terms[i].end(), 0.0);
        ++accepted_count;
      }
    }
    double s = accepted;
    for (const auto& c : next) s += c.one;
    if (std::abs(s - res.history.back()) < tol) {
      ++quiet;
    } else {
      quiet = 0;
    }
    res.history.push_back(s);
    active = std::move(next);
    if (out_of_budget) break;
    if (active.empty() || quiet >= 2) {
      res.converged = true;
      break;
    }
  }
  res.value = res.history.back();
  res.pieces = accepted_count + active.size();
  res.finest_mesh = finest;
  return res;
}

double dyadic_riemann_sum(const ScalarFn& f, const DyadicFigure& fig, int gen) {
  const auto cells = fig.cells_at(gen);
  std::vector<double> terms(cells.size());
  parallel_for(cells.size(), [&](std::size_t i) {
    const auto k = CubeIndex::from_linear(fig.dim(), gen, cells[i]);
    terms[i] = f(k.center()) * k.volume();
  });
  return std::accumulate(terms.begin(), terms.end(), 0.0);
}

DivergenceCheck divergence_check(const VectorFn& v, const ScalarFn& divergence, const DyadicFigure& fig,
                                 double tol, int order) {
  DivergenceCheck out;
  out.lhs_detail = dyadic_henstock(divergence, fig.cubes(), tol);
  out.lhs = out.lhs_detail.value;
  const auto flux = flux_charge(v, fig.dim(), fig.max_gen(), order);
  out.rhs = eval_figure(flux, fig);
  out.gap = std::abs(out.lhs - out.rhs);
  out.passed = out.gap < tol;
  return out;
}

}  // namespace dyadcharge
