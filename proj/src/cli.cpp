#include "dyadcharge/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dyadcharge/charge.hpp"
#include "dyadcharge/errors.hpp"
#include "dyadcharge/expr.hpp"
#include "dyadcharge/field_io.hpp"
#include "dyadcharge/gauge.hpp"
#include "dyadcharge/holder.hpp"
#include "dyadcharge/parallel.hpp"
#include "dyadcharge/stochastic.hpp"
#include "dyadcharge/young.hpp"

namespace dyadcharge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kCommands{"transform", "young", "young1d",  "hk",       "divcheck", "bm",
                                         "fbs",       "chargeability", "holder", "geometry", "sample", "charge"};

json stamped(const RunConfig& cfg, json body) {
  body["tool"] = {{"name", "dyadcharge"}, {"version", DYADCHARGE_VERSION}};
  body["config"] = echo(cfg);
  return body;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw NumericalError("cannot open for writing: " + path);
  out << text;
  if (!out) throw NumericalError("write failed: " + path);
}

void emit_json(const RunConfig& cfg, const std::string& path, json body) {
  write_text(path, stamped(cfg, std::move(body)).dump(2) + "\n");
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NumericalError("cannot open: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("malformed JSON in " + path + ": " + e.what());
  }
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& header) { text_ << header << '\n'; }
  template <class... T>
  void row(const T&... cells) {
    bool first = true;
    ((text_ << (first ? "" : ",") << cell(cells), first = false), ...);
    text_ << '\n';
  }
  void save(const std::string& path) const {
    if (!path.empty()) write_text(path, text_.str());
  }

 private:
  static std::string cell(double v) { return num(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  std::ostringstream text_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

ScalarFn scalar_fn(const Expr& e) {
  return [e](std::span<const double> x) { return e.eval(x); };
}

std::vector<Expr> parse_fields(const std::vector<std::string>& parts) {
  std::vector<Expr> out;
  for (const auto& p : parts) out.push_back(Expr::parse(p));
  return out;
}

VectorFn vector_fn(std::vector<Expr> comps) {
  return [comps = std::move(comps)](std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < comps.size(); ++i) out[i] = comps[i].eval(x);
  };
}

/// "unit", "L" (three generation-1 squares without the upper-right one), or
/// cubes "gen:k1,k2,...;gen:..." with positions in row-major axis order.
DyadicFigure parse_figure(const std::string& text, int dim) {
  if (text == "unit") return DyadicFigure({CubeIndex::root(dim)});
  if (text == "L") {
    require(dim == 2, "the L figure is two-dimensional");
    return DyadicFigure({CubeIndex(1, {0, 0}), CubeIndex(1, {0, 1}), CubeIndex(1, {1, 0})});
  }
  std::vector<CubeIndex> cubes;
  std::stringstream all(text);
  std::string item;
  while (std::getline(all, item, ';')) {
    const auto colon = item.find(':');
    require(colon != std::string::npos, "figure cubes are written gen:k1,k2,...");
    int gen = 0;
    std::vector<std::int64_t> pos;
    try {
      gen = std::stoi(item.substr(0, colon));
      std::stringstream ks(item.substr(colon + 1));
      std::string k;
      while (std::getline(ks, k, ',')) pos.push_back(std::stoll(k));
    } catch (const std::logic_error&) {
      throw ValidationError("malformed figure cube '" + item + "'");
    }
    require(static_cast<int>(pos.size()) == dim, "figure cube has the wrong number of coordinates");
    cubes.emplace_back(gen, std::move(pos));
  }
  return DyadicFigure(std::move(cubes));
}

json geometry_json(const FigureGeometry& g) {
  return {{"volume", g.volume}, {"perimeter", g.perimeter}, {"diameter", g.diameter}, {"reg", g.reg}, {"isop", g.isop}};
}

json integral_json(const IntegralResult& r) {
  return {{"value", r.value},
          {"pieces", r.pieces},
          {"finest_mesh", r.finest_mesh},
          {"converged", r.converged},
          {"history", r.history}};
}

std::string field_name(const std::string& prefix, std::size_t i, const std::string& format) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%06zu.%s", prefix.c_str(), i, format.c_str());
  return buf;
}

void write_ensemble_meta(const RunConfig& cfg, const fs::path& dir, const std::vector<double>& hurst, int n) {
  json meta{{"H", hurst}, {"N", n}, {"seed", *cfg.seed}, {"ensemble", cfg.ensemble}};
  emit_json(cfg, (dir / "meta.json").string(), meta);
}

// ---------------------------------------------------------------------------

void cmd_transform(const RunConfig& cfg) {
  const json in = read_json(cfg.input);
  const std::string kind = in.value("kind", "");
  if (cfg.roundtrip) {
    require(kind == "cube_charge", "--roundtrip needs a cube charge");
    const auto cc = cube_charge_from_json(in);
    const auto back = from_faber_coeffs(to_faber_coeffs(cc));
    double err = 0.0;
    for (int n = 0; n <= cc.depth(); ++n) {
      const auto a = cc.generation(n), b = back.generation(n);
      for (std::size_t i = 0; i < a.size(); ++i) err = std::max(err, std::abs(a[i] - b[i]));
    }
    const double scale = std::max(cc.scale(), 1e-300);
    const double rel = err / scale;
    emit_json(cfg, cfg.output, {{"max_abs_error", err}, {"max_rel_error", rel}, {"passed", rel < 1e-10}});
    if (!(rel < 1e-10)) throw NumericalError("round-trip error " + num(rel) + " exceeds 1e-10");
    return;
  }
  if (kind == "cube_charge") {
    emit_json(cfg, cfg.output, to_json(to_faber_coeffs(cube_charge_from_json(in))));
  } else if (kind == "faber_coeffs") {
    emit_json(cfg, cfg.output, to_json(from_faber_coeffs(faber_coeffs_from_json(in))));
  } else {
    throw ValidationError("input kind must be cube_charge or faber_coeffs");
  }
}

void cmd_young(const RunConfig& cfg) {
  const auto f = read_vertex_field(cfg.input);
  const auto cc = cube_charge_from_json(read_json(cfg.input2));
  const TagRule rule = cfg.tags == "center" ? TagRule::Center : TagRule::LowerCorner;
  const auto rep = young_integral(f, cc, cfg.beta, cfg.gamma, rule);
  const auto loeve = young_loeve_report(f, cc, rep.result, {}, cfg.beta, cfg.gamma, std::min(3, cc.depth()),
                                        cc.depth());
  json body = to_json(rep.result);
  body["total"] = rep.result.total();
  body["sewing"] = {{"constant", rep.constant},
                    {"epsilon", rep.epsilon},
                    {"residual", rep.residual},
                    {"residual_exponent", rep.residual_exponent},
                    {"kappa", rep.kappa},
                    {"warnings", rep.warnings}};
  body["cube_error"] = {{"gens", loeve.cube_gens},
                        {"max_error", loeve.cube_error},
                        {"slope", loeve.cube_slope},
                        {"predicted_slope", loeve.predicted_slope}};
  emit_json(cfg, cfg.output, body);
  CsvWriter csv("n,max_cube_error");
  for (std::size_t i = 0; i < loeve.cube_gens.size(); ++i) csv.row(loeve.cube_gens[i], loeve.cube_error[i]);
  csv.save(cfg.csv);
}

void cmd_young1d(const RunConfig& cfg) {
  const auto f = read_vertex_field(cfg.input);
  const auto g = read_vertex_field(cfg.input2);
  const int depth = cfg.depth < 0 ? std::min(f.resolution(), g.resolution()) : cfg.depth;
  // g enters through its increments; g(0) is subtracted and recorded.
  const auto gexp = analyze_1d(g, depth);
  const auto r = young_1d(haar_coeffs_1d(f, depth), gexp.coeffs);
  std::printf("%.12f\n", r.value);
  CsvWriter csv("n,partial_sum");
  for (std::size_t i = 0; i < r.partial_sums.size(); ++i) csv.row(static_cast<int>(i) - 1, r.partial_sums[i]);
  csv.save(cfg.csv);
  if (!cfg.output.empty()) emit_json(cfg, cfg.output, {{"value", r.value}, {"depth", depth}, {"g_offset", gexp.offset}, {"partial_sums", r.partial_sums}});
}

void cmd_hk(const RunConfig& cfg) {
  const Expr e = Expr::parse(cfg.expr);
  require(e.max_variable() <= 0, "hk integrands use only x");
  const auto lo = cfg.value_at_lo, hi = cfg.value_at_hi;
  const Fn1D f = [e, lo, hi](double x) {
    if (lo && x == 0.0) return *lo;
    if (hi && x == 1.0) return *hi;
    return e.eval(std::span<const double>(&x, 1));
  };
  const std::size_t budget = cfg.budget ? cfg.budget : kDefaultBudget1D;
  const auto r = hk_integrate_1d(f, cfg.tol, budget);
  json body = integral_json(r);
  if (cfg.alexiewicz) body["alexiewicz_norm"] = alexiewicz_norm_1d(f, cfg.tol);
  emit_json(cfg, cfg.output, body);
  CsvWriter csv("round,sum");
  for (std::size_t i = 0; i < r.history.size(); ++i) csv.row(i, r.history[i]);
  csv.save(cfg.csv);
}

void cmd_divcheck(const RunConfig& cfg) {
  const auto comps = parse_fields(cfg.field_exprs);
  const int d = static_cast<int>(comps.size());
  for (const auto& c : comps) require(c.max_variable() < d, "field components use more variables than components");
  std::vector<Expr> partials;
  for (int i = 0; i < d; ++i) partials.push_back(comps[static_cast<std::size_t>(i)].derivative(i));
  const ScalarFn divergence = [partials](std::span<const double> x) {
    double s = 0.0;
    for (const auto& p : partials) s += p.eval(x);
    return s;
  };
  const auto fig = parse_figure(cfg.figure, d);
  const auto r = divergence_check(vector_fn(comps), divergence, fig, cfg.tol, cfg.order);
  std::vector<std::string> partial_text;
  for (const auto& p : partials) partial_text.push_back(p.to_string());
  emit_json(cfg, cfg.output,
            {{"lhs", r.lhs}, {"rhs", r.rhs}, {"gap", r.gap}, {"passed", r.passed}, {"partials", partial_text},
             {"lhs_detail", integral_json(r.lhs_detail)}});
  if (!r.passed) throw NumericalError("divergence gap " + num(r.gap) + " exceeds tolerance");
}

void cmd_bm(const RunConfig& cfg) {
  const int depth = cfg.depth < 0 ? 10 : cfg.depth;
  const fs::path dir = cfg.output.empty() ? fs::path(".") : fs::path(cfg.output);
  fs::create_directories(dir);
  std::vector<std::optional<VertexField>> paths(cfg.ensemble);
  parallel_for(cfg.ensemble, [&](std::size_t i) { paths[i].emplace(levy_ciesielski(depth, *cfg.seed, i)); });
  for (std::size_t i = 0; i < cfg.ensemble; ++i) write_field(dir / field_name("bm", i, cfg.format), *paths[i]);
  write_ensemble_meta(cfg, dir, {0.5}, depth);
}

void cmd_fbs(const RunConfig& cfg) {
  const HurstVector h(cfg.hurst);
  const FbsSampler sampler(h, cfg.resolution);
  if (!cfg.output.empty()) {
    const fs::path dir(cfg.output);
    fs::create_directories(dir);
    // Written in blocks so large ensembles never sit in memory at once.
    constexpr std::size_t kBlock = 256;
    for (std::size_t start = 0; start < cfg.ensemble; start += kBlock) {
      const std::size_t count = std::min(kBlock, cfg.ensemble - start);
      std::vector<std::optional<VertexField>> block(count);
      parallel_for(count, [&](std::size_t i) { block[i].emplace(sampler.sample(*cfg.seed, start + i)); });
      for (std::size_t i = 0; i < count; ++i) write_field(dir / field_name("fbs", start + i, cfg.format), *block[i]);
    }
    write_ensemble_meta(cfg, dir, cfg.hurst, cfg.resolution);
  }
  if (cfg.check_variance) {
    const auto chk = check_increment_variance(sampler, *cfg.seed, cfg.ensemble, 20, *cfg.seed ^ 0x5bd1e995u);
    json rows = json::array();
    for (const auto& r : chk.rows) {
      rows.push_back({{"lo", r.lo}, {"hi", r.hi}, {"empirical", r.empirical}, {"expected", r.expected},
                      {"std_error", r.std_error}, {"z", r.z}});
    }
    const std::string report = cfg.csv.empty() ? "" : cfg.csv;
    emit_json(cfg, report, {{"rectangles", rows}, {"max_abs_z", chk.max_abs_z}, {"passed", chk.passed}});
    if (!chk.passed) throw NumericalError("increment variance check failed: max |z| = " + num(chk.max_abs_z));
  }
}

void cmd_chargeability(const RunConfig& cfg) {
  const fs::path dir(cfg.input);
  require(fs::is_directory(dir), "chargeability reads a directory of fields: " + cfg.input);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".csv" || ext == ".bin")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  require(!files.empty(), "no field files in " + cfg.input);
  std::vector<std::optional<VertexField>> slots(files.size());
  parallel_for(files.size(), [&](std::size_t i) { slots[i].emplace(read_vertex_field(files[i])); });
  std::vector<VertexField> ensemble;
  for (auto& s : slots) ensemble.push_back(std::move(*s));

  std::optional<double> hbar;
  if (fs::exists(dir / "meta.json")) {
    const auto meta = read_json((dir / "meta.json").string());
    if (meta.contains("H")) {
      const auto h = meta.at("H").get<std::vector<double>>();
      double s = 0.0;
      for (double x : h) s += x;
      hbar = s / static_cast<double>(h.size());
    }
  }
  const int gen_hi = cfg.gen_hi < 0 ? ensemble.front().resolution() : cfg.gen_hi;
  auto report_json = [&](const ChargeabilityReport& r) {
    json j{{"q", r.q},
           {"dim", r.dim},
           {"gens", r.gens},
           {"moments", r.moments},
           {"log2_moments", r.log2_moments},
           {"eta_hat", r.eta_hat},
           {"eta_se", r.eta_se},
           {"eta_over_q", r.ratio},
           {"threshold", r.threshold},
           {"band", r.band},
           {"eta_over_q_at_most_1", r.below_upper},
           {"verdict", to_string(r.verdict)},
           {"notes", r.notes}};
    j["gamma_range"] = r.gamma_upper ? json::array({0.0, *r.gamma_upper}) : json(nullptr);
    j["model_eta"] = r.model_eta ? json(*r.model_eta) : json(nullptr);
    j["c_q"] = r.c_q ? json(*r.c_q) : json(nullptr);
    return j;
  };
  const auto main_report = chargeability_diagnostic(ensemble, cfg.q, cfg.gen_lo, gen_hi, hbar);
  json sweep = json::array();
  for (int q : cfg.q_sweep) sweep.push_back(report_json(chargeability_diagnostic(ensemble, q, cfg.gen_lo, gen_hi, hbar)));
  json body = report_json(main_report);
  body["members"] = ensemble.size();
  body["q_sweep"] = sweep;
  emit_json(cfg, cfg.output, body);
  CsvWriter csv("n,log2_moment");
  for (std::size_t i = 0; i < main_report.gens.size(); ++i) csv.row(main_report.gens[i], main_report.log2_moments[i]);
  csv.save(cfg.csv);
}

void cmd_holder(const RunConfig& cfg) {
  const auto f = read_vertex_field(cfg.input);
  const auto est = holder_estimate(f, cfg.gamma);
  emit_json(cfg, cfg.output,
            {{"gamma", est.gamma},
             {"coefficient_norm", est.coefficient_norm},
             {"grid_seminorm", est.grid_seminorm},
             {"all_pairs", est.all_pairs},
             {"norm_ratio", est.norm_ratio},
             {"bound_holds", est.bound_holds},
             {"bound_ratio", est.bound_ratio},
             {"fit_gens", est.gens},
             {"gamma_hat", std::isfinite(est.gamma_hat) ? json(est.gamma_hat) : json(nullptr)},
             {"warnings", est.warnings}});
  CsvWriter csv("n,log2_max_coeff");
  for (std::size_t n = 0; n < est.log2_max.size(); ++n) csv.row(static_cast<int>(n), est.log2_max[n]);
  csv.save(cfg.csv);
}

void cmd_geometry(const RunConfig& cfg) {
  const auto fig = parse_figure(cfg.figure, cfg.figure == "L" ? 2 : cfg.dim);
  json cubes = json::array();
  for (const auto& c : fig.normalized()) cubes.push_back({{"gen", c.gen()}, {"pos", c.pos()}});
  json body = geometry_json(figure_geometry(fig));
  body["normalized"] = cubes;
  emit_json(cfg, cfg.output, body);
}

void cmd_sample(const RunConfig& cfg) {
  const Expr e = Expr::parse(cfg.expr);
  require(e.max_variable() < cfg.dim, "expression uses variables beyond --dim");
  require(!cfg.output.empty(), "sample needs --out");
  if (cfg.kind == "vertex") {
    write_field(cfg.output, sample_vertices(scalar_fn(e), cfg.dim, cfg.resolution));
  } else {
    write_field(cfg.output, sample_cell_averages(scalar_fn(e), cfg.dim, cfg.resolution, cfg.order));
  }
}

void cmd_charge(const RunConfig& cfg) {
  if (!cfg.field_exprs.empty()) {
    const auto comps = parse_fields(cfg.field_exprs);
    const int d = static_cast<int>(comps.size());
    const int depth = cfg.depth < 0 ? default_depth(d) : cfg.depth;
    emit_json(cfg, cfg.output, to_json(flux_charge(vector_fn(comps), d, depth, cfg.order)));
    return;
  }
  const std::string kind = read_field_kind(cfg.input);
  if (kind == "cell") {
    const auto f = read_cell_field(cfg.input);
    emit_json(cfg, cfg.output, to_json(charge_from_density(f, cfg.depth < 0 ? f.resolution() : cfg.depth)));
  } else {
    const auto g = read_vertex_field(cfg.input);
    emit_json(cfg, cfg.output, to_json(charge_from_increments(g, cfg.depth < 0 ? g.resolution() : cfg.depth)));
  }
}

// ---------------------------------------------------------------------------

// Appends config-file values for every option not given on the command line.
std::vector<std::string> merge_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  const json cfg = read_json(path);
  require(cfg.is_object(), "config file must hold a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    const std::string flag = "--" + key;
    const bool given = std::any_of(args.begin(), args.end(),
                                   [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
    if (given || key == "config") continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) joined += (joined.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
      args.push_back(flag);
      args.push_back(joined);
    } else {
      args.push_back(flag);
      args.push_back(value.is_string() ? value.get<std::string>() : value.dump());
    }
  }
  return args;
}

void build_app(CLI::App& app, RunConfig& cfg) {
  app.require_subcommand(1);
  app.add_option("--config", cfg.config_path, "JSON file with option values; flags take precedence");
  app.add_option("--threads", cfg.threads, "worker thread cap (0 = hardware)");
  auto sub = [&](const std::string& name, const std::string& help) {
    auto* s = app.add_subcommand(name, help);
    s->callback([&cfg, name] { cfg.command = name; });
    s->add_option("--threads", cfg.threads, "worker thread cap (0 = hardware)");
    s->add_option("--config", cfg.config_path, "JSON option file");
    return s;
  };
  auto out = [&](CLI::App* s) { s->add_option("--out", cfg.output, "output path (stdout when omitted)"); };
  auto csv = [&](CLI::App* s) { s->add_option("--csv", cfg.csv, "plot-data CSV path"); };

  auto* t = sub("transform", "cube charge <-> Faber-Schauder coefficients");
  t->add_option("--in", cfg.input, "charge or coefficient JSON")->required();
  t->add_flag("--roundtrip", cfg.roundtrip, "report the round-trip error instead of converting");
  out(t);

  auto* y = sub("young", "sewn Young integral of a vertex field against a cube charge");
  y->add_option("--f", cfg.input, "vertex field file")->required();
  y->add_option("--charge", cfg.input2, "cube charge JSON")->required();
  y->add_option("--beta", cfg.beta, "Hölder exponent of f");
  y->add_option("--gamma", cfg.gamma, "fractional exponent of the charge");
  y->add_option("--tags", cfg.tags, "lower | center")->check(CLI::IsMember({"lower", "center"}));
  out(y);
  csv(y);

  auto* y1 = sub("young1d", "one-dimensional Young integral by coefficient pairing");
  y1->add_option("--f", cfg.input, "vertex field for the integrand")->required();
  y1->add_option("--g", cfg.input2, "vertex field for the integrator")->required();
  y1->add_option("--depth", cfg.depth, "pairing depth (default: field resolution)");
  out(y1);
  csv(y1);

  auto* hk = sub("hk", "Henstock-Kurzweil integral over [0,1]");
  hk->add_option("--expr", cfg.expr, "integrand in x")->required();
  hk->add_option("--tol", cfg.tol, "tolerance");
  hk->add_option("--budget", cfg.budget, "maximum number of intervals");
  hk->add_option("--value-at-0", cfg.value_at_lo, "value used at x = 0");
  hk->add_option("--value-at-1", cfg.value_at_hi, "value used at x = 1");
  hk->add_flag("--alexiewicz", cfg.alexiewicz, "also report the Alexiewicz norm");
  out(hk);
  csv(hk);

  auto* dc = sub("divcheck", "divergence theorem on a dyadic figure");
  dc->add_option("--v", cfg.field_exprs, "vector field components, comma-separated")->required()->delimiter(',');
  dc->add_option("--figure", cfg.figure, "unit | L | gen:k1,k2;...");
  dc->add_option("--tol", cfg.tol, "tolerance");
  dc->add_option("--order", cfg.order, "Gauss order on faces");
  out(dc);

  auto* bm = sub("bm", "Levy-Ciesielski Brownian paths");
  bm->add_option("--depth", cfg.depth, "expansion depth (default 10)");
  bm->add_option("--seed", cfg.seed, "master seed")->required();
  bm->add_option("--ensemble", cfg.ensemble, "number of paths");
  bm->add_option("--format", cfg.format, "csv | bin")->check(CLI::IsMember({"csv", "bin"}));
  bm->add_option("--out", cfg.output, "output directory");

  auto* fb = sub("fbs", "exact fractional Brownian sheet samples");
  fb->add_option("--H", cfg.hurst, "Hurst exponents, comma-separated")->delimiter(',');
  fb->add_option("--resolution", cfg.resolution, "grid level N");
  fb->add_option("--seed", cfg.seed, "master seed")->required();
  fb->add_option("--ensemble", cfg.ensemble, "number of members");
  fb->add_option("--format", cfg.format, "csv | bin")->check(CLI::IsMember({"csv", "bin"}));
  fb->add_option("--out", cfg.output, "output directory (no files when omitted)");
  fb->add_flag("--check-variance", cfg.check_variance, "test the product variance law on 20 rectangles");
  fb->add_option("--report", cfg.csv, "variance report JSON (stdout when omitted)");

  auto* ch = sub("chargeability", "moment-based chargeability diagnostic");
  ch->add_option("--in", cfg.input, "directory of vertex fields")->required();
  ch->add_option("--q", cfg.q, "moment order");
  ch->add_option("--q-sweep", cfg.q_sweep, "additional moment orders")->delimiter(',');
  ch->add_option("--gen-lo", cfg.gen_lo, "first generation in the fit");
  ch->add_option("--gen-hi", cfg.gen_hi, "last generation in the fit (default: resolution)");
  out(ch);
  csv(ch);

  auto* ho = sub("holder", "Faber-Schauder Hölder estimate of a 1D field");
  ho->add_option("--in", cfg.input, "one-dimensional vertex field")->required();
  ho->add_option("--gamma", cfg.gamma, "probed exponent");
  out(ho);
  csv(ho);

  auto* ge = sub("geometry", "volume, perimeter, diameter and regularity of a dyadic figure");
  ge->add_option("--figure", cfg.figure, "unit | L | gen:k1,k2;...");
  ge->add_option("--dim", cfg.dim, "dimension");
  out(ge);

  auto* sa = sub("sample", "sample an expression on a dyadic grid");
  sa->add_option("--expr", cfg.expr, "expression in x, y, z")->required();
  sa->add_option("--dim", cfg.dim, "dimension");
  sa->add_option("--resolution", cfg.resolution, "grid level N");
  sa->add_option("--kind", cfg.kind, "vertex | cell")->check(CLI::IsMember({"vertex", "cell"}));
  sa->add_option("--order", cfg.order, "Gauss order for cell averages");
  sa->add_option("--out", cfg.output, "field file (.csv or .bin)")->required();

  auto* cg = sub("charge", "build a cube charge from a density, increments or a flux");
  cg->add_option("--in", cfg.input, "cell field (density) or vertex field (increments)");
  cg->add_option("--v", cfg.field_exprs, "flux field components, comma-separated")->delimiter(',');
  cg->add_option("--depth", cfg.depth, "storage depth");
  cg->add_option("--order", cfg.order, "Gauss order on faces");
  out(cg);
}

}  // namespace

nlohmann::json echo(const RunConfig& cfg) {
  json j{{"command", cfg.command}, {"threads", cfg.threads}};
  auto put = [&](const char* key, const std::string& v) {
    if (!v.empty()) j[key] = v;
  };
  put("input", cfg.input);
  put("input2", cfg.input2);
  put("output", cfg.output);
  put("csv", cfg.csv);
  put("expr", cfg.expr);
  if (!cfg.field_exprs.empty()) j["v"] = cfg.field_exprs;
  j["format"] = cfg.format;
  j["figure"] = cfg.figure;
  j["tags"] = cfg.tags;
  j["kind"] = cfg.kind;
  j["dim"] = cfg.dim;
  j["depth"] = cfg.depth;
  j["resolution"] = cfg.resolution;
  j["order"] = cfg.order;
  j["gen_lo"] = cfg.gen_lo;
  j["gen_hi"] = cfg.gen_hi;
  j["tol"] = cfg.tol;
  j["budget"] = cfg.budget;
  j["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
  j["gamma"] = cfg.gamma;
  j["beta"] = cfg.beta;
  j["H"] = cfg.hurst;
  j["q"] = cfg.q;
  j["q_sweep"] = cfg.q_sweep;
  j["ensemble"] = cfg.ensemble;
  j["roundtrip"] = cfg.roundtrip;
  j["check_variance"] = cfg.check_variance;
  j["alexiewicz"] = cfg.alexiewicz;
  return j;
}

void validate(const RunConfig& cfg) {
  const auto& c = cfg.command;
  require(std::find(kCommands.begin(), kCommands.end(), c) != kCommands.end(), "unknown command: " + c);
  if (c == "young") {
    require(cfg.beta > 0.0 && cfg.beta < 1.0, "--beta must lie in (0,1)");
    require(cfg.gamma > 0.0 && cfg.gamma < 1.0, "--gamma must lie in (0,1)");
    if (!(cfg.beta + cfg.gamma > 1.0)) throw YoungConditionViolated("Young integration needs beta + gamma > 1");
  }
  if (c == "holder") require(cfg.gamma > 0.0 && cfg.gamma < 1.0, "--gamma must lie in (0,1)");
  if (c == "fbs") {
    HurstVector h(cfg.hurst);
    require(cfg.resolution >= 1, "--resolution must be positive");
  }
  if (c == "bm" || c == "fbs") {
    require(cfg.seed.has_value(), "--seed is required for stochastic commands");
    require(cfg.ensemble >= 1, "--ensemble must be positive");
  }
  if (c == "chargeability") require(cfg.q > 0.0, "--q must be positive");
  if (c == "hk" || c == "divcheck") require(cfg.tol > 0.0, "--tol must be positive");
  if (c == "sample") {
    require(cfg.dim >= 1 && cfg.dim <= 3, "--dim must be 1, 2 or 3");
    require(cfg.resolution >= 0, "--resolution must be nonnegative");
  }
  if (c == "charge") {
    require(cfg.input.empty() != cfg.field_exprs.empty(), "charge needs exactly one of --in or --v");
  }
  require(cfg.order >= 1 && cfg.order <= 32, "--order must lie in [1,32]");
}

void dispatch(const RunConfig& cfg) {
  set_max_threads(cfg.threads);
  const auto& c = cfg.command;
  if (c == "transform") return cmd_transform(cfg);
  if (c == "young") return cmd_young(cfg);
  if (c == "young1d") return cmd_young1d(cfg);
  if (c == "hk") return cmd_hk(cfg);
  if (c == "divcheck") return cmd_divcheck(cfg);
  if (c == "bm") return cmd_bm(cfg);
  if (c == "fbs") return cmd_fbs(cfg);
  if (c == "chargeability") return cmd_chargeability(cfg);
  if (c == "holder") return cmd_holder(cfg);
  if (c == "geometry") return cmd_geometry(cfg);
  if (c == "sample") return cmd_sample(cfg);
  if (c == "charge") return cmd_charge(cfg);
  throw ValidationError("unknown command: " + c);
}

int run(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app("Dyadic charges, Young integration, gauge integrals and random fields", "dyadcharge");
  app.set_version_flag("--version", DYADCHARGE_VERSION);
  build_app(app, cfg);
  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = merge_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  try {
    validate(cfg);
    dispatch(cfg);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace dyadcharge::cli
