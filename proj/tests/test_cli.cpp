#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>
#include <unistd.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("dyadcharge_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string path(const std::string& name) { return (workdir() / name).string(); }

// Runs the binary with stdout captured in `stdout_file`; returns the exit status.
int run(const std::string& args, const std::string& stdout_file = "stdout.txt") {
  const std::string cmd =
      std::string("\"") + DYADCHARGE_CLI_PATH + "\" " + args + " > \"" + path(stdout_file) + "\" 2> \"" + path("stderr.txt") + "\"";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& file) {
  std::ifstream in(path(file));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load(const std::string& file) { return json::parse(slurp(file)); }

}  // namespace

TEST_CASE("young1d of cos against sin") {
  REQUIRE(run("sample --expr \"cos(x)\" --dim 1 --resolution 10 --out " + path("cos.csv")) == 0);
  REQUIRE(run("sample --expr \"sin(x)\" --dim 1 --resolution 10 --out " + path("sin.csv")) == 0);
  REQUIRE(run("young1d --f " + path("cos.csv") + " --g " + path("sin.csv") + " --csv " + path("y1.csv") + " --out " +
              path("y1.json")) == 0);
  const double v = std::stod(slurp("stdout.txt"));
  CHECK(std::abs(v - (0.5 + std::sin(2.0) / 4.0)) < 1e-5);
  CHECK(slurp("y1.csv").rfind("n,partial_sum\n", 0) == 0);
  const auto j = load("y1.json");
  CHECK(j["tool"]["name"] == "dyadcharge");
  CHECK(j["config"]["command"] == "young1d");
  CHECK(j["g_offset"].get<double>() == 0.0);
}

TEST_CASE("transform round trip and conversion") {
  REQUIRE(run("charge --v \"x*y,y-x\" --depth 4 --out " + path("flux.json")) == 0);
  CHECK(run("transform --in " + path("flux.json") + " --roundtrip --out " + path("rt.json")) == 0);
  CHECK(load("rt.json")["passed"] == true);
  CHECK(run("transform --in " + path("flux.json") + " --out " + path("coeffs.json")) == 0);
  CHECK(load("coeffs.json")["kind"] == "faber_coeffs");
  CHECK(run("transform --in " + path("coeffs.json") + " --out " + path("back.json")) == 0);
  CHECK(load("back.json")["kind"] == "cube_charge");
}

TEST_CASE("exit codes") {
  CHECK(run("frobnicate") == 2);
  CHECK(run("bm --depth 4") == 2);
  REQUIRE(run("sample --expr x --dim 2 --resolution 4 --out " + path("xy.csv")) == 0);
  REQUIRE(run("charge --v \"x,y\" --depth 4 --out " + path("c2.json")) == 0);
  CHECK(run("young --f " + path("xy.csv") + " --charge " + path("c2.json") + " --beta 0.4 --gamma 0.5") == 2);
  CHECK(run("holder --in " + path("does_not_exist.csv")) == 3);
  CHECK(run("hk --expr \"x +\"") == 2);
  CHECK(run("fbs --H 0.5,1.2 --seed 1") == 2);
  CHECK(run("divcheck --v \"x,y\" --tol 1e-300") == 3);
  CHECK(run("geometry --figure \"1:a,0\" --dim 2") == 2);
}

TEST_CASE("young on the unit square") {
  REQUIRE(run("sample --expr \"1\" --dim 2 --resolution 4 --out " + path("one.csv")) == 0);
  REQUIRE(run("charge --v \"x,y\" --depth 4 --out " + path("c3.json")) == 0);
  REQUIRE(run("young --f " + path("one.csv") + " --charge " + path("c3.json") + " --beta 0.9 --gamma 0.9 --out " +
              path("young.json")) == 0);
  CHECK(load("young.json")["total"].get<double>() == doctest::Approx(2.0));
}

TEST_CASE("fbs with the variance check") {
  CHECK(run("fbs --H 0.5,0.5 --resolution 4 --seed 3 --ensemble 3000 --check-variance --report " + path("var.json")) == 0);
  const auto j = load("var.json");
  CHECK(j["passed"] == true);
  CHECK(j["rectangles"].size() == 20);
}

TEST_CASE("brownian paths are independent of the thread count") {
  REQUIRE(run("bm --depth 6 --seed 11 --ensemble 5 --threads 1 --out " + path("bm1")) == 0);
  REQUIRE(run("bm --depth 6 --seed 11 --ensemble 5 --threads 4 --format csv --out " + path("bm4")) == 0);
  for (int i = 0; i < 5; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "bm_%06d.csv", i);
    CHECK(slurp(std::string("bm1/") + name) == slurp(std::string("bm4/") + name));
  }
  CHECK(load("bm1/meta.json")["seed"] == 11);
}

TEST_CASE("flags override the config file") {
  {
    std::ofstream cfg(path("cfg.json"));
    cfg << R"({"expr": "x*x", "tol": 1e-3, "budget": 5000})";
  }
  REQUIRE(run("hk --config " + path("cfg.json") + " --tol 1e-8 --out " + path("hk.json")) == 0);
  const auto j = load("hk.json");
  CHECK(j["config"]["tol"].get<double>() == 1e-8);
  CHECK(j["config"]["budget"].get<long long>() == 5000);
  CHECK(j["config"]["expr"] == "x*x");
  CHECK(j["value"].get<double>() == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("hk with patched endpoints and the alexiewicz norm") {
  REQUIRE(run("hk --expr \"1/sqrt(x)\" --value-at-0 0 --tol 1e-4 --out " + path("hk2.json")) == 0);
  CHECK(load("hk2.json")["value"].get<double>() == doctest::Approx(2.0).epsilon(1e-2));
  REQUIRE(run("hk --expr \"cos(2*3.141592653589793*x)\" --alexiewicz --tol 1e-6 --out " + path("hk3.json")) == 0);
  const auto j = load("hk3.json");
  CHECK(j["alexiewicz_norm"].get<double>() == doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-3));
}

TEST_CASE("chargeability on a generated ensemble") {
  REQUIRE(run("fbs --H 0.9,0.9 --resolution 5 --seed 4 --ensemble 150 --format bin --out " + path("ens")) == 0);
  REQUIRE(run("chargeability --in " + path("ens") + " --q 8 --q-sweep 2,4 --gen-lo 2 --out " + path("ch.json") +
              " --csv " + path("ch.csv")) == 0);
  const auto j = load("ch.json");
  CHECK(j["members"] == 150);
  CHECK(j["verdict"] == "chargeable-consistent");
  CHECK(j["model_eta"].get<double>() == doctest::Approx(6.2));
  CHECK(j["q_sweep"].size() == 2);
  CHECK(slurp("ch.csv").rfind("n,log2_moment\n", 0) == 0);
}

TEST_CASE("holder, geometry and divcheck") {
  REQUIRE(run("bm --depth 10 --seed 2 --ensemble 1 --out " + path("one_bm")) == 0);
  REQUIRE(run("holder --in " + path("one_bm/bm_000000.csv") + " --gamma 0.4 --out " + path("ho.json")) == 0);
  CHECK(load("ho.json")["bound_holds"] == true);

  REQUIRE(run("geometry --figure L --dim 2 --out " + path("geo.json")) == 0);
  const auto g = load("geo.json");
  CHECK(g["volume"].get<double>() == doctest::Approx(0.75));
  CHECK(g["perimeter"].get<double>() == doctest::Approx(4.0));

  REQUIRE(run("divcheck --v \"x*x*y,sin(x)*y\" --figure L --tol 1e-6 --out " + path("dc.json")) == 0);
  const auto d = load("dc.json");
  CHECK(d["passed"] == true);
  CHECK(d["gap"].get<double>() < 1e-6);
}
