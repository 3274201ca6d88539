#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "slecut/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream o, e;
  const int c = slecut::cli::run(args, o, e);
  return {c, o.str(), e.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("slecut_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& s) const { return (path / s).string(); }
};
}  // namespace

TEST_CASE("density-eval writes grids and a passing report") {
  TempDir d("density");
  const auto r = cli({"density-eval", "--kappa", "6", "--nmax", "40", "--grid", "12", "--out", d / "a"});
  REQUIRE(r.code == 0);
  const auto rep = json::parse(slurp(d.path / "a" / "report.json"));
  CHECK(rep["checks"]["orthonormality_offdiag"]["value"].get<double>() < 1e-6);
  CHECK(rep["all_pass"].get<bool>());
  CHECK(fs::exists(d.path / "a" / "density_grid.csv"));
  CHECK(fs::exists(d.path / "a" / "spectral_table.csv"));
  const auto m = json::parse(slurp(d.path / "a" / "manifest.json"));
  CHECK(m["command"] == "density-eval");
  CHECK(m["params"]["nmax"] == 40);
  CHECK(m["params"]["time"] == 1.0);  // defaults are recorded

  REQUIRE(cli({"density-eval", "--kappa", "6", "--nmax", "40", "--grid", "12", "--out", d / "b"}).code == 0);
  CHECK(slurp(d.path / "a" / "density_grid.csv") == slurp(d.path / "b" / "density_grid.csv"));
  CHECK(slurp(d.path / "a" / "spectral_table.csv") == slurp(d.path / "b" / "spectral_table.csv"));
}

TEST_CASE("density-eval rejects bad input with exit 2") {
  TempDir d("density_bad");
  CHECK(cli({"density-eval", "--kappa", "9", "--out", d / "x"}).code == 2);
  CHECK(cli({"density-eval", "--kappa", "6", "--nmax", "0", "--out", d / "x"}).code == 2);
  CHECK(cli({"density-eval", "--kappa", "6", "--bogus", "1"}).code == 2);
}

TEST_CASE("mc-cutpoint smoke run, usage errors and seed determinism") {
  TempDir d("mc");
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = cli({"mc-cutpoint", "--kappa", "6", "--paths", "100", "--radii", "0.1", "--seed", "5", "--out", d / "a"});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  REQUIRE(r.code == 0);
  CHECK(secs < 60);
  REQUIRE(cli({"mc-cutpoint", "--kappa", "6", "--paths", "100", "--radii", "0.1", "--seed", "5", "--workers", "3",
               "--out", d / "b"}).code == 0);
  CHECK(slurp(d.path / "a" / "results.csv") == slurp(d.path / "b" / "results.csv"));
  CHECK(slurp(d.path / "a" / "paths.csv") == slurp(d.path / "b" / "paths.csv"));
  const auto m = json::parse(slurp(d.path / "a" / "manifest.json"));
  CHECK(m["seed"] == 5);
  CHECK(m["version"].is_string());
  CHECK(m.contains("wall_seconds"));

  const auto miss = cli({"mc-cutpoint", "--paths", "100", "--radii", "0.1", "--seed", "5", "--out", d / "c"});
  CHECK(miss.code == 2);
  CHECK(miss.err.find("--kappa") != std::string::npos);
  CHECK(miss.err.find("Usage") != std::string::npos);
  CHECK(cli({"mc-cutpoint", "--kappa", "6", "--radii", "0.1", "--out", d / "c"}).code == 2);  // no seed
  CHECK(cli({"mc-cutpoint", "--kappa", "6", "--radii", "0.1,0.2", "--seed", "1", "--out", d / "c"}).code == 2);
}

TEST_CASE("rerun from a manifest reproduces outputs byte for byte") {
  TempDir d("rerun");
  REQUIRE(cli({"mc-cutpoint", "--kappa", "6", "--paths", "100", "--radii", "0.2,0.1", "--seed", "9", "--out", d / "a"}).code == 0);
  REQUIRE(cli({"rerun", "--manifest", d / "a/manifest.json", "--out", d / "b"}).code == 0);
  CHECK(slurp(d.path / "a" / "results.csv") == slurp(d.path / "b" / "results.csv"));
  const auto ma = json::parse(slurp(d.path / "a" / "manifest.json")), mb = json::parse(slurp(d.path / "b" / "manifest.json"));
  CHECK(ma["params"] == mb["params"]);
}

TEST_CASE("config file sections, overrides and unknown keys") {
  TempDir d("config");
  std::ofstream(d.path / "run.ini") << "[green-eval]\nkappa = 5\nz0 = 0.1,0.2\n";
  const auto a = cli({"--config-file", d / "run.ini", "green-eval", "--out", d / "a"});
  REQUIRE(a.code == 0);
  CHECK(json::parse(a.out)["kappa"] == 5.0);
  const auto b = cli({"--config-file", d / "run.ini", "green-eval", "--kappa", "6", "--out", d / "b"});
  REQUIRE(b.code == 0);
  CHECK(json::parse(b.out)["kappa"] == 6.0);
  CHECK(json::parse(b.out)["z0"][1] == 0.2);
  std::ofstream(d.path / "bad.ini") << "[green-eval]\nkappa = 5\ncolour = blue\n";
  CHECK(cli({"--config-file", d / "bad.ini", "green-eval", "--out", d / "c"}).code == 2);
  CHECK(cli({"--config-file", d / "missing.ini", "green-eval", "--kappa", "6"}).code == 2);
}

TEST_CASE("green-eval prints the exponents and Green's function") {
  TempDir d("green");
  const auto r = cli({"green-eval", "--kappa", "6", "--config", "4.71238898038469,3.141592653589793,1.5707963267948966,0",
                      "--out", d / "a"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["alpha0"].get<double>() == doctest::Approx(1.25));
  CHECK(j["tildeG"].get<double>() == doctest::Approx(0.62996).epsilon(1e-5));
  CHECK(j["beta0"].get<double>() == doctest::Approx(11.0 / 15));
  CHECK(j["G_D"].get<double>() == doctest::Approx(j["tildeG"].get<double>()));
  CHECK(fs::exists(d.path / "a" / "manifest.json"));
  CHECK(cli({"green-eval", "--kappa", "6", "--config", "0,1,2,3", "--out", d / "b"}).code == 2);
}

TEST_CASE("simulate dumps traces; zero horizon gives a header-only file") {
  TempDir d("sim");
  REQUIRE(cli({"simulate", "--kappa", "6", "--seed", "1", "--horizon", "0", "--out", d / "a"}).code == 0);
  CHECK(slurp(d.path / "a" / "trace.csv") == "t,re,im\n");
  for (std::string kind : {"chordal", "radial", "disk-chord", "ensemble", "z"}) {
    CAPTURE(kind);
    CHECK(cli({"simulate", "--kind", kind, "--kappa", "6", "--seed", "1", "--horizon", "0.05", "--out", d / kind}).code == 0);
    CHECK(fs::exists(d.path / kind / "manifest.json"));
  }
  const std::string trace = slurp(d.path / "chordal" / "trace.csv");
  CHECK(std::count(trace.begin(), trace.end(), '\n') == 52);
  CHECK(cli({"simulate", "--kind", "spiral", "--kappa", "6", "--seed", "1"}).code == 2);
}

TEST_CASE("survival rejects an unsorted time grid") {
  TempDir d("surv");
  CHECK(cli({"survival", "--kappa", "6", "--times", "0,2,1", "--seed", "1", "--out", d / "a"}).code == 2);
  REQUIRE(cli({"survival", "--kappa", "6", "--times", "0,0.5", "--paths", "200", "--seed", "1", "--out", d / "b"}).code == 0);
  CHECK(slurp(d.path / "b" / "survival.csv").rfind("t,survival,stderr,ess,level_ratio\n", 0) == 0);
}

TEST_CASE("top-level usage") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({"frobnicate"}).code == 2);
}
