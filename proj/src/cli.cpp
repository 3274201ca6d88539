#include "slecut/cli.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"
#include "slecut/csv.hpp"
#include "slecut/density.hpp"
#include "slecut/ensemble.hpp"
#include "slecut/green.hpp"
#include "slecut/loewner.hpp"
#include "slecut/mc.hpp"
#include "slecut/samplers.hpp"

namespace slecut::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
constexpr double kPi = std::numbers::pi;

// Bad input discovered after parsing; maps to exit 2.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      throw UsageError(what + ": not a number: '" + item + "'");
    }
    if (item.find_first_not_of(" \t", pos) != std::string::npos) throw UsageError(what + ": trailing text in '" + item + "'");
    if (!std::isfinite(v)) throw UsageError(what + ": non-finite value");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(what + ": empty list");
  return out;
}

std::array<double, 2> parse_pair(const std::string& s, const std::string& what) {
  const auto v = parse_list(s, what);
  if (v.size() != 2) throw UsageError(what + ": expected two comma-separated numbers");
  return {v[0], v[1]};
}

green::BoundaryConfig parse_config(const std::string& s) {
  if (s == "symmetric") return green::symmetric_config();
  const auto v = parse_list(s, "--config");
  if (v.size() != 4) throw UsageError("--config: expected 'symmetric' or w1,v1,w2,v2");
  green::BoundaryConfig c{v[0], v[1], v[2], v[3]};
  try {
    c.validate();
  } catch (const std::exception& e) {
    throw UsageError(std::string("--config: ") + e.what());
  }
  return c;
}

void write_json(const fs::path& file, const json& j) {
  std::ofstream f(file);
  if (!f) throw std::runtime_error("cannot write " + file.string());
  f << j.dump(2) << '\n';
}

void write_header_only(const fs::path& file, const std::vector<std::string>& header) { csv::Writer w(file, header); }

class Command {
 public:
  virtual ~Command() = default;
  virtual std::string name() const = 0;
  virtual std::string help() const = 0;
  virtual void bind(CLI::App& app) = 0;
  virtual json params() const = 0;
  virtual void validate() const = 0;
  // Writes its files into out, fills summary; returns the exit code.
  virtual int execute(const fs::path& out, json& summary, std::vector<std::string>& files, std::ostream& os) = 0;
  virtual bool uses_seed() const { return false; }

  std::string out_dir = ".";
  int workers = 1;
};

void bind_common(CLI::App& app, Command& c) {
  app.add_option("--out", c.out_dir, "output directory (created if missing)")->capture_default_str();
  app.add_option("--workers", c.workers, "OpenMP threads")->capture_default_str()->check(CLI::PositiveNumber);
}

// ---------------------------------------------------------------- density-eval

class DensityEval final : public Command {
 public:
  std::string name() const override { return "density-eval"; }
  std::string help() const override { return "spectral density grids, model table and property-check report"; }
  void bind(CLI::App& app) override {
    app.add_option("--kappa", kappa, "SLE parameter, in (4,8)")->required();
    app.add_option("--nmax", nmax, "truncation degree N")->capture_default_str();
    app.add_option("--time", t, "transition time")->capture_default_str();
    app.add_option("--z0", z0, "starting point z1,z2 in (0,pi)^2")->capture_default_str();
    app.add_option("--grid", grid, "grid points per axis")->capture_default_str();
    app.add_option("--check-degree", check_degree, "degree bound for the eigenrelation and self-adjointness checks")
        ->capture_default_str();
  }
  json params() const override {
    return {{"kappa", kappa}, {"nmax", nmax}, {"time", t}, {"z0", z0}, {"grid", grid}, {"check-degree", check_degree}};
  }
  void validate() const override {
    if (!(kappa > 4 && kappa < 8)) throw UsageError("--kappa must lie in (4,8)");
    if (nmax < 1) throw UsageError("--nmax must be >= 1");
    if (!(t > 0) || !std::isfinite(t)) throw UsageError("--time must be positive");
    if (grid < 2) throw UsageError("--grid must be >= 2");
    if (check_degree < 0) throw UsageError("--check-degree must be >= 0");
    const auto z = parse_pair(z0, "--z0");
    for (double v : z)
      if (!(v > 0 && v < kPi)) throw UsageError("--z0 must lie in (0,pi)^2");
  }
  int execute(const fs::path& out, json& summary, std::vector<std::string>& files, std::ostream&) override {
    const auto z = parse_pair(z0, "--z0");
    const density::DensityModel model(kappa, nmax);
    std::vector<double> axis(static_cast<std::size_t>(grid));
    for (int k = 0; k < grid; ++k) axis[k] = (k + 0.5) * kPi / grid;
    const auto values = density::density_grid(model, t, z, axis, axis);
    std::vector<double> stat;
    stat.reserve(values.size());
    for (double a : axis)
      for (double b : axis) stat.push_back(density::pZ_inf(model, {a, b}));
    density::write_grid_csv(out / "density_grid.csv", axis, axis, values);
    density::write_grid_csv(out / "stationary_grid.csv", axis, axis, stat);
    density::write_model_csv(out / "spectral_table.csv", model);
    files.insert(files.end(), {"density_grid.csv", "stationary_grid.csv", "spectral_table.csv", "report.json"});

    const auto sc = density::spectral_checks(kappa, std::min(check_degree, nmax));
    const auto on = density::orthonormality(model);
    const auto marg = density::pZ_marginal_cdfs(model, t, z, 100, 4);
    const double mass_err = std::abs(marg.cdf1.back() - 1.0);

    json checks;
    bool all = true;
    auto add = [&](const std::string& key, double value, double tol) {
      const bool ok = value < tol;
      all = all && ok;
      checks[key] = {{"value", value}, {"tolerance", tol}, {"pass", ok}};
    };
    add("orthonormality_offdiag", on[0], 1e-6);
    add("orthonormality_diag", on[1], 1e-6);
    add("eigenrelation_residual", sc.eigen_residual, 1e-7);
    add("jacobi_norm_relerr", sc.jacobi_norm_error, 1e-10);
    add("self_adjoint_residual", sc.self_adjoint_residual, 1e-6);
    add("mass_error", mass_err, 1e-4);
    json report = {{"kappa", kappa},
                   {"N", nmax},
                   {"t", t},
                   {"lambda1", model.lambda(1)},
                   {"check_degree", sc.n_max},
                   {"calZ", density::calZ(kappa)},
                   {"checks", checks},
                   {"all_pass", all}};
    write_json(out / "report.json", report);
    summary = {{"all_pass", all}};
    return all ? kOk : kCheckFailed;
  }

 private:
  double kappa = 0;
  int nmax = 40;
  double t = 1.0;
  std::string z0 = "1.5707963267948966,1.5707963267948966";
  int grid = 41;
  int check_degree = 6;
};

// ---------------------------------------------------------------- mc-cutpoint

class McCutpoint final : public Command {
 public:
  std::string name() const override { return "mc-cutpoint"; }
  std::string help() const override { return "Monte Carlo estimate of P[cut point of the chord union within r of z0]"; }
  bool uses_seed() const override { return true; }
  void bind(CLI::App& app) override {
    app.add_option("--kappa", kappa, "SLE parameter, in (4,8)")->required();
    app.add_option("--config", config, "boundary points: 'symmetric' or w1,v1,w2,v2")->capture_default_str();
    app.add_option("--z0", z0, "interior point x,y")->capture_default_str();
    app.add_option("--radii", radii, "strictly decreasing radii, comma separated")->capture_default_str();
    app.add_option("--paths", paths, "number of chords")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "RNG seed")->required();
    app.add_option("--chord", chord, "complete: whole chord to a2; horizon: radial chord cut at --horizon")
        ->capture_default_str()
        ->check(CLI::IsMember({"complete", "horizon"}));
    app.add_option("--removal", removal, "cut test: thickened (epsilon ball) or vertex (single articulation vertex)")
        ->capture_default_str()
        ->check(CLI::IsMember({"thickened", "vertex"}));
    app.add_option("--stop-distance", stop_distance, "complete chords end this close to a2")->capture_default_str();
    app.add_option("--dt", dt, "capacity step (horizon chords)")->capture_default_str();
    app.add_option("--horizon", horizon, "capacity horizon, 0 = -log(r_min/4)+2")->capture_default_str();
    app.add_option("--floor", floor, "distance floor for the step target, 0 = r_min/4")->capture_default_str();
    app.add_option("--eps-factor", eps_factor, "proximity threshold in consecutive gaps")->capture_default_str();
    app.add_option("--adaptive-eps", adaptive, "per-vertex threshold (true/false)")->capture_default_str();
    app.add_option("--resolution", resolution, "spatial step relative to distance from z0")->capture_default_str();
    app.add_option("--max-exclusion", max_exclusion, "abort above this excluded-path fraction")->capture_default_str();
  }
  json params() const override {
    return {{"kappa", kappa}, {"config", config},     {"z0", z0},   {"radii", radii},
            {"paths", paths}, {"seed", seed},         {"dt", dt},   {"horizon", horizon},
            {"eps-factor", eps_factor}, {"adaptive-eps", adaptive}, {"resolution", resolution},
            {"max-exclusion", max_exclusion}, {"chord", chord}, {"removal", removal},
            {"stop-distance", stop_distance}, {"floor", floor}};
  }
  mc::McPlan plan() const {
    mc::McPlan p;
    p.kappa = kappa;
    p.cfg = parse_config(config);
    const auto z = parse_pair(z0, "--z0");
    p.z0 = {z[0], z[1]};
    p.radii = parse_list(radii, "--radii");
    p.n_paths = paths;
    p.dt = dt;
    p.horizon = horizon;
    p.epsilon.factor = eps_factor;
    p.epsilon.adaptive = adaptive;
    p.epsilon.resolution = resolution;
    p.epsilon.floor = floor;
    p.chord = chord == "horizon" ? mc::ChordMode::Horizon : mc::ChordMode::Complete;
    p.removal = removal == "vertex" ? cutpoints::RemovalMode::Vertex : cutpoints::RemovalMode::Thickened;
    p.stop_distance = stop_distance;
    p.seed = seed;
    p.workers = workers;
    p.max_exclusion = max_exclusion;
    return p;
  }
  void validate() const override {
    try {
      plan().validate();
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
  }
  int execute(const fs::path& out, json& summary, std::vector<std::string>& files, std::ostream&) override {
    const auto r = mc::estimate_P(plan());
    mc::write_results_csv(out / "results.csv", r);
    mc::write_paths_csv(out / "paths.csv", r);
    files.insert(files.end(), {"results.csv", "paths.csv"});
    json per = json::array();
    for (std::size_t i = 0; i < r.per_radius.size(); ++i) {
      const auto& e = r.per_radius[i];
      per.push_back({{"r", e.r}, {"hits", e.hits}, {"n", e.n}, {"p", e.p}, {"ci", {e.lo, e.hi}}, {"Q", r.Q[i]}});
    }
    summary = {{"per_radius", per},
               {"excluded", r.excluded},
               {"disconnected", r.disconnected},
               {"truncated", r.truncated},
               {"q_flatness", r.q_flatness},
               {"alpha0", green::alpha0(kappa)}};
    if (r.fit_ok)
      summary["fit"] = {{"slope", r.fit.slope},
                        {"intercept", r.fit.intercept},
                        {"slope_stderr", r.fit.stderr_slope},
                        {"warnings", r.fit.warnings}};
    else
      summary["fit"] = nullptr;
    return kOk;
  }

 private:
  double kappa = 0;
  std::string config = "symmetric";
  std::string z0 = "0,0";
  std::string radii = "0.2,0.1,0.05";
  std::size_t paths = 1000;
  std::uint64_t seed = 0;
  double dt = 1e-3;
  double horizon = 0;
  double eps_factor = 3.0;
  bool adaptive = true;
  double resolution = 0.05;
  double max_exclusion = 0.01;
  std::string chord = "complete";
  std::string removal = "thickened";
  double stop_distance = 1e-5;
  double floor = 0;
};

// ---------------------------------------------------------------- survival

class Survival final : public Command {
 public:
  std::string name() const override { return "survival"; }
  std::string help() const override { return "weighted survival of the two-sided radial time curve"; }
  bool uses_seed() const override { return true; }
  void bind(CLI::App& app) override {
    app.add_option("--kappa", kappa, "SLE parameter, in (4,8)")->required();
    app.add_option("--z0", z0, "starting point z1,z2 in (0,pi)^2")->capture_default_str();
    app.add_option("--times", times, "strictly increasing times, comma separated")->capture_default_str();
    app.add_option("--paths", paths, "number of paths")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "RNG seed")->required();
    app.add_option("--dt", dt, "Euler step")->capture_default_str();
    app.add_option("--fit-lo", fit_lo, "start of the slope fit window")->capture_default_str();
    app.add_option("--fit-hi", fit_hi, "end of the slope fit window")->capture_default_str();
  }
  json params() const override {
    return {{"kappa", kappa}, {"z0", z0}, {"times", times}, {"paths", paths}, {"seed", seed},
            {"dt", dt},       {"fit-lo", fit_lo}, {"fit-hi", fit_hi}};
  }
  void validate() const override {
    if (!(kappa > 4 && kappa < 8)) throw UsageError("--kappa must lie in (4,8)");
    const auto t = parse_list(times, "--times");
    if (t.front() < 0) throw UsageError("--times must be >= 0");
    for (std::size_t i = 1; i < t.size(); ++i)
      if (!(t[i] > t[i - 1])) throw UsageError("--times must be strictly increasing");
    for (double v : parse_pair(z0, "--z0"))
      if (!(v > 0 && v < kPi)) throw UsageError("--z0 must lie in (0,pi)^2");
    if (!(dt > 0)) throw UsageError("--dt must be positive");
    if (paths < 2) throw UsageError("--paths must be >= 2");
    if (!(fit_hi > fit_lo)) throw UsageError("--fit-hi must exceed --fit-lo");
  }
  int execute(const fs::path& out, json& summary, std::vector<std::string>& files, std::ostream&) override {
    const auto t = parse_list(times, "--times");
    const auto r = mc::survival_experiment(kappa, parse_pair(z0, "--z0"), t, paths, Seed{seed}, dt, fit_lo, fit_hi);
    {
      csv::Writer w(out / "survival.csv", {"t", "survival", "stderr", "ess", "level_ratio"});
      for (std::size_t i = 0; i < r.times.size(); ++i)
        w.row(std::vector<double>{r.times[i], r.survival[i], r.stderr_[i], r.ess[i], r.level_ratio[i]});
    }
    files.push_back("survival.csv");
    summary = {{"slope", r.slope},
               {"slope_stderr", r.slope_stderr},
               {"expected_slope", -green::alpha0(kappa)},
               {"calZ", r.calZ},
               {"reflected_paths", r.reflected_paths},
               {"level_C", r.level_C},
               {"level_band", r.level_band},
               {"level_t", r.level_t},
               {"level_ok", r.level_ok}};
    return kOk;
  }

 private:
  double kappa = 0;
  std::string z0 = "1.5707963267948966,1.5707963267948966";
  std::string times = "0,0.5,1,1.5,2,2.5,3,3.5,4";
  std::size_t paths = 10000;
  std::uint64_t seed = 0;
  double dt = 1e-3;
  double fit_lo = 1.0, fit_hi = 4.0;
};

// ---------------------------------------------------------------- green-eval

class GreenEval final : public Command {
 public:
  std::string name() const override { return "green-eval"; }
  std::string help() const override { return "Green's function values and exponents as JSON"; }
  void bind(CLI::App& app) override {
    app.add_option("--kappa", kappa, "SLE parameter, in (4,8)")->required();
    app.add_option("--config", config, "boundary points: 'symmetric' or w1,v1,w2,v2")->capture_default_str();
    app.add_option("--z0", z0, "interior point x,y")->capture_default_str();
  }
  json params() const override { return {{"kappa", kappa}, {"config", config}, {"z0", z0}}; }
  void validate() const override {
    if (!(kappa > 4 && kappa < 8)) throw UsageError("--kappa must lie in (4,8)");
    parse_config(config);
    const auto z = parse_pair(z0, "--z0");
    if (!(std::hypot(z[0], z[1]) < 1)) throw UsageError("--z0 must lie in the open unit disk");
  }
  int execute(const fs::path& out, json& summary, std::vector<std::string>& files, std::ostream& os) override {
    const auto c = parse_config(config);
    const auto z = parse_pair(z0, "--z0");
    const std::complex<double> p(z[0], z[1]);
    summary = {{"kappa", kappa},
               {"alpha0", green::alpha0(kappa)},
               {"beta0", green::beta0(kappa)},
               {"tildeG", green::tilde_G(kappa, c)},
               {"G_D", green::green_disk(kappa, c, p)},
               {"config", {c.w1, c.v1, c.w2, c.v2}},
               {"z0", {z[0], z[1]}}};
    write_json(out / "green.json", summary);
    files.push_back("green.json");
    os << summary.dump(2) << '\n';
    return kOk;
  }

 private:
  double kappa = 0;
  std::string config = "symmetric";
  std::string z0 = "0,0";
};

// ---------------------------------------------------------------- simulate

class Simulate final : public Command {
 public:
  std::string name() const override { return "simulate"; }
  std::string help() const override { return "dump a sampled trace, time-curve path or Z sample"; }
  bool uses_seed() const override { return true; }
  void bind(CLI::App& app) override {
    app.add_option("--kind", kind, "chordal | radial | disk-chord | ensemble | z")
        ->capture_default_str()
        ->check(CLI::IsMember({"chordal", "radial", "disk-chord", "ensemble", "z"}));
    app.add_option("--kappa", kappa, "SLE parameter")->required();
    app.add_option("--seed", seed, "RNG seed")->required();
    app.add_option("--path", path, "path index within the seed's stream")->capture_default_str();
    app.add_option("--dt", dt, "time step")->capture_default_str();
    app.add_option("--horizon", horizon, "final time (capacity for traces)")->capture_default_str();
    app.add_option("--a1", a1, "disk chord start angle")->capture_default_str();
    app.add_option("--a2", a2, "disk chord target angle")->capture_default_str();
    app.add_option("--config", config, "ensemble boundary points: 'symmetric' or w1,v1,w2,v2")->capture_default_str();
    app.add_option("--z0", z0, "Z starting point z1,z2")->capture_default_str();
    app.add_option("--paths", paths, "Z sample size")->capture_default_str()->check(CLI::PositiveNumber);
  }
  json params() const override {
    return {{"kind", kind}, {"kappa", kappa}, {"seed", seed},     {"path", path},
            {"dt", dt},     {"horizon", horizon}, {"a1", a1}, {"a2", a2},
            {"config", config}, {"z0", z0}, {"paths", paths}};
  }
  void validate() const override {
    const bool ensemble_kind = kind == "ensemble" || kind == "z";
    if (ensemble_kind ? !(kappa > 4 && kappa < 8) : !(kappa >= 0 && kappa <= 8))
      throw UsageError(ensemble_kind ? "--kappa must lie in (4,8)" : "--kappa must lie in [0,8]");
    if (!(dt > 0) || !std::isfinite(dt)) throw UsageError("--dt must be positive");
    if (!(horizon >= 0) || !std::isfinite(horizon)) throw UsageError("--horizon must be >= 0");
    if (kind == "ensemble") {
      const auto c = parse_config(config);
      if (std::abs(c.v1 - c.v2 - kPi) > 1e-3) throw UsageError("--config: the time curve needs v1 - v2 = pi");
    }
    if (kind == "z")
      for (double v : parse_pair(z0, "--z0"))
        if (!(v > 0 && v < kPi)) throw UsageError("--z0 must lie in (0,pi)^2");
    if (kind == "disk-chord" && std::abs(std::remainder(a1 - a2, 2 * kPi)) < 1e-12)
      throw UsageError("--a1 and --a2 must differ");
  }
  int execute(const fs::path& out, json& summary, std::vector<std::string>& files, std::ostream&) override {
    samplers::SleConfig cfg;
    cfg.kappa = kappa;
    cfg.seed = Seed{seed};
    cfg.dt = dt;
    cfg.horizon = horizon;
    summary = json::object();
    if (kind == "chordal" || kind == "radial" || kind == "disk-chord") {
      files.insert(files.end(), {"trace.csv", "driver.csv"});
      if (horizon == 0) {
        write_header_only(out / "trace.csv", {"t", "re", "im"});
        write_header_only(out / "driver.csv", {"t", "w"});
        summary["points"] = 0;
        return kOk;
      }
      std::vector<loewner::cplx> pts;
      loewner::DrivingFunction drv;
      if (kind == "chordal") {
        drv = samplers::sample_chordal_driver(cfg, path);
        pts = loewner::chordal_trace(drv).points;
      } else if (kind == "radial") {
        samplers::RadialRhoConfig rc;
        rc.base = cfg;
        drv = samplers::sample_radial_rho_driver(rc, path).driver;
        pts = loewner::radial_trace(drv).points;
      } else {
        const auto dc = samplers::sample_disk_chord(kappa, a1, a2, cfg, path);
        drv = dc.trace.driver;
        pts = dc.trace.points;
        summary["termination"] = samplers::to_string(dc.reason);
      }
      loewner::write_trace_csv(out / "trace.csv", drv.grid, pts);
      loewner::write_driver_csv(out / "driver.csv", drv);
      summary["points"] = pts.size();
      return kOk;
    }
    if (kind == "ensemble") {
      const auto c = parse_config(config);
      const CounterRng rng(Seed{seed});
      auto s = ensemble::init_ensemble(c.w1, c.v1, c.w2, c.v2);
      std::vector<ensemble::PathRow> rows;
      const auto n = horizon == 0 ? 0 : static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
      double t = 0;
      if (n > 0) rows.push_back({0.0, s});
      for (std::size_t k = 0; k < n && s.inD; ++k) {
        const double h = std::min(dt, horizon - t);
        const auto z = rng.normal_pair(path, static_cast<std::uint32_t>(k));
        s = ensemble::advance_u(s, kappa, h, z);
        t += h;
        if (s.inD) rows.push_back({t, s});
      }
      ensemble::write_path_csv(out / "path.csv", rows, kappa);
      files.push_back("path.csv");
      summary = {{"rows", rows.size()}, {"left_domain", !s.inD}, {"reason", s.reason}};
      return kOk;
    }
    const auto z = parse_pair(z0, "--z0");
    std::vector<ensemble::ZSample> samples;
    if (horizon > 0) samples = ensemble::simulate_Z(kappa, z, horizon, dt, paths, ensemble::ZLaw::Star, Seed{seed});
    ensemble::write_z_samples_csv(out / "z_samples.csv", samples);
    files.push_back("z_samples.csv");
    summary = {{"samples", samples.size()}};
    return kOk;
  }

 private:
  std::string kind = "chordal";
  double kappa = 0;
  std::uint64_t seed = 0;
  std::uint64_t path = 0;
  double dt = 1e-3;
  double horizon = 1.0;
  double a1 = kPi, a2 = 0;
  std::string config = "symmetric";
  std::string z0 = "1.5707963267948966,1.5707963267948966";
  std::size_t paths = 1000;
};

// ---------------------------------------------------------------- driver

std::string json_arg(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

void prepare_out(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw UsageError("--out: cannot create directory " + out.string());
  const fs::path probe = out / ".slecut_write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw UsageError("--out: directory not writable: " + out.string());
  }
  fs::remove(probe, ec);
}

int dispatch(const std::vector<std::string>& args, std::ostream& os, std::ostream& es, int depth);

int rerun(const std::string& manifest, const std::string& out, std::ostream& os, std::ostream& es, int depth) {
  if (depth > 0) throw UsageError("a manifest cannot trigger another rerun");
  std::ifstream f(manifest);
  if (!f) throw UsageError("cannot read manifest " + manifest);
  json m;
  try {
    f >> m;
  } catch (const json::exception& e) {
    throw UsageError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!m.contains("command") || !m.contains("params") || !m["params"].is_object())
    throw UsageError("manifest lacks command/params");
  std::vector<std::string> args{m["command"].get<std::string>()};
  for (const auto& [k, v] : m["params"].items()) {
    args.push_back("--" + k);
    args.push_back(json_arg(v));
  }
  if (m.contains("workers")) args.insert(args.end(), {"--workers", json_arg(m["workers"])});
  args.insert(args.end(), {"--out", out});
  return dispatch(args, os, es, depth + 1);
}

int dispatch(const std::vector<std::string>& args, std::ostream& os, std::ostream& es, int depth) {
  CLI::App app{"SLE cut points: Loewner simulation, transition densities, Monte Carlo estimates", "slecut"};
  app.allow_config_extras(false);
  app.set_config("--config-file", "", "INI file with one [command] section; flags override it");
  // values such as "0.1,0.2" are single strings, not arrays
  auto fmt = std::make_shared<CLI::ConfigBase>();
  fmt->arrayDelimiter('|');
  app.config_formatter(fmt);
  app.set_version_flag("--version", SLECUT_VERSION);
  app.require_subcommand(1);

  std::vector<std::unique_ptr<Command>> cmds;
  cmds.push_back(std::make_unique<DensityEval>());
  cmds.push_back(std::make_unique<McCutpoint>());
  cmds.push_back(std::make_unique<Survival>());
  cmds.push_back(std::make_unique<GreenEval>());
  cmds.push_back(std::make_unique<Simulate>());
  std::vector<std::pair<CLI::App*, Command*>> subs;
  for (auto& c : cmds) {
    auto* sub = app.add_subcommand(c->name(), c->help());
    c->bind(*sub);
    bind_common(*sub, *c);
    subs.emplace_back(sub, c.get());
  }
  std::string manifest, rerun_out;
  auto* re = app.add_subcommand("rerun", "repeat a run from its manifest.json");
  re->add_option("--manifest", manifest, "manifest written by an earlier run")->required();
  re->add_option("--out", rerun_out, "output directory")->required();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, os, es);
    if (code == 0) return kOk;
    for (auto* sub : app.get_subcommands())
      if (sub->parsed()) es << sub->help();
    if (app.get_subcommands().empty()) es << app.help();
    return kUsage;
  }

  if (re->parsed()) return rerun(manifest, rerun_out, os, es, depth);

  for (auto [sub, cmd] : subs) {
    if (!sub->parsed()) continue;
    cmd->validate();
    const fs::path out(cmd->out_dir);
    prepare_out(out);
    omp_set_num_threads(cmd->workers);
    const auto t0 = std::chrono::steady_clock::now();
    json summary;
    std::vector<std::string> files;
    const int code = cmd->execute(out, summary, files, os);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json manifest_json = {{"command", cmd->name()},
                          {"params", cmd->params()},
                          {"workers", cmd->workers},
                          {"version", SLECUT_VERSION},
                          {"wall_seconds", wall},
                          {"outputs", files},
                          {"results", summary},
                          {"exit_code", code}};
    if (cmd->uses_seed()) manifest_json["seed"] = cmd->params()["seed"];
    write_json(out / "manifest.json", manifest_json);
    return code;
  }
  return kUsage;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err, 0);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "failed: " << e.what() << '\n';
    return kCheckFailed;
  }
}

}  // namespace slecut::cli
