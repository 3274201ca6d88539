#pragma once
#include <array>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "slecut/cutpoints.hpp"
#include "slecut/green.hpp"
#include "slecut/rng.hpp"

namespace slecut::mc {

struct EpsilonPolicy {
  double factor = 3.0;        // epsilon = factor * consecutive gap
  bool adaptive = true;       // per-vertex epsilon, needs resolution > 0
  double resolution = 0.05;   // spatial step / distance to z0; <= 0 means uniform capacity steps
  double floor = 0;           // distances below this count as this; 0 means r_min / 4
};

// Complete: the whole chord to a2 (half-plane zipper). Horizon: radial
// SLE_kappa(kappa-6) aimed at z0, cut at the capacity horizon, tip linked to a2.
enum class ChordMode { Complete, Horizon };

struct McPlan {
  double kappa = 6.0;
  green::BoundaryConfig cfg = green::symmetric_config();
  std::complex<double> z0{0.0, 0.0};
  std::vector<double> radii;  // strictly decreasing
  std::size_t n_paths = 1000;
  double dt = 1e-3;            // Horizon mode: capacity step (cap when adaptive)
  double horizon = 0;          // Horizon mode: 0 means -log(r_min/4) + 2
  ChordMode chord = ChordMode::Complete;
  double stop_distance = 1e-5;  // Complete mode: chord closed this near a2
  cutpoints::RemovalMode removal = cutpoints::RemovalMode::Thickened;
  EpsilonPolicy epsilon;
  std::uint64_t seed = 0;
  int workers = 1;
  double max_exclusion = 0.01;

  void validate() const;
  double effective_horizon() const;
  double effective_floor() const;
};

struct RadiusEstimate {
  double r = 0;
  std::size_t hits = 0, n = 0;
  double p = 0, lo = 0, hi = 0;  // Wilson 95%
};

struct PowerFit {
  double slope = 0, intercept = 0, stderr_slope = 0, stderr_intercept = 0;
  std::vector<std::string> warnings;
};

struct PathOutcome {
  double d_min = 0;       // nearest separating vertex to z0, +inf if none, NaN if excluded
  bool excluded = false;
  bool disconnected = false;
  bool reached_horizon = false;  // chord truncated at the capacity horizon
  std::size_t vertices = 0;
};

struct McRunResult {
  McPlan plan;
  std::vector<RadiusEstimate> per_radius;
  PowerFit fit;
  bool fit_ok = false;
  std::vector<double> Q;  // r^{-alpha0} p(r)
  double q_flatness = 0;  // (max Q - min Q) / mean Q
  std::size_t excluded = 0, disconnected = 0, truncated = 0;
  std::vector<PathOutcome> paths;
  double wall_seconds = 0;
  std::string version;
};

struct Interval {
  double lo, hi;
};
Interval wilson(std::size_t hits, std::size_t n, double z = 1.959963984540054);

// One path: chord, scene, distances of separating vertices from z0.
PathOutcome run_path(const McPlan& plan, std::uint64_t path);

McRunResult estimate_P(const McPlan& plan);
McRunResult estimate_P_serial(const McPlan& plan);
// Aggregate per-path outcomes (in path order) into per-radius estimates and a fit.
McRunResult summarize(const McPlan& plan, std::vector<PathOutcome> paths);

// Weighted least squares of log p on log r; radii with p <= 0 are dropped.
PowerFit fit_power_law(std::span<const double> radii, std::span<const double> p, std::span<const double> weights);
// 1 / Var(log p) by the delta method: n p / (1 - p).
std::vector<double> delta_method_weights(std::span<const RadiusEstimate> est);

struct C0Estimate {
  double C0 = 0;
  double dispersion = 0;  // sample std / mean of the per-config values
  std::vector<double> per_config;
};
// Per run: p(r) / (r^alpha0 G_D) at its smallest radius with at least min_hits hits.
C0Estimate estimate_C0(std::span<const McRunResult> runs, std::size_t min_hits = 20);

struct SurvivalResult {
  std::vector<double> times, survival, stderr_, ess, level_ratio;
  double slope = 0, slope_stderr = 0;  // log survival vs t over [fit_lo, fit_hi]
  double calZ = 0;
  std::size_t reflected_paths = 0;
  // level check: C fitted at t_a, band at t_b
  double level_C = 0, level_band = 0, level_t = 0;
  bool level_ok = false;
};

SurvivalResult survival_experiment(double kappa, std::array<double, 2> z0, std::span<const double> times,
                                   std::size_t n_paths, Seed seed, double dt = 1e-3, double fit_lo = 1.0,
                                   double fit_hi = 4.0);

void write_results_csv(const std::filesystem::path& file, const McRunResult& r);
void write_paths_csv(const std::filesystem::path& file, const McRunResult& r);
std::vector<PathOutcome> read_paths_csv(const std::filesystem::path& file);

}  // namespace slecut::mc
