#include "slecut/mc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "slecut/csv.hpp"
#include "slecut/density.hpp"
#include "slecut/ensemble.hpp"
#include "slecut/samplers.hpp"

#ifndef SLECUT_VERSION
#define SLECUT_VERSION "unknown"
#endif

namespace slecut::mc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
using cplx = std::complex<double>;
}  // namespace

void McPlan::validate() const {
  if (!(kappa > 4 && kappa < 8)) throw std::invalid_argument("kappa must lie in (4,8)");
  cfg.validate();
  if (!(std::abs(z0) < 1)) throw std::invalid_argument("z0 must lie inside the unit disk");
  if (radii.empty()) throw std::invalid_argument("need at least one radius");
  const double R = 1.0 - std::abs(z0);
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0 && radii[i] < R)) throw std::invalid_argument("radii must lie in (0, dist(z0, boundary))");
    if (i > 0 && !(radii[i] < radii[i - 1])) throw std::invalid_argument("radii must be strictly decreasing");
  }
  if (n_paths < 100) throw std::invalid_argument("n_paths must be at least 100");
  if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
  if (!(horizon >= 0)) throw std::invalid_argument("horizon must be >= 0");
  if (!(epsilon.factor > 2)) throw std::invalid_argument("epsilon factor must exceed 2");
  if (!(epsilon.floor >= 0)) throw std::invalid_argument("epsilon floor must be >= 0");
  if (!(stop_distance > 0 && stop_distance < 0.1)) throw std::invalid_argument("stop distance must lie in (0, 0.1)");
  if (chord == ChordMode::Complete && !(epsilon.resolution > 0))
    throw std::invalid_argument("complete chords need resolution > 0");
  if (epsilon.adaptive && !(epsilon.resolution > 0)) throw std::invalid_argument("adaptive epsilon needs resolution > 0");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
}

double McPlan::effective_horizon() const {
  return horizon > 0 ? horizon : -std::log(radii.back() / 4.0) + 2.0;
}

double McPlan::effective_floor() const { return epsilon.floor > 0 ? epsilon.floor : 0.25 * radii.back(); }

Interval wilson(std::size_t hits, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n), p = static_cast<double>(hits) / nn, z2 = z * z;
  const double centre = (p + z2 / (2 * nn)) / (1 + z2 / nn);
  const double half = z / (1 + z2 / nn) * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn));
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

PathOutcome run_path(const McPlan& plan, std::uint64_t path) {
  PathOutcome out;
  try {
    std::vector<cplx> pts;
    if (plan.chord == ChordMode::Complete) {
      samplers::CompleteChordOptions opt;
      opt.resolution = plan.epsilon.resolution;
      opt.floor = plan.effective_floor();
      opt.focus = plan.z0;
      opt.stop_distance = plan.stop_distance;
      auto chord = samplers::sample_complete_chord(plan.kappa, plan.cfg.w1, plan.cfg.w2, Seed{plan.seed}, path, opt);
      out.reached_horizon = chord.reason != samplers::Termination::Reached;
      pts = std::move(chord.trace.points);
    } else {
      // sample where z0 sits at the origin, map the trace back
      const green::BoundaryConfig img = plan.z0 == cplx(0, 0) ? plan.cfg : green::recentred(plan.cfg, plan.z0);
      samplers::SleConfig sc{plan.kappa, Seed{plan.seed}, plan.dt, plan.effective_horizon()};
      samplers::DiskChordOptions opt;
      opt.arc_endpoints = std::pair{img.v1, img.v2};
      opt.arcs_stop = false;
      if (plan.epsilon.resolution > 0) {
        opt.resolution = plan.epsilon.resolution;
        opt.floor = plan.effective_floor();
      }
      const auto chord = samplers::sample_disk_chord(plan.kappa, img.w1, img.w2, sc, path, opt);
      if (chord.reason == samplers::Termination::SubstepExhausted) throw std::runtime_error("substeps exhausted");
      out.reached_horizon = chord.reason == samplers::Termination::Horizon;
      pts = chord.trace.points;
      if (plan.z0 != cplx(0, 0))
        for (auto& p : pts) p = (p + plan.z0) / (1.0 + std::conj(plan.z0) * p);
    }
    cutpoints::SceneOptions so;
    so.eps_factor = plan.epsilon.factor;
    so.adaptive = plan.epsilon.adaptive;
    so.close_tip = true;
    const auto scene = cutpoints::make_scene(pts, plan.cfg, so);
    out.vertices = scene.size();
    const auto prof = cutpoints::cut_profile(scene, plan.z0, plan.removal, plan.radii.front());
    out.disconnected = prof.disconnected;
    out.d_min = prof.disconnected || prof.distances.empty() ? kInf : prof.distances.front();
  } catch (const std::exception&) {
    out.excluded = true;
    out.d_min = std::nan("");
  }
  return out;
}

PowerFit fit_power_law(std::span<const double> radii, std::span<const double> p, std::span<const double> weights) {
  if (radii.size() != p.size() || p.size() != weights.size()) throw std::invalid_argument("fit inputs differ in length");
  PowerFit fit;
  std::vector<double> x, y, w;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(p[i] > 0)) {
      fit.warnings.push_back("dropped radius " + csv::fmt(radii[i]) + " with zero estimate");
      continue;
    }
    if (!(radii[i] > 0) || !(weights[i] > 0)) throw std::invalid_argument("radii and weights must be positive");
    x.push_back(std::log(radii[i]));
    y.push_back(std::log(p[i]));
    w.push_back(weights[i]);
  }
  const std::size_t m = x.size();
  if (m < 3) throw std::invalid_argument("power-law fit needs at least 3 radii with positive estimates");
  double Sw = 0, Sx = 0, Sy = 0, Sxx = 0, Sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    Sw += w[i], Sx += w[i] * x[i], Sy += w[i] * y[i];
    Sxx += w[i] * x[i] * x[i], Sxy += w[i] * x[i] * y[i];
  }
  const double D = Sw * Sxx - Sx * Sx;
  if (!(D > 0)) throw std::invalid_argument("radii must not all coincide");
  fit.slope = (Sw * Sxy - Sx * Sy) / D;
  fit.intercept = (Sy - fit.slope * Sx) / Sw;
  double rss = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double e = y[i] - fit.intercept - fit.slope * x[i];
    rss += w[i] * e * e;
  }
  const double s2 = rss / static_cast<double>(m - 2);
  fit.stderr_slope = std::sqrt(s2 * Sw / D);
  fit.stderr_intercept = std::sqrt(s2 * Sxx / D);
  return fit;
}

std::vector<double> delta_method_weights(std::span<const RadiusEstimate> est) {
  std::vector<double> w;
  for (const auto& e : est) {
    const double p = e.p;
    w.push_back(p > 0 && p < 1 ? static_cast<double>(e.n) * p / (1 - p) : (p >= 1 ? static_cast<double>(e.n) : 1.0));
  }
  return w;
}

McRunResult summarize(const McPlan& plan, std::vector<PathOutcome> paths) {
  McRunResult r;
  r.plan = plan;
  r.version = SLECUT_VERSION;
  std::size_t valid = 0;
  for (const auto& p : paths) {
    r.excluded += p.excluded;
    r.disconnected += p.disconnected;
    r.truncated += p.reached_horizon && !p.excluded;
    valid += !p.excluded;
  }
  for (double rad : plan.radii) {
    RadiusEstimate e;
    e.r = rad;
    e.n = valid;
    for (const auto& p : paths) e.hits += !p.excluded && p.d_min < rad;
    e.p = valid ? static_cast<double>(e.hits) / static_cast<double>(valid) : 0.0;
    const auto ci = wilson(e.hits, e.n);
    e.lo = ci.lo, e.hi = ci.hi;
    r.per_radius.push_back(e);
  }
  const double a0 = green::alpha0(plan.kappa);
  double qmin = kInf, qmax = 0, qsum = 0;
  for (const auto& e : r.per_radius) {
    const double q = e.p * std::pow(e.r, -a0);
    r.Q.push_back(q);
    qmin = std::min(qmin, q), qmax = std::max(qmax, q), qsum += q;
  }
  r.q_flatness = qsum > 0 ? (qmax - qmin) / (qsum / static_cast<double>(r.Q.size())) : 0.0;
  std::size_t positive = 0;
  for (const auto& e : r.per_radius) positive += e.hits > 0;
  if (positive >= 3) {
    std::vector<double> rad, p;
    for (const auto& e : r.per_radius) rad.push_back(e.r), p.push_back(e.p);
    const auto w = delta_method_weights(r.per_radius);
    r.fit = fit_power_law(rad, p, w);
    r.fit_ok = true;
  }
  r.paths = std::move(paths);
  return r;
}

namespace {
template <bool Parallel>
McRunResult estimate_impl(const McPlan& plan) {
  plan.validate();
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<PathOutcome> paths(plan.n_paths);
  const auto n = static_cast<std::ptrdiff_t>(plan.n_paths);
  if constexpr (Parallel) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(plan.workers)
    for (std::ptrdiff_t p = 0; p < n; ++p) paths[p] = run_path(plan, static_cast<std::uint64_t>(p));
  } else {
    for (std::ptrdiff_t p = 0; p < n; ++p) paths[p] = run_path(plan, static_cast<std::uint64_t>(p));
  }
  McRunResult r = summarize(plan, std::move(paths));
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (static_cast<double>(r.excluded) > plan.max_exclusion * static_cast<double>(plan.n_paths))
    throw std::runtime_error("excluded path rate " + csv::fmt(static_cast<double>(r.excluded) / plan.n_paths) +
                             " exceeds the allowed maximum");
  return r;
}
}  // namespace

McRunResult estimate_P(const McPlan& plan) { return estimate_impl<true>(plan); }
McRunResult estimate_P_serial(const McPlan& plan) { return estimate_impl<false>(plan); }

C0Estimate estimate_C0(std::span<const McRunResult> runs, std::size_t min_hits) {
  if (runs.size() < 3) throw std::invalid_argument("C0 estimation needs at least 3 configurations");
  C0Estimate out;
  for (const auto& run : runs) {
    const RadiusEstimate* pick = nullptr;
    for (const auto& e : run.per_radius)
      if (e.hits >= min_hits && (!pick || e.r < pick->r)) pick = &e;
    if (!pick) throw std::invalid_argument("a run has no radius with enough hits");
    const double g = green::green_disk(run.plan.kappa, run.plan.cfg, run.plan.z0);
    out.per_config.push_back(pick->p / (std::pow(pick->r, green::alpha0(run.plan.kappa)) * g));
  }
  const double m = static_cast<double>(out.per_config.size());
  out.C0 = std::accumulate(out.per_config.begin(), out.per_config.end(), 0.0) / m;
  double ss = 0;
  for (double c : out.per_config) ss += (c - out.C0) * (c - out.C0);
  out.dispersion = std::sqrt(ss / (m - 1)) / out.C0;
  return out;
}

SurvivalResult survival_experiment(double kappa, std::array<double, 2> z0, std::span<const double> times,
                                   std::size_t n_paths, Seed seed, double dt, double fit_lo, double fit_hi) {
  if (!(kappa > 4 && kappa < 8)) throw std::invalid_argument("kappa must lie in (4,8)");
  if (n_paths < 2) throw std::invalid_argument("need at least two paths");
  ensemble::ZOptions opt;
  opt.dt = dt;
  const auto run = ensemble::simulate_Z_times(kappa, z0, times, n_paths, ensemble::ZLaw::C, seed, opt);
  SurvivalResult out;
  out.times.assign(times.begin(), times.end());
  out.reflected_paths = run.reflected_paths;
  out.calZ = density::calZ(kappa);
  const double a0 = green::alpha0(kappa), g0 = green::tilde_G_u(kappa, z0[0], z0[1]);
  const double nn = static_cast<double>(n_paths);
  for (std::size_t i = 0; i < times.size(); ++i) {
    double s = 0, s2 = 0;
    for (const auto& z : run.samples[i]) s += z.weight, s2 += z.weight * z.weight;
    const double mean = s / nn;
    out.survival.push_back(mean);
    out.stderr_.push_back(std::sqrt(std::max(0.0, s2 / nn - mean * mean) / (nn - 1)));
    out.ess.push_back(s * s / s2);
    out.level_ratio.push_back(mean / (out.calZ * g0 * std::exp(-a0 * times[i])));
    if (out.ess.back() < 0.01 * nn) throw std::runtime_error("effective sample size below 1% of paths; reweighting unreliable");
  }
  // weighted fit of log S on t
  double Sw = 0, Sx = 0, Sy = 0, Sxx = 0, Sxy = 0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < fit_lo - 1e-12 || times[i] > fit_hi + 1e-12 || !(out.survival[i] > 0)) continue;
    const double rel = out.stderr_[i] / out.survival[i];
    const double w = rel > 0 ? 1.0 / (rel * rel) : 1.0;
    const double x = times[i], y = std::log(out.survival[i]);
    Sw += w, Sx += w * x, Sy += w * y, Sxx += w * x * x, Sxy += w * x * y;
    ++used;
  }
  if (used >= 2) {
    const double D = Sw * Sxx - Sx * Sx;
    out.slope = (Sw * Sxy - Sx * Sy) / D;
    out.slope_stderr = std::sqrt(Sw / D);
  }
  // level check: fit the correction constant at t = 2, test the band at t = 3
  const double lam1 = 1.0 - 5.0 * kappa / 8.0;
  auto find = [&](double t) -> std::ptrdiff_t {
    for (std::size_t i = 0; i < times.size(); ++i)
      if (std::abs(times[i] - t) < 1e-9) return static_cast<std::ptrdiff_t>(i);
    return -1;
  };
  const auto ia = find(2.0), ib = find(3.0);
  if (ia >= 0 && ib >= 0) {
    out.level_C = (out.level_ratio[ia] - 1.0) / std::exp(lam1 * 2.0);
    out.level_band = std::abs(out.level_C) * std::exp(lam1 * 3.0);
    out.level_t = 3.0;
    const double se_ratio = out.stderr_[ib] / out.survival[ib] * out.level_ratio[ib];
    out.level_ok = std::abs(out.level_ratio[ib] - 1.0) <= out.level_band + 3.0 * se_ratio;
  }
  return out;
}

void write_results_csv(const std::filesystem::path& file, const McRunResult& r) {
  csv::Writer w(file, {"r", "hits", "n", "p", "ci_lo", "ci_hi", "Q"});
  for (std::size_t i = 0; i < r.per_radius.size(); ++i) {
    const auto& e = r.per_radius[i];
    w.row({csv::fmt(e.r), std::to_string(e.hits), std::to_string(e.n), csv::fmt(e.p), csv::fmt(e.lo), csv::fmt(e.hi),
           csv::fmt(r.Q[i])});
  }
}

void write_paths_csv(const std::filesystem::path& file, const McRunResult& r) {
  csv::Writer w(file, {"path", "d_min", "excluded", "disconnected", "reached_horizon", "vertices"});
  for (std::size_t i = 0; i < r.paths.size(); ++i) {
    const auto& p = r.paths[i];
    w.row({std::to_string(i), csv::fmt(p.d_min), p.excluded ? "1" : "0", p.disconnected ? "1" : "0",
           p.reached_horizon ? "1" : "0", std::to_string(p.vertices)});
  }
}

std::vector<PathOutcome> read_paths_csv(const std::filesystem::path& file) {
  const auto t = csv::read(file);
  const auto cd = t.column("d_min"), ce = t.column("excluded"), cc = t.column("disconnected"),
             ch = t.column("reached_horizon"), cv = t.column("vertices");
  std::vector<PathOutcome> out;
  for (const auto& row : t.rows) {
    PathOutcome p;
    p.d_min = std::stod(row[cd]);
    p.excluded = row[ce] == "1";
    p.disconnected = row[cc] == "1";
    p.reached_horizon = row[ch] == "1";
    p.vertices = std::stoul(row[cv]);
    out.push_back(p);
  }
  return out;
}

}  // namespace slecut::mc
