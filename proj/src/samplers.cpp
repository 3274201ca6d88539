#include "slecut/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace slecut::samplers {

namespace {
constexpr double kPi = std::numbers::pi;
double cot2(double x) { return 1.0 / std::tan(0.5 * x); }
constexpr int kMaxHalvings = 20;

bool drift_too_big(double drift, double h, double kappa) {
  return kappa > 0 && std::abs(drift) * h > 0.1 * std::sqrt(kappa * h);
}

// Repelled points should only be reached through a many-sigma increment;
// otherwise the blow-up cutoff fires on ordinary noise.
bool noise_too_big(double gap, double h, double kappa) { return std::sqrt(kappa * h) > gap / 8.0; }

// Euler-Maruyama state shared by the uniform and the adaptive drivers.
struct RhoState {
  double w;
  std::vector<double> g;
  std::vector<ForcePoint> f;
  std::vector<bool> alive;
  std::vector<double> tau;

  double drift() const {
    double d = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j)
      if (alive[j] && f[j].rho != 0.0) d += 0.5 * f[j].rho * cot2(w - g[j]);
    return d;
  }

  double min_repelling_gap() const {
    double d = 2.0 * kPi;
    for (std::size_t j = 0; j < g.size(); ++j)
      if (alive[j] && f[j].rho > 0.0) d = std::min(d, loewner::angular_gap(g[j], w));
    return d;
  }

  double min_stopping_gap() const {
    double d = 2.0 * kPi;
    for (std::size_t j = 0; j < g.size(); ++j)
      if (alive[j] && f[j].stops) d = std::min(d, loewner::angular_gap(g[j], w));
    return d;
  }

  // Advance forces over [t, t+h] with driver w -> w + dw. Returns index of a
  // stopping force that blew up, if any.
  std::optional<std::size_t> advance(double dw, double h, double t_end) {
    std::optional<std::size_t> hit;
    const double cut = loewner::blowup_cutoff(h);
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (!alive[j]) continue;
      const double next = loewner::covering_step(g[j], w, w + dw, h);
      if (!std::isfinite(next) || loewner::angular_gap(next, w + dw) < cut) {
        alive[j] = false;
        tau[j] = t_end;
        if (f[j].stops && !hit) hit = j;
      } else {
        g[j] = next;
      }
    }
    w += dw;
    return hit;
  }
};

RhoState make_state(double w0, const std::vector<ForcePoint>& forces) {
  RhoState s{w0, {}, forces, std::vector<bool>(forces.size(), true), std::vector<double>(forces.size(), loewner::kInf)};
  for (const auto& fp : forces) s.g.push_back(lift_below(fp.v, w0));
  return s;
}

loewner::CoveringState to_covering(const RhoState& s) {
  loewner::CoveringState cs;
  cs.points = s.g;
  cs.blown_up.resize(s.g.size());
  for (std::size_t j = 0; j < s.g.size(); ++j) cs.blown_up[j] = !s.alive[j];
  cs.blowup_time = s.tau;
  return cs;
}
}  // namespace

void SleConfig::validate() const {
  if (!(kappa >= 0.0 && kappa <= 8.0)) throw std::invalid_argument("kappa must lie in (0,8]");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("horizon must be non-negative");
}

void RadialRhoConfig::validate() const {
  base.validate();
  for (const auto& f : forces) {
    if (!std::isfinite(f.v) || !std::isfinite(f.rho)) throw std::invalid_argument("force point must be finite");
    if (loewner::angular_gap(f.v, w0) < 1e-12) throw std::invalid_argument("force point coincides with the start point");
  }
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::Horizon: return "horizon";
    case Termination::ForceBlowUp: return "force-blow-up";
    case Termination::SubstepExhausted: return "substep-exhausted";
    case Termination::Reached: return "reached";
  }
  return "?";
}

double lift_below(double v, double w0) {
  double d = std::fmod(w0 - v, 2.0 * kPi);
  if (d <= 0) d += 2.0 * kPi;
  return w0 - d;
}

loewner::DrivingFunction sample_chordal_driver(const SleConfig& cfg, std::uint64_t path, bool mirror) {
  cfg.validate();
  auto grid = loewner::TimeGrid::uniform(cfg.dt, cfg.horizon);
  const CounterRng rng(cfg.seed);
  std::vector<double> w(grid.size(), 0.0);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double z = rng.normal(path, static_cast<std::uint32_t>(i));
    w[i] = w[i - 1] + std::sqrt(cfg.kappa * (grid[i] - grid[i - 1])) * (mirror ? -z : z);
  }
  return loewner::DrivingFunction(std::move(grid), std::move(w));
}

RadialRhoSample sample_radial_rho_driver(const RadialRhoConfig& cfg, std::uint64_t path, bool mirror) {
  cfg.validate();
  const auto base = loewner::TimeGrid::uniform(cfg.base.dt, cfg.base.horizon);
  const CounterRng rng(cfg.base.seed);
  const double kappa = cfg.base.kappa;
  RhoState st = make_state(cfg.w0, cfg.forces);
  std::vector<double> ts{0.0}, ws{cfg.w0};
  RadialRhoSample out;
  out.reason = Termination::Horizon;

  for (std::size_t k = 1; k < base.size(); ++k) {
    double t = base[k - 1];
    const double t_end = base[k];
    std::uint32_t sub = 0;
    bool stop = false;
    while (t < t_end) {
      double h = t_end - t;
      const double drift = st.drift();
      const double rgap = st.min_repelling_gap();
      int halvings = 0;
      while ((drift_too_big(drift, h, kappa) || noise_too_big(rgap, h, kappa)) && halvings < kMaxHalvings) {
        h *= 0.5;
        ++halvings;
      }
      if (drift_too_big(drift, h, kappa)) {
        out.reason = Termination::SubstepExhausted;
        stop = true;
        break;
      }
      const bool last = (t_end - t - h) <= 1e-14 * t_end;
      const double t_next = last ? t_end : t + h;
      const double z = rng.normal(path, static_cast<std::uint32_t>(k), sub++);
      const double dw = std::sqrt(kappa * h) * (mirror ? -z : z) + drift * h;
      const auto hit = st.advance(dw, h, t_next);
      t = t_next;
      ts.push_back(t);
      ws.push_back(st.w);
      if (hit) {
        out.reason = Termination::ForceBlowUp;
        out.blown_index = *hit;
        stop = true;
        break;
      }
    }
    if (stop) break;
  }
  out.driver = loewner::DrivingFunction(loewner::TimeGrid(std::move(ts)), std::move(ws));
  out.forces = to_covering(st);
  return out;
}

DiskChord sample_disk_chord(double kappa, double a1, double a2, const SleConfig& cfg, std::uint64_t path,
                            const DiskChordOptions& opt, bool mirror) {
  if (loewner::angular_gap(a1, a2) < 1e-12) throw std::invalid_argument("disk chord endpoints coincide");
  RadialRhoConfig rc;
  rc.base = cfg;
  rc.base.kappa = kappa;
  rc.w0 = a1;
  rc.forces.push_back({a2, kappa - 6.0, true});
  if (opt.arc_endpoints) {
    rc.forces.push_back({opt.arc_endpoints->first, 0.0, opt.arcs_stop});
    rc.forces.push_back({opt.arc_endpoints->second, 0.0, opt.arcs_stop});
  }
  rc.validate();

  DiskChord out;
  if (opt.resolution <= 0.0) {
    auto s = sample_radial_rho_driver(rc, path, mirror);
    out.trace = loewner::radial_trace(s.driver);
    out.reason = s.reason;
    out.blown_index = s.blown_index;
    return out;
  }

  // Adaptive capacity steps: the grid is chosen from the past only, so the
  // Euler-Maruyama increments stay conditionally Gaussian.
  const CounterRng rng(cfg.seed);
  RhoState st = make_state(a1, rc.forces);
  loewner::RadialZipper zip;
  std::vector<double> ts{0.0}, ws{a1};
  std::vector<loewner::cplx> pts{std::polar(1.0, a1)};
  // a first slit of capacity h reaches about 2 sqrt(h) into the disk
  const double target0 = std::min(opt.max_step, opt.resolution * std::max(std::abs(pts[0] - opt.focus), opt.floor));
  double t = 0.0, h = std::max(opt.dt_min, std::min(cfg.dt, 0.25 * target0 * target0));
  std::uint32_t step = 0;
  out.reason = Termination::Horizon;
  while (t < cfg.horizon) {
    const double gap = st.min_stopping_gap();
    h = std::min({h, cfg.dt, cfg.horizon - t, std::max(opt.dt_min, gap * gap / 64.0)});
    const double drift = st.drift();
    const double rgap = st.min_repelling_gap();
    int halvings = 0;
    while ((drift_too_big(drift, h, kappa) || noise_too_big(rgap, h, kappa)) && halvings < kMaxHalvings) {
      h *= 0.5;
      ++halvings;
    }
    if (drift_too_big(drift, h, kappa)) {
      out.reason = Termination::SubstepExhausted;
      break;
    }
    const double z = rng.normal(path, ++step);
    const double dw = std::sqrt(kappa * h) * (mirror ? -z : z) + drift * h;
    const double t_next = (cfg.horizon - t - h <= 1e-14 * cfg.horizon) ? cfg.horizon : t + h;
    const auto hit = st.advance(dw, h, t_next);
    zip.push(st.w, t_next - t);
    t = t_next;
    const loewner::cplx tip = zip.tip();
    const double s_obs = std::abs(tip - pts.back());
    ts.push_back(t);
    ws.push_back(st.w);
    pts.push_back(tip);
    if (hit) {
      out.reason = Termination::ForceBlowUp;
      out.blown_index = *hit;
      break;
    }
    const double target = std::min(opt.max_step, opt.resolution * std::max(std::abs(tip - opt.focus), opt.floor));
    if (s_obs > 0) h *= std::clamp((target / s_obs) * (target / s_obs), 0.25, 2.0);
    h = std::max(h, opt.dt_min);
  }
  out.trace.driver = loewner::DrivingFunction(loewner::TimeGrid(std::move(ts)), std::move(ws));
  out.trace.points = std::move(pts);
  return out;
}

namespace {
// z -> s rot (z - A1) / (z - A2) takes the disk to the upper half-plane, A1 to 0 and A2 to infinity.
struct DiskToHalfPlane {
  loewner::cplx A1, A2, k;  // k = s rot

  DiskToHalfPlane(double a1, double a2, loewner::cplx focus) : A1(std::polar(1.0, a1)), A2(std::polar(1.0, a2)) {
    const loewner::cplx p = std::abs(A2 + A1) > 1e-3 ? -A1 : loewner::cplx(0, 1) * A1;
    const loewner::cplx m = (p - A1) / (p - A2);
    k = std::conj(m) / std::abs(m);
    if ((k * A1 / A2).imag() < 0) k = -k;
    k /= std::abs(k * (focus - A1) / (focus - A2));
  }
  loewner::cplx inverse(loewner::cplx w) const { return A2 + (A1 - A2) / (1.0 - w / k); }
  double inverse_speed_at_zero() const { return std::abs(A1 - A2) / std::abs(k); }
};
}  // namespace

DiskChord sample_complete_chord(double kappa, double a1, double a2, Seed seed, std::uint64_t path,
                                const CompleteChordOptions& opt) {
  if (!(kappa > 0.0 && kappa <= 8.0)) throw std::invalid_argument("kappa must lie in (0,8]");
  if (loewner::angular_gap(a1, a2) < 1e-12) throw std::invalid_argument("disk chord endpoints coincide");
  if (!(opt.resolution > 0 && opt.floor > 0 && opt.max_step > 0 && opt.stop_distance > 0))
    throw std::invalid_argument("chord step options must be positive");
  if (std::abs(opt.focus) >= 1.0) throw std::invalid_argument("focus must lie inside the disk");
  const DiskToHalfPlane psi(a1, a2, opt.focus);
  const CounterRng rng(seed);
  auto target = [&](loewner::cplx z) { return std::min(opt.max_step, opt.resolution * std::max(std::abs(z - opt.focus), opt.floor)); };

  DiskChord out;
  loewner::ChordalZipper zip;
  std::vector<double> ts{0.0}, ws{0.0};
  std::vector<loewner::cplx> pts{psi.A1};
  const double g0 = target(psi.A1) / (2.0 * psi.inverse_speed_at_zero());
  double t = 0.0, w = 0.0, h = g0 * g0;
  std::uint32_t draws = 0;
  // pending pieces of the current step, last piece on top
  std::vector<std::pair<double, double>> todo;
  out.reason = Termination::Horizon;
  while (pts.size() <= opt.max_steps && out.reason != Termination::Reached) {
    todo.assign(1, {h, std::sqrt(kappa * h) * rng.normal(path, ++draws, 3)});
    double s_obs = 0, tg = target(pts.back());
    while (!todo.empty() && out.reason != Termination::Reached) {
      const auto [hi, dwi] = todo.back();
      zip.push(w + dwi, hi);
      const loewner::cplx tip = psi.inverse(zip.tip());
      const double s = std::abs(tip - pts.back());
      if (s > 1.5 * tg && t + 0.25 * hi > t) {
        // overshoot: reveal the Brownian midpoint and redo the first half
        zip.pop();
        todo.pop_back();
        const double mid = 0.5 * dwi + std::sqrt(0.25 * kappa * hi) * rng.normal(path, ++draws, 3);
        todo.push_back({0.5 * hi, dwi - mid});
        todo.push_back({0.5 * hi, mid});
        continue;
      }
      todo.pop_back();
      if (!(t + hi > t)) {
        // capacity no longer resolvable in double precision: report as truncated
        zip.pop();
        todo.clear();
        break;
      }
      w += dwi;
      t += hi;
      ts.push_back(t);
      ws.push_back(w);
      pts.push_back(tip);
      s_obs = s;
      tg = target(tip);
      h = hi;
      if (std::abs(tip - psi.A2) < opt.stop_distance) out.reason = Termination::Reached;
    }
    if (s_obs == 0) break;
    h *= std::clamp((tg / s_obs) * (tg / s_obs), 0.25, 2.0);
  }
  out.trace.driver = loewner::DrivingFunction(loewner::TimeGrid(std::move(ts)), std::move(ws));
  out.trace.points = std::move(pts);
  return out;
}

}  // namespace slecut::samplers
