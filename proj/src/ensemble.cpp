#include "slecut/ensemble.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "slecut/csv.hpp"
#include "slecut/green.hpp"
#include "slecut/loewner.hpp"

namespace slecut::ensemble {

namespace {
constexpr double kPi = std::numbers::pi;

struct Cot {
  double c;    // cot(x/2)
  double d1;   // d/dx
  double d3;   // third derivative
};
Cot cot_pack(double x) {
  const double c = 1.0 / std::tan(0.5 * x);
  const double q = 1.0 + c * c;
  return {c, -0.5 * q, -0.25 * q * (1.0 + 3.0 * c * c)};
}

// coordinates that move along direction j (k is the other index)
struct Flowing {
  double Wk, logWk1, WkS, V1, V2, logV11, logV21, mA, Iacc;
};

Flowing operator+(const Flowing& a, const Flowing& b) {
  return {a.Wk + b.Wk,         a.logWk1 + b.logWk1, a.WkS + b.WkS,   a.V1 + b.V1,    a.V2 + b.V2,
          a.logV11 + b.logV11, a.logV21 + b.logV21, a.mA + b.mA,     a.Iacc + b.Iacc};
}
Flowing operator*(double s, const Flowing& a) {
  return {s * a.Wk, s * a.logWk1, s * a.WkS, s * a.V1, s * a.V2, s * a.logV11, s * a.logV21, s * a.mA, s * a.Iacc};
}

struct Tip {
  double W, W1, WS;
};

Flowing rhs(const Flowing& y, const Tip& tip) {
  const double a = tip.W1 * tip.W1;
  const Cot k = cot_pack(y.Wk - tip.W);
  const Cot v1 = cot_pack(y.V1 - tip.W);
  const Cot v2 = cot_pack(y.V2 - tip.W);
  const double wk1 = std::exp(y.logWk1);
  return {a * k.c, a * k.d1, a * wk1 * wk1 * k.d3, a * v1.c, a * v2.c, a * v1.d1, a * v2.d1, a, tip.WS};
}

enum class Scheme { RK4, Heun };

Tip lerp(const Tip& a, const Tip& b, double f) {
  return {a.W + f * (b.W - a.W), a.W1 + f * (b.W1 - a.W1), a.WS + f * (b.WS - a.WS)};
}

EnsembleState step_impl(const EnsembleState& s, int j, double dt, const TipEnd& end, Scheme scheme) {
  if (j != 1 && j != 2) throw std::invalid_argument("direction must be 1 or 2");
  if (!(dt >= 0)) throw std::invalid_argument("step length must be >= 0");
  if (!s.inD || dt == 0) return s;
  const bool one = j == 1;
  const Tip t0{one ? s.W1 : s.W2, one ? s.W11 : s.W21, one ? s.W1S : s.W2S};
  const Tip t1{end.W, end.W1, end.WS};
  Flowing y{one ? s.W2 : s.W1, std::log(one ? s.W21 : s.W11), one ? s.W2S : s.W1S, s.V1, s.V2,
            std::log(s.V11), std::log(s.V21), s.mA, s.Iacc};
  if (scheme == Scheme::RK4) {
    const Tip tm = lerp(t0, t1, 0.5);
    const Flowing k1 = rhs(y, t0);
    const Flowing k2 = rhs(y + (0.5 * dt) * k1, tm);
    const Flowing k3 = rhs(y + (0.5 * dt) * k2, tm);
    const Flowing k4 = rhs(y + dt * k3, t1);
    y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  } else {
    const Flowing k1 = rhs(y, t0);
    const Flowing k2 = rhs(y + dt * k1, t1);
    y = y + (0.5 * dt) * (k1 + k2);
  }
  EnsembleState o = s;
  if (one) {
    o.W1 = end.W, o.W11 = end.W1, o.W1S = end.WS;
    o.W2 = y.Wk, o.W21 = std::exp(y.logWk1), o.W2S = y.WkS;
    o.t1 += dt;
  } else {
    o.W2 = end.W, o.W21 = end.W1, o.W2S = end.WS;
    o.W1 = y.Wk, o.W11 = std::exp(y.logWk1), o.W1S = y.WkS;
    o.t2 += dt;
  }
  o.V1 = y.V1, o.V2 = y.V2, o.V11 = std::exp(y.logV11), o.V21 = std::exp(y.logV21);
  o.mA = y.mA, o.Iacc = y.Iacc;
  o.haA = o.mA - o.t1 - o.t2;
  if (!(min_gap(o) >= kCollisionCutoff)) {
    EnsembleState frozen = s;
    frozen.inD = false;
    frozen.reason = "angles within collision cutoff";
    return frozen;
  }
  return o;
}

double log_abs_sin2(double x, const char* factor) {
  const double v = std::log(std::abs(std::sin(0.5 * x)));
  if (!std::isfinite(v)) throw std::domain_error(std::string("non-finite factor: ") + factor);
  return v;
}

double finite_exp(double logv, const char* what) {
  const double v = std::exp(logv);
  if (!std::isfinite(v) || v <= 0) throw std::domain_error(std::string("non-finite value: ") + what);
  return v;
}

double shared_log_terms(const EnsembleState& s, double kappa) {
  const double b = boundary_exponent(kappa), c = central_charge(kappa);
  if (!(s.W11 > 0) || !(s.W21 > 0)) throw std::domain_error("non-finite factor: W_{j,1}");
  return b / 6.0 * s.haA + b * (std::log(s.W11) + std::log(s.W21)) - c / 6.0 * s.Iacc;
}
}  // namespace

EnsembleState init_ensemble(double w1, double v1, double w2, double v2) {
  if (!(w1 > v1 && v1 > w2 && w2 > v2 && v2 > w1 - 2 * kPi))
    throw std::invalid_argument("need w1 > v1 > w2 > v2 > w1 - 2pi");
  EnsembleState s;
  s.W1 = w1, s.V1 = v1, s.W2 = w2, s.V2 = v2;
  return s;
}

double min_gap(const EnsembleState& s) {
  return std::min({s.W1 - s.V1, s.V1 - s.W2, s.W2 - s.V2, s.V2 - s.W1 + 2 * kPi});
}

EnsembleState step_direction(const EnsembleState& s, int j, double dt, const TipEnd& end) {
  return step_impl(s, j, dt, end, Scheme::RK4);
}

EnsembleState step_direction(const EnsembleState& s, int j, double dt, double dW) {
  const TipEnd end = j == 1 ? TipEnd{s.W1 + dW, s.W11, s.W1S} : TipEnd{s.W2 + dW, s.W21, s.W2S};
  return step_impl(s, j, dt, end, Scheme::RK4);
}

double boundary_exponent(double kappa) { return (6.0 - kappa) / (2.0 * kappa); }
double central_charge(double kappa) { return (3.0 * kappa - 8.0) * (6.0 - kappa) / (2.0 * kappa); }

double mart_Mstar(const EnsembleState& s, double kappa) {
  if (!s.inD) throw std::domain_error("state left the time region");
  const double rho = kappa - 4.0;
  double l = (kappa - 3.0) * (kappa - 1.0) / (2.0 * kappa) * s.mA + shared_log_terms(s, kappa);
  l += 2.0 / kappa * log_abs_sin2(s.W1 - s.W2, "sin2(W1-W2)");
  l += rho * rho / (2.0 * kappa) * log_abs_sin2(s.V1 - s.V2, "sin2(V1-V2)");
  l += rho / kappa *
       (log_abs_sin2(s.W1 - s.V1, "sin2(W1-V1)") + log_abs_sin2(s.W1 - s.V2, "sin2(W1-V2)") +
        log_abs_sin2(s.W2 - s.V1, "sin2(W2-V1)") + log_abs_sin2(s.W2 - s.V2, "sin2(W2-V2)"));
  // V_{s,1} enters with exponent rho(rho+4-kappa)/(4kappa) = 0
  return finite_exp(l, "Mstar");
}

double mart_Mc(const EnsembleState& s, double kappa) {
  if (!s.inD) throw std::domain_error("state left the time region");
  double l = (kappa - 6.0) * (kappa - 2.0) / (8.0 * kappa) * s.mA + shared_log_terms(s, kappa);
  if (kappa != 6.0) l += (kappa - 6.0) / kappa * log_abs_sin2(s.W1 - s.W2, "sin2(W1-W2)");
  return finite_exp(l, "Mc");
}

double rn_deriv(const EnsembleState& s, double kappa) {
  if (!s.inD) throw std::domain_error("state left the time region");
  const double g = green::tilde_G(kappa, {s.W1, s.V1, s.W2, s.V2});
  return finite_exp(-green::alpha0(kappa) * s.mA - std::log(g), "rn_deriv");
}

// ---------------------------------------------------------------- time curve

ZState z_of(const EnsembleState& s, double t) { return {s.W1 - s.V1, s.W2 - s.V2, t, s.inD}; }

std::array<double, 2> u_speeds(const EnsembleState& s) {
  const double a = std::sin(s.W1 - s.V1), b = std::sin(s.W2 - s.V2);
  return {a / (a + b), b / (a + b)};
}

std::array<double, 2> z_drift(double kappa, double z1, double z2) {
  const double S = std::sin(z1) + std::sin(z2);
  return {(kappa - 2.0) * std::cos(z1) / S, (kappa - 2.0) * std::cos(z2) / S};
}

std::array<double, 2> z_diffusion(double kappa, double z1, double z2) {
  const double a = std::sin(z1), b = std::sin(z2);
  return {std::sqrt(kappa * a / (a + b)), std::sqrt(kappa * b / (a + b))};
}

EnsembleState advance_u(const EnsembleState& s, double kappa, double dt, std::array<double, 2> noise,
                        double* projection) {
  if (!(dt >= 0)) throw std::invalid_argument("step length must be >= 0");
  if (!s.inD) return s;
  if (std::abs(s.V1 - s.V2 - kPi) > 1e-3) throw std::invalid_argument("time curve needs V1 - V2 = pi");
  const double z1 = s.W1 - s.V1, z2 = s.W2 - s.V2;
  const auto sp = u_speeds(s);
  const auto mu = z_drift(kappa, z1, z2);
  const auto sg = z_diffusion(kappa, z1, z2);
  const double n1 = z1 + mu[0] * dt + sg[0] * std::sqrt(dt) * noise[0];
  const double n2 = z2 + mu[1] * dt + sg[1] * std::sqrt(dt) * noise[1];
  EnsembleState o = s;
  if (!(n1 > 0 && n1 < kPi && n2 > 0 && n2 < kPi)) {
    o.inD = false;
    o.reason = "Z left (0,pi)^2";
    return o;
  }
  const double t1 = std::tan(0.5 * z1), t2 = std::tan(0.5 * z2);
  o.V1 += (-sp[0] / t1 + sp[1] * t2) * dt;
  o.V2 += (sp[0] * t1 - sp[1] / t2) * dt;
  o.V11 *= std::exp((sp[0] * cot_pack(s.V1 - s.W1).d1 + sp[1] * cot_pack(s.V1 - s.W2).d1) * dt);
  o.V21 *= std::exp((sp[0] * cot_pack(s.V2 - s.W1).d1 + sp[1] * cot_pack(s.V2 - s.W2).d1) * dt);
  const double r = (o.V1 - o.V2) - kPi;
  o.V1 -= 0.5 * r;
  o.V2 += 0.5 * r;
  if (projection) *projection = r;
  o.W1 = o.V1 + n1;
  o.W2 = o.V2 + n2;
  o.mA += dt;
  if (!(min_gap(o) >= kCollisionCutoff)) {
    o.inD = false;
    o.reason = "angles within collision cutoff";
  }
  return o;
}

// ---------------------------------------------------------------- Z diffusion

namespace {

void z_step(double kappa, double& z1, double& z2, double dt, const CounterRng& rng, std::uint64_t path,
            std::uint32_t step, const ZOptions& opt, bool& reflected) {
  double remaining = dt;
  const double hmin = dt / opt.max_refine;
  std::uint32_t sub = 0;
  while (remaining > 0) {
    // six noise standard deviations must fit inside the distance to the nearest
    // edge; the diffusion coefficient vanishes there, so h shrinks only ~ linearly
    const double S = std::sin(z1) + std::sin(z2);
    auto fit = [&](double z) {
      const double d = std::min(z, kPi - z);
      return d * d * S / (36.0 * kappa * std::max(std::sin(z), 1e-300));
    };
    double h = std::min(remaining, std::max(hmin, std::min(fit(z1), fit(z2))));
    if (remaining - h < 1e-12 * dt) h = remaining;
    const auto n = rng.normal_pair(path, step, sub++);
    const auto mu = z_drift(kappa, z1, z2);
    const auto sg = z_diffusion(kappa, z1, z2);
    const double sq = std::sqrt(h);
    // Near an edge step u = sqrt(distance) instead (Ito drift included): the
    // noise on u stays bounded and the pull away from the edge grows like 1/u.
    auto advance = [&](double z, double m, double g, double e) {
      const bool low = z < kPi - z;
      const double d = low ? z : kPi - z;
      if (d >= 0.1) {
        double x = z + m * h + g * sq * e;
        if (x <= 0) x = -x, reflected = true;
        else if (x >= kPi) x = 2 * kPi - x, reflected = true;
        return std::clamp(x, 1e-300, kPi - 1e-12);
      }
      const double md = low ? m : -m, gd = low ? g : -g;
      const double u = std::sqrt(d);
      double un = u + (md / (2 * u) - g * g / (8 * u * u * u)) * h + gd / (2 * u) * sq * e;
      if (un <= 0) un = -un, reflected = true;
      const double dn = std::max(un * un, 1e-300);
      return low ? dn : std::clamp(kPi - dn, 0.0, kPi - 1e-12);
    };
    const double a = advance(z1, mu[0], sg[0], n[0]);
    const double b = advance(z2, mu[1], sg[1], n[1]);
    z1 = a, z2 = b;
    remaining -= h;
  }
}

template <bool Parallel>
ZRun simulate_impl(double kappa, std::array<double, 2> z0, std::span<const double> times, std::size_t n_paths,
                   ZLaw law, Seed seed, const ZOptions& opt) {
  if (!(kappa > 4 && kappa < 8)) throw std::invalid_argument("kappa must lie in (4,8)");
  if (!(z0[0] > 0 && z0[0] < kPi && z0[1] > 0 && z0[1] < kPi)) throw std::invalid_argument("z0 must lie in (0,pi)^2");
  if (!(opt.dt > 0) || opt.max_refine < 1) throw std::invalid_argument("bad step options");
  std::vector<long long> at_step;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0) || (i > 0 && times[i] < times[i - 1])) throw std::invalid_argument("times must be sorted and >= 0");
    at_step.push_back(std::llround(times[i] / opt.dt));
  }
  ZRun run;
  run.times.assign(times.begin(), times.end());
  run.samples.assign(times.size(), std::vector<ZSample>(n_paths));
  run.n_paths = n_paths;
  const CounterRng rng(seed);
  const double a0 = green::alpha0(kappa);
  const double g0 = green::tilde_G_u(kappa, z0[0], z0[1]);
  const long long last = at_step.empty() ? 0 : at_step.back();
  std::size_t reflected_paths = 0;

  auto one_path = [&](std::size_t p) {
    double z1 = z0[0], z2 = z0[1];
    bool reflected = false;
    std::size_t next = 0;
    for (long long k = 0;; ++k) {
      while (next < at_step.size() && at_step[next] == k) {
        const double t = static_cast<double>(k) * opt.dt;
        ZSample& out = run.samples[next][p];
        out.state = {z1, z2, t, true};
        out.weight = law == ZLaw::C ? std::exp(-a0 * t) * g0 / green::tilde_G_u(kappa, z1, z2) : 1.0;
        ++next;
      }
      if (k >= last) break;
      z_step(kappa, z1, z2, opt.dt, rng, p, static_cast<std::uint32_t>(k), opt, reflected);
    }
    return reflected;
  };

  const auto n = static_cast<std::ptrdiff_t>(n_paths);
  if constexpr (Parallel) {
#pragma omp parallel for schedule(dynamic, 64) reduction(+ : reflected_paths)
    for (std::ptrdiff_t p = 0; p < n; ++p) reflected_paths += one_path(static_cast<std::size_t>(p)) ? 1 : 0;
  } else {
    for (std::ptrdiff_t p = 0; p < n; ++p) reflected_paths += one_path(static_cast<std::size_t>(p)) ? 1 : 0;
  }
  run.reflected_paths = reflected_paths;
  return run;
}
}  // namespace

ZRun simulate_Z_times(double kappa, std::array<double, 2> z0, std::span<const double> times, std::size_t n_paths,
                      ZLaw law, Seed seed, const ZOptions& opt) {
  return simulate_impl<true>(kappa, z0, times, n_paths, law, seed, opt);
}

ZRun simulate_Z_times_serial(double kappa, std::array<double, 2> z0, std::span<const double> times,
                             std::size_t n_paths, ZLaw law, Seed seed, const ZOptions& opt) {
  return simulate_impl<false>(kappa, z0, times, n_paths, law, seed, opt);
}

std::vector<ZSample> simulate_Z(double kappa, std::array<double, 2> z0, double t_end, double dt, std::size_t n_paths,
                                ZLaw law, Seed seed) {
  const double t[] = {t_end};
  ZOptions opt;
  opt.dt = dt;
  return std::move(simulate_Z_times(kappa, z0, t, n_paths, law, seed, opt).samples[0]);
}

// ---------------------------------------------------------------- martingale sweep

namespace {
std::size_t crosscut_index(const std::vector<double>& w, double h, const SweepOptions& opt) {
  loewner::RadialZipper zip;
  const std::complex<double> start = std::polar(1.0, w[0]);
  const std::size_t stride = static_cast<std::size_t>(std::max(opt.crosscut_every, 1));
  for (std::size_t k = stride; k < w.size(); k += stride) {
    zip.push(w[k], static_cast<double>(stride) * h);
    if (std::abs(zip.tip() - start) >= opt.crosscut_radius) return k;
  }
  return w.size() - 1;
}

TipEnd tip1_of(const EnsembleState& s) { return {s.W1, s.W11, s.W1S}; }
TipEnd tip2_of(const EnsembleState& s) { return {s.W2, s.W21, s.W2S}; }
TipEnd extrapolate(const TipEnd& a, const TipEnd& b, const TipEnd& c) {  // a + b - c
  return {a.W + b.W - c.W, a.W1 + b.W1 - c.W1, a.WS + b.WS - c.WS};
}
}  // namespace

SweepSample sweep_martingales(double kappa, const EnsembleState& init, std::span<const double> times, const CounterRng& rng,
                              std::uint64_t path, const SweepOptions& opt) {
  if (times.empty()) throw std::invalid_argument("need at least one time");
  if (!(opt.h > 0)) throw std::invalid_argument("grid step must be positive");
  std::vector<std::size_t> idx;
  for (double t : times) {
    if (!(t >= 0)) throw std::invalid_argument("times must be >= 0");
    idx.push_back(static_cast<std::size_t>(std::llround(t / opt.h)));
  }
  const std::size_t NT = *std::max_element(idx.begin(), idx.end());
  std::vector<double> w1(NT + 1), w2(NT + 1);
  w1[0] = init.W1, w2[0] = init.W2;
  const double sd = std::sqrt(kappa * opt.h);
  for (std::size_t k = 1; k <= NT; ++k) {
    const auto n = rng.normal_pair(path, static_cast<std::uint32_t>(k), 0);
    w1[k] = w1[k - 1] + sd * n[0];
    w2[k] = w2[k - 1] + sd * n[1];
  }
  SweepSample out;
  const std::size_t tau1 = crosscut_index(w1, opt.h, opt), tau2 = crosscut_index(w2, opt.h, opt);
  out.tau1 = static_cast<double>(tau1) * opt.h;
  out.tau2 = static_cast<double>(tau2) * opt.h;
  const std::size_t A = std::min(NT, tau1), B = std::min(NT, tau2);

  // cells wanted on each row
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> want(B + 1);  // row b -> (a, slot)
  for (std::size_t i = 0; i < idx.size(); ++i) want[std::min(idx[i], tau2)].push_back({std::min(idx[i], tau1), i});
  out.mstar.assign(idx.size(), std::nan(""));
  out.mc.assign(idx.size(), std::nan(""));
  out.rn.assign(idx.size(), std::nan(""));

  std::vector<EnsembleState> prev(A + 1), cur(A + 1);
  const double h = opt.h;
  for (std::size_t b = 0; b <= B; ++b) {
    for (std::size_t a = 0; a <= A; ++a) {
      EnsembleState& c = cur[a];
      if (a == 0 && b == 0) {
        c = init;
      } else if (b == 0) {
        c = step_impl(cur[a - 1], 1, h, {w1[a], 1.0, 0.0}, Scheme::Heun);
      } else if (a == 0) {
        c = step_impl(prev[0], 2, h, {w2[b], 1.0, 0.0}, Scheme::Heun);
      } else {
        const EnsembleState& left = cur[a - 1];  // (a-1, b)
        const EnsembleState& down = prev[a];     // (a, b-1)
        const EnsembleState& diag = prev[a - 1];
        if (!left.inD || !down.inD) {
          c = left.inD ? down : left;
          c.inD = false;
          continue;
        }
        TipEnd g1 = extrapolate(tip1_of(left), tip1_of(down), tip1_of(diag));
        TipEnd g2 = extrapolate(tip2_of(down), tip2_of(left), tip2_of(diag));
        EnsembleState r1, r2;
        for (int it = 0; it <= opt.corrector_iters; ++it) {
          r1 = step_impl(left, 1, h, g1, Scheme::Heun);
          r2 = step_impl(down, 2, h, g2, Scheme::Heun);
          g1 = tip1_of(r2);
          g2 = tip2_of(r1);
        }
        c = r1;
        c.W1 = r2.W1, c.W11 = r2.W11, c.W1S = r2.W1S;
        c.V1 = 0.5 * (r1.V1 + r2.V1), c.V2 = 0.5 * (r1.V2 + r2.V2);
        c.V11 = 0.5 * (r1.V11 + r2.V11), c.V21 = 0.5 * (r1.V21 + r2.V21);
        c.mA = 0.5 * (r1.mA + r2.mA), c.Iacc = 0.5 * (r1.Iacc + r2.Iacc);
        c.t1 = static_cast<double>(a) * h, c.t2 = static_cast<double>(b) * h;
        c.haA = c.mA - c.t1 - c.t2;
        c.inD = r1.inD && r2.inD && min_gap(c) >= kCollisionCutoff;
      }
    }
    for (const auto& [a, slot] : want[b]) {
      const EnsembleState& c = cur[a];
      if (!c.inD) {
        out.left_domain = true;
        continue;
      }
      out.mstar[slot] = mart_Mstar(c, kappa);
      out.mc[slot] = mart_Mc(c, kappa);
      out.rn[slot] = rn_deriv(c, kappa);
      out.max_identity_error =
          std::max(out.max_identity_error, std::abs(out.rn[slot] - out.mc[slot] / out.mstar[slot]) / out.rn[slot]);
    }
    std::swap(prev, cur);
  }
  return out;
}

// ---------------------------------------------------------------- CSV

void write_path_csv(const std::filesystem::path& file, std::span<const PathRow> rows, double kappa) {
  csv::Writer w(file, {"t", "W1", "W2", "V1", "V2", "W11", "W21", "mA", "Mstar", "Mc"});
  for (const auto& r : rows) {
    const auto& s = r.state;
    const double ms = s.inD ? mart_Mstar(s, kappa) : std::nan("");
    const double mc = s.inD ? mart_Mc(s, kappa) : std::nan("");
    w.row(std::vector<double>{r.t, s.W1, s.W2, s.V1, s.V2, s.W11, s.W21, s.mA, ms, mc});
  }
}

void write_z_samples_csv(const std::filesystem::path& file, std::span<const ZSample> samples) {
  csv::Writer w(file, {"path", "z1", "z2", "weight"});
  for (std::size_t p = 0; p < samples.size(); ++p)
    w.row({std::to_string(p), csv::fmt(samples[p].state.z1), csv::fmt(samples[p].state.z2), csv::fmt(samples[p].weight)});
}

}  // namespace slecut::ensemble
