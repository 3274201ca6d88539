#include "slecut/loewner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "slecut/csv.hpp"

namespace slecut::loewner {

namespace {
constexpr double kPi = std::numbers::pi;

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

// sqrt with Im >= 0; on the real axis keep the side of `ref`
cplx upper_sqrt(cplx w, double ref) {
  // principal root by hand (the library routine dominates zipper time)
  const double m = std::sqrt(w.real() * w.real() + w.imag() * w.imag());
  double re = std::sqrt(0.5 * std::max(m + w.real(), 0.0));
  double im = std::sqrt(0.5 * std::max(m - w.real(), 0.0));
  if (w.imag() < 0) re = -re;  // (re, |im|) with sign carried by the real part keeps Im >= 0
  if (im == 0 && re * ref < 0) re = -re;
  return {re, im};
}

double cot2(double x) { return 1.0 / std::tan(0.5 * x); }
}  // namespace

TimeGrid::TimeGrid(std::vector<double> t) : t_(std::move(t)) {
  if (t_.empty()) throw std::invalid_argument("time grid is empty");
  if (t_[0] != 0.0) throw std::invalid_argument("time grid must start at 0");
  for (std::size_t i = 0; i < t_.size(); ++i) {
    if (!std::isfinite(t_[i])) throw std::invalid_argument("time grid has a non-finite entry");
    if (i > 0 && !(t_[i] > t_[i - 1])) throw std::invalid_argument("time grid is not strictly increasing");
  }
}

TimeGrid TimeGrid::uniform(double dt, double horizon) {
  if (!(dt > 0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
  if (!(horizon >= 0) || !std::isfinite(horizon)) throw std::invalid_argument("horizon must be non-negative");
  const auto n = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  std::vector<double> t(n + 1);
  for (std::size_t i = 0; i <= n; ++i) t[i] = std::min(static_cast<double>(i) * dt, horizon);
  if (n > 0) t[n] = horizon;
  return TimeGrid(std::move(t));
}

DrivingFunction::DrivingFunction(TimeGrid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
  if (values.size() != grid.size()) throw std::invalid_argument("driver length does not match its grid");
  for (double x : values)
    if (!std::isfinite(x)) throw std::invalid_argument("driver has a non-finite value");
}

double DrivingFunction::at(double t) const {
  const auto ts = grid.times();
  if (t <= ts.front()) return values.front();
  if (t >= ts.back()) return values.back();
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - ts.begin()) - 1;
  const double a = (t - ts[i]) / (ts[i + 1] - ts[i]);
  return values[i] + a * (values[i + 1] - values[i]);
}

DrivingFunction constant_driver(const TimeGrid& grid, double c) {
  return DrivingFunction(grid, std::vector<double>(grid.size(), c));
}

// ---------------------------------------------------------------- evolution

Flow chordal_evolve(const DrivingFunction& driver, std::span<const cplx> z0) {
  const auto& ts = driver.grid;
  const auto& w = driver.values;
  Flow f;
  f.values.resize(z0.size());
  f.tau.assign(z0.size(), kInf);
  f.last.assign(z0.size(), 0);
  for (std::size_t p = 0; p < z0.size(); ++p) {
    cplx g = z0[p];
    if (!finite(g) || g.imag() < 0) throw std::invalid_argument("chordal_evolve: start point must lie in the closed upper half-plane");
    if (g.imag() == 0 && g.real() == w[0]) throw std::invalid_argument("chordal_evolve: start point equals the driver");
    auto& hist = f.values[p];
    hist.reserve(ts.size());
    hist.push_back(g);
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
      const double h = ts[i + 1] - ts[i];
      const double w0 = w[i], w1 = w[i + 1];
      const double cut = blowup_cutoff(h);
      auto rhs = [&](double s, cplx x) { return 2.0 / (x - (w0 + s * (w1 - w0))); };
      bool ok = std::abs(g - w0) >= cut;
      cplx next = g;
      if (ok) {
        const cplx k1 = rhs(0.0, g);
        const cplx k2 = rhs(0.5, g + 0.5 * h * k1);
        const cplx k3 = rhs(0.5, g + 0.5 * h * k2);
        const cplx k4 = rhs(1.0, g + h * k3);
        next = g + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        ok = finite(next) && std::abs(next - w1) >= cut;
      }
      if (!ok) {
        f.tau[p] = ts[i + 1];
        break;
      }
      g = next;
      hist.push_back(g);
      f.last[p] = i + 1;
    }
  }
  return f;
}

Flow radial_evolve(const DrivingFunction& driver, std::span<const cplx> z0) {
  const auto& ts = driver.grid;
  const auto& w = driver.values;
  Flow f;
  f.values.resize(z0.size());
  f.derivs.resize(z0.size());
  f.tau.assign(z0.size(), kInf);
  f.last.assign(z0.size(), 0);
  for (std::size_t p = 0; p < z0.size(); ++p) {
    cplx g = z0[p];
    cplx d = 1.0;
    if (!finite(g) || std::abs(g) > 1.0 + 1e-12) throw std::invalid_argument("radial_evolve: start point must lie in the closed unit disk");
    if (std::abs(g - std::polar(1.0, w[0])) == 0.0) throw std::invalid_argument("radial_evolve: start point equals the driver");
    f.values[p].push_back(g);
    f.derivs[p].push_back(d);
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
      const double h = ts[i + 1] - ts[i];
      const double w0 = w[i], w1 = w[i + 1];
      const double cut = blowup_cutoff(h);
      // state (g, log-free derivative d); F(g) = g(e+g)/(e-g)
      auto rhs = [&](double s, cplx x, cplx dx, cplx& dg, cplx& dd) {
        const cplx e = std::polar(1.0, w0 + s * (w1 - w0));
        const cplx den = e - x;
        dg = x * (e + x) / den;
        dd = dx * (e * e + 2.0 * e * x - x * x) / (den * den);
      };
      bool ok = std::abs(g - std::polar(1.0, w0)) >= cut;
      cplx ng = g, nd = d;
      if (ok) {
        cplx a1, b1, a2, b2, a3, b3, a4, b4;
        rhs(0.0, g, d, a1, b1);
        rhs(0.5, g + 0.5 * h * a1, d + 0.5 * h * b1, a2, b2);
        rhs(0.5, g + 0.5 * h * a2, d + 0.5 * h * b2, a3, b3);
        rhs(1.0, g + h * a3, d + h * b3, a4, b4);
        ng = g + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        nd = d + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        ok = finite(ng) && finite(nd) && std::abs(ng - std::polar(1.0, w1)) >= cut;
      }
      if (!ok) {
        f.tau[p] = ts[i + 1];
        break;
      }
      g = ng;
      d = nd;
      f.values[p].push_back(g);
      f.derivs[p].push_back(d);
      f.last[p] = i + 1;
    }
  }
  return f;
}

double angular_gap(double g, double w) {
  double d = std::fmod(g - w, 2.0 * kPi);
  if (d < 0) d += 2.0 * kPi;
  return std::min(d, 2.0 * kPi - d);
}

double covering_step(double g, double w0, double w1, double dt) {
  auto rhs = [&](double s, double x) { return cot2(x - (w0 + s * (w1 - w0))); };
  const double k1 = rhs(0.0, g);
  const double k2 = rhs(0.5, g + 0.5 * dt * k1);
  const double k3 = rhs(0.5, g + 0.5 * dt * k2);
  const double k4 = rhs(1.0, g + dt * k3);
  return g + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

CoveringState covering_evolve(const DrivingFunction& driver, std::span<const double> v0) {
  const auto& ts = driver.grid;
  const auto& w = driver.values;
  CoveringState cs;
  cs.points.assign(v0.begin(), v0.end());
  cs.blown_up.assign(v0.size(), false);
  cs.blowup_time.assign(v0.size(), kInf);
  cs.history.resize(v0.size());
  for (std::size_t p = 0; p < v0.size(); ++p) {
    if (!std::isfinite(v0[p])) throw std::invalid_argument("covering_evolve: non-finite start");
    if (angular_gap(v0[p], w[0]) == 0.0) throw std::invalid_argument("covering_evolve: start coincides with the driver mod 2pi");
    double g = v0[p];
    cs.history[p].push_back(g);
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
      const double h = ts[i + 1] - ts[i];
      const double cut = blowup_cutoff(h);
      bool ok = angular_gap(g, w[i]) >= cut;
      double next = g;
      if (ok) {
        next = covering_step(g, w[i], w[i + 1], h);
        ok = std::isfinite(next) && angular_gap(next, w[i + 1]) >= cut;
      }
      if (!ok) {
        cs.blown_up[p] = true;
        cs.blowup_time[p] = ts[i + 1];
        break;
      }
      g = next;
      cs.history[p].push_back(g);
    }
    cs.points[p] = g;
  }
  return cs;
}

// ---------------------------------------------------------------- slit maps

cplx chordal_slit_forward(cplx z, double c, double dt) {
  const cplx x = z - c;
  return c + upper_sqrt(x * x + 4.0 * dt, x.real());
}

cplx chordal_slit_inverse(cplx z, double c, double dt) {
  const cplx x = z - c;
  return c + upper_sqrt(x * x - 4.0 * dt, x.real());
}

namespace {
// Cayley coordinate u = (1 - zeta)/(1 + zeta), zeta = e^{-ic} z: the slit ending at
// e^{ic} becomes [0, u_tip] on the positive axis and the map is u^2 -> a u^2 + b.
// Hot loop of every zipper: plain real arithmetic, no library complex division.
cplx radial_slit_apply(cplx z, cplx rot, double a, double b) {
  const double zr = z.real() * rot.real() + z.imag() * rot.imag();
  const double zi = z.imag() * rot.real() - z.real() * rot.imag();
  const double dr = 1.0 + zr, n = dr * dr + zi * zi;
  if (n == 0.0) return z;
  // u = (1 - zeta) / (1 + zeta)
  const double ur = ((1.0 - zr) * dr - zi * zi) / n;
  const double ui = (-zi * dr - (1.0 - zr) * zi) / n;
  const double wr = a * (ur * ur - ui * ui) + b, wi = 2.0 * a * ur * ui;
  double sr, si;
  if (wr < 0 && std::abs(wi) <= 1e-15 * -wr) {
    sr = 0.0;
    si = ui < 0 ? -std::sqrt(-wr) : std::sqrt(-wr);
  } else {
    const double m = std::sqrt(wr * wr + wi * wi);
    sr = std::sqrt(0.5 * (m + wr));
    si = sr > 0 ? 0.5 * wi / sr : std::copysign(std::sqrt(0.5 * (m - wr)), wi);
  }
  // rot * (1 - s) / (1 + s)
  const double er = 1.0 + sr, en = er * er + si * si;
  const double qr = ((1.0 - sr) * er - si * si) / en;
  const double qi = (-si * er - (1.0 - sr) * si) / en;
  return {rot.real() * qr - rot.imag() * qi, rot.real() * qi + rot.imag() * qr};
}
}  // namespace

cplx radial_slit_forward(cplx z, double c, double dt) {
  const double e = std::exp(dt);
  return radial_slit_apply(z, std::polar(1.0, c), e, 1.0 - e);
}

cplx radial_slit_inverse(cplx z, double c, double dt) {
  const double e = std::exp(-dt);
  return radial_slit_apply(z, std::polar(1.0, c), e, 1.0 - e);
}

void RadialZipper::push(double c, double dt) {
  if (!(dt > 0)) throw std::invalid_argument("slit capacity must be positive");
  slits_.push_back({std::polar(1.0, c), std::exp(-dt), dt});
}

cplx RadialZipper::pull_back(cplx z) const {
  for (std::size_t k = slits_.size(); k-- > 0;) {
    const auto& s = slits_[k];
    z = radial_slit_apply(z, s.rot, s.shrink, 1.0 - s.shrink);
  }
  return z;
}

cplx RadialZipper::tip() const {
  if (slits_.empty()) return {1.0, 0.0};
  const auto& s = slits_.back();
  const double u = std::sqrt(1.0 - s.shrink);
  cplx z = s.rot * ((1.0 - u) / (1.0 + u));
  for (std::size_t k = slits_.size() - 1; k-- > 0;) {
    const auto& q = slits_[k];
    z = radial_slit_apply(z, q.rot, q.shrink, 1.0 - q.shrink);
  }
  return z;
}

cplx RadialZipper::push_forward(cplx z, std::size_t upto) const {
  for (std::size_t k = 0; k < std::min(upto, slits_.size()); ++k) {
    const auto& s = slits_[k];
    z = radial_slit_apply(z, s.rot, 1.0 / s.shrink, 1.0 - 1.0 / s.shrink);
  }
  return z;
}

void ChordalZipper::push(double c, double dt) {
  if (!(dt > 0)) throw std::invalid_argument("slit capacity must be positive");
  slits_.push_back({c, dt});
}

cplx ChordalZipper::pull_back(cplx z) const {
  for (std::size_t k = slits_.size(); k-- > 0;) z = chordal_slit_inverse(z, slits_[k].c, slits_[k].dt);
  return z;
}

cplx ChordalZipper::tip() const {
  if (slits_.empty()) return {0.0, 0.0};
  const auto& s = slits_.back();
  cplx z{s.c, 2.0 * std::sqrt(s.dt)};
  for (std::size_t k = slits_.size() - 1; k-- > 0;) z = chordal_slit_inverse(z, slits_[k].c, slits_[k].dt);
  return z;
}

cplx ChordalZipper::push_forward(cplx z, std::size_t upto) const {
  for (std::size_t k = 0; k < std::min(upto, slits_.size()); ++k) z = chordal_slit_forward(z, slits_[k].c, slits_[k].dt);
  return z;
}

// ---------------------------------------------------------------- traces

ChordalTrace chordal_trace(const DrivingFunction& driver) {
  ChordalTrace tr{{}, driver};
  const auto& ts = driver.grid;
  tr.points.reserve(ts.size());
  tr.points.emplace_back(driver.values[0], 0.0);
  ChordalZipper zip;
  for (std::size_t i = 1; i < ts.size(); ++i) {
    zip.push(driver.values[i], ts[i] - ts[i - 1]);
    tr.points.push_back(zip.tip());
  }
  return tr;
}

RadialTrace radial_trace(const DrivingFunction& driver) {
  RadialTrace tr{{}, driver};
  const auto& ts = driver.grid;
  tr.points.reserve(ts.size());
  tr.points.push_back(std::polar(1.0, driver.values[0]));
  RadialZipper zip;
  for (std::size_t i = 1; i < ts.size(); ++i) {
    zip.push(driver.values[i], ts[i] - ts[i - 1]);
    tr.points.push_back(zip.tip());
  }
  return tr;
}

// ---------------------------------------------------------------- capacity

double chordal_zipper_capacity(std::span<const cplx> pts) {
  ChordalZipper zip;
  double cap = 0.0;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    const cplx p = zip.push_forward(pts[k], zip.size());
    if (!(p.imag() > 0) || !finite(p)) continue;  // swallowed or on the axis
    const double dt = 0.25 * p.imag() * p.imag();
    zip.push(p.real(), dt);
    cap += dt;
  }
  return cap;
}

double radial_zipper_capacity(std::span<const cplx> pts) {
  RadialZipper zip;
  double cap = 0.0;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    const cplx p = zip.push_forward(pts[k], zip.size());
    const double r = std::abs(p);
    if (!(r < 1.0) || !finite(p)) continue;
    if (r == 0.0) break;
    const double dt = std::log((1.0 + r) * (1.0 + r) / (4.0 * r));
    if (!(dt > 0)) continue;
    zip.push(std::arg(p), dt);
    cap += dt;
  }
  return cap;
}

namespace {
template <class F>
Capacity capacity_with_bound(std::span<const cplx> pts, double tol, F&& zipper) {
  Capacity c;
  if (pts.size() < 2) return c;
  c.value = zipper(pts);
  std::vector<cplx> half;
  for (std::size_t k = 0; k < pts.size(); k += 2) half.push_back(pts[k]);
  if ((pts.size() - 1) % 2 != 0) half.push_back(pts.back());
  c.error_bound = std::abs(c.value - zipper(std::span<const cplx>(half)));
  c.flagged = c.error_bound > tol;
  return c;
}
}  // namespace

Capacity hull_capacity(const ChordalTrace& trace, double tol) {
  return capacity_with_bound(trace.points, tol, [](std::span<const cplx> p) { return chordal_zipper_capacity(p); });
}

Capacity hull_capacity(const RadialTrace& trace, double tol) {
  return capacity_with_bound(trace.points, tol, [](std::span<const cplx> p) { return radial_zipper_capacity(p); });
}

// ---------------------------------------------------------------- csv

void write_trace_csv(const std::filesystem::path& file, const TimeGrid& grid, std::span<const cplx> points) {
  csv::Writer w(file, {"t", "re", "im"});
  for (std::size_t i = 0; i < points.size(); ++i) w.row(std::vector<double>{grid[i], points[i].real(), points[i].imag()});
}

void write_driver_csv(const std::filesystem::path& file, const DrivingFunction& driver) {
  csv::Writer w(file, {"t", "w"});
  for (std::size_t i = 0; i < driver.size(); ++i) w.row(std::vector<double>{driver.grid[i], driver.values[i]});
}

DrivingFunction read_driver_csv(const std::filesystem::path& file) {
  const auto tab = csv::read(file);
  const auto ct = tab.column("t"), cw = tab.column("w");
  std::vector<double> t, v;
  for (const auto& r : tab.rows) {
    t.push_back(std::stod(r[ct]));
    v.push_back(std::stod(r[cw]));
  }
  return DrivingFunction(TimeGrid(std::move(t)), std::move(v));
}

}  // namespace slecut::loewner
