#include <omp.h>

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "slecut/loewner.hpp"
#include "slecut/samplers.hpp"

using namespace slecut;
using namespace slecut::samplers;
using std::numbers::pi;

namespace {
SleConfig cfg(double kappa, std::uint64_t seed, double dt, double horizon) {
  SleConfig c;
  c.kappa = kappa;
  c.seed = Seed{seed};
  c.dt = dt;
  c.horizon = horizon;
  return c;
}
}  // namespace

TEST_CASE("config validation") {
  CHECK_THROWS(cfg(9, 0, 1e-3, 1).validate());
  CHECK_THROWS(cfg(6, 0, 0, 1).validate());
  CHECK_THROWS(cfg(6, 0, 1e-3, -1).validate());
  RadialRhoConfig rc;
  rc.base = cfg(6, 0, 1e-3, 1);
  rc.forces.push_back({0.0, 1.0, true});
  CHECK_THROWS(rc.validate());
}

TEST_CASE("chordal driver: degenerate kappa, determinism, variance") {
  const auto z = sample_chordal_driver(cfg(0, 5, 1e-3, 1));
  for (double w : z.values) CHECK(w == 0.0);
  CHECK(sample_chordal_driver(cfg(6, 5, 1e-3, 1)).values == sample_chordal_driver(cfg(6, 5, 1e-3, 1)).values);
  CHECK(sample_chordal_driver(cfg(6, 5, 1e-3, 1)).values != sample_chordal_driver(cfg(6, 6, 1e-3, 1)).values);

  const int n = 100000;
  double s = 0, s2 = 0;
  for (int k = 0; k < n; ++k) {
    const double w = sample_chordal_driver(cfg(6, static_cast<std::uint64_t>(k), 0.05, 1)).values.back();
    s += w, s2 += w * w;
  }
  const double var = s2 / n - (s / n) * (s / n);
  CHECK(std::abs(var - 6.0) < 0.1);
}

TEST_CASE("radial driver without forces is the shifted chordal driver") {
  RadialRhoConfig rc;
  rc.base = cfg(6, 17, 1e-3, 0.5);
  rc.w0 = 1.3;
  const auto r = sample_radial_rho_driver(rc, 4);
  const auto c = sample_chordal_driver(rc.base, 4);
  REQUIRE(r.driver.size() == c.size());
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(r.driver.values[i] - (1.3 + c.values[i])) < 1e-12);
  CHECK(r.reason == Termination::Horizon);

  // zero weights: forces evolve passively, driver unchanged
  rc.forces = {{2.0, 0.0, false}, {-2.5, 0.0, false}};
  const auto p = sample_radial_rho_driver(rc, 4);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(p.driver.values[i] - (1.3 + c.values[i])) < 1e-12);
}

TEST_CASE("antipodal force exerts no initial drift") {
  RadialRhoConfig rc;
  rc.base = cfg(5, 8, 1e-3, 1e-3);
  rc.forces = {{pi, 1.0, true}};
  const auto r = sample_radial_rho_driver(rc, 0);
  const double z = CounterRng(Seed{8}).normal(0, 1, 0);
  CHECK(std::abs(r.driver.values[1] - std::sqrt(5e-3) * z) < 1e-15);
}

TEST_CASE("disk chord starts at e^{i a1} and mirrors under conjugation") {
  const auto t0 = sample_disk_chord(6, 0.4, 2.0, cfg(6, 1, 1e-3, 0));
  REQUIRE(t0.trace.points.size() == 1);
  CHECK(std::abs(t0.trace.points[0] - std::polar(1.0, 0.4)) < 1e-15);

  const auto a = sample_disk_chord(6, 0.0, pi, cfg(6, 2, 1e-3, 1.0), 3);
  const auto b = sample_disk_chord(6, 0.0, pi, cfg(6, 2, 1e-3, 1.0), 3, {}, true);
  REQUIRE(a.trace.points.size() == b.trace.points.size());
  for (std::size_t i = 0; i < a.trace.points.size(); ++i)
    CHECK(std::abs(b.trace.points[i] - std::conj(a.trace.points[i])) < 1e-9);
}

TEST_CASE("disk chord hit frequency is identical across worker counts") {
  const auto c = cfg(6, 77, 2e-3, 3.0);
  auto run = [&](int threads) {
    std::vector<int> hit(200, 0);
#pragma omp parallel for num_threads(threads) schedule(dynamic)
    for (int p = 0; p < 200; ++p) {
      const auto d = sample_disk_chord(6, pi / 2, 3 * pi / 2, c, static_cast<std::uint64_t>(p));
      for (auto z : d.trace.points)
        if (std::abs(z - loewner::cplx(0.3, 0)) < 0.1) {
          hit[p] = 1;
          break;
        }
    }
    return hit;
  };
  const auto one = run(1);
  CHECK(one == run(4));
  int total = 0;
  for (int h : one) total += h;
  CHECK(total > 0);
}

TEST_CASE("repelling force points keep the curve off the arc between them") {
  const double kappa = 6;
  RadialRhoConfig rc;
  rc.base = cfg(kappa, 31, 2e-3, 3.0);
  rc.w0 = 0;
  rc.forces = {{2 * pi / 3, kappa - 4, true}, {-2 * pi / 3, kappa - 4, true}};
  int blown = 0;
  for (std::uint64_t p = 0; p < 1000; ++p) blown += sample_radial_rho_driver(rc, p).reason == Termination::ForceBlowUp;
  CHECK(blown == 0);
}

TEST_CASE("halving dt moves a smooth functional by less than 3 standard errors") {
  auto mean_cos = [](double dt, std::uint64_t seed) {
    RadialRhoConfig rc;
    rc.base = cfg(5, seed, dt, 0.5);
    rc.forces = {{2.0, 1.0, false}, {-2.0, 1.0, false}};
    const int n = 4000;
    double s = 0, s2 = 0;
    for (int p = 0; p < n; ++p) {
      const double v = std::cos(sample_radial_rho_driver(rc, static_cast<std::uint64_t>(p)).driver.values.back());
      s += v, s2 += v * v;
    }
    const double m = s / n;
    return std::pair{m, (s2 / n - m * m) / n};
  };
  const auto [m1, v1] = mean_cos(0.01, 100);
  const auto [m2, v2] = mean_cos(0.005, 200);
  CHECK(std::abs(m1 - m2) < 3 * std::sqrt(v1 + v2));
}
