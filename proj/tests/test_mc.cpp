#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "slecut/green.hpp"
#include "slecut/mc.hpp"

using namespace slecut;
using namespace slecut::mc;
using std::numbers::pi;

namespace {
McPlan small_plan(std::size_t n = 100) {
  McPlan p;
  p.kappa = 6;
  p.radii = {0.4, 0.3, 0.2};
  p.n_paths = n;
  p.seed = 2024;
  p.dt = 2e-3;
  return p;
}

McRunResult synthetic_run(const green::BoundaryConfig& cfg, double C0) {
  McRunResult r;
  r.plan.kappa = 6;
  r.plan.cfg = cfg;
  for (double rad : {0.2, 0.1, 0.05}) {
    RadiusEstimate e;
    e.r = rad;
    e.n = 100000;
    e.p = C0 * green::tilde_G(6, cfg) * std::pow(rad, 1.25);
    e.hits = static_cast<std::size_t>(e.p * e.n);
    r.per_radius.push_back(e);
  }
  return r;
}
}  // namespace

TEST_CASE("Wilson interval") {
  // closed form with z = 1.96: centre and half width written out independently
  auto ref = [](double k, double n) {
    const double z = 1.959963984540054, p = k / n;
    const double c = (k + z * z / 2) / (n + z * z);
    const double h = z * std::sqrt(n) / (n + z * z) * std::sqrt(p * (1 - p) + z * z / (4 * n));
    return std::pair{c - h, c + h};
  };
  for (auto [k, n] : {std::pair{5, 10}, std::pair{1, 50}, std::pair{37, 400}}) {
    const auto w = wilson(static_cast<std::size_t>(k), static_cast<std::size_t>(n));
    const auto [lo, hi] = ref(k, n);
    CHECK(w.lo == doctest::Approx(lo).epsilon(1e-12));
    CHECK(w.hi == doctest::Approx(hi).epsilon(1e-12));
    CHECK(w.lo <= static_cast<double>(k) / n);
    CHECK(w.hi >= static_cast<double>(k) / n);
  }
  CHECK(wilson(0, 10).lo == 0.0);
  CHECK(wilson(0, 10).hi == doctest::Approx(0.2775).epsilon(1e-3));
}

TEST_CASE("power-law fit") {
  const std::vector<double> r{0.1, 0.07, 0.05, 0.035};
  std::vector<double> p, w(4, 1.0);
  for (double x : r) p.push_back(2 * std::pow(x, 1.25));
  const auto f = fit_power_law(r, p, w);
  CHECK(f.slope == doctest::Approx(1.25).epsilon(1e-13));
  CHECK(f.intercept == doctest::Approx(std::log(2.0)).epsilon(1e-13));
  CHECK(f.stderr_slope < 1e-10);
  CHECK_THROWS(fit_power_law(std::vector<double>{0.1}, std::vector<double>{0.05}, std::vector<double>{1.0}));
  // a zero estimate is dropped with a warning
  std::vector<double> r5{0.2, 0.1, 0.07, 0.05, 0.035}, p5{2 * std::pow(0.2, 1.25), 2 * std::pow(0.1, 1.25), 2 * std::pow(0.07, 1.25), 2 * std::pow(0.05, 1.25), 0.0};
  const auto g = fit_power_law(r5, p5, std::vector<double>(5, 1.0));
  CHECK(g.warnings.size() == 1);
  CHECK(g.slope == doctest::Approx(1.25));
}

TEST_CASE("fit on binomial noise covers the true slope") {
  std::mt19937_64 gen(99);
  const std::vector<double> r{0.1, 0.07, 0.05, 0.035, 0.025};
  const std::size_t n = 200000;
  int covered = 0;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<RadiusEstimate> est;
    std::vector<double> p;
    for (double x : r) {
      std::binomial_distribution<std::size_t> B(n, 0.8 * std::pow(x, 1.25));
      RadiusEstimate e;
      e.r = x, e.n = n, e.hits = B(gen), e.p = static_cast<double>(e.hits) / n;
      est.push_back(e);
      p.push_back(e.p);
    }
    const auto f = fit_power_law(r, p, delta_method_weights(est));
    // residual-scaled stderr with 5 - 2 degrees of freedom: Student t quantile
    covered += std::abs(f.slope - 1.25) < 3.182 * f.stderr_slope;
  }
  CHECK(covered >= 88);
}

TEST_CASE("C0 from exactly proportional input") {
  const green::BoundaryConfig a{3 * pi / 2, pi, pi / 2, 0}, b{2.9, 1.7, 0.4, -1.1}, c{2.5, 0.5, -0.5, -2.0};
  const std::vector<McRunResult> runs{synthetic_run(a, 0.7), synthetic_run(b, 0.7), synthetic_run(c, 0.7)};
  const auto e = estimate_C0(runs);
  CHECK(e.C0 == doctest::Approx(0.7).epsilon(1e-3));
  CHECK(e.dispersion < 1e-3);
  const std::vector<McRunResult> rot{synthetic_run(a.rotated(1.3), 0.7), synthetic_run(b, 0.7), synthetic_run(c, 0.7)};
  CHECK(estimate_C0(rot).per_config[0] == doctest::Approx(e.per_config[0]).epsilon(1e-12));
  CHECK_THROWS(estimate_C0(std::vector<McRunResult>{runs[0], runs[1]}));
}

TEST_CASE("plan validation") {
  auto p = small_plan();
  CHECK_NOTHROW(p.validate());
  p.radii = {0.1, 0.2};
  CHECK_THROWS(p.validate());
  p = small_plan(50);
  CHECK_THROWS(p.validate());
  p = small_plan();
  p.z0 = {0.8, 0};
  CHECK_THROWS(p.validate());  // radius 0.4 exceeds the distance to the circle
  CHECK(small_plan().effective_horizon() == doctest::Approx(-std::log(0.2 / 4) + 2));
  CHECK(small_plan().effective_floor() == doctest::Approx(0.05));
}

TEST_CASE("estimate_P: determinism, nesting, single-radius consistency") {
  auto plan = small_plan();
  const auto a = estimate_P(plan);
  plan.workers = 4;
  const auto b = estimate_P(plan);
  const auto s = estimate_P_serial(plan);
  REQUIRE(a.paths.size() == 100);
  for (std::size_t i = 0; i < a.paths.size(); ++i) {
    CHECK(((a.paths[i].d_min == b.paths[i].d_min) || (std::isnan(a.paths[i].d_min) && std::isnan(b.paths[i].d_min))));
    CHECK(((a.paths[i].d_min == s.paths[i].d_min) || (std::isnan(a.paths[i].d_min) && std::isnan(s.paths[i].d_min))));
  }
  for (std::size_t k = 1; k < a.per_radius.size(); ++k) CHECK(a.per_radius[k].hits <= a.per_radius[k - 1].hits);
  for (const auto& e : a.per_radius) {
    CHECK(e.lo <= e.p);
    CHECK(e.p <= e.hi);
  }
  CHECK(a.excluded <= 1);
  CHECK(a.per_radius[0].hits > 0);

  auto one = small_plan();
  one.radii = {0.4};
  one.horizon = plan.effective_horizon();
  one.epsilon.floor = plan.effective_floor();
  const auto c = estimate_P(one);
  CHECK(c.per_radius[0].hits == a.per_radius[0].hits);
}

TEST_CASE("Wilson width shrinks like one over root n") {
  const auto w1 = wilson(300, 1000), w2 = wilson(600, 2000);
  CHECK((w2.hi - w2.lo) / (w1.hi - w1.lo) == doctest::Approx(1 / std::sqrt(2.0)).epsilon(0.2));
}

TEST_CASE("off-centre interior point") {
  auto plan = small_plan();
  plan.z0 = {0.3, -0.2};
  plan.radii = {0.3, 0.15};
  const auto r = estimate_P(plan);
  CHECK(r.excluded <= 1);
  CHECK(r.per_radius[1].hits <= r.per_radius[0].hits);
}

TEST_CASE("survival at t = 0 is one and decays") {
  const std::vector<double> t{0.0, 0.5, 1.0};
  const auto s = survival_experiment(6, {pi / 2, pi / 2}, t, 2000, Seed{3});
  CHECK(s.survival[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.survival[1] < 1.0);
  CHECK(s.survival[2] < s.survival[1]);
  CHECK(s.calZ > 0);
  CHECK_THROWS(survival_experiment(9, {pi / 2, pi / 2}, t, 100, Seed{3}));
}

TEST_CASE("paths CSV round trip") {
  auto plan = small_plan();
  const auto r = summarize(plan, {{0.05, false, false, true, 10}, {std::nan(""), true, false, false, 0},
                                  {std::numeric_limits<double>::infinity(), false, true, false, 3}});
  const auto f = std::filesystem::temp_directory_path() / "slecut_paths.csv";
  write_paths_csv(f, r);
  const auto back = read_paths_csv(f);
  REQUIRE(back.size() == 3);
  CHECK(back[0].d_min == 0.05);
  CHECK(back[1].excluded);
  CHECK(std::isinf(back[2].d_min));
  CHECK(back[2].disconnected);
  CHECK(r.excluded == 1);
  CHECK(r.per_radius[2].hits == 1);
  std::filesystem::remove(f);
}
