#include "slecut/green.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace slecut::green {

namespace {
constexpr double kPi = std::numbers::pi;
}

void BoundaryConfig::validate() const {
  if (!(std::isfinite(w1) && std::isfinite(v1) && std::isfinite(w2) && std::isfinite(v2)))
    throw std::invalid_argument("boundary config must be finite");
  if (!(w1 > v1 && v1 > w2 && w2 > v2 && v2 > w1 - 2.0 * kPi))
    throw std::invalid_argument("boundary config must satisfy w1 > v1 > w2 > v2 > w1 - 2pi");
}

BoundaryConfig symmetric_config() { return {1.5 * kPi, kPi, 0.5 * kPi, 0.0}; }

double alpha0(double kappa) { return 3.0 * kappa / 8.0 - 1.0; }
double beta0(double kappa) { return 1.0 - 8.0 / (5.0 * kappa); }

double sin2(double x) { return std::sin(0.5 * x); }
double cos2(double x) { return std::cos(0.5 * x); }
double cot2(double x) { return 1.0 / std::tan(0.5 * x); }

double tilde_G(double kappa, const BoundaryConfig& c) {
  c.validate();
  const double a = 8.0 / kappa - 1.0;
  const double b = (kappa - 4.0) * (kappa - 4.0) / (2.0 * kappa);
  const double m = 1.0 - 4.0 / kappa;
  const double mixed = std::abs(sin2(c.w1 - c.v1) * sin2(c.w1 - c.v2) * sin2(c.w2 - c.v1) * sin2(c.w2 - c.v2));
  return std::pow(std::abs(sin2(c.w1 - c.w2)), a) * std::pow(std::abs(sin2(c.v1 - c.v2)), b) * std::pow(mixed, m);
}

double tilde_G_u(double kappa, double z1, double z2) { return tilde_G(kappa, {kPi + z1, kPi, z2, 0.0}); }

BoundaryConfig recentred(const BoundaryConfig& cfg, std::complex<double> z0) {
  cfg.validate();
  if (!(std::abs(z0) < 1.0)) throw std::invalid_argument("z0 must be inside the unit disk");
  auto image = [&](double a) {
    const std::complex<double> e = std::polar(1.0, a);
    return std::arg((e - z0) / (1.0 - std::conj(z0) * e));
  };
  // automorphisms preserve cyclic order; re-lift below the previous angle
  auto below = [](double x, double ref) {
    double d = std::fmod(ref - x, 2.0 * kPi);
    if (d <= 0) d += 2.0 * kPi;
    return ref - d;
  };
  BoundaryConfig out;
  out.w1 = image(cfg.w1);
  out.v1 = below(image(cfg.v1), out.w1);
  out.w2 = below(image(cfg.w2), out.v1);
  out.v2 = below(image(cfg.v2), out.w2);
  return out;
}

double green_disk(double kappa, const BoundaryConfig& cfg, std::complex<double> z0) {
  const BoundaryConfig img = recentred(cfg, z0);
  const double fprime = 1.0 / (1.0 - std::norm(z0));
  if (z0 == std::complex<double>(0.0, 0.0)) return tilde_G(kappa, cfg);
  return std::pow(fprime, alpha0(kappa)) * tilde_G(kappa, img);
}

Prediction predicted_prob(double kappa, const BoundaryConfig& cfg, std::complex<double> z0, double r, double C0) {
  const double R = 1.0 - std::abs(z0);
  if (!(r > 0 && r < R)) throw std::invalid_argument("radius must satisfy 0 < r < dist(z0, boundary)");
  if (!(C0 > 0) || !std::isfinite(C0)) throw std::invalid_argument("C0 must be a positive estimate");
  return {C0 * green_disk(kappa, cfg, z0) * std::pow(r, alpha0(kappa)), std::pow(r / R, beta0(kappa)), R};
}

}  // namespace slecut::green
