#pragma once
#include <complex>

namespace slecut::green {

// Arguments of a1, b1, a2, b2 on the unit circle, w1 > v1 > w2 > v2 > w1 - 2pi.
struct BoundaryConfig {
  double w1 = 0, v1 = 0, w2 = 0, v2 = 0;
  void validate() const;
  BoundaryConfig rotated(double c) const { return {w1 + c, v1 + c, w2 + c, v2 + c}; }
};

BoundaryConfig symmetric_config();  // (3pi/2, pi, pi/2, 0)

double alpha0(double kappa);  // 3 kappa/8 - 1
double beta0(double kappa);   // 1 - 8/(5 kappa)

double sin2(double x);  // sin(x/2)
double cos2(double x);
double cot2(double x);

double tilde_G(double kappa, const BoundaryConfig& cfg);
double tilde_G_u(double kappa, double z1, double z2);

// Image of cfg under the disk automorphism sending z0 to 0, ordering preserved.
BoundaryConfig recentred(const BoundaryConfig& cfg, std::complex<double> z0);
double green_disk(double kappa, const BoundaryConfig& cfg, std::complex<double> z0);

struct Prediction {
  double value = 0;      // C0 * G_D * r^alpha0
  double band = 0;       // (r/R)^beta0, the relative size of the correction term
  double R = 0;
};
Prediction predicted_prob(double kappa, const BoundaryConfig& cfg, std::complex<double> z0, double r, double C0);

}  // namespace slecut::green
