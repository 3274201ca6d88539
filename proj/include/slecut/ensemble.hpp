#pragma once
#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "slecut/rng.hpp"

namespace slecut::ensemble {

// Two radial Loewner chains grown in the same disk, in covering coordinates.
// W1S, W2S are the Schwarzian-type accumulators whose direction-j derivative
// is d_j log I; they make I a running sum instead of a double integral.
struct EnsembleState {
  double t1 = 0, t2 = 0;
  double W1 = 0, W2 = 0, V1 = 0, V2 = 0;
  double W11 = 1, W21 = 1, V11 = 1, V21 = 1;
  double W1S = 0, W2S = 0;
  double mA = 0, haA = 0, Iacc = 0;
  bool inD = true;
  std::string reason;  // why inD was cleared
};

inline constexpr double kCollisionCutoff = 1e-3;

EnsembleState init_ensemble(double w1, double v1, double w2, double v2);

// Smallest of the four cyclic gaps W1-V1, V1-W2, W2-V2, V2-(W1-2pi).
double min_gap(const EnsembleState& s);

// End-of-step values of the moving tip j.
struct TipEnd {
  double W = 0, W1 = 1, WS = 0;
};

// Advance every coordinate except the moving tip along direction j by dt
// (RK4, tip interpolated linearly from its current to its end values).
EnsembleState step_direction(const EnsembleState& s, int j, double dt, const TipEnd& end);
// Moving tip shifted by dW; its derivative and Schwarzian accumulator held
// fixed, which is exact while the other curve has not grown.
EnsembleState step_direction(const EnsembleState& s, int j, double dt, double dW);

// b = (6-kappa)/(2kappa), c = (3kappa-8)(6-kappa)/(2kappa)
double boundary_exponent(double kappa);
double central_charge(double kappa);

// Martingale observables with two marked points, rho1 = rho2 = kappa - 4.
double mart_Mstar(const EnsembleState& s, double kappa);
double mart_Mc(const EnsembleState& s, double kappa);
double rn_deriv(const EnsembleState& s, double kappa);  // e^{-alpha0 mA} / G~(W1,V1,W2,V2)

// ---- time curve keeping mA = t and V1 - V2 = pi

struct ZState {
  double z1 = 0, z2 = 0, t = 0;
  bool alive = true;
};

ZState z_of(const EnsembleState& s, double t = 0);
// W_{j,1}^2 u_j' for j = 1, 2; they sum to one.
std::array<double, 2> u_speeds(const EnsembleState& s);
// Drift and diffusion coefficient of Z_j along the time curve.
std::array<double, 2> z_drift(double kappa, double z1, double z2);
std::array<double, 2> z_diffusion(double kappa, double z1, double z2);

// One Euler-Maruyama step of length dt with standard normals `noise`.
// t1, t2, W11, W21, W1S, W2S and Iacc are not followed on this curve; the
// first derivatives of the moving tips need third-order data the state omits.
// projection, if given, receives the theta correction applied.
EnsembleState advance_u(const EnsembleState& s, double kappa, double dt, std::array<double, 2> noise,
                        double* projection = nullptr);

// ---- (Z1, Z2) diffusion

enum class ZLaw { Star, C };

struct ZSample {
  ZState state;
  double weight = 1;  // e^{-alpha0 t} G~u(z0)/G~u(Z_t) under law C, 1 under Star
};

struct ZRun {
  std::vector<double> times;
  std::vector<std::vector<ZSample>> samples;  // samples[time][path]
  std::size_t reflected_paths = 0;            // paths that needed a reflecting substep
  std::size_t n_paths = 0;
};

struct ZOptions {
  double dt = 1e-3;
  int max_refine = 1 << 26;  // near the boundary substeps shrink down to dt/max_refine
};

// Samples at each of the (sorted, nonnegative) times. Path p uses counter
// stream (p, step, substep) so results do not depend on thread count.
ZRun simulate_Z_times(double kappa, std::array<double, 2> z0, std::span<const double> times, std::size_t n_paths,
                      ZLaw law, Seed seed, const ZOptions& opt = {});
ZRun simulate_Z_times_serial(double kappa, std::array<double, 2> z0, std::span<const double> times,
                             std::size_t n_paths, ZLaw law, Seed seed, const ZOptions& opt = {});
std::vector<ZSample> simulate_Z(double kappa, std::array<double, 2> z0, double t_end, double dt, std::size_t n_paths,
                                ZLaw law, Seed seed);

// ---- martingale check under independent Brownian driving

struct SweepOptions {
  double h = 2e-3;                 // grid step in each time direction
  int corrector_iters = 2;
  double crosscut_radius = 0.8;    // tip j stops once its curve leaves B(e^{iw_j}, radius)
  int crosscut_every = 1;          // coarse zipper stride for the stopping rule
};

struct SweepSample {
  std::vector<double> mstar, mc, rn;  // at (t ^ tau1, t ^ tau2) for each requested t
  double max_identity_error = 0;      // max |rn - Mc/Mstar| / rn over the recorded cells
  bool left_domain = false;           // some recorded cell fell outside D
  double tau1 = 0, tau2 = 0;
};

// One path: drivers w_j + sqrt(kappa) B_j on a grid, the ensemble swept over
// the stopped rectangle, observables read on the diagonal.
SweepSample sweep_martingales(double kappa, const EnsembleState& init, std::span<const double> times, const CounterRng& rng,
                              std::uint64_t path, const SweepOptions& opt = {});

// ---- CSV

struct PathRow {
  double t;
  EnsembleState state;
};
void write_path_csv(const std::filesystem::path& file, std::span<const PathRow> rows, double kappa);
void write_z_samples_csv(const std::filesystem::path& file, std::span<const ZSample> samples);

}  // namespace slecut::ensemble
