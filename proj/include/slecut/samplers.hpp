#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slecut/loewner.hpp"
#include "slecut/rng.hpp"

namespace slecut::samplers {

struct SleConfig {
  double kappa = 6.0;
  Seed seed{};
  double dt = 1e-4;
  double horizon = 1.0;
  void validate() const;  // kappa in [0,8] (0 only for testing), dt > 0, horizon >= 0
};

struct ForcePoint {
  double v = 0.0;
  double rho = 0.0;
  bool stops = true;  // blow-up of this point terminates the run
};

struct RadialRhoConfig {
  SleConfig base;
  double w0 = 0.0;
  std::vector<ForcePoint> forces;
  void validate() const;
};

enum class Termination { Horizon, ForceBlowUp, SubstepExhausted, Reached };
std::string to_string(Termination t);

struct RadialRhoSample {
  loewner::DrivingFunction driver;
  loewner::CoveringState forces;  // lifted force-point images, in covering coordinates
  Termination reason = Termination::Horizon;
  std::optional<std::size_t> blown_index;  // which stopping force point blew up
};

// Lift v into (w0 - 2pi, w0).
double lift_below(double v, double w0);

loewner::DrivingFunction sample_chordal_driver(const SleConfig& cfg, std::uint64_t path = 0, bool mirror = false);

RadialRhoSample sample_radial_rho_driver(const RadialRhoConfig& cfg, std::uint64_t path = 0, bool mirror = false);

struct DiskChordOptions {
  std::optional<std::pair<double, double>> arc_endpoints;  // v1, v2 with weight 0
  bool arcs_stop = true;                                    // any blow-up stops the chord
  // Adaptive stepping: target spatial step = resolution * max(|tip - focus|, floor).
  // resolution <= 0 keeps the uniform grid cfg.dt.
  double resolution = 0.0;
  loewner::cplx focus{0.0, 0.0};
  double floor = 0.01;
  double dt_min = 1e-9;
  double max_step = 0.05;  // absolute cap on the spatial step
};

struct DiskChord {
  loewner::RadialTrace trace;
  Termination reason = Termination::Horizon;
  std::optional<std::size_t> blown_index;  // 0 = a2, 1/2 = arc endpoints
};

// Chordal SLE_kappa in the disk from e^{i a1} toward e^{i a2}, realised as radial
// SLE_kappa(kappa-6) aimed at 0 with force point a2.
DiskChord sample_disk_chord(double kappa, double a1, double a2, const SleConfig& cfg, std::uint64_t path = 0,
                            const DiskChordOptions& opt = {}, bool mirror = false);

struct CompleteChordOptions {
  // target spatial step = resolution * max(|tip - focus|, floor), capped by max_step
  double resolution = 0.05;
  loewner::cplx focus{0.0, 0.0};
  double floor = 0.005;
  double max_step = 0.05;
  double stop_distance = 1e-5;   // done once the tip is this close to e^{i a2}
  std::size_t max_steps = 60000; // past this the chord is reported truncated (Horizon)
};

// The whole chord from e^{i a1} to e^{i a2}: chordal SLE_kappa in the upper
// half-plane from 0 to infinity, carried to the disk by a Moebius map, with
// capacity steps chosen from the past so that consecutive disk points are
// about one target step apart. Ends with Reached or, past max_steps, Horizon.
DiskChord sample_complete_chord(double kappa, double a1, double a2, Seed seed, std::uint64_t path,
                                const CompleteChordOptions& opt = {});

}  // namespace slecut::samplers
