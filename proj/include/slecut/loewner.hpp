#pragma once
#include <complex>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

namespace slecut::loewner {

using cplx = std::complex<double>;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Capacity times: strictly increasing, starting at 0.
class TimeGrid {
 public:
  TimeGrid() : t_{0.0} {}
  explicit TimeGrid(std::vector<double> t);
  static TimeGrid uniform(double dt, double horizon);

  std::size_t size() const { return t_.size(); }
  double operator[](std::size_t i) const { return t_[i]; }
  double back() const { return t_.back(); }
  std::span<const double> times() const { return t_; }

 private:
  std::vector<double> t_;
};

struct DrivingFunction {
  TimeGrid grid;
  std::vector<double> values;

  DrivingFunction() : values{0.0} {}
  DrivingFunction(TimeGrid g, std::vector<double> v);
  std::size_t size() const { return values.size(); }
  // piecewise-linear interpolation; clamps outside the grid
  double at(double t) const;
};

DrivingFunction constant_driver(const TimeGrid& grid, double c);

// Swallowing threshold for a step of length dt.
inline double blowup_cutoff(double dt) { return 4.0 * std::sqrt(dt); }

struct Flow {
  std::vector<std::vector<cplx>> values;  // values[p][i], i = 0..last[p]
  std::vector<std::vector<cplx>> derivs;  // radial only: g_t'(z)
  std::vector<double> tau;                // blow-up time, +inf if none
  std::vector<std::size_t> last;          // last valid grid index
  bool blown(std::size_t p) const { return tau[p] < kInf; }
};

Flow chordal_evolve(const DrivingFunction& driver, std::span<const cplx> z0);
Flow radial_evolve(const DrivingFunction& driver, std::span<const cplx> z0);

struct ChordalTrace {
  std::vector<cplx> points;
  DrivingFunction driver;
};

struct RadialTrace {
  std::vector<cplx> points;
  DrivingFunction driver;
};

ChordalTrace chordal_trace(const DrivingFunction& driver);
RadialTrace radial_trace(const DrivingFunction& driver);

struct CoveringState {
  std::vector<double> points;  // g~_t(v) at the last time each point was alive
  std::vector<bool> blown_up;
  std::vector<double> blowup_time;  // +inf if alive at the end
  std::vector<std::vector<double>> history;
};

CoveringState covering_evolve(const DrivingFunction& driver, std::span<const double> v0);

// One RK4 step of dg = cot((g - w)/2) dt with w linear from w0 to w1.
double covering_step(double g, double w0, double w1, double dt);
// Distance of g to w modulo 2*pi.
double angular_gap(double g, double w);

struct Capacity {
  double value = 0.0;
  double error_bound = 0.0;
  bool flagged = false;
};

// Re-extract capacity by zipping the trace with vertical (or radial) slits.
Capacity hull_capacity(const ChordalTrace& trace, double tol = 1e-2);
Capacity hull_capacity(const RadialTrace& trace, double tol = 1e-2);
double chordal_zipper_capacity(std::span<const cplx> points);
double radial_zipper_capacity(std::span<const cplx> points);

// Elementary slit maps. Chordal: vertical slit of hcap_2 = dt at c.
// Radial: radial slit of dcap = dt ending at e^{ic}.
cplx chordal_slit_forward(cplx z, double c, double dt);
cplx chordal_slit_inverse(cplx z, double c, double dt);
cplx radial_slit_forward(cplx z, double c, double dt);
cplx radial_slit_inverse(cplx z, double c, double dt);

// Stack of radial slit maps; tip() composes all inverses (O(n)).
class RadialZipper {
 public:
  void push(double c, double dt);
  std::size_t size() const { return slits_.size(); }
  cplx tip() const;
  cplx pull_back(cplx z) const;                          // g^{-1}(z)
  cplx push_forward(cplx z, std::size_t upto) const;     // h_upto o ... o h_1 (z)

 private:
  struct Slit {
    cplx rot;         // e^{ic}
    double shrink;    // e^{-dt}
    double dt;
  };
  std::vector<Slit> slits_;
};

class ChordalZipper {
 public:
  void push(double c, double dt);
  void pop() { slits_.pop_back(); }
  std::size_t size() const { return slits_.size(); }
  cplx tip() const;
  cplx pull_back(cplx z) const;
  cplx push_forward(cplx z, std::size_t upto) const;

 private:
  struct Slit {
    double c;
    double dt;
  };
  std::vector<Slit> slits_;
};

void write_trace_csv(const std::filesystem::path& file, const TimeGrid& grid, std::span<const cplx> points);
void write_driver_csv(const std::filesystem::path& file, const DrivingFunction& driver);
DrivingFunction read_driver_csv(const std::filesystem::path& file);

}  // namespace slecut::loewner
