#pragma once
#include <array>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

namespace slecut::density {

// ---- orthogonal polynomials and quadrature

double jacobi(int j, double alpha, double beta, double x);
// P_0..P_jmax at x
void jacobi_all(int jmax, double alpha, double beta, double x, std::span<double> out);
double jacobi_norm_sq(int j, double alpha, double beta);  // closed form
double jacobi_sup_norm(int j, double alpha, double beta);

struct GaussRule {
  std::vector<double> x, w;
};
// Nodes/weights for weight (1-x)^alpha (1+x)^beta on [-1,1] (Golub-Welsch).
GaussRule gauss_jacobi(int n, double alpha, double beta);

// Tensor rule on the unit disk for integrals of f(x,y) (1-x^2-y^2)^alpha dx dy:
// Gauss-Jacobi in s = 2r^2 - 1 and the periodic trapezoid rule in angle.
struct DiskQuadrature {
  std::vector<double> x, y, w;
  std::size_t size() const { return w.size(); }
};
DiskQuadrature disk_quadrature(double alpha, int n_radial = 64, int n_angular = 128);

// ---- spectral data

double lambda_n(double kappa, double s);
double h_norm(double kappa, int n, int j);
double basis_sup_norm(double kappa, int n, int j);
double psi(double kappa, double x, double y);
double p_inf(double kappa, double x, double y);

// 4th-order finite-difference action of the generator on f at (x,y).
double apply_L_fd(double kappa, const std::function<double(double, double)>& f, double x, double y, double h = 1e-3);

struct BasisIndex {
  int n, j, i;  // i = 1 cosine type, 2 sine type
};

struct Point {
  double x = 0, y = 0;
};

struct DensityValue {
  double value = 0;       // clamped at 0
  double raw = 0;         // truncated series
  double tail_bound = 0;  // bound on the discarded terms
  bool clamped = false;
};

class DensityModel {
 public:
  DensityModel(double kappa, int N = 40);
  // Smallest N >= N0 whose tail bound at time t is below tol.
  static DensityModel for_tolerance(double kappa, double t, double tol, int N0 = 40);

  double kappa() const { return kappa_; }
  int N() const { return N_; }
  const std::vector<BasisIndex>& basis() const { return basis_; }
  double lambda(int n) const { return lambdas_[n]; }
  double h(int n, int j) const;

  double v(int n, int j, int i, double x, double y) const;
  // all basis values at (x,y), in basis() order
  void eval_all(double x, double y, std::span<double> out) const;

  // sum_k v_k(a) v_k(b) e^{lambda t}; p_t(a,b) = psi(b) * kernel
  double kernel(double t, Point a, Point b) const;
  double tail_bound(double t, Point b) const;
  // Error if the tail bound exceeds tol (caller must raise N).
  DensityValue p_t(double t, Point a, Point b, double tol = 1e300) const;
  double p_inf(Point b) const;

 private:
  double kappa_;
  int N_;
  std::vector<BasisIndex> basis_;
  std::vector<double> lambdas_;
  std::vector<std::vector<double>> h_;
  std::vector<double> tail_coef_;  // sum over degree n of squared sup norms, n > N
  double tail_sum(double t) const;
};

// ---- z-coordinates (0,pi)^2 <-> disk

using ZPoint = std::array<double, 2>;
Point to_disk(ZPoint z);
ZPoint from_disk(Point p);
double jacobian(ZPoint z);  // (sin z1 + sin z2)/4

double pZ_t(const DensityModel& m, double t, ZPoint z, ZPoint zs);
double pZ_inf(const DensityModel& m, ZPoint zs);
double tilde_pZ_t(const DensityModel& m, double t, ZPoint z, ZPoint zs);
double calZ(double kappa);  // adaptive quadrature of pZ_inf / G~u
double tilde_pZ_inf(const DensityModel& m, ZPoint zs);

// Marginal CDFs of pZ_t(z0, .) at n uniform grid points in (0,pi]; composite
// Gauss-Legendre with quad nodes per cell on each axis.
struct Marginals {
  std::vector<double> grid, cdf1, cdf2;
};
Marginals pZ_marginal_cdfs(const DensityModel& m, double t, ZPoint z0, int n = 200, int quad = 4);

// ---- grid evaluation (OpenMP) and its serial reference

std::vector<double> density_grid(const DensityModel& m, double t, ZPoint z0, std::span<const double> z1s,
                                 std::span<const double> z2s);
std::vector<double> density_grid_serial(const DensityModel& m, double t, ZPoint z0, std::span<const double> z1s,
                                        std::span<const double> z2s);

// ---- persistence

void write_model_csv(const std::filesystem::path& file, const DensityModel& m);
DensityModel read_model_csv(const std::filesystem::path& file);  // validates version and table
void write_grid_csv(const std::filesystem::path& file, std::span<const double> z1s, std::span<const double> z2s,
                    std::span<const double> values);

}  // namespace slecut::density

namespace slecut::density {

// ---- property checks shared by the CLI report and the acceptance suite

struct SpectralReport {
  int n_max = 0;
  double ortho_offdiag = 0;         // max |<v_a, v_b>_Psi|, a != b
  double ortho_diag = 0;            // max |<v_a, v_a>_Psi - 1|
  double eigen_residual = 0;        // sup |L v - lambda v| on an interior grid
  double jacobi_norm_error = 0;     // max relative error of the closed-form norm
  double self_adjoint_residual = 0; // max |<Lf,g> - <f,Lg>| / (|f| |g|)
};

// Basis up to degree n_max; eigenrelation on a grid x grid lattice clipped to r <= 0.95.
SpectralReport spectral_checks(double kappa, int n_max, int grid = 50);

// Gram matrix max off-diagonal / diagonal error of the full model basis.
std::array<double, 2> orthonormality(const DensityModel& m, int n_radial = 64, int n_angular = 128);

}  // namespace slecut::density
