#include "slecut/density.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "slecut/csv.hpp"
#include "slecut/green.hpp"

namespace slecut::density {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr int kModelCsvVersion = 1;

void check_kappa(double kappa) {
  if (!(kappa > 4.0 && kappa < 8.0)) throw std::invalid_argument("kappa must lie in (4,8)");
}
}  // namespace

// ---------------------------------------------------------------- Jacobi

void jacobi_all(int jmax, double a, double b, double x, std::span<double> out) {
  if (jmax < 0 || !(a > -1) || !(b > -1)) throw std::invalid_argument("jacobi: need j >= 0, alpha, beta > -1");
  if (out.size() < static_cast<std::size_t>(jmax + 1)) throw std::invalid_argument("jacobi: output too short");
  out[0] = 1.0;
  if (jmax == 0) return;
  out[1] = (a + 1.0) + 0.5 * (a + b + 2.0) * (x - 1.0);
  for (int n = 1; n < jmax; ++n) {
    const double s = 2.0 * n + a + b;
    const double c0 = 2.0 * (n + 1) * (n + a + b + 1.0) * s;
    const double c1 = (s + 1.0) * ((s + 2.0) * s * x + a * a - b * b);
    const double c2 = 2.0 * (n + a) * (n + b) * (s + 2.0);
    out[n + 1] = (c1 * out[n] - c2 * out[n - 1]) / c0;
  }
}

double jacobi(int j, double a, double b, double x) {
  std::vector<double> p(static_cast<std::size_t>(std::max(j, 0) + 1));
  jacobi_all(j, a, b, x, p);
  return p[static_cast<std::size_t>(j)];
}

double jacobi_norm_sq(int j, double a, double b) {
  const double lg = (a + b + 1.0) * std::log(2.0) + std::lgamma(j + a + 1.0) + std::lgamma(j + b + 1.0) -
                    std::lgamma(j + 1.0) - std::log(2.0 * j + a + b + 1.0) - std::lgamma(j + a + b + 1.0);
  return std::exp(lg);
}

double jacobi_sup_norm(int j, double a, double b) {
  const double q = std::max(a, b);
  if (q < -0.5) throw std::invalid_argument("sup-norm formula needs max(alpha,beta) >= -1/2");
  return std::exp(std::lgamma(q + j + 1.0) - std::lgamma(j + 1.0) - std::lgamma(q + 1.0));
}

GaussRule gauss_jacobi(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("gauss_jacobi: need n >= 1");
  Eigen::VectorXd diag(n), off(std::max(n - 1, 1));
  for (int k = 0; k < n; ++k) {
    const double s = 2.0 * k + a + b;
    diag(k) = (k == 0) ? (b - a) / (a + b + 2.0) : (b * b - a * a) / (s * (s + 2.0));
  }
  for (int k = 1; k < n; ++k) {
    const double s = 2.0 * k + a + b;
    off(k - 1) = std::sqrt(4.0 * k * (k + a) * (k + b) * (k + a + b) / (s * s * (s + 1.0) * (s - 1.0)));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, off.head(n - 1), Eigen::ComputeEigenvectors);
  const double mu0 = std::exp((a + b + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) + std::lgamma(b + 1.0) -
                              std::lgamma(a + b + 2.0));
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int k = 0; k < n; ++k) {
    r.x[k] = es.eigenvalues()(k);
    const double v0 = es.eigenvectors()(0, k);
    r.w[k] = mu0 * v0 * v0;
  }
  return r;
}

DiskQuadrature disk_quadrature(double alpha, int n_radial, int n_angular) {
  if (n_angular < 1) throw std::invalid_argument("disk_quadrature: need angular nodes");
  const GaussRule g = gauss_jacobi(n_radial, alpha, 0.0);
  DiskQuadrature q;
  const double scale = 2.0 * kPi / n_angular * std::pow(2.0, -alpha) / 4.0;
  for (int i = 0; i < n_radial; ++i) {
    const double r = std::sqrt(0.5 * (g.x[i] + 1.0));
    for (int k = 0; k < n_angular; ++k) {
      const double th = 2.0 * kPi * (k + 0.5) / n_angular;
      q.x.push_back(r * std::cos(th));
      q.y.push_back(r * std::sin(th));
      q.w.push_back(scale * g.w[i]);
    }
  }
  return q;
}

// ---------------------------------------------------------------- spectral data

double lambda_n(double kappa, double s) {
  if (s < 0) throw std::invalid_argument("lambda_n: s must be >= 0");
  return -kappa / 8.0 * s * (s + 4.0 - 8.0 / kappa);
}

double h_norm(double kappa, int n, int j) {
  if (n < 0 || j < 0 || 2 * j > n) throw std::invalid_argument("h_norm: need 0 <= 2j <= n");
  const double c = 2.0 - 4.0 / kappa;
  const double pref = (n != 2 * j ? 2.0 : 1.0) / kPi;
  const double lg = std::lgamma(j + 1.0) + std::log(n + c) + std::lgamma(n - j + c) - std::lgamma(j + c) -
                    std::lgamma(n - j + 1.0);
  return std::sqrt(pref * std::exp(lg));
}

double basis_sup_norm(double kappa, int n, int j) {
  const double c = 2.0 - 4.0 / kappa;
  const double a = std::exp(std::lgamma(c + j) - std::lgamma(j + 1.0) - std::lgamma(c));
  const double b = std::exp(std::lgamma(n - j + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - 2.0 * j + 1.0));
  return h_norm(kappa, n, j) * std::max(a, b);
}

double psi(double kappa, double x, double y) {
  const double s = 1.0 - x * x - y * y;
  return s <= 0 ? 0.0 : std::pow(s, 1.0 - 4.0 / kappa);
}

double p_inf(double kappa, double x, double y) { return (2.0 - 4.0 / kappa) / kPi * psi(kappa, x, y); }

double apply_L_fd(double kappa, const std::function<double(double, double)>& f, double x, double y, double h) {
  static constexpr int off[4] = {-2, -1, 1, 2};
  static constexpr double d1[4] = {1.0, -8.0, 8.0, -1.0};
  double fx = 0, fy = 0, fxy = 0;
  for (int a = 0; a < 4; ++a) {
    fx += d1[a] * f(x + off[a] * h, y);
    fy += d1[a] * f(x, y + off[a] * h);
    for (int b = 0; b < 4; ++b) fxy += d1[a] * d1[b] * f(x + off[a] * h, y + off[b] * h);
  }
  fx /= 12.0 * h;
  fy /= 12.0 * h;
  fxy /= 144.0 * h * h;
  const double f0 = f(x, y);
  const double fxx = (-f(x + 2 * h, y) + 16.0 * f(x + h, y) - 30.0 * f0 + 16.0 * f(x - h, y) - f(x - 2 * h, y)) / (12.0 * h * h);
  const double fyy = (-f(x, y + 2 * h) + 16.0 * f(x, y + h) - 30.0 * f0 + 16.0 * f(x, y - h) - f(x, y - 2 * h)) / (12.0 * h * h);
  const double k8 = kappa / 8.0;
  return k8 * (1 - x * x) * fxx + k8 * (1 - y * y) * fyy - 0.25 * kappa * x * y * fxy -
         ((kappa - 2.0) / 2.0 + k8) * (x * fx + y * fy);
}

// ---------------------------------------------------------------- model

DensityModel::DensityModel(double kappa, int N) : kappa_(kappa), N_(N) {
  check_kappa(kappa);
  if (N < 0) throw std::invalid_argument("truncation degree must be >= 0");
  for (int n = 0; n <= N; ++n) {
    lambdas_.push_back(lambda_n(kappa, n));
    h_.emplace_back();
    for (int j = 0; 2 * j <= n; ++j) {
      h_.back().push_back(h_norm(kappa, n, j));
      basis_.push_back({n, j, 1});
      if (n - 2 * j >= 1) basis_.push_back({n, j, 2});
    }
  }
  // squared sup norms per degree beyond N, until e^{lambda t} kills them for any t we allow
  for (int n = N + 1; n <= N + 600; ++n) {
    double s = 0;
    for (int j = 0; 2 * j <= n; ++j) {
      const double q = basis_sup_norm(kappa, n, j);
      s += (n - 2 * j >= 1 ? 2.0 : 1.0) * q * q;
    }
    tail_coef_.push_back(s);
  }
}

DensityModel DensityModel::for_tolerance(double kappa, double t, double tol, int N0) {
  for (int N = std::max(N0, 0); N <= 400; N += 10) {
    DensityModel m(kappa, N);
    if (m.tail_sum(t) <= tol) return m;
  }
  throw std::domain_error("no truncation degree <= 400 meets the requested tolerance at this t");
}

double DensityModel::h(int n, int j) const { return h_.at(static_cast<std::size_t>(n)).at(static_cast<std::size_t>(j)); }

double DensityModel::tail_sum(double t) const {
  double s = 0;
  for (std::size_t k = 0; k < tail_coef_.size(); ++k) {
    const int n = N_ + 1 + static_cast<int>(k);
    const double term = tail_coef_[k] * std::exp(lambda_n(kappa_, n) * t);
    s += term;
    if (term < 1e-18 * s || term == 0.0) break;
  }
  return s;
}

void DensityModel::eval_all(double x, double y, std::span<double> out) const {
  if (out.size() < basis_.size()) throw std::invalid_argument("eval_all: output too short");
  const double alpha = 1.0 - 4.0 / kappa_;
  const double s = 2.0 * (x * x + y * y) - 1.0;
  const std::complex<double> z(x, y);
  // val[n][j][i] laid out in basis order: walk m = n - 2j outermost, then scatter
  std::vector<double> P(static_cast<std::size_t>(N_ / 2 + 1));
  std::complex<double> zm = 1.0;
  // offset of (n, j) block in basis order
  std::vector<std::size_t> start(static_cast<std::size_t>(N_ + 1));
  std::size_t acc = 0;
  for (int n = 0; n <= N_; ++n) {
    start[n] = acc;
    acc += static_cast<std::size_t>(n + 1);
  }
  for (int m = 0; m <= N_; ++m) {
    const int jmax = (N_ - m) / 2;
    jacobi_all(jmax, alpha, m, s, P);
    for (int j = 0; j <= jmax; ++j) {
      const int n = m + 2 * j;
      // within degree n: entries ordered j = 0.., each j gives cos then (if m >= 1) sin
      std::size_t pos = start[n];
      for (int jj = 0; jj < j; ++jj) pos += (n - 2 * jj >= 1) ? 2 : 1;
      const double hp = h_[n][j] * P[j];
      out[pos] = hp * zm.real();
      if (m >= 1) out[pos + 1] = hp * zm.imag();
    }
    zm *= z;
  }
}

double DensityModel::v(int n, int j, int i, double x, double y) const {
  if (n < 0 || n > N_ || j < 0 || 2 * j > n || (i != 1 && i != 2) || (i == 2 && n - 2 * j < 1))
    throw std::invalid_argument("basis_v: invalid index");
  const double alpha = 1.0 - 4.0 / kappa_;
  const int m = n - 2 * j;
  std::complex<double> zm = std::pow(std::complex<double>(x, y), m);
  if (m == 0) zm = 1.0;
  const double p = jacobi(j, alpha, m, 2.0 * (x * x + y * y) - 1.0);
  return h_[n][j] * p * (i == 1 ? zm.real() : zm.imag());
}

double DensityModel::kernel(double t, Point a, Point b) const {
  std::vector<double> va(basis_.size()), vb(basis_.size());
  eval_all(a.x, a.y, va);
  eval_all(b.x, b.y, vb);
  double s = 0;
  int cur_n = -1;
  double e = 0;
  for (std::size_t k = 0; k < basis_.size(); ++k) {
    if (basis_[k].n != cur_n) {
      cur_n = basis_[k].n;
      e = std::exp(lambdas_[cur_n] * t);
    }
    s += va[k] * vb[k] * e;
  }
  return s;
}

double DensityModel::tail_bound(double t, Point b) const { return psi(kappa_, b.x, b.y) * tail_sum(t); }

DensityValue DensityModel::p_t(double t, Point a, Point b, double tol) const {
  if (!(t > 0)) throw std::invalid_argument("p_t: t must be positive");
  if (!(a.x * a.x + a.y * a.y < 1.0) || !(b.x * b.x + b.y * b.y < 1.0)) throw std::invalid_argument("p_t: points must lie in the open disk");
  DensityValue out;
  out.tail_bound = tail_bound(t, b);
  if (out.tail_bound > tol) throw std::domain_error("p_t: truncation tail bound exceeds tolerance; increase N");
  out.raw = psi(kappa_, b.x, b.y) * kernel(t, a, b);
  out.clamped = out.raw < 0;
  out.value = out.clamped ? 0.0 : out.raw;
  return out;
}

double DensityModel::p_inf(Point b) const { return density::p_inf(kappa_, b.x, b.y); }

// ---------------------------------------------------------------- z-coordinates

Point to_disk(ZPoint z) { return {std::cos(0.5 * (z[0] + z[1])), std::sin(0.5 * (z[0] - z[1]))}; }

ZPoint from_disk(Point p) {
  const double zp = std::acos(p.x), zm = std::asin(p.y);
  return {zp + zm, zp - zm};
}

double jacobian(ZPoint z) { return 0.25 * (std::sin(z[0]) + std::sin(z[1])); }

namespace {
void check_z(ZPoint z) {
  if (!(z[0] > 0 && z[0] < kPi && z[1] > 0 && z[1] < kPi)) throw std::invalid_argument("z must lie in (0,pi)^2");
}
}  // namespace

double pZ_t(const DensityModel& m, double t, ZPoint z, ZPoint zs) {
  check_z(z);
  check_z(zs);
  return m.p_t(t, to_disk(z), to_disk(zs)).value * jacobian(zs);
}

double pZ_inf(const DensityModel& m, ZPoint zs) {
  check_z(zs);
  return m.p_inf(to_disk(zs)) * jacobian(zs);
}

double tilde_pZ_t(const DensityModel& m, double t, ZPoint z, ZPoint zs) {
  const double k = m.kappa();
  return std::exp(-green::alpha0(k) * t) * pZ_t(m, t, z, zs) * green::tilde_G_u(k, z[0], z[1]) /
         green::tilde_G_u(k, zs[0], zs[1]);
}

double calZ(double kappa) {
  check_kappa(kappa);
  using boost::math::quadrature::gauss_kronrod;
  auto integrand = [kappa](double z1, double z2) {
    const Point p = to_disk({z1, z2});
    return density::p_inf(kappa, p.x, p.y) * jacobian({z1, z2}) / green::tilde_G_u(kappa, z1, z2);
  };
  auto inner = [&](double z1) {
    return gauss_kronrod<double, 61>::integrate([&](double z2) { return integrand(z1, z2); }, 0.0, kPi, 12, 1e-12);
  };
  return gauss_kronrod<double, 61>::integrate(inner, 0.0, kPi, 12, 1e-11);
}

double tilde_pZ_inf(const DensityModel& m, ZPoint zs) {
  return pZ_inf(m, zs) / (calZ(m.kappa()) * green::tilde_G_u(m.kappa(), zs[0], zs[1]));
}

Marginals pZ_marginal_cdfs(const DensityModel& m, double t, ZPoint z0, int n, int quad) {
  check_z(z0);
  if (n < 1 || quad < 1) throw std::invalid_argument("marginals: need panels and nodes");
  // composite Gauss-Legendre: n panels per axis, quad nodes per panel
  const GaussRule gl = gauss_jacobi(quad, 0.0, 0.0);
  const double hw = kPi / n;
  std::vector<double> nodes, weights;
  for (int p = 0; p < n; ++p)
    for (int k = 0; k < quad; ++k) {
      nodes.push_back(hw * (p + 0.5 * (gl.x[k] + 1.0)));
      weights.push_back(0.5 * hw * gl.w[k]);
    }
  const std::size_t M = nodes.size();
  std::vector<double> mass1(static_cast<std::size_t>(n), 0.0), mass2(static_cast<std::size_t>(n), 0.0);
  std::vector<double> row(M * M);
#pragma omp parallel for schedule(static)
  for (std::size_t a = 0; a < M; ++a)
    for (std::size_t b = 0; b < M; ++b) row[a * M + b] = pZ_t(m, t, z0, {nodes[a], nodes[b]}) * weights[a] * weights[b];
  for (std::size_t a = 0; a < M; ++a)
    for (std::size_t b = 0; b < M; ++b) {
      mass1[a / static_cast<std::size_t>(quad)] += row[a * M + b];
      mass2[b / static_cast<std::size_t>(quad)] += row[a * M + b];
    }
  Marginals out;
  double c1 = 0, c2 = 0;
  for (int p = 0; p < n; ++p) {
    c1 += mass1[p];
    c2 += mass2[p];
    out.grid.push_back(hw * (p + 1));
    out.cdf1.push_back(c1);
    out.cdf2.push_back(c2);
  }
  return out;
}

// ---------------------------------------------------------------- grids

std::vector<double> density_grid(const DensityModel& m, double t, ZPoint z0, std::span<const double> z1s,
                                 std::span<const double> z2s) {
  std::vector<double> out(z1s.size() * z2s.size());
  const auto n1 = static_cast<std::ptrdiff_t>(z1s.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < z2s.size(); ++j)
      out[static_cast<std::size_t>(i) * z2s.size() + j] = pZ_t(m, t, z0, {z1s[i], z2s[j]});
  return out;
}

std::vector<double> density_grid_serial(const DensityModel& m, double t, ZPoint z0, std::span<const double> z1s,
                                        std::span<const double> z2s) {
  std::vector<double> out(z1s.size() * z2s.size());
  for (std::size_t i = 0; i < z1s.size(); ++i)
    for (std::size_t j = 0; j < z2s.size(); ++j) out[i * z2s.size() + j] = pZ_t(m, t, z0, {z1s[i], z2s[j]});
  return out;
}

// ---------------------------------------------------------------- persistence

void write_model_csv(const std::filesystem::path& file, const DensityModel& m) {
  csv::Writer w(file, {"version", "kappa", "N", "n", "j", "i", "lambda", "h"});
  for (const auto& b : m.basis())
    w.row({std::to_string(kModelCsvVersion), csv::fmt(m.kappa()), std::to_string(m.N()), std::to_string(b.n),
           std::to_string(b.j), std::to_string(b.i), csv::fmt(m.lambda(b.n)), csv::fmt(m.h(b.n, b.j))});
}

DensityModel read_model_csv(const std::filesystem::path& file) {
  const auto tab = csv::read(file);
  if (tab.rows.empty()) throw std::runtime_error("model cache is empty");
  const auto cv = tab.column("version"), ck = tab.column("kappa"), cN = tab.column("N");
  if (std::stoi(tab.rows[0][cv]) != kModelCsvVersion) throw std::runtime_error("model cache version mismatch");
  DensityModel m(std::stod(tab.rows[0][ck]), std::stoi(tab.rows[0][cN]));
  if (tab.rows.size() != m.basis().size()) throw std::runtime_error("model cache has the wrong number of rows");
  const auto cn = tab.column("n"), cj = tab.column("j"), ci = tab.column("i"), cl = tab.column("lambda"),
             ch = tab.column("h");
  for (std::size_t k = 0; k < tab.rows.size(); ++k) {
    const auto& r = tab.rows[k];
    const auto& b = m.basis()[k];
    if (std::stoi(r[cn]) != b.n || std::stoi(r[cj]) != b.j || std::stoi(r[ci]) != b.i)
      throw std::runtime_error("model cache basis order mismatch");
    if (std::abs(std::stod(r[cl]) - m.lambda(b.n)) > 1e-12 * (1 + std::abs(m.lambda(b.n))) ||
        std::abs(std::stod(r[ch]) - m.h(b.n, b.j)) > 1e-12 * m.h(b.n, b.j))
      throw std::runtime_error("model cache values disagree with recomputation");
  }
  return m;
}

void write_grid_csv(const std::filesystem::path& file, std::span<const double> z1s, std::span<const double> z2s,
                    std::span<const double> values) {
  if (values.size() != z1s.size() * z2s.size()) throw std::invalid_argument("grid size mismatch");
  csv::Writer w(file, {"z1", "z2", "value"});
  for (std::size_t i = 0; i < z1s.size(); ++i)
    for (std::size_t j = 0; j < z2s.size(); ++j) w.row(std::vector<double>{z1s[i], z2s[j], values[i * z2s.size() + j]});
}

}  // namespace slecut::density

namespace slecut::density {

std::array<double, 2> orthonormality(const DensityModel& m, int n_radial, int n_angular) {
  const DiskQuadrature q = disk_quadrature(1.0 - 4.0 / m.kappa(), n_radial, n_angular);
  const auto nb = static_cast<Eigen::Index>(m.basis().size());
  Eigen::MatrixXd B(static_cast<Eigen::Index>(q.size()), nb);
  std::vector<double> row(m.basis().size());
  for (std::size_t k = 0; k < q.size(); ++k) {
    m.eval_all(q.x[k], q.y[k], row);
    const double sw = std::sqrt(q.w[k]);
    for (Eigen::Index b = 0; b < nb; ++b) B(static_cast<Eigen::Index>(k), b) = sw * row[static_cast<std::size_t>(b)];
  }
  const Eigen::MatrixXd G = B.transpose() * B;
  double off = 0, diag = 0;
  for (Eigen::Index a = 0; a < nb; ++a)
    for (Eigen::Index b = 0; b < nb; ++b)
      (a == b ? diag : off) = std::max(a == b ? diag : off, std::abs(G(a, b) - (a == b ? 1.0 : 0.0)));
  return {off, diag};
}

SpectralReport spectral_checks(double kappa, int n_max, int grid) {
  check_kappa(kappa);
  if (n_max < 0 || grid < 2) throw std::invalid_argument("spectral_checks: bad sizes");
  SpectralReport r;
  r.n_max = n_max;
  const DensityModel m(kappa, n_max);
  const auto on = orthonormality(m);
  r.ortho_offdiag = on[0];
  r.ortho_diag = on[1];

  for (const auto& b : m.basis()) {
    auto f = [&](double x, double y) { return m.v(b.n, b.j, b.i, x, y); };
    for (int a = 0; a < grid; ++a)
      for (int c = 0; c < grid; ++c) {
        const double x = -0.95 + 1.9 * a / (grid - 1), y = -0.95 + 1.9 * c / (grid - 1);
        if (x * x + y * y > 0.95 * 0.95) continue;
        r.eigen_residual = std::max(r.eigen_residual, std::abs(apply_L_fd(kappa, f, x, y) - m.lambda(b.n) * f(x, y)));
      }
  }

  const double alpha = 1.0 - 4.0 / kappa;
  for (int beta = 0; beta <= 6; ++beta) {
    const GaussRule g = gauss_jacobi(24, alpha, beta);
    std::vector<double> P(11);
    std::vector<double> acc(11, 0.0);
    for (std::size_t k = 0; k < g.x.size(); ++k) {
      jacobi_all(10, alpha, beta, g.x[k], P);
      for (int j = 0; j <= 10; ++j) acc[j] += g.w[k] * P[j] * P[j];
    }
    for (int j = 0; j <= 10; ++j) {
      const double ref = jacobi_norm_sq(j, alpha, beta);
      r.jacobi_norm_error = std::max(r.jacobi_norm_error, std::abs(acc[j] - ref) / ref);
    }
  }

  // fixed pseudo-random polynomials of degree <= 4
  const DiskQuadrature q = disk_quadrature(alpha, 32, 64);
  auto poly = [](const std::array<double, 15>& c) {
    return [c](double x, double y) {
      double s = 0;
      int k = 0;
      for (int d = 0; d <= 4; ++d)
        for (int i = 0; i <= d; ++i) s += c[k++] * std::pow(x, d - i) * std::pow(y, i);
      return s;
    };
  };
  std::uint64_t state = 0x2545F4914F6CDD1DULL;
  auto next = [&] {
    state ^= state << 13, state ^= state >> 7, state ^= state << 17;
    return static_cast<double>(state >> 11) / 9007199254740992.0 * 2.0 - 1.0;
  };
  for (int trial = 0; trial < 5; ++trial) {
    std::array<double, 15> cf, cg;
    for (auto& v : cf) v = next();
    for (auto& v : cg) v = next();
    const auto f = poly(cf), g = poly(cg);
    double lfg = 0, flg = 0, ff = 0, gg = 0;
    for (std::size_t k = 0; k < q.size(); ++k) {
      const double x = q.x[k], y = q.y[k], w = q.w[k];
      lfg += w * apply_L_fd(kappa, f, x, y) * g(x, y);
      flg += w * f(x, y) * apply_L_fd(kappa, g, x, y);
      ff += w * f(x, y) * f(x, y);
      gg += w * g(x, y) * g(x, y);
    }
    r.self_adjoint_residual = std::max(r.self_adjoint_residual, std::abs(lfg - flg) / std::sqrt(ff * gg));
  }
  return r;
}

}  // namespace slecut::density
