#pragma once

#include "kdvist/common.hpp"
#include "kdvist/glm.hpp"
#include "kdvist/potential.hpp"
#include "kdvist/scatter.hpp"

#include <utility>
#include <vector>

namespace kdvist {

// Continuous part shifted to the line Im k = eps, plus the discrete sum over
// the n largest bound states only:
//   Delta_c(z,t) = e^{-2 eps (z - 4 eps^2 t)}/pi int R(k + i eps) e^{2ik[z + 4(k^2 - 3 eps^2)t] - 24 eps k^2 t} dk
//   Delta_d(z,t) = 2 sum_top gamma_j e^{-2 beta_j (z - 4 beta_j^2 t)}
struct DeformedKernel {
  double eps = 0.0;
  Vector kgrid;
  CVector R_strip;
  Vector top_betas;
  Vector top_log_gammas;  // at time 0
  double decay_rate = 0.0;
  double min_abs_a = 0.0;  // min |a(k + i eps)| over the grid

  void validate() const;
  bool has_continuous() const;
  // Value (or z-derivative) of Delta_c on z = z0 + m g.
  Vector continuous_lattice(double z0, double g, int count, double t, bool derivative = false) const;
  double continuous(double z, double t) const;
  double continuous_dx(double z, double t) const;
  double discrete(double z, double t) const;
  Vector log_l(double x, double t) const;  // log of 2 gamma_j e^{-2 beta_j (x - 4 beta_j^2 t)}
};

struct StripOptions {
  double kmax = 10.0;
  double dk = 0.01;
};

// R(k + i eps) on a midpoint k-grid. Refuses eps when |a| drops below 1e-6
// on the shifted line (a pole of R too close to it).
DeformedKernel build_deformed_kernel(const GridPotential& potential, const ScatteringData& perturbed,
                                     int n, double eps, const StripOptions& opt = {});

double deformed_kernel_c(const GridPotential& potential, double eps, double z, double t);
double deformed_kernel_c_dx(const GridPotential& potential, double eps, double z, double t);
double deformed_kernel_d(const std::vector<std::pair<double, double>>& top_pairs, double z, double t);

struct GammaSystem {
  Vector log_L;   // log of the Lfrak_j
  Matrix Gamma;   // diag(2/L_j) + [1/(beta_j + beta_l)]
  Vector rhs;
};

GammaSystem build_gamma_system(const Vector& betas, const Vector& log_L, const Vector& rhs);

struct GammaSolve {
  Vector A;         // equilibrated LU solve
  Vector A_cramer;  // ratio of determinants
  double relative_difference = 0.0;
  double min_singular_value = 0.0;  // of the equilibrated matrix
};

// Solves Gamma A = rhs both ways; throws ConsistencyError if the two differ by
// more than tol relative (infinity norms).
GammaSolve solve_gamma(const GammaSystem& g, double tol = 1e-10);

// det(D + C) for positive diagonal D and a positive definite C as the sum over
// subsets S of prod_{j in S} d_j det(C restricted to the complement); every
// term is nonnegative.
double det_diag_plus(const Vector& d, const Matrix& C);

struct DiscreteSolve {
  Vector A;
  GammaSolve detail;
  Vector image;     // sum_j A_j e^{-2 beta_j y}
  Vector solution;  // (I + K_d)^{-1} f = f - image
};

// (I + K_d)^{-1} f for f sampled on the uniform grid y_i = i h.
DiscreteSolve solve_discrete(const DeformedKernel& kernel, const Vector& f, double h, double x, double t);

// B_d solving (I + K_d) B_d = -Delta_d exactly: B_d(y) = -sum c_j e^{-2 beta_j y}, Gamma c = 2.
Vector B_discrete(const DeformedKernel& kernel, double x, double t, const Vector& ygrid);
// -d/dx B_d(x, 0+, t) from the exact derivative of the rank-n solve.
double u_discrete(const DeformedKernel& kernel, double x, double t);

struct DeformedSolution {
  Vector ygrid;
  Vector B, B_c, B_d;
  double sup_Bc = 0.0;
  double sup_dxBc = 0.0;  // from a centred difference in x
  double rcond = 1.0;
};

// Dense Nystrom solve of the deformed equation on x >= 4 eps^2 t.
DeformedSolution solve_deformed(const DeformedKernel& kernel, double x, double t,
                                const GLMOptions& opt = {});

// Deformed reconstruction u = -d/dx B(x,0+,t) over a uniform xgrid in the region.
GridPotential reconstruct_deformed(const DeformedKernel& kernel, const Vector& xgrid, double t,
                                   const GLMOptions& opt = {});

// Measured sup |Delta_c| and sup |d Delta_c/dx| over region samples for each eps.
struct KernelSweepConfig {
  std::vector<double> eps{0.02, 0.04, 0.08};
  std::vector<double> times{0.0, 0.5, 1.0};
  std::vector<double> x_offsets{0.0, 1.0, 2.0, 4.0};  // x = 4 eps^2 t + offset
  double y_max = 4.0, u_max = 20.0, step = 0.05;
  double sigma = 3.0;
  double a_decay = 1.0;
  double c_check = 1.0;
  StripOptions strip{10.0, 0.01};
};

struct KernelSweepReport {
  std::vector<double> eps, amplitude;
  std::vector<double> sup_c, sup_cdx;          // plain sups
  std::vector<double> envelope_c, envelope_cdx; // sup |.| e^{2 eps u}
  LineFit fit_c, fit_cdx, fit_env_c, fit_env_cdx;
};

// shape: unit perturbation sampled on the reference grid; for each eps it is
// scaled so that its weighted norm equals eps^sigma / c_check.
KernelSweepReport kernel_bound_sweep(const GridPotential& reference, const GridPotential& shape,
                                     int n, const KernelSweepConfig& cfg);

// sum_{h=0}^{2} sup |v^{(h)} e^{a|x|}| with centred differences.
double weighted_norm(const GridPotential& v, double a_decay);

}  // namespace kdvist
