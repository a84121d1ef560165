#pragma once

#include "kdvist/common.hpp"
#include "kdvist/potential.hpp"
#include "kdvist/quadrature.hpp"
#include "kdvist/scatter.hpp"

#include <functional>

namespace kdvist {

// Re sum_j coef_j exp(2 i k_j z) on the lattice z = z0 + m g, m = 0..count-1.
Vector fourier_lattice(const Vector& kgrid, const CVector& coef, double z0, double g, int count);

// Verifies |d phase/dk| * dk <= pi/2 at every node whose coefficient exceeds
// `floor`, for z in [zmin, zmax]. rate(k, z) is the phase derivative.
void check_phase_resolution(const Vector& kgrid, const CVector& coef, double zmin, double zmax,
                            const std::function<double(double, double)>& rate, double floor = 1e-12);

// Omega(x,t) = (1/pi) int R e^{2ik(x + 4k^2 t)} dk + 2 sum gamma_j e^{-2 beta_j (x - 4 beta_j^2 t)}.
// Data carry their own time; the kernel evolves them to t.
struct GLMKernel {
  Vector kgrid;
  CVector coef;  // w_j R_j / pi at the data time
  Vector betas;
  Vector log_gammas;
  double data_time = 0.0;

  static GLMKernel from_data(const ScatteringData& data);
  bool has_continuous() const;
  CVector coefficients_at(double t) const;
  double continuous(double x, double t) const;
  double discrete(double x, double t) const;
  double operator()(double x, double t) const { return continuous(x, t) + discrete(x, t); }
  Vector continuous_lattice(double z0, double g, int count, double t) const;
  // log of L_j = 2 gamma_j e^{-2 beta_j (x - 4 beta_j^2 t)}
  Vector log_l(double x, double t) const;
};

double glm_kernel(const ScatteringData& data, double x, double t);

struct GLMSolution {
  double x = 0.0;
  Vector ygrid;
  Vector B;
  double B_at_zero = 0.0;
  double rcond = 1.0;
};

struct GLMOptions {
  double Y = 0.0;    // 0: default_Y(data)
  double h = 0.02;   // target y-step
  QuadRule rule = QuadRule::Gregory;
  bool dense_reference = false;  // plain LU of the full system (for cross-checks)
};

double default_Y(const ScatteringData& data);

// Uniform y-grid y_i = i h, i < N, covering [0, Y]; when lattice > 0 the step is
// rounded to a multiple of it.
struct YDiscretisation {
  int N;
  double h;
  Vector w;
};
YDiscretisation discretise_y(double Y, double h_target, QuadRule rule, double lattice = 0.0);

// Nystrom system for B_i + sum_m w_m Omega(x + y_i + u_m) B_m = -Omega(x + y_i)
// with Omega = continuous lattice + sum_j L_j e^{-2 beta_j (y+u)}.
struct NystromProblem {
  int N = 0;
  double h = 0.0;
  const double* kc = nullptr;  // kc[m * stride] = continuous kernel at x + m h, m < 2N-1
  int stride = 1;
  Vector weights;
  Vector betas;
  Vector log_l;
};

struct NystromResult {
  Vector B;
  double rcond = 1.0;
};

NystromResult solve_nystrom(const NystromProblem& pb, bool dense_reference = false);

GLMSolution solve_glm(const ScatteringData& data, double x, double t, const GLMOptions& opt);
GLMSolution solve_glm(const ScatteringData& data, double x, double t, double Y, int ny);

// Any GLM-type kernel: continuous lattice at time t plus rank-n discrete data.
struct KernelAccess {
  std::function<Vector(double z0, double g, int count)> lattice;  // empty: no continuous part
  std::function<Vector(double x)> log_l;
  Vector betas;
};

// B(x_i, 0+) for every x_i of a uniform grid, sharing one lattice.
Vector solve_b0_over_grid(const KernelAccess& K, const Vector& xgrid, double Y, const GLMOptions& opt);

// u = -d/dx B(x, 0+, t) on a uniform xgrid by fourth-order differences.
GridPotential reconstruct_u(const ScatteringData& data, const Vector& xgrid, double t,
                            const GLMOptions& opt = {});

// Fourth-order first derivative of uniformly spaced samples (one-sided at the ends).
Vector differentiate4(const Vector& f, double dx);

}  // namespace kdvist
