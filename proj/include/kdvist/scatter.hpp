#pragma once

#include "kdvist/common.hpp"
#include "kdvist/potential.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace kdvist {

// Plane-wave-stripped Jost solutions on the potential grid: f_+ = e^{ikx} m_+,
// f_- = e^{-ikx} m_-, with m_+ -> 1 at the right end and m_- -> 1 at the left.
struct JostPair {
  Complex k;
  Vector x;
  CVector m_plus, dm_plus;
  CVector m_minus, dm_minus;
};

// Scattering data on a k-grid. Norming constants are also kept as logs so
// that time evolution cannot overflow them.
struct ScatteringData {
  Vector kgrid;
  CVector R;
  Vector betas;
  Vector gammas;
  Vector log_gammas;
  double time = 0.0;

  int mu() const { return static_cast<int>(betas.size()); }
  // Fills log_gammas from gammas when missing; checks ordering, positivity and
  // the conjugate symmetry of R on symmetric grids.
  void normalize();
  void validate() const;
  bool reflectionless(double tol = 0.0) const;
};

struct JostOptions {
  double step_tol = 1e-11;      // per-step embedded error tolerance (relative)
  int max_halvings = 12;        // step-halving floor
  double trim_relative = 1e-17; // samples below this fraction of max|u| are treated as zero
};

// Prepared potential with the Runge-Kutta stage samples cached per cell. Every
// integration steps node to node, so quadratures over the grid see exact
// solution values at the nodes.
class JostSolver {
 public:
  explicit JostSolver(const GridPotential& p, JostOptions opt = {});

  const GridPotential& potential() const { return pot_; }
  int support_begin() const { return lo_; }
  int support_end() const { return hi_; }  // inclusive
  bool zero_potential() const { return hi_ <= lo_; }

  JostPair solve(Complex k) const;

  // a(k) = -Wr(f_+, f_-)/(2ik) at grid node `match` (default: weighted centre).
  Complex a(Complex k) const;
  Complex a_at(Complex k, int match) const;
  int default_match() const { return match_; }

  // Single left-to-right pass of m_- with both representation integrals:
  // 1/T = 1 - (1/2ik) int u m_- ds, R/T = (1/2ik) int e^{-2iks} u m_- ds.
  // The endpoint (asymptotic) values of the same quantities are also returned.
  struct Representation {
    Complex inv_t;     // quadrature
    Complex r_over_t;  // quadrature
    Complex inv_t_end; // from m_-, m_-' at the right end of the support
    Complex r_over_t_end;
  };
  Representation representation(Complex k) const;

  // m_+ on the support together with its right-end normalisation, used for
  // norming constants.
  void integrate_plus(Complex k, CVector& m, CVector& dm) const;
  void integrate_minus(Complex k, CVector& m, CVector& dm) const;

 private:
  double interpolate(double xq) const;
  template <int Dir>
  void step_cell(Complex k, int cell, std::array<Complex, 2>& y) const;
  template <int Dir>
  void substep(Complex k, double xa, double h, std::array<Complex, 2>& y, int depth) const;

  GridPotential pot_;
  JostOptions opt_;
  int lo_ = 0, hi_ = -1, match_ = 0;
  // stage_[cell][s] = u(x_cell + frac_s * dx)
  std::vector<std::array<double, 6>> stage_;
};

JostPair jost(const GridPotential& potential, Complex k);
Complex a_of_k(const GridPotential& potential, Complex k);
// R(k) for real k or inside the strip 0 < Im k < decay_rate.
Complex reflection(const GridPotential& potential, Complex k);

struct BoundStateScan {
  std::vector<double> betas;
  std::vector<std::string> warnings;
  double kappa_min = 0.0, kappa_max = 0.0, dkappa = 0.0;
};
BoundStateScan scan_bound_states(const JostSolver& solver, double kappa_max, double tol,
                                 double dkappa = 0.01);
std::vector<double> bound_states(const GridPotential& potential, double kappa_max, double tol);
double default_kappa_max(const GridPotential& potential);

int count_bound_states_contour(const GridPotential& potential, double center, double radius,
                               int points = 64);
int count_bound_states_contour(const JostSolver& solver, double center, double radius,
                               int points = 64);
int bound_state_count_cap(const GridPotential& potential);

struct NormingResult {
  double gamma = 0.0;        // 1 / int f_+^2
  double gamma_check = 0.0;  // from d/dkappa a(i kappa) and the Jost ratio at x0 = 0
  double m_plus_x0 = 0.0;    // m_+(0, i beta), for the non-degeneracy sum
};
std::vector<NormingResult> norming_details(const JostSolver& solver, const std::vector<double>& betas);
std::vector<double> norming_constants(const GridPotential& potential, const std::vector<double>& betas);

ScatteringData evolve_scattering(const ScatteringData& data, double t);

struct ScatterOptions {
  double kmax = 10.0;
  double dk = 0.01;
  double dk_min = 1e-4;   // spacing at k = 0 (equal to dk: plain uniform grid)
  double grading = 0.05;
  double kappa_max = 0.0;  // 0: default from max|u|
  double dkappa = 0.01;
  double tol = 1e-12;
};

// Full forward transform with diagnostics.
struct ScatterResult {
  ScatteringData data;
  Vector abs_t;              // |T(k)| on the grid
  Vector unitarity_residual; // |T|^2 + |R|^2 - 1
  double endpoint_discrepancy = 0.0; // quadrature vs asymptotic R/T, max abs
  int contour_count = -1;
  int cap = 0;
  double nondegeneracy_sum = 0.0;    // sum 1/|m_+(0, i beta_j)|
  std::vector<std::string> warnings;
};
ScatterResult scatter(const GridPotential& potential, const ScatterOptions& opt = {});

struct PerturbationReport {
  int n = 0, mu = 0, cap = 0;
  bool count_ok = false;       // n <= mu <= cap
  bool betas_ok = false;       // |beta_v - beta_0| < eps on the top n
  bool gammas_ok = false;      // |gamma_v - gamma_0| < C eps
  bool extra_ok = false;       // extra bound states all < eps
  bool hypothesis_ok = false;  // mu >= n
  double beta_margin = 0.0;    // max |beta_v - beta_0|
  double gamma_margin = 0.0;   // max |gamma_v - gamma_0|
  double fitted_c = 0.0;       // gamma_margin / eps
  double c_bound = 0.0;        // constant used for the gamma check
  double extra_max = 0.0;
  double eps = 0.0;
  std::string message;
};
PerturbationReport perturbation_report(const ScatteringData& sd0, const ScatteringData& sdv,
                                       double eps, int cap = -1, double c_bound = 10.0);

}  // namespace kdvist
