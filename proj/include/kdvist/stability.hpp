#pragma once

#include "kdvist/common.hpp"
#include "kdvist/potential.hpp"
#include "kdvist/scatter.hpp"
#include "kdvist/soliton.hpp"

#include <string>
#include <utility>
#include <vector>

namespace kdvist {

struct StabilityConfig {
  double a_decay = 1.0;
  double sigma = 3.0;
  double tau_cone = 0.15;
  double eps = 0.0;  // <= 0: half the admissible bound
  double c_check = 0.05;
  SolitonSpec reference;

  // min over j != j' of {a, beta_1/2, |beta_j - beta_j'|/2}
  double admissible_eps() const;
  double effective_eps() const;
  void validate() const;
};

struct SolitonRegion {
  double t = 0.0;
  std::vector<std::pair<double, double>> intervals;

  bool empty() const { return intervals.empty(); }
  bool contains(double x) const;
};

SolitonRegion region(const StabilityConfig& cfg, double t);

// x_j(t) = 4 (beta_{v, mu-n+j}^2 - beta_{0,j}^2) t over the n largest perturbed betas.
Vector phase_shifts(const StabilityConfig& cfg, const Vector& perturbed_betas, double t);

// reference n-soliton with column j evaluated at x - x_j(t)
double shifted_reference(const StabilityConfig& cfg, const Vector& perturbed_betas, double x, double t);

struct StabilityGrids {
  double pde_x0 = -96.0;
  double pde_period = 256.0;
  int pde_modes = 4096;
  double dt = 1.25e-4;
  double margin = 16.0;        // distance kept from the periodic seam
  int profile_stride = 4;      // PDE nodes per profile row
};

struct StabilityProfile {
  double t = 0.0;
  Vector x, u_v, reference, difference;
};

struct AmplitudeResult {
  double amplitude = 0.0;
  double weighted_norm = 0.0;
  double eps_equiv = 0.0;  // (c_check * norm)^(1/sigma)
  bool in_scope = true;
  std::vector<std::string> notes;
  Vector betas, gammas;
  std::vector<double> sup_in_region, sup_in_cones;
  std::vector<Vector> phase_shifts;
  std::vector<double> spectral_tail;
  PerturbationReport perturbation;
  std::vector<StabilityProfile> profiles;
};

struct StabilityReport {
  StabilityConfig config;
  double eps = 0.0;
  std::vector<double> times;
  std::vector<SolitonRegion> regions;
  std::vector<AmplitudeResult> sweep;  // in the order given
  int headline = 0;                    // largest amplitude
  LineFit scaling_fit;                 // log sup vs log eps_equiv
  bool scaling_fit_valid = false;
  bool in_scope = true;
  double seconds = 0.0;
};

// v_shape is scaled by each amplitude; the scattering step runs on v_shape's grid.
StabilityReport run_experiment(const StabilityConfig& cfg, const GridPotential& v_shape,
                               const std::vector<double>& amplitudes, const std::vector<double>& times,
                               const StabilityGrids& grids = {}, bool keep_profiles = false);

}  // namespace kdvist
