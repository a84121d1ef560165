#pragma once

#include "kdvist/common.hpp"
#include "kdvist/potential.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace kdvist {

// u on the periodic grid x_i = x0 + i*period/modes.
struct PdeState {
  double period = 0.0;
  int modes = 0;
  Vector values;
  double time = 0.0;
  double x0 = 0.0;

  double dx() const { return period / modes; }
  double x(int i) const { return x0 + dx() * i; }
  void validate() const;

  static PdeState sample(const std::function<double(double)>& f, double x0, double period, int modes,
                         double time = 0.0);
};

struct Conserved {
  double mass = 0.0;     // int u
  double momentum = 0.0; // int u^2
  double energy = 0.0;   // int (u^3 + u_x^2/2)
};

// u_t - 6 u u_x + u_xxx = 0, ETDRK4 on the Fourier side with 2/3 de-aliasing.
class KdvIntegrator {
 public:
  KdvIntegrator(double period, int modes);

  // Largest dt the explicit part tolerates for this sup|u|.
  double max_stable_dt(double sup_u) const;

  PdeState step(const PdeState& s, double dt);
  // Lands exactly on t_final; the step is shrunk to divide the interval.
  PdeState evolve(const PdeState& s, double t_final, double dt);
  // Snapshots at ascending times (all >= s.time).
  std::vector<PdeState> evolve_to(const PdeState& s, const std::vector<double>& times, double dt);

  Conserved conserved(const PdeState& s) const;
  // max |u_hat| over the top tenth of retained modes, relative to the peak mode.
  double spectral_tail(const PdeState& s) const;
  // Trigonometric interpolation of s onto an arbitrary uniform grid.
  GridPotential resample(const PdeState& s, double x0, double dx, int n, double decay_rate = 1.0) const;

  double blowup_factor = 10.0;

 private:
  struct Coeffs;
  void prepare(double h);
  void check(const PdeState& s) const;
  void nonlinear(const CVector& vh, CVector& out, double* sup);

  double period_;
  int modes_;
  Vector k_;
  Vector mask_;
  double kmax_retained_ = 0.0;
  std::shared_ptr<Coeffs> co_;
  double co_h_ = 0.0;
  double initial_sup_ = 0.0;
};

PdeState pde_step(const PdeState& s, double dt);
PdeState pde_evolve(const PdeState& s, double t_final, double dt);

}  // namespace kdvist
