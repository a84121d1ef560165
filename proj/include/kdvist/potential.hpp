#pragma once

#include "kdvist/common.hpp"

#include <functional>
#include <limits>
#include <string>

namespace kdvist {

// Sampled potential on a uniform grid. decay_rate is the declared exponent a
// of the tail envelope |u(x)| <= M exp(-a|x|); envelope is M (NaN = infer).
struct GridPotential {
  double x0 = 0.0;
  double dx = 0.0;
  Vector values;
  double decay_rate = 1.0;
  double envelope = std::numeric_limits<double>::quiet_NaN();

  int size() const { return static_cast<int>(values.size()); }
  double x(int i) const { return x0 + dx * i; }
  double x_end() const { return x(size() - 1); }
  Vector grid() const { return uniform_grid(x0, dx, size()); }

  // Throws InvalidInput on a malformed grid or a violated tail envelope.
  void validate() const;
  // Envelope constant actually used by validate().
  double envelope_constant() const;

  static GridPotential sample(const std::function<double(double)>& f, double L, double dx,
                              double decay_rate);
  static GridPotential zeros(double L, double dx, double decay_rate = 1.0);
};

// Estimated exponential decay rate from the outer half of the samples.
double estimate_decay_rate(const GridPotential& p);

GridPotential operator+(const GridPotential& a, const GridPotential& b);
GridPotential scaled(const GridPotential& p, double factor);

}  // namespace kdvist
