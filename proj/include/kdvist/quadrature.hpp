#pragma once

#include "kdvist/common.hpp"

namespace kdvist {

enum class QuadRule { Trapezoid, Gregory };

// Weights for integrating samples f(x0 + i h), i = 0..n-1, over [x0, x0+(n-1)h].
// Gregory adds end corrections through fifth differences (exact for
// polynomials of degree <= 5 and needs n >= 12).
Vector trapezoid_weights(int n, double h);
Vector gregory_weights(int n, double h);
Vector quadrature_weights(int n, double h, QuadRule rule);

// Symmetric spectral grid k_j = (j + 1/2) dk covering (-kmax, kmax); k = 0 is
// never a node.
Vector make_kgrid(double kmax, double dk);

// Symmetric grid refined toward k = 0: spacing dk_min + grading*|k|, capped
// at dk. Generic reflection coefficients tend to -1 as k -> 0 over a width
// set by the potential, which a uniform grid cannot see.
Vector make_graded_kgrid(double kmax, double dk, double dk_min, double grading);

// Weights for a sorted (possibly non-uniform) k-grid: equal cell widths when
// the grid is uniform (midpoint rule), trapezoid otherwise.
Vector kgrid_weights(const Vector& kgrid);

}  // namespace kdvist
