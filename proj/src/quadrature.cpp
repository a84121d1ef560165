#include "kdvist/quadrature.hpp"

#include <cmath>

namespace kdvist {

Vector trapezoid_weights(int n, double h) {
  if (n < 2) throw InvalidInput("trapezoid rule needs at least two nodes");
  Vector w = Vector::Constant(n, h);
  w[0] = w[n - 1] = 0.5 * h;
  return w;
}

Vector gregory_weights(int n, double h) {
  constexpr int order = 5;
  if (n < 2 * (order + 1)) throw InvalidInput("Gregory rule needs at least 12 nodes");
  // Gregory coefficients for the forward/backward difference corrections.
  const double g[order + 1] = {0.0, 1.0 / 12, 1.0 / 24, 19.0 / 720, 3.0 / 160, 863.0 / 60480};
  Vector w = trapezoid_weights(n, h);
  for (int m = 1; m <= order; ++m) {
    double binom = 1.0;  // C(m, i)
    for (int i = 0; i <= m; ++i) {
      const double c = -g[m] * ((i % 2 == 0) ? 1.0 : -1.0) * binom * h;
      w[i] += c;
      w[n - 1 - i] += c;
      binom = binom * (m - i) / (i + 1);
    }
  }
  return w;
}

Vector quadrature_weights(int n, double h, QuadRule rule) {
  return rule == QuadRule::Gregory ? gregory_weights(n, h) : trapezoid_weights(n, h);
}

Vector make_kgrid(double kmax, double dk) {
  if (!(kmax > 0) || !(dk > 0)) throw InvalidInput("kgrid needs kmax > 0 and dk > 0");
  const int half = static_cast<int>(std::llround(kmax / dk));
  if (half < 1) throw InvalidInput("kgrid: dk larger than kmax");
  Vector k(2 * half);
  for (int j = -half; j < half; ++j) k[j + half] = (j + 0.5) * dk;
  return k;
}

Vector make_graded_kgrid(double kmax, double dk, double dk_min, double grading) {
  if (!(dk_min > 0) || !(dk_min <= dk) || !(grading >= 0)) throw InvalidInput("graded kgrid: bad spacing");
  if (!(kmax > dk)) throw InvalidInput("graded kgrid: kmax must exceed dk");
  std::vector<double> pos;
  double k = 0.5 * dk_min;
  while (k < kmax) {
    pos.push_back(k);
    k += std::min(dk, dk_min + grading * k);
  }
  const Eigen::Index n = static_cast<Eigen::Index>(pos.size());
  Vector g(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    g[n + i] = pos[i];
    g[n - 1 - i] = -pos[i];
  }
  return g;
}

Vector kgrid_weights(const Vector& kgrid) {
  const Eigen::Index n = kgrid.size();
  if (n < 2) throw InvalidInput("kgrid needs at least two nodes");
  const double d0 = kgrid[1] - kgrid[0];
  bool uniform = d0 > 0;
  for (Eigen::Index i = 1; i < n && uniform; ++i)
    uniform = std::abs((kgrid[i] - kgrid[i - 1]) - d0) <= 1e-9 * std::abs(d0);
  if (uniform) return Vector::Constant(n, d0);
  Vector w = Vector::Zero(n);
  for (Eigen::Index i = 1; i < n; ++i) {
    const double d = kgrid[i] - kgrid[i - 1];
    if (!(d > 0)) throw InvalidInput("kgrid must be strictly increasing");
    w[i - 1] += 0.5 * d;
    w[i] += 0.5 * d;
  }
  return w;
}

}  // namespace kdvist
