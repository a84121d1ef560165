#include "kdvist/potential.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kdvist {

double GridPotential::envelope_constant() const {
  if (std::isfinite(envelope)) return envelope;
  // Inferred: ten times the weighted sup over the inner half of the samples.
  const int n = size();
  const int edge = std::max(1, n / 4);
  double m = 0.0;
  for (int i = edge; i < n - edge; ++i)
    m = std::max(m, std::abs(values[i]) * std::exp(decay_rate * std::abs(x(i))));
  return 10.0 * m;
}

void GridPotential::validate() const {
  if (!(dx > 0) || !std::isfinite(dx)) throw InvalidInput("potential: dx must be positive");
  if (size() < 16) throw InvalidInput("potential: at least 16 samples required");
  if (!(decay_rate > 0)) throw InvalidInput("potential: decay rate must be positive");
  for (int i = 0; i < size(); ++i)
    if (!std::isfinite(values[i])) throw InvalidInput("potential: non-finite sample");
  const double M = envelope_constant();
  const int n = size();
  // Samples produced by cancelling formulas carry an absolute rounding floor.
  const double floor = 1e-13 * values.cwiseAbs().maxCoeff();
  const int edge = std::max(1, n / 20);
  for (int i = 0; i < n; ++i) {
    if (i >= edge && i < n - edge) continue;
    const double bound = M * std::exp(-decay_rate * std::abs(x(i)));
    if (std::abs(values[i]) > bound * (1 + 1e-12) + floor) {
      std::ostringstream os;
      os << "potential: tail envelope violated at x=" << x(i) << " (|u|=" << std::abs(values[i])
         << ", bound " << bound << ")";
      throw InvalidInput(os.str());
    }
  }
}

GridPotential GridPotential::sample(const std::function<double(double)>& f, double L, double dx,
                                    double decay_rate) {
  const int n = static_cast<int>(std::llround(2 * L / dx)) + 1;
  GridPotential p;
  p.x0 = -L;
  p.dx = dx;
  p.decay_rate = decay_rate;
  p.values.resize(n);
  for (int i = 0; i < n; ++i) p.values[i] = f(p.x(i));
  return p;
}

GridPotential GridPotential::zeros(double L, double dx, double decay_rate) {
  return sample([](double) { return 0.0; }, L, dx, decay_rate);
}

double estimate_decay_rate(const GridPotential& p) {
  const double peak = p.values.cwiseAbs().maxCoeff();
  if (peak == 0) return 1.0;
  std::vector<double> xs, ys;
  for (int i = 0; i < p.size(); ++i) {
    const double ax = std::abs(p.x(i));
    const double a = std::abs(p.values[i]);
    if (ax < 0.5 * std::max(std::abs(p.x0), std::abs(p.x_end()))) continue;
    if (a < 1e-14 * peak) continue;
    xs.push_back(ax);
    ys.push_back(std::log(a));
  }
  if (xs.size() < 4) return 1.0;
  const LineFit f = fit_line(xs, ys);
  return f.slope < 0 ? -f.slope : 1.0;
}

GridPotential operator+(const GridPotential& a, const GridPotential& b) {
  if (a.size() != b.size() || a.x0 != b.x0 || a.dx != b.dx)
    throw InvalidInput("potentials live on different grids");
  GridPotential c = a;
  c.values = a.values + b.values;
  c.decay_rate = std::min(a.decay_rate, b.decay_rate);
  c.envelope = std::numeric_limits<double>::quiet_NaN();
  return c;
}

GridPotential scaled(const GridPotential& p, double factor) {
  GridPotential c = p;
  c.values *= factor;
  if (std::isfinite(c.envelope)) c.envelope *= std::abs(factor);
  return c;
}

}  // namespace kdvist
