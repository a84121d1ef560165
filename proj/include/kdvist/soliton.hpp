#pragma once

#include "kdvist/common.hpp"

#include <array>
#include <cmath>
#include <map>

namespace kdvist {

// Wronskian n-soliton parameters: 0 < beta_1 < ... < beta_n, alpha_j > 0.
struct SolitonSpec {
  Vector betas;
  Vector alphas;

  int n() const { return static_cast<int>(betas.size()); }
  void validate() const;
  static SolitonSpec from_gammas(const Vector& betas, const Vector& gammas);
};

struct CrestLine {
  double speed = 0.0;  // 4 beta_j^2
  double phase = 0.0;  // rho: u ~ -2 beta^2 sech^2(beta (x - speed t) + rho)
  int time_sign = 1;
  double beta = 0.0;

  double position(double t) const { return speed * t - phase / beta; }
};

// Wr(a_1..a_n) and its first four x-derivatives. The true values are
// d[h] * exp(log_scale); log_scale is nonzero only when some column needed
// its exponential factored out.
template <class Scalar>
struct TauJet {
  std::array<Scalar, 5> d{};
  double log_scale = 0.0;
};

struct TauValue {
  double tau, dtau, d2tau, d3tau, d4tau;
  double log_scale;
};

inline constexpr double kTauScaleThreshold = 300.0;

namespace detail {

// Expansion of d^h/dx^h det[a^{(s_0)}; ...; a^{(s_{n-1})}] over row-order sets.
// Differentiating row i turns s_i into s_i+1, which vanishes if s_i+1 is
// already present; for h = 1 only the last row survives.
using RowSet = std::vector<int>;
std::vector<std::map<RowSet, double>> wronskian_derivative_terms(int n, int max_order);

}  // namespace detail

// Evaluate the Wronskian jet with column j evaluated at x - shifts[j].
template <class Scalar>
TauJet<Scalar> tau_jet(const Vector& betas, const Vector& alphas, const Vector& shifts, Scalar x,
                       Scalar t, double threshold = kTauScaleThreshold) {
  using std::exp;
  using std::abs;
  const int n = static_cast<int>(betas.size());
  TauJet<Scalar> out;
  if (n == 0) {
    out.d = {Scalar(1), Scalar(0), Scalar(0), Scalar(0), Scalar(0)};
    return out;
  }
  const int rows = n + 4;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a(rows, n);
  for (int j = 0; j < n; ++j) {
    const Scalar b = Scalar(betas[j]);
    const Scalar shift = shifts.size() ? Scalar(shifts[j]) : Scalar(0);
    const Scalar theta = b * (x - shift - Scalar(4) * b * b * t);
    Scalar ep, em;
    const double mag = static_cast<double>(abs(theta));
    if (mag > threshold) {
      ep = exp(theta - abs(theta));
      em = exp(-theta - abs(theta));
      out.log_scale += mag;
    } else {
      ep = exp(theta);
      em = exp(-theta);
    }
    const Scalar sgn = (j % 2 == 0) ? Scalar(1) : Scalar(-1);  // (-1)^{j+1}, 1-based j
    Scalar pp = Scalar(1), pm = Scalar(1);
    for (int r = 0; r < rows; ++r) {
      a(r, j) = sgn * pm * em + Scalar(alphas[j]) * pp * ep;
      pp *= b;
      pm *= -b;
    }
  }
  static thread_local std::map<int, std::vector<std::map<detail::RowSet, double>>> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, detail::wronskian_derivative_terms(n, 4)).first;
  const auto& terms = it->second;

  std::map<detail::RowSet, Scalar> dets;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(n, n);
  for (int h = 0; h <= 4; ++h) {
    Scalar acc = Scalar(0);
    for (const auto& [rowset, coef] : terms[h]) {
      auto found = dets.find(rowset);
      if (found == dets.end()) {
        for (int r = 0; r < n; ++r) m.row(r) = a.row(rowset[r]);
        found = dets.emplace(rowset, m.determinant()).first;
      }
      acc += Scalar(coef) * found->second;
    }
    out.d[h] = acc;
  }
  return out;
}

TauValue tau(const SolitonSpec& spec, double x, double t);
TauValue tau_shifted(const SolitonSpec& spec, const Vector& shifts, double x, double t);

// u = -2 (log tau)'' with analytic derivatives.
double eval_nsoliton(const SolitonSpec& spec, double x, double t);
double eval_nsoliton_shifted(const SolitonSpec& spec, const Vector& shifts, double x, double t);
Vector eval_nsoliton(const SolitonSpec& spec, const Vector& x, double t);

Vector alpha_from_gamma(const Vector& betas, const Vector& gammas);
Vector gamma_from_alpha(const Vector& betas, const Vector& alphas);

std::vector<CrestLine> crest_lines(const SolitonSpec& spec, int time_sign);

}  // namespace kdvist
