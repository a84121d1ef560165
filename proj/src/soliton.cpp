#include "kdvist/soliton.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kdvist {

void SolitonSpec::validate() const {
  if (betas.size() != alphas.size())
    throw InvalidInput("soliton spec: betas and alphas differ in length");
  for (int j = 0; j < n(); ++j) {
    if (!(betas[j] > 0) || !std::isfinite(betas[j]))
      throw InvalidInput("soliton spec: betas must be positive and finite");
    if (j > 0 && !(betas[j] > betas[j - 1]))
      throw InvalidInput("soliton spec: betas must be strictly increasing");
    if (!(alphas[j] > 0) || !std::isfinite(alphas[j]))
      throw InvalidInput("soliton spec: alphas must be positive and finite");
  }
}

SolitonSpec SolitonSpec::from_gammas(const Vector& betas, const Vector& gammas) {
  SolitonSpec s{betas, alpha_from_gamma(betas, gammas)};
  s.validate();
  return s;
}

namespace detail {

std::vector<std::map<RowSet, double>> wronskian_derivative_terms(int n, int max_order) {
  std::vector<std::map<RowSet, double>> terms(max_order + 1);
  RowSet base(n);
  for (int i = 0; i < n; ++i) base[i] = i;
  terms[0][base] = 1.0;
  for (int h = 1; h <= max_order; ++h) {
    for (const auto& [set, coef] : terms[h - 1]) {
      for (int i = 0; i < n; ++i) {
        const int next = set[i] + 1;
        if (i + 1 < n && set[i + 1] == next) continue;  // duplicated row
        RowSet s = set;
        s[i] = next;
        terms[h][s] += coef;
      }
    }
  }
  return terms;
}

}  // namespace detail

TauValue tau_shifted(const SolitonSpec& spec, const Vector& shifts, double x, double t) {
  spec.validate();
  if (shifts.size() != 0 && shifts.size() != spec.betas.size())
    throw InvalidInput("tau: shift vector has wrong length");
  const auto jet = tau_jet<double>(spec.betas, spec.alphas, shifts, x, t);
  if (!(jet.d[0] > 0)) {
    std::ostringstream os;
    os << "tau is not positive at x=" << x << ", t=" << t;
    throw DegeneracyError(os.str());
  }
  return {jet.d[0], jet.d[1], jet.d[2], jet.d[3], jet.d[4], jet.log_scale};
}

TauValue tau(const SolitonSpec& spec, double x, double t) { return tau_shifted(spec, Vector(), x, t); }

double eval_nsoliton_shifted(const SolitonSpec& spec, const Vector& shifts, double x, double t) {
  const TauValue v = tau_shifted(spec, shifts, x, t);
  const double r1 = v.dtau / v.tau;
  return -2.0 * (v.d2tau / v.tau - r1 * r1);
}

double eval_nsoliton(const SolitonSpec& spec, double x, double t) {
  return eval_nsoliton_shifted(spec, Vector(), x, t);
}

Vector eval_nsoliton(const SolitonSpec& spec, const Vector& x, double t) {
  Vector u(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) u[i] = eval_nsoliton(spec, x[i], t);
  return u;
}

namespace {

void check_betas(const Vector& betas) {
  for (Eigen::Index j = 0; j < betas.size(); ++j) {
    if (!(betas[j] > 0)) throw InvalidInput("betas must be positive");
    for (Eigen::Index l = 0; l < j; ++l)
      if (betas[l] == betas[j]) throw InvalidInput("repeated beta values");
    if (j > 0 && betas[j] < betas[j - 1]) throw InvalidInput("betas must be increasing");
  }
}

// 2 (-1)^{j-1} beta_j prod_{l != j} (beta_l + beta_j)/(beta_l - beta_j); with this
// factor gamma_j = factor / alpha_j and alpha_j = factor / gamma_j.
double conversion_factor(const Vector& betas, Eigen::Index j) {
  double f = 2.0 * ((j % 2 == 0) ? 1.0 : -1.0) * betas[j];
  for (Eigen::Index l = 0; l < betas.size(); ++l)
    if (l != j) f *= (betas[l] + betas[j]) / (betas[l] - betas[j]);
  return f;
}

}  // namespace

Vector alpha_from_gamma(const Vector& betas, const Vector& gammas) {
  if (betas.size() != gammas.size()) throw InvalidInput("betas and gammas differ in length");
  check_betas(betas);
  Vector alphas(betas.size());
  for (Eigen::Index j = 0; j < betas.size(); ++j) {
    if (!(gammas[j] > 0)) throw InvalidInput("gammas must be positive");
    alphas[j] = conversion_factor(betas, j) / gammas[j];
  }
  return alphas;
}

Vector gamma_from_alpha(const Vector& betas, const Vector& alphas) {
  if (betas.size() != alphas.size()) throw InvalidInput("betas and alphas differ in length");
  check_betas(betas);
  Vector gammas(betas.size());
  for (Eigen::Index j = 0; j < betas.size(); ++j) {
    if (!(alphas[j] > 0)) throw InvalidInput("alphas must be positive");
    gammas[j] = conversion_factor(betas, j) / alphas[j];
  }
  return gammas;
}

std::vector<CrestLine> crest_lines(const SolitonSpec& spec, int time_sign) {
  spec.validate();
  if (time_sign != 1 && time_sign != -1) throw InvalidInput("time_sign must be +1 or -1");
  const int n = spec.n();
  std::vector<CrestLine> lines;
  // Near soliton j every other column is carried by one exponential: the
  // growing one for slower solitons when t -> +inf, the decaying one for
  // faster ones, and the reverse for t -> -inf. The determinant then reduces
  // to two Vandermonde terms in the exponents k_l.
  for (int j = 0; j < n; ++j) {
    std::vector<double> k(n);
    for (int l = 0; l < n; ++l) {
      if (l == j) continue;
      const bool slower = spec.betas[l] < spec.betas[j];
      const bool grows = (time_sign > 0) ? slower : !slower;
      k[l] = grows ? spec.betas[l] : -spec.betas[l];
    }
    auto vandermonde = [&](double kj) {
      std::vector<double> kk = k;
      kk[j] = kj;
      double v = 1.0;
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) v *= kk[b] - kk[a];
      return v;
    };
    const double vp = vandermonde(spec.betas[j]);
    const double vm = vandermonde(-spec.betas[j]);
    const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
    const double ratio = spec.alphas[j] * vp / (sgn * vm);
    if (!(ratio > 0)) throw DegeneracyError("crest_lines: dominant minors have inconsistent signs");
    CrestLine c;
    c.beta = spec.betas[j];
    c.speed = 4.0 * c.beta * c.beta;
    c.phase = 0.5 * std::log(ratio);
    c.time_sign = time_sign;
    lines.push_back(c);
  }
  return lines;
}

}  // namespace kdvist
