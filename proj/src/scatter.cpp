#include "kdvist/scatter.hpp"

#include "kdvist/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kdvist {

namespace {

constexpr std::array<double, 6> kFrac = {1.0 / 9, 1.0 / 5, 3.0 / 10, 7.0 / 10, 4.0 / 5, 8.0 / 9};

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = b1 - 5179.0 / 57600, e3 = b3 - 7571.0 / 16695, e4 = b4 - 393.0 / 640,
                 e5 = b5 + 92097.0 / 339200, e6 = b6 - 187.0 / 2100, e7 = -1.0 / 40;

using State = std::array<Complex, 2>;

// One DP step of m'' = u m + sigma 2ik m' with stage potentials us[0..6]
// (us[5] == us[6] is the end point). Returns the scaled error estimate.
inline double dp_step(const Complex& two_ik_sigma, double h, const double* us, State& y) {
  auto f = [&](double u, const State& s) -> State { return {s[1], u * s[0] + two_ik_sigma * s[1]}; };
  const State k1 = f(us[0], y);
  State t;
  t = {y[0] + h * a21 * k1[0], y[1] + h * a21 * k1[1]};
  const State k2 = f(us[1], t);
  t = {y[0] + h * (a31 * k1[0] + a32 * k2[0]), y[1] + h * (a31 * k1[1] + a32 * k2[1])};
  const State k3 = f(us[2], t);
  t = {y[0] + h * (a41 * k1[0] + a42 * k2[0] + a43 * k3[0]),
       y[1] + h * (a41 * k1[1] + a42 * k2[1] + a43 * k3[1])};
  const State k4 = f(us[3], t);
  t = {y[0] + h * (a51 * k1[0] + a52 * k2[0] + a53 * k3[0] + a54 * k4[0]),
       y[1] + h * (a51 * k1[1] + a52 * k2[1] + a53 * k3[1] + a54 * k4[1])};
  const State k5 = f(us[4], t);
  t = {y[0] + h * (a61 * k1[0] + a62 * k2[0] + a63 * k3[0] + a64 * k4[0] + a65 * k5[0]),
       y[1] + h * (a61 * k1[1] + a62 * k2[1] + a63 * k3[1] + a64 * k4[1] + a65 * k5[1])};
  const State k6 = f(us[5], t);
  State yn = {y[0] + h * (b1 * k1[0] + b3 * k3[0] + b4 * k4[0] + b5 * k5[0] + b6 * k6[0]),
              y[1] + h * (b1 * k1[1] + b3 * k3[1] + b4 * k4[1] + b5 * k5[1] + b6 * k6[1])};
  const State k7 = f(us[6], yn);
  const Complex err0 = h * (e1 * k1[0] + e3 * k3[0] + e4 * k4[0] + e5 * k5[0] + e6 * k6[0] + e7 * k7[0]);
  const Complex err1 = h * (e1 * k1[1] + e3 * k3[1] + e4 * k4[1] + e5 * k5[1] + e6 * k6[1] + e7 * k7[1]);
  const double scale = 1.0 + std::max(std::abs(yn[0]), std::abs(yn[1]) * std::abs(h));
  const double err = std::max(std::abs(err0), std::abs(err1) * std::abs(h)) / scale;
  y = yn;
  return err;
}

void check_upper(Complex k) {
  if (k.imag() < 0) throw StripViolation("Jost solutions require Im k >= 0");
}

void check_nonzero(Complex k) {
  if (k == Complex(0.0, 0.0)) throw InvalidInput("k = 0 is excluded");
}

}  // namespace

JostSolver::JostSolver(const GridPotential& p, JostOptions opt) : pot_(p), opt_(opt) {
  pot_.validate();
  const int n = pot_.size();
  const double peak = pot_.values.cwiseAbs().maxCoeff();
  if (peak == 0) {
    lo_ = 0;
    hi_ = -1;
    return;
  }
  const double thr = opt_.trim_relative * peak;
  lo_ = 0;
  while (lo_ < n && std::abs(pot_.values[lo_]) <= thr) ++lo_;
  hi_ = n - 1;
  while (hi_ > lo_ && std::abs(pot_.values[hi_]) <= thr) --hi_;
  if (hi_ == lo_) {  // a single nonzero sample still needs a cell
    if (hi_ + 1 < n) ++hi_; else --lo_;
  }
  stage_.resize(hi_ - lo_);
  for (int c = lo_; c < hi_; ++c)
    for (int s = 0; s < 6; ++s) stage_[c - lo_][s] = interpolate(pot_.x(c) + kFrac[s] * pot_.dx);
  double wsum = 0, isum = 0;
  for (int i = lo_; i <= hi_; ++i) {
    wsum += std::abs(pot_.values[i]);
    isum += i * std::abs(pot_.values[i]);
  }
  match_ = static_cast<int>(std::lround(isum / wsum));
}

double JostSolver::interpolate(double xq) const {
  // Degree-7 Lagrange interpolation on the nearest eight samples.
  const int n = pot_.size();
  const double s = (xq - pot_.x0) / pot_.dx;
  int cell = static_cast<int>(std::floor(s));
  int start = std::clamp(cell - 3, 0, n - 8);
  double acc = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double si = start + i;
    if (s == si) return pot_.values[start + i];
    double w = 1.0;
    for (int j = 0; j < 8; ++j)
      if (j != i) w *= (s - (start + j)) / (si - (start + j));
    acc += w * pot_.values[start + i];
  }
  return acc;
}

template <int Dir>
void JostSolver::substep(Complex k, double xa, double h, State& y, int depth) const {
  // Halved step with on-the-fly interpolation; Dir fixes the ODE sign.
  if (depth > opt_.max_halvings)
    throw IntegrationError("non-convergent integration (step-halving floor reached)");
  const double cs[7] = {0.0, c2, c3, c4, c5, 1.0, 1.0};
  double us[7];
  for (int s = 0; s < 7; ++s) us[s] = interpolate(xa + cs[s] * h);
  State trial = y;
  const double err = dp_step(Complex(0, 2) * k * double(Dir), h, us, trial);
  if (err <= opt_.step_tol) {
    y = trial;
    return;
  }
  substep<Dir>(k, xa, 0.5 * h, y, depth + 1);
  substep<Dir>(k, xa + 0.5 * h, 0.5 * h, y, depth + 1);
}

template <int Dir>
void JostSolver::step_cell(Complex k, int cell, State& y) const {
  // Dir = +1: m_- from x_cell to x_{cell+1}; Dir = -1: m_+ from x_{cell+1} to x_cell.
  const auto& st = stage_[cell - lo_];
  double us[7];
  double h;
  double xa;
  if constexpr (Dir > 0) {
    us[0] = pot_.values[cell];
    us[1] = st[1];
    us[2] = st[2];
    us[3] = st[4];
    us[4] = st[5];
    us[5] = us[6] = pot_.values[cell + 1];
    h = pot_.dx;
    xa = pot_.x(cell);
  } else {
    us[0] = pot_.values[cell + 1];
    us[1] = st[4];
    us[2] = st[3];
    us[3] = st[1];
    us[4] = st[0];
    us[5] = us[6] = pot_.values[cell];
    h = -pot_.dx;
    xa = pot_.x(cell + 1);
  }
  State trial = y;
  const double err = dp_step(Complex(0, 2) * k * double(Dir), h, us, trial);
  if (err <= opt_.step_tol) {
    y = trial;
    return;
  }
  substep<Dir>(k, xa, 0.5 * h, y, 1);
  substep<Dir>(k, xa + 0.5 * h, 0.5 * h, y, 1);
}

void JostSolver::integrate_minus(Complex k, CVector& m, CVector& dm) const {
  check_upper(k);
  const int len = std::max(0, hi_ - lo_ + 1);
  m.resize(len);
  dm.resize(len);
  if (len == 0) return;
  State y = {Complex(1, 0), Complex(0, 0)};
  m[0] = y[0];
  dm[0] = y[1];
  for (int c = lo_; c < hi_; ++c) {
    step_cell<1>(k, c, y);
    m[c - lo_ + 1] = y[0];
    dm[c - lo_ + 1] = y[1];
  }
}

void JostSolver::integrate_plus(Complex k, CVector& m, CVector& dm) const {
  check_upper(k);
  const int len = std::max(0, hi_ - lo_ + 1);
  m.resize(len);
  dm.resize(len);
  if (len == 0) return;
  State y = {Complex(1, 0), Complex(0, 0)};
  m[len - 1] = y[0];
  dm[len - 1] = y[1];
  for (int c = hi_ - 1; c >= lo_; --c) {
    step_cell<-1>(k, c, y);
    m[c - lo_] = y[0];
    dm[c - lo_] = y[1];
  }
}

JostPair JostSolver::solve(Complex k) const {
  check_upper(k);
  JostPair jp;
  jp.k = k;
  const int n = pot_.size();
  jp.x = pot_.grid();
  jp.m_plus = CVector::Ones(n);
  jp.dm_plus = CVector::Zero(n);
  jp.m_minus = CVector::Ones(n);
  jp.dm_minus = CVector::Zero(n);
  if (zero_potential()) return jp;
  CVector mp, dmp, mm, dmm;
  integrate_plus(k, mp, dmp);
  integrate_minus(k, mm, dmm);
  const int len = hi_ - lo_ + 1;
  jp.m_plus.segment(lo_, len) = mp;
  jp.dm_plus.segment(lo_, len) = dmp;
  jp.m_minus.segment(lo_, len) = mm;
  jp.dm_minus.segment(lo_, len) = dmm;
  // Outside the support u = 0 and m = A + B e^{-/+ 2ikx} continues exactly.
  const Complex two_ik = Complex(0, 2) * k;
  for (int i = 0; i < lo_; ++i) {
    const double d = pot_.x(i) - pot_.x(lo_);
    if (k == Complex(0, 0)) {
      jp.m_plus[i] = mp[0] + dmp[0] * d;
      jp.dm_plus[i] = dmp[0];
    } else {
      const Complex e = std::exp(-two_ik * d);
      const Complex B = dmp[0] / (-two_ik);
      jp.m_plus[i] = (mp[0] - B) + B * e;
      jp.dm_plus[i] = dmp[0] * e;
    }
  }
  for (int i = hi_ + 1; i < n; ++i) {
    const double d = pot_.x(i) - pot_.x(hi_);
    if (k == Complex(0, 0)) {
      jp.m_minus[i] = mm[len - 1] + dmm[len - 1] * d;
      jp.dm_minus[i] = dmm[len - 1];
    } else {
      const Complex e = std::exp(two_ik * d);
      const Complex B = dmm[len - 1] / two_ik;
      jp.m_minus[i] = (mm[len - 1] - B) + B * e;
      jp.dm_minus[i] = dmm[len - 1] * e;
    }
  }
  return jp;
}

Complex JostSolver::a_at(Complex k, int match) const {
  check_nonzero(k);
  check_upper(k);
  if (zero_potential()) return Complex(1, 0);
  match = std::clamp(match, lo_, hi_);
  State ym = {Complex(1, 0), Complex(0, 0)};
  for (int c = lo_; c < match; ++c) step_cell<1>(k, c, ym);
  State yp = {Complex(1, 0), Complex(0, 0)};
  for (int c = hi_ - 1; c >= match; --c) step_cell<-1>(k, c, yp);
  const Complex two_ik = Complex(0, 2) * k;
  return yp[0] * ym[0] - (yp[0] * ym[1] - yp[1] * ym[0]) / two_ik;
}

Complex JostSolver::a(Complex k) const { return a_at(k, match_); }

JostSolver::Representation JostSolver::representation(Complex k) const {
  check_nonzero(k);
  check_upper(k);
  Representation r{Complex(1, 0), Complex(0, 0), Complex(1, 0), Complex(0, 0)};
  if (zero_potential()) return r;
  const Complex two_ik = Complex(0, 2) * k;
  State y = {Complex(1, 0), Complex(0, 0)};
  // Trapezoid sums over the support nodes; the potential vanishes beyond them.
  auto weight = [&](int i) { return (i == lo_ || i == hi_) ? 0.5 * pot_.dx : pot_.dx; };
  Complex ia = 0, ib = 0;
  const Complex phase_step = std::exp(-two_ik * pot_.dx);
  Complex phase = std::exp(-two_ik * pot_.x(lo_));
  for (int i = lo_;; ++i) {
    const Complex um = pot_.values[i] * y[0];
    ia += weight(i) * um;
    ib += weight(i) * phase * um;
    if (i == hi_) break;
    step_cell<1>(k, i, y);
    phase = ((i - lo_ + 1) % 64 == 0) ? std::exp(-two_ik * pot_.x(i + 1)) : phase * phase_step;
  }
  r.inv_t = 1.0 - ia / two_ik;
  r.r_over_t = ib / two_ik;
  r.r_over_t_end = y[1] * std::exp(-two_ik * pot_.x(hi_)) / two_ik;
  r.inv_t_end = y[0] - y[1] / two_ik;
  return r;
}

JostPair jost(const GridPotential& potential, Complex k) { return JostSolver(potential).solve(k); }

Complex a_of_k(const GridPotential& potential, Complex k) {
  const JostSolver s(potential);
  const Complex a0 = s.a(k);
  if (!s.zero_potential()) {
    // Wronskian constancy between two further matching points.
    const int span = s.support_end() - s.support_begin();
    for (int q : {s.support_begin() + span / 4, s.support_begin() + (3 * span) / 4}) {
      const Complex aq = s.a_at(k, q);
      if (std::abs(aq - a0) > 1e-7 * std::max(1.0, std::abs(a0))) {
        std::ostringstream os;
        os << "a(k): matching points disagree at k=" << k << " (" << a0 << " vs " << aq << ")";
        throw ConsistencyError(os.str());
      }
    }
  }
  return a0;
}

Complex reflection(const GridPotential& potential, Complex k) {
  if (k.imag() < 0 || k.imag() >= potential.decay_rate)
    throw StripViolation("reflection: need 0 <= Im k < decay rate");
  const JostSolver s(potential);
  const auto r = s.representation(k);
  return r.r_over_t / r.inv_t;
}

double default_kappa_max(const GridPotential& potential) {
  const double peak = potential.values.cwiseAbs().maxCoeff();
  return 1.05 * std::sqrt(peak) + 0.1;
}

BoundStateScan scan_bound_states(const JostSolver& solver, double kappa_max, double tol,
                                 double dkappa) {
  BoundStateScan out;
  if (!(kappa_max > 0)) throw InvalidInput("kappa_max must be positive");
  if (!(tol > 0)) throw InvalidInput("tol must be positive");
  out.kappa_min = std::min(1e-4, 0.5 * kappa_max);
  out.kappa_max = kappa_max;
  out.dkappa = dkappa;
  if (solver.zero_potential()) return out;
  auto f = [&](double kappa) { return solver.a(Complex(0, kappa)).real(); };

  std::vector<double> ks;
  for (double kk = out.kappa_min; kk < kappa_max; kk += dkappa) ks.push_back(kk);
  ks.push_back(kappa_max);
  std::vector<double> fs(ks.size());
  for (std::size_t i = 0; i < ks.size(); ++i) fs[i] = f(ks[i]);

  auto bisect = [&](double lo, double flo, double hi) {
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = f(mid);
      if (fm == 0) return mid;
      if ((fm > 0) == (flo > 0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  };

  for (std::size_t i = 0; i + 1 < ks.size(); ++i) {
    if (fs[i] == 0) {
      out.betas.push_back(ks[i]);
      continue;
    }
    if ((fs[i] > 0) != (fs[i + 1] > 0) && fs[i + 1] != 0) {
      out.betas.push_back(bisect(ks[i], fs[i], ks[i + 1]));
      continue;
    }
    // A local minimum of |a| without a sign change may hide a close pair of
    // zeros inside one cell: probe the cell on a finer grid.
    const bool local_min = i > 0 && std::abs(fs[i]) < std::abs(fs[i - 1]) &&
                           std::abs(fs[i]) < std::abs(fs[i + 1]) &&
                           (fs[i - 1] > 0) == (fs[i] > 0) && fs[i - 1] != 0;
    if (!local_min) continue;
    for (std::size_t cell : {i - 1, i}) {
      const int sub = 16;
      double prev_k = ks[cell], prev_f = fs[cell];
      for (int s = 1; s <= sub; ++s) {
        const double kk = ks[cell] + (ks[cell + 1] - ks[cell]) * s / sub;
        const double fk = (s == sub) ? fs[cell + 1] : f(kk);
        if ((fk > 0) != (prev_f > 0) && fk != 0 && prev_f != 0) {
          out.betas.push_back(bisect(prev_k, prev_f, kk));
          std::ostringstream os;
          os << "scan resolution: two sign changes inside the cell [" << ks[cell] << ", "
             << ks[cell + 1] << "]";
          out.warnings.push_back(os.str());
        }
        prev_k = kk;
        prev_f = fk;
      }
    }
  }
  std::sort(out.betas.begin(), out.betas.end());
  out.betas.erase(std::unique(out.betas.begin(), out.betas.end(),
                              [&](double a, double b) { return std::abs(a - b) < 10 * tol; }),
                  out.betas.end());
  return out;
}

std::vector<double> bound_states(const GridPotential& potential, double kappa_max, double tol) {
  const JostSolver s(potential);
  return scan_bound_states(s, kappa_max, tol).betas;
}

namespace {

Complex winding(const JostSolver& solver, double center, double radius, int points, double& amin) {
  const double h = 1e-6 * std::max(1.0, radius);
  Complex acc = 0;
  for (int p = 0; p < points; ++p) {
    const double th = 2 * kPi * p / points;
    const Complex dir = std::polar(1.0, th);
    const Complex k = Complex(0, center) + radius * dir;
    const Complex a = solver.a(k);
    amin = std::min(amin, std::abs(a));
    const Complex da = (solver.a(k + h) - solver.a(k - h)) / (2 * h);
    acc += da / a * Complex(0, 1) * radius * dir;
  }
  return acc * (2 * kPi / points) / Complex(0, 2 * kPi);
}

}  // namespace

int count_bound_states_contour(const JostSolver& solver, double center, double radius,
                               int points) {
  if (!(radius > 0) || !(center - radius > 0))
    throw StripViolation("contour must lie strictly inside the upper half plane");
  if (solver.zero_potential()) return 0;
  // points <= 0 requests doubling from 64 nodes until two levels agree.
  const bool adaptive = points <= 0;
  int npts = adaptive ? 64 : points;
  double amin = 1e300;
  Complex w = winding(solver, center, radius, npts, amin);
  if (adaptive) {
    while (npts < 16384) {
      npts *= 2;
      const Complex w2 = winding(solver, center, radius, npts, amin);
      const bool settled = std::abs(w2 - w) < 0.05 && std::abs(w2.real() - std::round(w2.real())) < 0.1;
      w = w2;
      if (settled) break;
    }
  }
  if (amin < 1e-8) throw ConsistencyError("contour passes too close to a zero of a(k)");
  const double r = std::round(w.real());
  if (std::abs(w.real() - r) > 0.1 || std::abs(w.imag()) > 0.1) {
    std::ostringstream os;
    os << "winding number not near an integer: " << w;
    throw ConsistencyError(os.str());
  }
  return static_cast<int>(r);
}

int count_bound_states_contour(const GridPotential& potential, double center, double radius,
                               int points) {
  return count_bound_states_contour(JostSolver(potential), center, radius, points);
}

int bound_state_count_cap(const GridPotential& potential) {
  const Vector w = trapezoid_weights(potential.size(), potential.dx);
  double integral = 0;
  for (int i = 0; i < potential.size(); ++i)
    integral += w[i] * std::abs(potential.x(i) * potential.values[i]);
  const double y = 1.0 + integral;
  return static_cast<int>(std::ceil(y)) - 1;  // greatest integer strictly below y
}

std::vector<NormingResult> norming_details(const JostSolver& solver, const std::vector<double>& betas) {
  std::vector<NormingResult> out;
  if (betas.empty()) return out;
  if (solver.zero_potential()) throw InvalidInput("zero potential has no bound states");
  const GridPotential& p = solver.potential();
  const int lo = solver.support_begin(), hi = solver.support_end();
  const int len = hi - lo + 1;
  const Vector w = len >= 12 ? gregory_weights(len, p.dx) : trapezoid_weights(len, p.dx);
  const int node0 = std::clamp(static_cast<int>(std::lround(-p.x0 / p.dx)), lo, hi);
  auto segment_integral = [&](const std::vector<double>& f, double dx) {
    const int m = static_cast<int>(f.size());
    if (m < 2) return 0.0;
    const Vector w = m >= 12 ? gregory_weights(m, dx) : trapezoid_weights(m, dx);
    double acc = 0;
    for (int i = 0; i < m; ++i) acc += w[i] * f[i] * f[i];
    return acc;
  };
  for (double beta : betas) {
    if (!(beta > 0)) throw InvalidInput("bound states must be positive");
    const Complex k(0, beta);
    // f_+ is only trustworthy where it has not decayed below rounding level
    // (integrating leftward amplifies the e^{-beta x} mode), so the left part
    // of the integral uses f_- = c f_+ integrated from the left instead.
    CVector m, dm, mm, dmm;
    solver.integrate_plus(k, m, dm);
    solver.integrate_minus(k, mm, dmm);
    std::vector<double> fp(len), fm(len);
    int im = 0;
    for (int i = 0; i < len; ++i) {
      fp[i] = std::exp(-beta * p.x(lo + i)) * m[i].real();
      fm[i] = std::exp(beta * p.x(lo + i)) * mm[i].real();
      if (std::abs(fp[i] * fm[i]) > std::abs(fp[im] * fm[im])) im = i;
    }
    const double fmax = std::abs(fp[im]);
    if (!(fmax > 0) || fm[im] == 0) throw ConsistencyError("bound state eigenfunction vanishes");
    const double c = fm[im] / fp[im];
    // Proportionality check one decay length either side of the matching node.
    const int off = std::max(1, static_cast<int>(std::lround(1.0 / (beta * p.dx))));
    for (int i : {im - off, im + off}) {
      if (i < 0 || i >= len) continue;
      if (std::abs(fm[i] / c - fp[i]) > 1e-6 * fmax) {
        std::ostringstream os;
        os << "f_+ is not normalizable at beta=" << beta << " (Jost solutions not proportional)";
        throw ConsistencyError(os.str());
      }
    }
    std::vector<double> left(fm.begin(), fm.begin() + im + 1), right(fp.begin() + im, fp.end());
    for (double& v : left) v /= c;
    double integral = segment_integral(left, p.dx) + segment_integral(right, p.dx);
    integral += std::exp(2 * beta * p.x(lo)) / (2 * beta) / (c * c);
    integral += std::exp(-2 * beta * p.x(hi)) / (2 * beta);
    NormingResult r;
    r.gamma = 1.0 / integral;

    // Independent value: gamma = (m_-(x0)/m_+(x0)) e^{2 beta x0} / (d/dkappa a(i kappa)),
    // with the derivative by complex step (kappa -> kappa + i h is k -> i kappa - h).
    const double hstep = 1e-20;
    const double da = solver.a(Complex(-hstep, beta)).imag() / hstep;
    // The identity holds for every x0; evaluate it where m_+ m_- is largest so
    // that a node of the eigenfunction cannot spoil the ratio.
    const double xc = p.x(lo + im);
    r.gamma_check = (mm[im].real() / m[im].real()) * std::exp(2 * beta * xc) / da;
    r.m_plus_x0 = m[node0 - lo].real();
    if (!(r.gamma > 0) || std::abs(r.gamma - r.gamma_check) > 1e-4 * r.gamma) {
      std::ostringstream os;
      os.precision(12);
      os << "norming constant formulas disagree at beta=" << beta << ": " << r.gamma << " vs "
         << r.gamma_check;
      throw ConsistencyError(os.str());
    }
    out.push_back(r);
  }
  return out;
}

std::vector<double> norming_constants(const GridPotential& potential, const std::vector<double>& betas) {
  const JostSolver s(potential);
  std::vector<double> g;
  for (const auto& r : norming_details(s, betas)) g.push_back(r.gamma);
  return g;
}

void ScatteringData::normalize() {
  if (log_gammas.size() != gammas.size()) {
    log_gammas.resize(gammas.size());
    for (Eigen::Index j = 0; j < gammas.size(); ++j) log_gammas[j] = std::log(gammas[j]);
  }
  validate();
}

void ScatteringData::validate() const {
  if (kgrid.size() != R.size()) throw InvalidInput("scattering data: kgrid and R differ in length");
  if (betas.size() != gammas.size() || betas.size() != log_gammas.size())
    throw InvalidInput("scattering data: betas and gammas differ in length");
  for (Eigen::Index j = 0; j < betas.size(); ++j) {
    if (!(betas[j] > 0)) throw InvalidInput("scattering data: betas must be positive");
    if (j > 0 && !(betas[j] > betas[j - 1]))
      throw InvalidInput("scattering data: betas must be strictly ascending");
    if (!std::isfinite(log_gammas[j])) throw InvalidInput("scattering data: gammas must be positive");
  }
  for (Eigen::Index i = 0; i < kgrid.size(); ++i) {
    if (kgrid[i] == 0) throw InvalidInput("scattering data: k = 0 is excluded from the grid");
    if (i > 0 && !(kgrid[i] > kgrid[i - 1])) throw InvalidInput("scattering data: kgrid must increase");
  }
  // Conjugate symmetry wherever -k is also a node.
  const Eigen::Index n = kgrid.size();
  for (Eigen::Index i = 0; i < n / 2; ++i) {
    const Eigen::Index j = n - 1 - i;
    if (std::abs(kgrid[i] + kgrid[j]) > 1e-12 * std::abs(kgrid[i])) continue;
    if (std::abs(R[i] - std::conj(R[j])) > 1e-9 * std::max(1.0, std::abs(R[i])))
      throw InvalidInput("scattering data: R(-k) != conj(R(k))");
  }
}

bool ScatteringData::reflectionless(double tol) const {
  return R.size() == 0 || R.cwiseAbs().maxCoeff() <= tol;
}

ScatteringData evolve_scattering(const ScatteringData& data, double t) {
  ScatteringData out = data;
  if (out.log_gammas.size() != out.gammas.size()) out.normalize();
  const double dt = t - data.time;
  for (Eigen::Index i = 0; i < out.kgrid.size(); ++i) {
    const double k = out.kgrid[i];
    out.R[i] *= std::polar(1.0, 8 * k * k * k * dt);
  }
  for (Eigen::Index j = 0; j < out.betas.size(); ++j) {
    const double b = out.betas[j];
    out.log_gammas[j] += 8 * b * b * b * dt;
    out.gammas[j] = std::exp(out.log_gammas[j]);  // may overflow; logs stay exact
  }
  out.time = t;
  return out;
}

ScatterResult scatter(const GridPotential& potential, const ScatterOptions& opt) {
  ScatterResult res;
  const JostSolver solver(potential);
  const Vector kgrid = opt.dk_min < opt.dk ? make_graded_kgrid(opt.kmax, opt.dk, opt.dk_min, opt.grading)
                                            : make_kgrid(opt.kmax, opt.dk);
  const Eigen::Index nk = kgrid.size();
  res.data.kgrid = kgrid;
  res.data.R.resize(nk);
  res.abs_t.resize(nk);
  res.unitarity_residual.resize(nk);
  Vector disc(nk);
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index i = 0; i < nk; ++i) {
    const auto r = solver.representation(Complex(kgrid[i], 0));
    const Complex R = r.r_over_t / r.inv_t;
    const double T = 1.0 / std::abs(r.inv_t);
    res.data.R[i] = R;
    res.abs_t[i] = T;
    res.unitarity_residual[i] = T * T + std::norm(R) - 1.0;
    disc[i] = std::abs(r.r_over_t - r.r_over_t_end);
  }
  res.endpoint_discrepancy = nk ? disc.maxCoeff() : 0.0;

  const double kmax = opt.kappa_max > 0 ? opt.kappa_max : default_kappa_max(potential);
  const auto scan = scan_bound_states(solver, kmax, opt.tol, opt.dkappa);
  res.warnings = scan.warnings;
  const auto norm = norming_details(solver, scan.betas);
  const int mu = static_cast<int>(scan.betas.size());
  res.data.betas.resize(mu);
  res.data.gammas.resize(mu);
  for (int j = 0; j < mu; ++j) {
    res.data.betas[j] = scan.betas[j];
    res.data.gammas[j] = norm[j].gamma;
    res.nondegeneracy_sum += 1.0 / std::abs(norm[j].m_plus_x0);
  }
  res.data.time = 0.0;
  res.data.normalize();

  res.cap = bound_state_count_cap(potential);
  if (!solver.zero_potential()) {
    // Keep the circle clear of k = 0, where a(k) may blow up like 1/k.
    const double lo = 0.5 * std::min(mu ? scan.betas[0] : 0.1, 0.1);
    res.contour_count = count_bound_states_contour(solver, 0.5 * (lo + kmax), 0.5 * (kmax - lo), 0);
    if (res.contour_count != mu) {
      std::ostringstream os;
      os << "contour count " << res.contour_count << " differs from sign-scan count " << mu;
      res.warnings.push_back(os.str());
    }
  } else {
    res.contour_count = 0;
  }
  if (mu > res.cap) res.warnings.push_back("bound-state count exceeds the integral cap");
  return res;
}

PerturbationReport perturbation_report(const ScatteringData& sd0, const ScatteringData& sdv,
                                       double eps, int cap, double c_bound) {
  PerturbationReport r;
  r.n = sd0.mu();
  r.mu = sdv.mu();
  r.cap = cap;
  r.eps = eps;
  r.c_bound = c_bound;
  r.hypothesis_ok = r.mu >= r.n;
  r.count_ok = r.hypothesis_ok && (cap < 0 || r.mu <= cap);
  if (!r.hypothesis_ok) {
    r.message = "perturbed data has fewer bound states than the reference";
    return r;
  }
  const int off = r.mu - r.n;
  for (int j = 0; j < r.n; ++j) {
    r.beta_margin = std::max(r.beta_margin, std::abs(sdv.betas[off + j] - sd0.betas[j]));
    r.gamma_margin = std::max(r.gamma_margin, std::abs(sdv.gammas[off + j] - sd0.gammas[j]));
  }
  for (int j = 0; j < off; ++j) r.extra_max = std::max(r.extra_max, sdv.betas[j]);
  r.betas_ok = r.beta_margin < eps || (r.n == 0);
  r.fitted_c = eps > 0 ? r.gamma_margin / eps : 0.0;
  r.gammas_ok = r.gamma_margin < c_bound * eps || (r.n == 0);
  r.extra_ok = r.extra_max < eps;
  return r;
}

}  // namespace kdvist
