#include "kdvist/pde.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kdvist {

void PdeState::validate() const {
  if (modes < 256 || (modes & (modes - 1)) != 0)
    throw InvalidInput("PDE state: modes must be a power of two >= 256");
  if (!(period > 0)) throw InvalidInput("PDE state: period must be positive");
  if (values.size() != modes) throw InvalidInput("PDE state: values length differs from modes");
  if (!values.allFinite()) throw InvalidInput("PDE state: non-finite values");
}

PdeState PdeState::sample(const std::function<double(double)>& f, double x0, double period, int modes,
                          double time) {
  PdeState s;
  s.period = period;
  s.modes = modes;
  s.x0 = x0;
  s.time = time;
  s.values.resize(modes);
  for (int i = 0; i < modes; ++i) s.values[i] = f(s.x(i));
  s.validate();
  return s;
}

struct KdvIntegrator::Coeffs {
  CVector E, E2, Q, f1, f2, f3;
  Eigen::FFT<double> fft;
};

KdvIntegrator::KdvIntegrator(double period, int modes) : period_(period), modes_(modes) {
  PdeState probe;
  probe.period = period;
  probe.modes = modes;
  probe.values = Vector::Zero(modes);
  probe.validate();
  // half spectrum: m = 0..modes/2
  const int nh = modes / 2 + 1;
  k_.resize(nh);
  mask_.resize(nh);
  const double base = 2 * kPi / period;
  for (int m = 0; m < nh; ++m) {
    k_[m] = base * m;
    mask_[m] = (m < modes / 3) ? 1.0 : 0.0;
    if (mask_[m] > 0) kmax_retained_ = k_[m];
  }
  k_[nh - 1] = 0.0;  // Nyquist carries no derivative
  co_ = std::make_shared<Coeffs>();
  co_->fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
}

double KdvIntegrator::max_stable_dt(double sup_u) const {
  // the linear part is exact; the explicit budget is the advective rate 6|u|k
  const double rate = 6 * std::max(sup_u, 1e-3) * kmax_retained_;
  return 2.5 / rate;
}

void KdvIntegrator::prepare(double h) {
  const int nh = modes_ / 2 + 1;
  if (co_h_ == h && co_->E.size() == nh) return;
  const int M = 32;
  Coeffs& c = *co_;
  c.E.resize(nh);
  c.E2.resize(nh);
  c.Q.resize(nh);
  c.f1.resize(nh);
  c.f2.resize(nh);
  c.f3.resize(nh);
  for (int j = 0; j < nh; ++j) {
    const Complex L(0.0, k_[j] * k_[j] * k_[j]);
    c.E[j] = std::exp(h * L);
    c.E2[j] = std::exp(h * L / 2.0);
    Complex q = 0, a = 0, b = 0, d = 0;
    for (int m = 0; m < M; ++m) {
      const Complex r = std::exp(Complex(0, 2 * kPi * (m + 0.5) / M));
      const Complex z = h * L + r;
      const Complex ez = std::exp(z), ez2 = std::exp(z / 2.0);
      const Complex z3 = z * z * z;
      q += (ez2 - 1.0) / z;
      a += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
      b += (2.0 + z + ez * (z - 2.0)) / z3;
      d += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
    }
    c.Q[j] = h * q / double(M);
    c.f1[j] = h * a / double(M);
    c.f2[j] = h * b / double(M);
    c.f3[j] = h * d / double(M);
  }
  co_h_ = h;
}

void KdvIntegrator::nonlinear(const CVector& vh, CVector& out, double* sup) {
  Vector u;
  co_->fft.inv(u, vh);
  if (sup) *sup = u.cwiseAbs().maxCoeff();
  const Vector sq = u.cwiseProduct(u);
  co_->fft.fwd(out, sq);
  // -6 u u_x moved to the right-hand side: u_t = -u_xxx + 3 (u^2)_x
  for (Eigen::Index j = 0; j < out.size(); ++j) out[j] *= Complex(0.0, 3.0 * k_[j] * mask_[j]);
}

void KdvIntegrator::check(const PdeState& s) const {
  s.validate();
  if (std::abs(s.period - period_) > 1e-12 * period_ || s.modes != modes_)
    throw InvalidInput("PDE state does not match the integrator grid");
}

PdeState KdvIntegrator::step(const PdeState& s, double dt) {
  check(s);
  if (!(dt > 0)) throw InvalidInput("PDE step: dt must be positive");
  const double sup0 = s.values.cwiseAbs().maxCoeff();
  if (dt > max_stable_dt(sup0)) {
    std::ostringstream os;
    os << "PDE step: dt=" << dt << " exceeds the stability bound " << max_stable_dt(sup0);
    throw InvalidInput(os.str());
  }
  if (initial_sup_ == 0.0) initial_sup_ = sup0;
  prepare(dt);
  const Coeffs& c = *co_;
  CVector vh;
  co_->fft.fwd(vh, s.values);
  CVector Nv, Na, Nb, Nc, a, b, cc;
  double sup = 0;
  nonlinear(vh, Nv, &sup);
  a = c.E2.cwiseProduct(vh) + c.Q.cwiseProduct(Nv);
  nonlinear(a, Na, nullptr);
  b = c.E2.cwiseProduct(vh) + c.Q.cwiseProduct(Na);
  nonlinear(b, Nb, nullptr);
  cc = c.E2.cwiseProduct(a) + c.Q.cwiseProduct(2.0 * Nb - Nv);
  nonlinear(cc, Nc, nullptr);
  vh = c.E.cwiseProduct(vh) + Nv.cwiseProduct(c.f1) + 2.0 * (Na + Nb).cwiseProduct(c.f2) +
       Nc.cwiseProduct(c.f3);
  PdeState r = s;
  co_->fft.inv(r.values, vh);
  r.time = s.time + dt;
  const double sup1 = r.values.cwiseAbs().maxCoeff();
  if (!std::isfinite(sup1) || (initial_sup_ > 0 && sup1 > blowup_factor * initial_sup_)) {
    std::ostringstream os;
    os << "PDE blow-up at t=" << r.time << ": sup|u| = " << sup1;
    throw BlowUp(os.str());
  }
  return r;
}

PdeState KdvIntegrator::evolve(const PdeState& s, double t_final, double dt) {
  check(s);
  if (t_final < s.time) throw InvalidInput("PDE evolve: t_final precedes the state time");
  if (!(dt > 0)) throw InvalidInput("PDE evolve: dt must be positive");
  const double span = t_final - s.time;
  PdeState cur = s;
  initial_sup_ = s.values.cwiseAbs().maxCoeff();
  if (span == 0) return cur;
  const long n = std::max<long>(1, static_cast<long>(std::ceil(span / dt - 1e-9)));
  const double h = span / n;
  for (long i = 0; i < n; ++i) cur = step(cur, h);
  cur.time = t_final;
  return cur;
}

std::vector<PdeState> KdvIntegrator::evolve_to(const PdeState& s, const std::vector<double>& times, double dt) {
  std::vector<PdeState> out;
  PdeState cur = s;
  const double sup0 = s.values.cwiseAbs().maxCoeff();
  for (double t : times) {
    cur = evolve(cur, t, dt);
    initial_sup_ = sup0;
    out.push_back(cur);
  }
  return out;
}

Conserved KdvIntegrator::conserved(const PdeState& s) const {
  check(s);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  CVector vh;
  Vector ux;
  fft.fwd(vh, s.values);
  for (Eigen::Index j = 0; j < vh.size(); ++j) vh[j] *= Complex(0, k_[j]);
  fft.inv(ux, vh);
  Conserved c;
  const double h = s.dx();
  for (int i = 0; i < modes_; ++i) {
    const double u = s.values[i];
    c.mass += h * u;
    c.momentum += h * u * u;
    c.energy += h * (u * u * u + 0.5 * ux[i] * ux[i]);
  }
  return c;
}

double KdvIntegrator::spectral_tail(const PdeState& s) const {
  check(s);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  CVector vh;
  fft.fwd(vh, s.values);
  double peak = 0, tail = 0;
  const double cut = 0.9 * kmax_retained_;
  for (Eigen::Index j = 0; j < vh.size(); ++j) {
    const double a = std::abs(vh[j]);
    peak = std::max(peak, a);
    if (mask_[j] > 0 && std::abs(k_[j]) >= cut) tail = std::max(tail, a);
  }
  return peak > 0 ? tail / peak : 0.0;
}

GridPotential KdvIntegrator::resample(const PdeState& s, double x0, double dx, int n, double decay_rate) const {
  check(s);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  CVector vh;
  fft.fwd(vh, s.values);
  GridPotential g;
  g.x0 = x0;
  g.dx = dx;
  g.decay_rate = decay_rate;
  g.values.resize(n);
  const double base = 2 * kPi / period_;
  const int half = modes_ / 2;
  for (int i = 0; i < n; ++i) {
    const double xi = x0 + dx * i - s.x0;
    const double r = xi / s.dx();
    const double rr = std::round(r);
    if (std::abs(r - rr) < 1e-9) {
      long idx = static_cast<long>(rr) % modes_;
      if (idx < 0) idx += modes_;
      g.values[i] = s.values[idx];
      continue;
    }
    // real series: c_0 + 2 Re sum_{m=1}^{half-1} c_m e^{i m base x} + Nyquist as cosine
    const Complex w = std::exp(Complex(0, base * xi));
    Complex p = w, acc = 0;
    for (int m = 1; m < half; ++m) {
      acc += vh[m] * p;
      p *= w;
      if ((m & 255) == 0) p = std::exp(Complex(0, base * xi * (m + 1)));
    }
    double v = vh[0].real() + 2 * acc.real() + vh[half].real() * std::cos(base * half * xi);
    g.values[i] = v / modes_;
  }
  return g;
}

PdeState pde_step(const PdeState& s, double dt) {
  KdvIntegrator I(s.period, s.modes);
  return I.step(s, dt);
}

PdeState pde_evolve(const PdeState& s, double t_final, double dt) {
  KdvIntegrator I(s.period, s.modes);
  return I.evolve(s, t_final, dt);
}

}  // namespace kdvist
