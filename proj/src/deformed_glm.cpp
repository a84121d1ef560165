#include "kdvist/deformed_glm.hpp"

#include "kdvist/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kdvist {

void DeformedKernel::validate() const {
  if (!(eps > 0)) throw InvalidInput("deformed kernel: eps must be positive");
  if (decay_rate > 0 && !(eps < decay_rate)) throw StripViolation("deformed kernel: eps must be below the decay rate");
  for (Eigen::Index j = 0; j < top_betas.size(); ++j) {
    if (!(eps < top_betas[j])) throw InvalidInput("deformed kernel: eps must be below every retained beta");
    if (j > 0 && !(top_betas[j] > top_betas[j - 1])) throw InvalidInput("deformed kernel: betas must ascend");
  }
  if (kgrid.size() != R_strip.size()) throw InvalidInput("deformed kernel: kgrid and R differ in length");
}

bool DeformedKernel::has_continuous() const {
  for (Eigen::Index j = 0; j < R_strip.size(); ++j)
    if (R_strip[j] != Complex(0, 0)) return true;
  return false;
}

Vector DeformedKernel::continuous_lattice(double z0, double g, int count, double t, bool derivative) const {
  if (!has_continuous()) return Vector::Zero(count);
  const Vector w = kgrid_weights(kgrid);
  CVector coef(kgrid.size());
  for (Eigen::Index j = 0; j < kgrid.size(); ++j) {
    const double k = kgrid[j];
    const Complex ph(-24 * eps * k * k * t, 8 * k * (k * k - 3 * eps * eps) * t);
    coef[j] = w[j] * R_strip[j] * std::exp(ph) / kPi;
    if (derivative) coef[j] *= Complex(-2 * eps, 2 * k);
  }
  const double e = eps;
  check_phase_resolution(kgrid, coef, z0, z0 + g * (count - 1), [t, e](double k, double z) {
    return 2 * z + 24 * k * k * t - 24 * e * e * t;
  });
  Vector v = fourier_lattice(kgrid, coef, z0, g, count);
  for (int m = 0; m < count; ++m) v[m] *= std::exp(-2 * eps * (z0 + m * g - 4 * eps * eps * t));
  return v;
}

double DeformedKernel::continuous(double z, double t) const { return continuous_lattice(z, 1.0, 1, t)[0]; }

double DeformedKernel::continuous_dx(double z, double t) const {
  return continuous_lattice(z, 1.0, 1, t, true)[0];
}

Vector DeformedKernel::log_l(double x, double t) const {
  Vector l(top_betas.size());
  for (Eigen::Index j = 0; j < l.size(); ++j) {
    const double b = top_betas[j];
    l[j] = std::log(2.0) + top_log_gammas[j] - 2 * b * (x - 4 * b * b * t);
  }
  return l;
}

double DeformedKernel::discrete(double z, double t) const {
  const Vector l = log_l(z, t);
  double s = 0;
  for (Eigen::Index j = 0; j < l.size(); ++j) s += std::exp(l[j]);
  return s;
}

DeformedKernel build_deformed_kernel(const GridPotential& potential, const ScatteringData& perturbed,
                                     int n, double eps, const StripOptions& opt) {
  if (n < 0 || n > perturbed.mu())
    throw InvalidInput("deformed kernel: fewer bound states than the reference count n");
  ScatteringData sd = perturbed;
  if (sd.log_gammas.size() != sd.gammas.size()) sd.normalize();
  DeformedKernel K;
  K.eps = eps;
  K.decay_rate = potential.decay_rate;
  const int off = sd.mu() - n;
  K.top_betas = sd.betas.segment(off, n);
  K.top_log_gammas.resize(n);
  for (int j = 0; j < n; ++j) {
    const double b = K.top_betas[j];
    K.top_log_gammas[j] = sd.log_gammas[off + j] - 8 * b * b * b * sd.time;
  }
  K.validate();
  if (!(eps < potential.decay_rate)) throw StripViolation("deformed kernel: eps outside the strip");

  const JostSolver solver(potential);
  K.kgrid = make_kgrid(opt.kmax, opt.dk);
  K.R_strip.resize(K.kgrid.size());
  Vector amin(K.kgrid.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index j = 0; j < K.kgrid.size(); ++j) {
    const auto r = solver.representation(Complex(K.kgrid[j], eps));
    K.R_strip[j] = r.r_over_t / r.inv_t;
    amin[j] = std::abs(r.inv_t);
  }
  K.min_abs_a = amin.size() ? amin.minCoeff() : 1.0;
  if (K.min_abs_a < 1e-6) {
    std::ostringstream os;
    os << "refusing eps=" << eps << ": |a(k + i eps)| reaches " << K.min_abs_a;
    throw StripViolation(os.str());
  }
  return K;
}

double deformed_kernel_c(const GridPotential& potential, double eps, double z, double t) {
  const auto sd = scatter(potential).data;
  const DeformedKernel K = build_deformed_kernel(potential, sd, 0, eps);
  return K.continuous(z, t);
}

double deformed_kernel_c_dx(const GridPotential& potential, double eps, double z, double t) {
  const auto sd = scatter(potential).data;
  const DeformedKernel K = build_deformed_kernel(potential, sd, 0, eps);
  return K.continuous_dx(z, t);
}

double deformed_kernel_d(const std::vector<std::pair<double, double>>& top_pairs, double z, double t) {
  double s = 0;
  for (const auto& [b, g] : top_pairs) {
    if (!(b > 0) || !(g > 0)) throw InvalidInput("deformed kernel: pairs must be positive");
    s += 2 * g * std::exp(-2 * b * (z - 4 * b * b * t));
  }
  return s;
}

GammaSystem build_gamma_system(const Vector& betas, const Vector& log_L, const Vector& rhs) {
  const Eigen::Index n = betas.size();
  if (log_L.size() != n || rhs.size() != n) throw InvalidInput("Gamma system: size mismatch");
  GammaSystem g;
  g.log_L = log_L;
  g.rhs = rhs;
  g.Gamma.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index l = 0; l < n; ++l) g.Gamma(j, l) = 1.0 / (betas[j] + betas[l]);
  for (Eigen::Index j = 0; j < n; ++j) g.Gamma(j, j) += 2.0 * std::exp(-std::max(log_L[j], -700.0));
  return g;
}

double det_diag_plus(const Vector& d, const Matrix& C) {
  const int n = static_cast<int>(d.size());
  if (n == 0) return 1.0;
  if (n > 20) throw InvalidInput("det_diag_plus: too many rows for subset expansion");
  double total = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    double prod = 1.0;
    std::vector<int> rest;
    for (int j = 0; j < n; ++j) {
      if (mask & (1u << j)) prod *= d[j];
      else rest.push_back(j);
    }
    double minor = 1.0;
    if (!rest.empty()) {
      Matrix sub(rest.size(), rest.size());
      for (std::size_t a = 0; a < rest.size(); ++a)
        for (std::size_t b = 0; b < rest.size(); ++b) sub(a, b) = C(rest[a], rest[b]);
      minor = sub.determinant();
    }
    total += prod * minor;
  }
  return total;
}

GammaSolve solve_gamma(const GammaSystem& g, double tol) {
  const Eigen::Index n = g.rhs.size();
  GammaSolve s;
  if (n == 0) return s;
  // Symmetric Jacobi equilibration.
  Vector dsc(n);
  for (Eigen::Index j = 0; j < n; ++j) dsc[j] = 1.0 / std::sqrt(g.Gamma(j, j));
  const Matrix Gs = dsc.asDiagonal() * g.Gamma * dsc.asDiagonal();
  const Vector rs = dsc.asDiagonal() * g.rhs;
  Eigen::JacobiSVD<Matrix> svd(Gs);
  s.min_singular_value = svd.singularValues().minCoeff();
  if (!(s.min_singular_value > 1e-13)) throw SingularSystem("Gamma system is singular");
  Eigen::PartialPivLU<Matrix> lu(Gs);
  s.A = dsc.asDiagonal() * lu.solve(rs);

  // Cramer: the denominator splits into diagonal part and scaled Cauchy block.
  Matrix C(n, n);
  Vector dd(n);
  // Gs = diag(dd) + C with C the scaled Cauchy matrix [1/(beta_j + beta_l)].
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index l = 0; l < n; ++l) C(j, l) = (j == l) ? 0.0 : Gs(j, l);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double two_over_l = 2.0 * std::exp(-std::max(g.log_L[j], -700.0));
    const double cauchy = g.Gamma(j, j) - two_over_l;
    C(j, j) = dsc[j] * dsc[j] * cauchy;
    dd[j] = dsc[j] * dsc[j] * two_over_l;
  }
  const double den = det_diag_plus(dd, C);
  s.A_cramer.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Matrix Mj = Gs;
    Mj.col(j) = rs;
    s.A_cramer[j] = dsc[j] * Mj.determinant() / den;
  }
  const double na = s.A.cwiseAbs().maxCoeff();
  s.relative_difference = na > 0 ? (s.A - s.A_cramer).cwiseAbs().maxCoeff() / na
                                 : s.A_cramer.cwiseAbs().maxCoeff();
  if (s.relative_difference > tol) {
    std::ostringstream os;
    os << "Cramer and dense Gamma solves disagree (relative " << s.relative_difference << ")";
    throw ConsistencyError(os.str());
  }
  return s;
}

DiscreteSolve solve_discrete(const DeformedKernel& kernel, const Vector& f, double h, double x, double t) {
  const int N = static_cast<int>(f.size());
  const Eigen::Index n = kernel.top_betas.size();
  const Vector w = quadrature_weights(N, h, N >= 12 ? QuadRule::Gregory : QuadRule::Trapezoid);
  Vector rhs(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double acc = 0;
    for (int i = 0; i < N; ++i) acc += w[i] * std::exp(-2 * kernel.top_betas[j] * i * h) * f[i];
    rhs[j] = 2 * acc;
  }
  DiscreteSolve out;
  const GammaSystem g = build_gamma_system(kernel.top_betas, kernel.log_l(x, t), rhs);
  out.detail = solve_gamma(g);
  out.A = n ? out.detail.A : Vector();
  out.image = Vector::Zero(N);
  for (Eigen::Index j = 0; j < n; ++j)
    for (int i = 0; i < N; ++i) out.image[i] += out.A[j] * std::exp(-2 * kernel.top_betas[j] * i * h);
  out.solution = f - out.image;
  return out;
}

namespace {

// c = 2 Gamma^{-1} 1 and its x-derivative c' = -Gamma^{-1} diag(4 beta/L) c.
void discrete_coefficients(const DeformedKernel& kernel, double x, double t, Vector& c, Vector* dc) {
  const Eigen::Index n = kernel.top_betas.size();
  c = Vector::Zero(n);
  if (dc) *dc = Vector::Zero(n);
  if (n == 0) return;
  const Vector logl = kernel.log_l(x, t);
  const GammaSystem g = build_gamma_system(kernel.top_betas, logl, Vector::Constant(n, 2.0));
  c = solve_gamma(g).A;
  if (dc) {
    Vector r(n);
    for (Eigen::Index j = 0; j < n; ++j)
      r[j] = -4 * kernel.top_betas[j] * std::exp(-std::max(logl[j], -700.0)) * c[j];
    GammaSystem g2 = g;
    g2.rhs = r;
    *dc = solve_gamma(g2).A;
  }
}

}  // namespace

Vector B_discrete(const DeformedKernel& kernel, double x, double t, const Vector& ygrid) {
  Vector c;
  discrete_coefficients(kernel, x, t, c, nullptr);
  Vector B = Vector::Zero(ygrid.size());
  for (Eigen::Index j = 0; j < c.size(); ++j)
    for (Eigen::Index i = 0; i < ygrid.size(); ++i) B[i] -= c[j] * std::exp(-2 * kernel.top_betas[j] * ygrid[i]);
  return B;
}

double u_discrete(const DeformedKernel& kernel, double x, double t) {
  Vector c, dc;
  discrete_coefficients(kernel, x, t, c, &dc);
  return dc.sum();
}

namespace {

void check_region(const DeformedKernel& kernel, double x, double t) {
  if (x < 4 * kernel.eps * kernel.eps * t - 1e-12) {
    std::ostringstream os;
    os << "region violation: deformed path needs x >= 4 eps^2 t (x=" << x << ", t=" << t << ")";
    throw InvalidInput(os.str());
  }
}

// Y large enough for both the discrete envelope and the measured decay of Delta_c.
double deformed_Y(const DeformedKernel& kernel, double x, double t, const GLMOptions& opt) {
  if (opt.Y > 0) return opt.Y;
  double Y = kernel.top_betas.size() ? std::clamp(6.0 / kernel.top_betas[0], 6.0, 40.0) : 6.0;
  if (kernel.has_continuous()) {
    // probe no further than the k-grid can resolve
    double dk = 0;
    for (Eigen::Index j = 1; j < kernel.kgrid.size(); ++j) dk = std::max(dk, kernel.kgrid[j] - kernel.kgrid[j - 1]);
    const double reach = std::min(80.0, 0.9 * kPi / (4 * std::max(dk, 1e-6)) - std::max(x, 0.0));
    const double g = 0.05;
    const int count = std::max(2, static_cast<int>(reach / g) + 1);
    const Vector v = kernel.continuous_lattice(x, g, count, t);
    const double peak = v.cwiseAbs().maxCoeff();
    int last = 0;
    for (int m = 0; m < count; ++m)
      if (std::abs(v[m]) > 1e-13 * std::max(peak, 1e-300) && std::abs(v[m]) > 1e-16) last = m;
    Y = std::max(Y, std::min({40.0, 0.5 * (last * g) + 1.0, 0.5 * reach}));
  }
  return Y;
}

}  // namespace

DeformedSolution solve_deformed(const DeformedKernel& kernel, double x, double t, const GLMOptions& opt) {
  check_region(kernel, x, t);
  const double Y = deformed_Y(kernel, x, t, opt);
  const YDiscretisation D = discretise_y(Y, opt.h, opt.rule);
  auto solve_at = [&](double xx, double* rcond) {
    NystromProblem pb;
    pb.N = D.N;
    pb.h = D.h;
    pb.weights = D.w;
    pb.betas = kernel.top_betas;
    pb.log_l = kernel.log_l(xx, t);
    Vector lattice;
    if (kernel.has_continuous()) {
      lattice = kernel.continuous_lattice(xx, D.h, 2 * D.N - 1, t);
      pb.kc = lattice.data();
    }
    const NystromResult r = solve_nystrom(pb, opt.dense_reference);
    if (rcond) *rcond = r.rcond;
    return r.B;
  };
  DeformedSolution s;
  s.ygrid = uniform_grid(0.0, D.h, D.N);
  s.B = solve_at(x, &s.rcond);
  s.B_d = B_discrete(kernel, x, t, s.ygrid);
  s.B_c = s.B - s.B_d;
  s.sup_Bc = s.B_c.cwiseAbs().maxCoeff();
  const double hx = 1e-3;
  const Vector Bp = solve_at(x + hx, nullptr) - B_discrete(kernel, x + hx, t, s.ygrid);
  const Vector Bm = solve_at(x - hx, nullptr) - B_discrete(kernel, x - hx, t, s.ygrid);
  s.sup_dxBc = ((Bp - Bm) / (2 * hx)).cwiseAbs().maxCoeff();
  return s;
}

GridPotential reconstruct_deformed(const DeformedKernel& kernel, const Vector& xgrid, double t,
                                   const GLMOptions& opt) {
  if (xgrid.size() < 5) throw InvalidInput("reconstruct_deformed needs at least 5 x points");
  check_region(kernel, xgrid[0], t);
  KernelAccess acc;
  if (kernel.has_continuous())
    acc.lattice = [&](double z0, double g, int count) { return kernel.continuous_lattice(z0, g, count, t); };
  acc.log_l = [&](double x) { return kernel.log_l(x, t); };
  acc.betas = kernel.top_betas;
  const double Y = deformed_Y(kernel, xgrid[0], t, opt);
  const Vector b0 = solve_b0_over_grid(acc, xgrid, Y, opt);
  GridPotential out;
  out.x0 = xgrid[0];
  out.dx = xgrid[1] - xgrid[0];
  out.values = -differentiate4(b0, out.dx);
  out.decay_rate = kernel.top_betas.size() ? 2 * kernel.top_betas[0] : 1.0;
  return out;
}

double weighted_norm(const GridPotential& v, double a_decay) {
  const int n = v.size();
  double s0 = 0, s1 = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double w = std::exp(a_decay * std::abs(v.x(i)));
    s0 = std::max(s0, std::abs(v.values[i]) * w);
    if (i > 0 && i + 1 < n) {
      const double d1 = (v.values[i + 1] - v.values[i - 1]) / (2 * v.dx);
      const double d2 = (v.values[i + 1] - 2 * v.values[i] + v.values[i - 1]) / (v.dx * v.dx);
      s1 = std::max(s1, std::abs(d1) * w);
      s2 = std::max(s2, std::abs(d2) * w);
    }
  }
  return s0 + s1 + s2;
}

KernelSweepReport kernel_bound_sweep(const GridPotential& reference, const GridPotential& shape, int n,
                                     const KernelSweepConfig& cfg) {
  KernelSweepReport rep;
  const double norm = weighted_norm(shape, cfg.a_decay);
  if (!(norm > 0)) throw InvalidInput("kernel sweep: perturbation shape is zero");
  const double g = cfg.step;
  const int ny = static_cast<int>(std::lround(cfg.y_max / g)) + 1;
  const int nu = static_cast<int>(std::lround(cfg.u_max / g)) + 1;
  for (double eps : cfg.eps) {
    const double amp = std::pow(eps, cfg.sigma) / (cfg.c_check * norm);
    GridPotential pot = reference + scaled(shape, amp);
    pot.decay_rate = std::min(reference.decay_rate, shape.decay_rate);
    const ScatteringData sd = scatter(pot).data;
    // the strip grid must resolve the phase 2z + 24k^2 t where e^{-24 eps k^2 t} is not negligible
    StripOptions so = cfg.strip;
    double zmax = 0, tmax = 0;
    for (double t : cfg.times) tmax = std::max(tmax, t);
    for (double off : cfg.x_offsets) zmax = std::max(zmax, 4 * eps * eps * tmax + off);
    zmax += cfg.y_max + cfg.u_max;
    const double quad = std::min(24 * so.kmax * so.kmax * tmax, 14.0 / eps);
    so.dk = std::min(so.dk, 0.45 * kPi / (2 * zmax + quad));
    const DeformedKernel K = build_deformed_kernel(pot, sd, n, eps, so);
    double sup_c = 0, sup_d = 0;
    Vector env_c = Vector::Zero(nu), env_d = Vector::Zero(nu);
    for (double t : cfg.times) {
      for (double off : cfg.x_offsets) {
        const double x = 4 * eps * eps * t + off;
        const int count = ny + nu - 1;
        const Vector v = K.continuous_lattice(x, g, count, t);
        const Vector dv = K.continuous_lattice(x, g, count, t, true);
        for (int iu = 0; iu < nu; ++iu) {
          double mc = 0, md = 0;
          for (int iy = 0; iy < ny; ++iy) {
            mc = std::max(mc, std::abs(v[iy + iu]));
            md = std::max(md, std::abs(dv[iy + iu]));
          }
          env_c[iu] = std::max(env_c[iu], mc);
          env_d[iu] = std::max(env_d[iu], md);
          sup_c = std::max(sup_c, mc);
          sup_d = std::max(sup_d, md);
        }
      }
    }
    double ec = 0, ed = 0;
    for (int iu = 0; iu < nu; ++iu) {
      const double f = std::exp(2 * eps * iu * g);
      ec = std::max(ec, env_c[iu] * f);
      ed = std::max(ed, env_d[iu] * f);
    }
    rep.eps.push_back(eps);
    rep.amplitude.push_back(amp);
    rep.sup_c.push_back(sup_c);
    rep.sup_cdx.push_back(sup_d);
    rep.envelope_c.push_back(ec);
    rep.envelope_cdx.push_back(ed);
  }
  if (rep.eps.size() >= 2) {
    rep.fit_c = fit_loglog(rep.eps, rep.sup_c);
    rep.fit_cdx = fit_loglog(rep.eps, rep.sup_cdx);
    rep.fit_env_c = fit_loglog(rep.eps, rep.envelope_c);
    rep.fit_env_cdx = fit_loglog(rep.eps, rep.envelope_cdx);
  }
  return rep;
}

}  // namespace kdvist
