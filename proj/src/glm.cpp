#include "kdvist/glm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace kdvist {

Vector fourier_lattice(const Vector& kgrid, const CVector& coef, double z0, double g, int count) {
  Vector out = Vector::Zero(count);
  // Phases advance by a fixed factor per lattice step; they are re-seeded
  // periodically to keep rounding drift negligible.
  constexpr int reseed = 256;
  for (Eigen::Index j = 0; j < kgrid.size(); ++j) {
    if (coef[j] == Complex(0, 0)) continue;
    const double k = kgrid[j];
    const Complex step = std::polar(1.0, 2 * k * g);
    Complex c;
    for (int m = 0; m < count; ++m) {
      if (m % reseed == 0) c = coef[j] * std::polar(1.0, 2 * k * (z0 + m * g));
      out[m] += c.real();
      c *= step;
    }
  }
  return out;
}

void check_phase_resolution(const Vector& kgrid, const CVector& coef, double zmin, double zmax,
                            const std::function<double(double, double)>& rate, double floor) {
  const Eigen::Index n = kgrid.size();
  if (n < 2) return;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::abs(coef[j]) <= floor) continue;
    const double dk = (j + 1 < n) ? kgrid[j + 1] - kgrid[j] : kgrid[j] - kgrid[j - 1];
    for (double z : {zmin, zmax}) {
      if (std::abs(rate(kgrid[j], z)) * dk > 0.5 * kPi) {
        std::ostringstream os;
        os << "kgrid too coarse for the oscillation scale at k=" << kgrid[j] << ", z=" << z;
        throw ResolutionError(os.str());
      }
    }
  }
}

GLMKernel GLMKernel::from_data(const ScatteringData& data) {
  ScatteringData d = data;
  if (d.log_gammas.size() != d.gammas.size()) d.normalize();
  d.validate();
  GLMKernel K;
  K.kgrid = d.kgrid;
  if (d.kgrid.size() >= 2) {
    const Vector w = kgrid_weights(d.kgrid);
    K.coef = (d.R.array() * w.array().cast<Complex>()).matrix() / kPi;
  } else {
    K.kgrid.resize(0);
    K.coef.resize(0);
  }
  K.betas = d.betas;
  K.log_gammas = d.log_gammas;
  K.data_time = d.time;
  return K;
}

bool GLMKernel::has_continuous() const {
  for (Eigen::Index j = 0; j < coef.size(); ++j)
    if (coef[j] != Complex(0, 0)) return true;
  return false;
}

CVector GLMKernel::coefficients_at(double t) const {
  CVector c = coef;
  const double dt = t - data_time;
  if (dt != 0)
    for (Eigen::Index j = 0; j < c.size(); ++j) c[j] *= std::polar(1.0, 8 * std::pow(kgrid[j], 3) * dt);
  return c;
}

Vector GLMKernel::continuous_lattice(double z0, double g, int count, double t) const {
  if (!has_continuous()) return Vector::Zero(count);
  const CVector c = coefficients_at(t);
  const double dt = t - data_time;
  check_phase_resolution(kgrid, c, z0, z0 + g * (count - 1),
                         [dt](double k, double z) { return 2 * z + 24 * k * k * dt; });
  return fourier_lattice(kgrid, c, z0, g, count);
}

double GLMKernel::continuous(double x, double t) const { return continuous_lattice(x, 1.0, 1, t)[0]; }

Vector GLMKernel::log_l(double x, double t) const {
  // log of 2 gamma(t) e^{-2 beta x}, gamma(t) evolved from the data time.
  Vector l(betas.size());
  for (Eigen::Index j = 0; j < betas.size(); ++j) {
    const double b = betas[j];
    const double lg = log_gammas[j] + 8 * b * b * b * (t - data_time);
    l[j] = std::log(2.0) + lg - 2 * b * x;
  }
  return l;
}

double GLMKernel::discrete(double x, double t) const {
  // 2 gamma(0) e^{-2 beta (x - 4 beta^2 t)} = 2 gamma(t) e^{-2 beta x}.
  double s = 0;
  for (Eigen::Index j = 0; j < betas.size(); ++j) {
    const double b = betas[j];
    const double lg = log_gammas[j] + 8 * b * b * b * (t - data_time);
    s += 2 * std::exp(lg - 2 * b * x);
  }
  return s;
}

double glm_kernel(const ScatteringData& data, double x, double t) {
  return GLMKernel::from_data(data)(x, t);
}

double default_Y(const ScatteringData& data) {
  if (data.betas.size() == 0) return 12.0;
  return std::clamp(6.0 / data.betas[0], 6.0, 40.0);
}

NystromResult solve_nystrom(const NystromProblem& pb, bool dense_reference) {
  const int N = pb.N;
  const int n = static_cast<int>(pb.betas.size());
  if (N < 2 || pb.weights.size() != N) throw InvalidInput("Nystrom: bad discretisation");
  NystromResult res;
  Matrix E(N, n);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < n; ++j) E(i, j) = std::exp(-2 * pb.betas[j] * i * pb.h);
  auto kc = [&](int m) { return pb.kc ? pb.kc[static_cast<std::ptrdiff_t>(m) * pb.stride] : 0.0; };
  const Vector& w = pb.weights;

  if (dense_reference) {
    // Extended precision: with large L_j the identity is swamped in double.
    using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
    LMatrix El(N, n);
    std::vector<long double> L(n);
    for (int j = 0; j < n; ++j) {
      L[j] = std::exp(static_cast<long double>(pb.log_l[j]));
      for (int i = 0; i < N; ++i) El(i, j) = std::exp(-2.0L * pb.betas[j] * i * pb.h);
    }
    LMatrix M(N, N);
    LVector rhs(N);
    for (int i = 0; i < N; ++i) {
      long double om = kc(i);
      for (int j = 0; j < n; ++j) om += L[j] * El(i, j);
      rhs[i] = -om;
      for (int m = 0; m < N; ++m) {
        long double k = kc(i + m);
        for (int j = 0; j < n; ++j) k += L[j] * El(i, j) * El(m, j);
        M(i, m) = (i == m ? 1.0L : 0.0L) + k * w[m];
      }
    }
    Eigen::PartialPivLU<LMatrix> lu(M);
    res.rcond = static_cast<double>(lu.rcond());
    if (!(res.rcond > 1e-12)) throw SingularSystem("Nystrom system is numerically singular");
    res.B = lu.solve(rhs).cast<double>();
    return res;
  }

  // Continuous part: A = I + K_c W. The rank-n discrete part enters through a
  // small n x n system, so huge or tiny L_j never touch the dense matrix.
  Vector q = Vector::Zero(N);
  Matrix P = E;
  if (pb.kc) {
    Matrix A(N, N);
    Vector k0(N);
    for (int i = 0; i < N; ++i) {
      k0[i] = kc(i);
      for (int m = 0; m < N; ++m) A(i, m) = (i == m ? 1.0 : 0.0) + kc(i + m) * w[m];
    }
    Eigen::PartialPivLU<Matrix> lu(A);
    res.rcond = lu.rcond();
    if (!(res.rcond > 1e-12)) throw SingularSystem("Nystrom system is numerically singular");
    q = lu.solve(k0);
    if (n) P = lu.solve(E);
  }
  if (n == 0) {
    res.B = -q;
    return res;
  }
  // (L^{-1} + E^T W P) z = 1 - E^T W q,  B = -q - P z.
  const Matrix EtW = E.transpose() * w.asDiagonal();
  Matrix S = EtW * P;
  Vector r = Vector::Ones(n) - EtW * q;
  for (int j = 0; j < n; ++j) S(j, j) += std::exp(-std::max(pb.log_l[j], -700.0));
  Vector d(n);
  for (int j = 0; j < n; ++j) d[j] = 1.0 / std::sqrt(std::abs(S(j, j)));
  const Matrix Ss = d.asDiagonal() * S * d.asDiagonal();
  Eigen::PartialPivLU<Matrix> lu2(Ss);
  const double rc2 = lu2.rcond();
  if (!(rc2 > 1e-12)) throw SingularSystem("discrete GLM block is numerically singular");
  res.rcond = std::min(res.rcond, rc2);
  const Vector z = d.asDiagonal() * lu2.solve(d.asDiagonal() * r);
  res.B = -q - P * z;
  return res;
}

YDiscretisation discretise_y(double Y, double h_target, QuadRule rule, double lattice) {
  if (!(Y > 0) || !(h_target > 0)) throw InvalidInput("GLM: Y and h must be positive");
  double h = h_target;
  if (lattice > 0) h = std::max(1.0, std::round(h_target / lattice)) * lattice;
  const int N = static_cast<int>(std::ceil(Y / h - 1e-9)) + 1;
  if (N < 12) throw InvalidInput("GLM: fewer than 12 quadrature nodes");
  return {N, h, quadrature_weights(N, h, rule)};
}

GLMSolution solve_glm(const ScatteringData& data, double x, double t, const GLMOptions& opt) {
  const GLMKernel K = GLMKernel::from_data(data);
  const double Y = opt.Y > 0 ? opt.Y : default_Y(data);
  const YDiscretisation D = discretise_y(Y, opt.h, opt.rule);
  Vector lattice;
  NystromProblem pb;
  pb.N = D.N;
  pb.h = D.h;
  pb.weights = D.w;
  pb.betas = K.betas;
  pb.log_l = K.log_l(x, t);
  if (K.has_continuous()) {
    lattice = K.continuous_lattice(x, D.h, 2 * D.N - 1, t);
    pb.kc = lattice.data();
  }
  const NystromResult r = solve_nystrom(pb, opt.dense_reference);
  GLMSolution s;
  s.x = x;
  s.ygrid = uniform_grid(0.0, D.h, D.N);
  s.B = r.B;
  s.B_at_zero = r.B[0];
  s.rcond = r.rcond;
  return s;
}

GLMSolution solve_glm(const ScatteringData& data, double x, double t, double Y, int ny) {
  if (ny < 12) throw InvalidInput("GLM: ny must be at least 12");
  GLMOptions opt;
  opt.Y = Y;
  opt.h = Y / (ny - 1);
  return solve_glm(data, x, t, opt);
}

Vector differentiate4(const Vector& f, double dx) {
  const Eigen::Index n = f.size();
  if (n < 5) throw InvalidInput("differentiate4 needs at least 5 samples");
  Vector d(n);
  for (Eigen::Index i = 2; i + 2 < n; ++i)
    d[i] = (-f[i + 2] + 8 * f[i + 1] - 8 * f[i - 1] + f[i - 2]) / (12 * dx);
  d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * dx);
  d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * dx);
  d[n - 1] = (25 * f[n - 1] - 48 * f[n - 2] + 36 * f[n - 3] - 16 * f[n - 4] + 3 * f[n - 5]) / (12 * dx);
  d[n - 2] = (3 * f[n - 1] + 10 * f[n - 2] - 18 * f[n - 3] + 6 * f[n - 4] - f[n - 5]) / (12 * dx);
  return d;
}

Vector solve_b0_over_grid(const KernelAccess& K, const Vector& xgrid, double Y, const GLMOptions& opt) {
  const Eigen::Index nx = xgrid.size();
  if (nx < 2) throw InvalidInput("GLM grid needs at least 2 x points");
  const double dx = xgrid[1] - xgrid[0];
  if (!(dx > 0)) throw InvalidInput("GLM grid: xgrid must increase");
  for (Eigen::Index i = 1; i < nx; ++i)
    if (std::abs(xgrid[i] - xgrid[i - 1] - dx) > 1e-9 * std::abs(dx))
      throw InvalidInput("GLM grid: xgrid must be uniform");
  const YDiscretisation D = discretise_y(Y, opt.h, opt.rule, dx);
  const int stride = static_cast<int>(std::lround(D.h / dx));
  // One lattice at spacing dx serves every x: the solve at x_i reads
  // entries i, i + stride, i + 2 stride, ...
  const int count = static_cast<int>(nx) + 2 * (D.N - 1) * stride;
  Vector lattice;
  if (K.lattice) lattice = K.lattice(xgrid[0], dx, count);

  Vector b0(nx);
  std::string failure;
#pragma omp parallel for schedule(dynamic, 8)
  for (Eigen::Index i = 0; i < nx; ++i) {
    try {
      NystromProblem pb;
      pb.N = D.N;
      pb.h = D.h;
      pb.weights = D.w;
      pb.betas = K.betas;
      pb.log_l = K.log_l(xgrid[i]);
      if (lattice.size()) {
        pb.kc = lattice.data() + i;
        pb.stride = stride;
      }
      b0[i] = solve_nystrom(pb, opt.dense_reference).B[0];
    } catch (const std::exception& e) {
#pragma omp critical
      failure = e.what();
    }
  }
  if (!failure.empty()) throw SingularSystem(failure);
  return b0;
}

GridPotential reconstruct_u(const ScatteringData& data, const Vector& xgrid, double t,
                            const GLMOptions& opt) {
  if (xgrid.size() < 5) throw InvalidInput("reconstruct_u needs at least 5 x points");
  const GLMKernel K = GLMKernel::from_data(data);
  KernelAccess acc;
  if (K.has_continuous())
    acc.lattice = [&](double z0, double g, int count) { return K.continuous_lattice(z0, g, count, t); };
  acc.log_l = [&](double x) { return K.log_l(x, t); };
  acc.betas = K.betas;
  const double Y = opt.Y > 0 ? opt.Y : default_Y(data);
  const Vector b0 = solve_b0_over_grid(acc, xgrid, Y, opt);
  GridPotential out;
  out.x0 = xgrid[0];
  out.dx = xgrid[1] - xgrid[0];
  out.values = -differentiate4(b0, out.dx);
  out.decay_rate = K.betas.size() ? 2 * K.betas[0] : 1.0;
  return out;
}

}  // namespace kdvist
