#include <doctest.h>

#include "kdvist/glm.hpp"
#include "kdvist/scatter.hpp"
#include "kdvist/soliton.hpp"

#include <cmath>

using namespace kdvist;

namespace {

double sech2(double z) { return 1.0 / (std::cosh(z) * std::cosh(z)); }

const GridPotential& pt() {
  static const GridPotential p = GridPotential::sample([](double x) { return -2 * sech2(x); }, 30, 0.01, 2.0);
  return p;
}

const GridPotential& two_soliton() {
  static const GridPotential p = [] {
    SolitonSpec s;
    s.betas = Vector(2);
    s.betas << 1, 2;
    s.alphas = Vector::Ones(2);
    return GridPotential::sample([s](double x) { return eval_nsoliton(s, x, 0); }, 30, 0.01, 2.0);
  }();
  return p;
}

}  // namespace

TEST_CASE("zero potential is transparent") {
  const GridPotential z = GridPotential::zeros(10, 0.05);
  const JostPair jp = jost(z, Complex(0.7, 0.0));
  CHECK((jp.m_plus.array() - 1.0).abs().maxCoeff() < 1e-15);
  CHECK((jp.m_minus.array() - 1.0).abs().maxCoeff() < 1e-15);
  CHECK(std::abs(a_of_k(z, Complex(1.3, 0)) - 1.0) < 1e-15);
  CHECK(std::abs(reflection(z, Complex(0.4, 0))) < 1e-15);
  CHECK(bound_states(z, 3, 1e-12).empty());
  CHECK(count_bound_states_contour(z, 1.0, 0.3) == 0);
  CHECK(bound_state_count_cap(z) == 0);
  CHECK(norming_constants(z, {}).empty());
  CHECK_THROWS_AS(a_of_k(z, Complex(0, 0)), InvalidInput);
}

TEST_CASE("sech2 Jost solutions match the closed form") {
  const Complex k(0.7, 0.0), I(0, 1);
  const JostPair jp = jost(pt(), k);
  double err = 0;
  for (Eigen::Index i = 0; i < jp.x.size(); ++i) {
    const double x = jp.x[i];
    if (std::abs(x) > 10) continue;
    err = std::max(err, std::abs(jp.m_plus[i] - (I * k - std::tanh(x)) / (I * k - 1.0)));
    err = std::max(err, std::abs(jp.m_minus[i] - (I * k + std::tanh(x)) / (I * k - 1.0)));
  }
  CHECK(err < 1e-8);

  const JostPair jb = jost(pt(), Complex(0, 1));
  double eb = 0;
  for (Eigen::Index i = 0; i < jb.x.size(); ++i) {
    const double x = jb.x[i];
    if (std::abs(x) > 10) continue;
    eb = std::max(eb, std::abs(jb.m_plus[i] - 0.5 * std::exp(x) / std::cosh(x)));
  }
  CHECK(eb < 1e-8);
}

TEST_CASE("Jost solutions satisfy the ODE") {
  const Complex k(1.1, 0.0), I(0, 1);
  const JostPair jp = jost(two_soliton(), k);
  const double dx = two_soliton().dx;
  const Vector re = jp.dm_plus.real(), im = jp.dm_plus.imag();
  const Vector d2r = differentiate4(re, dx), d2i = differentiate4(im, dx);
  double res = 0, scale = 0;
  for (Eigen::Index i = 10; i + 10 < jp.x.size(); ++i) {
    const double u = eval_nsoliton(SolitonSpec{(Vector(2) << 1, 2).finished(), Vector::Ones(2)}, jp.x[i], 0);
    const Complex lhs = Complex(d2r[i], d2i[i]) + 2.0 * I * k * jp.dm_plus[i];
    res = std::max(res, std::abs(lhs - u * jp.m_plus[i]));
    scale = std::max(scale, std::abs(u * jp.m_plus[i]));
  }
  CHECK(res / scale < 1e-6);
}

TEST_CASE("transmission reciprocal of sech2") {
  for (double k : {0.3, 0.7, 2.5}) {
    const Complex a = a_of_k(pt(), Complex(k, 0));
    const Complex exact = Complex(k, -1) / Complex(k, 1);
    CHECK(std::abs(a - exact) < 1e-8);
  }
  CHECK(std::abs(a_of_k(pt(), Complex(0, 1))) < 1e-8);
}

TEST_CASE("Wronskian is independent of the matching point") {
  const JostSolver s(two_soliton());
  const Complex k(0.9, 0.0);
  const Complex ref = s.a_at(k, s.default_match());
  for (double x : {-3.0, -1.0, 0.5, 2.0, 4.0}) {
    const int node = static_cast<int>(std::lround((x - two_soliton().x0) / two_soliton().dx));
    CHECK(std::abs(s.a_at(k, node) - ref) < 1e-8 * std::abs(ref));
  }
}

TEST_CASE("two-soliton sample has zeros of a at its betas") {
  CHECK(std::abs(a_of_k(two_soliton(), Complex(0, 1))) < 1e-6);
  CHECK(std::abs(a_of_k(two_soliton(), Complex(0, 2))) < 1e-6);
}

TEST_CASE("a(k) approaches one like 1/k") {
  const JostSolver s(pt());
  for (double k : {1.0, 2.0, 4.0, 8.0}) CHECK(std::abs(s.a(Complex(k, 0)) - 1.0) * k <= 4.0 / 2 + 1e-9);
}

TEST_CASE("reflection vanishes for reflectionless samples, also inside the strip") {
  for (double k : {0.05, 0.5, 1.5, 4.0}) {
    CHECK(std::abs(reflection(pt(), Complex(k, 0))) < 1e-6);
    CHECK(std::abs(reflection(two_soliton(), Complex(k, 0))) < 1e-6);
    CHECK(std::abs(reflection(pt(), Complex(k, 0.3))) < 1e-6);
  }
  CHECK_THROWS_AS(reflection(pt(), Complex(1.0, 2.5)), StripViolation);
  CHECK_THROWS_AS(reflection(pt(), Complex(1.0, -0.1)), StripViolation);
}

TEST_CASE("bound states by scan and by contour") {
  const auto b1 = bound_states(pt(), default_kappa_max(pt()), 1e-12);
  REQUIRE(b1.size() == 1);
  CHECK(b1[0] == doctest::Approx(1.0).epsilon(1e-8));
  const auto b2 = bound_states(two_soliton(), default_kappa_max(two_soliton()), 1e-12);
  REQUIRE(b2.size() == 2);
  CHECK(b2[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(b2[1] == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(count_bound_states_contour(pt(), 1.0, 0.3) == 1);
  CHECK(count_bound_states_contour(two_soliton(), 1.5, 0.2) == 0);
  CHECK(count_bound_states_contour(two_soliton(), 1.5, 1.0) == 2);
}

TEST_CASE("bound-state cap from the first moment") {
  // 1 + int |s| 2 sech^2 s ds = 1 + 4 ln 2
  CHECK(bound_state_count_cap(pt()) == 3);
  CHECK(bound_state_count_cap(two_soliton()) >= 2);
}

TEST_CASE("norming constants") {
  const auto g = norming_details(JostSolver(pt()), {1.0});
  REQUIRE(g.size() == 1);
  CHECK(g[0].gamma == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(g[0].gamma_check == doctest::Approx(g[0].gamma).epsilon(1e-4));
  CHECK(g[0].m_plus_x0 == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("full transform recovers two-soliton data") {
  Vector b(2), gm(2);
  b << 1, 2;
  gm << 3.0, 40.0;
  const SolitonSpec s = SolitonSpec::from_gammas(b, gm);
  const GridPotential p = GridPotential::sample([s](double x) { return eval_nsoliton(s, x, 0); }, 30, 0.01, 2.0);
  const ScatterResult r = scatter(p);
  REQUIRE(r.data.mu() == 2);
  CHECK(r.data.betas[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.data.betas[1] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(r.data.gammas[0] == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(r.data.gammas[1] == doctest::Approx(40.0).epsilon(1e-3));
  CHECK(r.data.R.cwiseAbs().maxCoeff() < 1e-6);
  CHECK(r.contour_count == 2);
  CHECK(r.cap >= 2);
}

TEST_CASE("unitarity and symmetry for a perturbed well") {
  const GridPotential p = GridPotential::sample(
      [](double x) { return -2 * sech2(x) + 0.01 * std::exp(-x * x); }, 30, 0.01, 1.0);
  const ScatterResult r = scatter(p);
  CHECK(r.unitarity_residual.cwiseAbs().maxCoeff() < 1e-6);
  CHECK_NOTHROW(r.data.validate());
  const Eigen::Index n = r.data.kgrid.size();
  for (Eigen::Index i = 0; i < n; i += 97) CHECK(std::abs(r.data.R[i] - std::conj(r.data.R[n - 1 - i])) < 1e-9);
  CHECK(r.endpoint_discrepancy < 1e-6);
  CHECK(r.contour_count == r.data.mu());
}

TEST_CASE("scattering data invariants are enforced") {
  ScatteringData d;
  d.kgrid = make_kgrid(1, 0.5);
  d.R = CVector::Constant(d.kgrid.size(), Complex(0.1, 0.2));
  CHECK_THROWS_AS(d.validate(), InvalidInput);
  ScatteringData e;
  e.betas = Vector(2);
  e.betas << 2, 1;
  e.gammas = Vector::Ones(2);
  CHECK_THROWS_AS(e.normalize(), InvalidInput);
}

TEST_CASE("time evolution of scattering data") {
  ScatteringData d;
  d.betas = Vector::Constant(1, 1.0);
  d.gammas = Vector::Constant(1, 2.0);
  d.kgrid = Vector(2);
  d.kgrid << -1, 1;
  d.R = CVector(2);
  d.R << Complex(0.1, 0), Complex(0.1, 0);
  d.normalize();
  const ScatteringData same = evolve_scattering(d, 0.0);
  CHECK(same.gammas[0] == 2.0);
  CHECK(same.R[1] == Complex(0.1, 0));
  const ScatteringData e = evolve_scattering(d, 0.1);
  CHECK(e.time == doctest::Approx(0.1));
  CHECK(e.betas[0] == 1.0);
  CHECK(e.gammas[0] == doctest::Approx(2 * std::exp(0.8)).epsilon(1e-14));
  CHECK(std::abs(e.R[1] - 0.1 * std::exp(Complex(0, 0.8))) < 1e-15);
  CHECK(std::abs(e.R[1]) == doctest::Approx(0.1).epsilon(1e-15));
  const ScatteringData far = evolve_scattering(d, 200.0);
  CHECK(far.log_gammas[0] == doctest::Approx(std::log(2.0) + 1600));
}

TEST_CASE("perturbation report") {
  ScatteringData sd0;
  sd0.betas = Vector::Constant(1, 1.0);
  sd0.gammas = Vector::Constant(1, 2.0);
  sd0.normalize();

  const ScatterResult same = scatter(pt());
  const PerturbationReport r0 = perturbation_report(sd0, same.data, 0.05, same.cap);
  CHECK(r0.hypothesis_ok);
  CHECK(r0.count_ok);
  CHECK(r0.betas_ok);
  CHECK(r0.gammas_ok);
  CHECK(r0.extra_ok);
  CHECK(r0.beta_margin < 1e-8);
  CHECK(r0.gamma_margin < 1e-5);

  const GridPotential pv = GridPotential::sample(
      [](double x) { return -2 * sech2(x) + 1e-4 * std::exp(-std::abs(x)) * sech2(x); }, 30, 0.01, 2.0);
  const ScatterResult rv = scatter(pv);
  const PerturbationReport r1 = perturbation_report(sd0, rv.data, 0.05, rv.cap);
  CHECK(r1.hypothesis_ok);
  CHECK(r1.betas_ok);
  CHECK(r1.gammas_ok);
  CHECK(r1.beta_margin > 0);
  CHECK(r1.beta_margin < 1e-3);

  ScatteringData empty;
  const PerturbationReport r2 = perturbation_report(sd0, empty, 0.05);
  CHECK_FALSE(r2.hypothesis_ok);
}

TEST_CASE("distant shallow well may add a tiny bound state") {
  ScatteringData sd0;
  sd0.betas = Vector::Constant(1, 1.0);
  sd0.gammas = Vector::Constant(1, 2.0);
  sd0.normalize();
  const GridPotential pv = GridPotential::sample(
      [](double x) { return -2 * sech2(x) - 1e-3 * sech2(x - 20); }, 40, 0.01, 2.0);
  const ScatterResult rv = scatter(pv);
  const PerturbationReport r = perturbation_report(sd0, rv.data, 0.05, rv.cap);
  CHECK(r.hypothesis_ok);
  CHECK(r.count_ok);
  CHECK(r.extra_ok);
  CHECK(r.mu >= 1);
  CHECK(r.mu <= 2);
  CHECK(rv.data.betas[rv.data.mu() - 1] == doctest::Approx(1.0).epsilon(1e-3));
}
