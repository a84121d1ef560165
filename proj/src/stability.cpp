#include "kdvist/stability.hpp"

#include "kdvist/deformed_glm.hpp"
#include "kdvist/pde.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace kdvist {

double StabilityConfig::admissible_eps() const {
  const int n = reference.n();
  double m = a_decay;
  if (n > 0) m = std::min(m, reference.betas[0] / 2);
  for (int j = 0; j < n; ++j)
    for (int l = j + 1; l < n; ++l) m = std::min(m, std::abs(reference.betas[j] - reference.betas[l]) / 2);
  return m;
}

double StabilityConfig::effective_eps() const { return eps > 0 ? eps : admissible_eps() / 2; }

void StabilityConfig::validate() const {
  reference.validate();
  if (!(a_decay > 0)) throw InvalidInput("stability: a_decay must be positive");
  if (!(sigma > 2)) throw InvalidInput("stability: sigma must exceed 2");
  if (!(tau_cone > 0)) throw InvalidInput("stability: tau must be positive");
  if (!(c_check > 0)) throw InvalidInput("stability: c_check must be positive");
}

bool SolitonRegion::contains(double x) const {
  for (const auto& [a, b] : intervals)
    if (x >= a && x <= b) return true;
  return false;
}

SolitonRegion region(const StabilityConfig& cfg, double t) {
  if (!(t > 0)) throw InvalidInput("region: t must be positive");
  const double eps = cfg.effective_eps();
  SolitonRegion r;
  r.t = t;
  const double cmax = 1.0 / cfg.tau_cone;
  if (!(eps <= cmax)) return r;
  // c-bands: [eps, 1/tau] minus the open cones (beta_j - tau, beta_j + tau)
  std::vector<std::pair<double, double>> cut;
  for (int j = 0; j < cfg.reference.n(); ++j)
    cut.emplace_back(cfg.reference.betas[j] - cfg.tau_cone, cfg.reference.betas[j] + cfg.tau_cone);
  std::sort(cut.begin(), cut.end());
  double lo = eps;
  std::vector<std::pair<double, double>> bands;
  for (const auto& [a, b] : cut) {
    if (b <= lo) continue;
    if (a >= cmax) break;
    if (a >= lo) bands.emplace_back(lo, a);
    lo = std::max(lo, b);
  }
  if (lo <= cmax) bands.emplace_back(lo, cmax);
  for (const auto& [a, b] : bands) {
    const double xa = 4 * t * a * a, xb = 4 * t * b * b;
    if (!r.intervals.empty() && xa <= r.intervals.back().second)
      r.intervals.back().second = std::max(r.intervals.back().second, xb);
    else
      r.intervals.emplace_back(xa, xb);
  }
  return r;
}

Vector phase_shifts(const StabilityConfig& cfg, const Vector& perturbed_betas, double t) {
  const int n = cfg.reference.n();
  const int mu = static_cast<int>(perturbed_betas.size());
  if (mu < n) {
    std::ostringstream os;
    os << "stability hypothesis fails: " << mu << " perturbed bound states for " << n << " solitons";
    throw InvalidInput(os.str());
  }
  Vector x(n);
  for (int j = 0; j < n; ++j) {
    const double bv = perturbed_betas[mu - n + j], b0 = cfg.reference.betas[j];
    x[j] = 4 * (bv * bv - b0 * b0) * t;
  }
  return x;
}

double shifted_reference(const StabilityConfig& cfg, const Vector& perturbed_betas, double x, double t) {
  return eval_nsoliton_shifted(cfg.reference, phase_shifts(cfg, perturbed_betas, t), x, t);
}

namespace {

double interp_linear(const GridPotential& v, double x) {
  const double r = (x - v.x0) / v.dx;
  if (r < 0 || r > v.size() - 1) return 0.0;
  const int i = std::min(static_cast<int>(r), v.size() - 2);
  const double f = r - i;
  return (1 - f) * v.values[i] + f * v.values[i + 1];
}

bool near_cone_edge(const StabilityConfig& cfg, double x, double t, double dx) {
  for (int j = 0; j < cfg.reference.n(); ++j) {
    for (double c : {cfg.reference.betas[j] - cfg.tau_cone, cfg.reference.betas[j] + cfg.tau_cone}) {
      if (c <= 0) continue;
      if (std::abs(x - 4 * t * c * c) <= dx) return true;
    }
  }
  return false;
}

AmplitudeResult run_amplitude(const StabilityConfig& cfg, const GridPotential& v_shape, double amp,
                              const std::vector<double>& times, const StabilityGrids& grids, bool keep) {
  AmplitudeResult res;
  res.amplitude = amp;
  const double eps = cfg.effective_eps();
  const SolitonSpec& ref = cfg.reference;
  const GridPotential v = scaled(v_shape, amp);
  res.weighted_norm = weighted_norm(v, cfg.a_decay);
  res.eps_equiv = std::pow(cfg.c_check * res.weighted_norm, 1.0 / cfg.sigma);

  if (!(eps < cfg.admissible_eps())) {
    res.in_scope = false;
    res.notes.push_back("eps is not admissible for the reference betas");
  }
  if (res.weighted_norm > std::pow(eps, cfg.sigma) / cfg.c_check) {
    res.in_scope = false;
    std::ostringstream os;
    os << "weighted norm " << res.weighted_norm << " exceeds eps^sigma/c_check = "
       << std::pow(eps, cfg.sigma) / cfg.c_check;
    res.notes.push_back(os.str());
  }
  if (v_shape.decay_rate < cfg.a_decay) {
    res.in_scope = false;
    res.notes.push_back("perturbation decays slower than a_decay");
  }

  // scattering data of u_0 + v on the perturbation grid
  GridPotential uv = v;
  for (int i = 0; i < uv.size(); ++i) uv.values[i] += eval_nsoliton(ref, uv.x(i), 0.0);
  uv.decay_rate = std::min(v_shape.decay_rate, ref.n() ? 2 * ref.betas[0] : v_shape.decay_rate);
  uv.envelope = std::numeric_limits<double>::quiet_NaN();
  const ScatterResult sr = scatter(uv);
  res.betas = sr.data.betas;
  res.gammas = sr.data.gammas;

  ScatteringData sd0;
  sd0.betas = ref.betas;
  sd0.gammas = gamma_from_alpha(ref.betas, ref.alphas);
  sd0.normalize();
  res.perturbation = perturbation_report(sd0, sr.data, eps, sr.cap);
  if (!res.perturbation.hypothesis_ok) {
    res.in_scope = false;
    res.notes.push_back(res.perturbation.message);
    return res;
  }

  // PDE truth
  KdvIntegrator I(grids.pde_period, grids.pde_modes);
  const PdeState s0 = PdeState::sample(
      [&](double x) { return eval_nsoliton(ref, x, 0.0) + interp_linear(v, x); }, grids.pde_x0,
      grids.pde_period, grids.pde_modes, 0.0);
  const auto snaps = I.evolve_to(s0, times, grids.dt);
  const double lo = grids.pde_x0 + grids.margin, hi = grids.pde_x0 + grids.pde_period - grids.margin;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    const PdeState& s = snaps[k];
    const SolitonRegion reg = region(cfg, t);
    const Vector xs = phase_shifts(cfg, res.betas, t);
    res.phase_shifts.push_back(xs);
    res.spectral_tail.push_back(I.spectral_tail(s));
    double sr_in = 0, sr_out = 0;
    StabilityProfile prof;
    prof.t = t;
    std::vector<double> px, pu, pr, pd;
    for (int i = 0; i < s.modes; ++i) {
      const double x = s.x(i);
      if (x < lo || x > hi) continue;
      const double r = eval_nsoliton_shifted(ref, xs, x, t);
      const double d = std::abs(s.values[i] - r);
      if (reg.contains(x) && !near_cone_edge(cfg, x, t, s.dx()))
        sr_in = std::max(sr_in, d);
      else if (!reg.contains(x))
        sr_out = std::max(sr_out, d);
      if (keep && i % std::max(1, grids.profile_stride) == 0) {
        px.push_back(x);
        pu.push_back(s.values[i]);
        pr.push_back(r);
        pd.push_back(s.values[i] - r);
      }
    }
    res.sup_in_region.push_back(sr_in);
    res.sup_in_cones.push_back(sr_out);
    if (keep) {
      prof.x = Eigen::Map<Vector>(px.data(), px.size());
      prof.u_v = Eigen::Map<Vector>(pu.data(), pu.size());
      prof.reference = Eigen::Map<Vector>(pr.data(), pr.size());
      prof.difference = Eigen::Map<Vector>(pd.data(), pd.size());
      res.profiles.push_back(std::move(prof));
    }
  }
  return res;
}

}  // namespace

StabilityReport run_experiment(const StabilityConfig& cfg, const GridPotential& v_shape,
                               const std::vector<double>& amplitudes, const std::vector<double>& times,
                               const StabilityGrids& grids, bool keep_profiles) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  if (amplitudes.empty()) throw InvalidInput("stability: no amplitudes");
  if (times.empty()) throw InvalidInput("stability: no times");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] > 0)) throw InvalidInput("stability: times must be positive");
    if (k > 0 && !(times[k] > times[k - 1])) throw InvalidInput("stability: times must ascend");
  }
  StabilityReport rep;
  rep.config = cfg;
  rep.eps = cfg.effective_eps();
  rep.times = times;
  for (double t : times) rep.regions.push_back(region(cfg, t));
  rep.sweep.resize(amplitudes.size());
  int head = 0;
  for (std::size_t a = 0; a < amplitudes.size(); ++a)
    if (std::abs(amplitudes[a]) > std::abs(amplitudes[head])) head = static_cast<int>(a);
  rep.headline = head;

  std::string first_error;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t a = 0; a < amplitudes.size(); ++a) {
    try {
      rep.sweep[a] = run_amplitude(cfg, v_shape, amplitudes[a], times, grids,
                                   keep_profiles && static_cast<int>(a) == head);
    } catch (const std::exception& e) {
#pragma omp critical
      if (first_error.empty()) first_error = e.what();
    }
  }
  if (!first_error.empty()) throw Error(first_error);

  std::vector<double> ex, sy;
  for (const auto& r : rep.sweep) {
    rep.in_scope = rep.in_scope && r.in_scope;
    if (r.amplitude != 0 && !r.sup_in_region.empty()) {
      ex.push_back(r.eps_equiv);
      sy.push_back(*std::max_element(r.sup_in_region.begin(), r.sup_in_region.end()));
    }
  }
  if (ex.size() >= 2) {
    rep.scaling_fit = fit_loglog(ex, sy);
    rep.scaling_fit_valid = true;
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace kdvist
