#include "commands.hpp"

#include "kdvist/deformed_glm.hpp"
#include "kdvist/glm.hpp"
#include "kdvist/pde.hpp"
#include "kdvist/stability.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <sstream>

namespace kdvist::cli {

using io::json;

namespace {

std::string out_path(const Context& ctx, const std::string& name) {
  return (std::filesystem::path(ctx.out_dir) / name).string();
}

// {"x0", "dx", "n"} or {"L", "dx"} (symmetric)
Vector grid_from_json(const json& g, double L_default, double dx_default) {
  const double dx = g.value("dx", dx_default);
  if (!(dx > 0)) throw InvalidInput("grid: dx must be positive");
  if (g.contains("x0")) {
    const int n = g.at("n").get<int>();
    if (n < 5) throw InvalidInput("grid: need at least 5 points");
    return uniform_grid(g["x0"].get<double>(), dx, n);
  }
  const double L = g.value("L", L_default);
  const int n = static_cast<int>(std::lround(2 * L / dx)) + 1;
  return uniform_grid(-L, dx, n);
}

ScatterOptions scatter_options(const json& j) {
  ScatterOptions o;
  if (!j.is_object()) return o;
  o.kmax = j.value("kmax", o.kmax);
  o.dk = j.value("dk", o.dk);
  o.dk_min = j.value("dk_min", o.dk_min);
  o.grading = j.value("grading", o.grading);
  o.kappa_max = j.value("kappa_max", o.kappa_max);
  o.dkappa = j.value("dkappa", o.dkappa);
  return o;
}

GLMOptions glm_options(const json& j) {
  GLMOptions o;
  o.Y = j.value("Y", o.Y);
  o.h = j.value("h", o.h);
  if (j.value("rule", std::string("gregory")) == "trapezoid") o.rule = QuadRule::Trapezoid;
  return o;
}

ScatteringData load_data(const json& cfg, const Context& ctx) {
  const json& d = cfg.at("data");
  if (d.is_string()) {
    std::filesystem::path p(d.get<std::string>());
    if (p.is_relative()) p = std::filesystem::path(ctx.base_dir) / p;
    return io::scattering_from_json(io::read_json(p.string()));
  }
  return io::scattering_from_json(d);
}

}  // namespace

int cmd_soliton(const json& cfg, const Context& ctx) {
  const SolitonSpec spec = io::spec_from_json(cfg.value("solitons", json::object()));
  const double t = cfg.value("t", 0.0);
  const Vector x = grid_from_json(cfg.value("grid", json::object()), 20.0, 0.01);
  const Vector u = spec.n() ? eval_nsoliton(spec, x, t) : Vector::Zero(x.size());
  io::write_csv(out_path(ctx, "soliton.csv"), {"x", "u"}, {x, u}, ctx.meta);

  json crests = json::array();
  if (spec.n()) {
    for (int sign : {1, -1}) {
      for (const auto& c : crest_lines(spec, sign))
        crests.push_back(json{{"beta", c.beta}, {"speed", c.speed}, {"phase", c.phase}, {"time_sign", c.time_sign},
                              {"position_at_t", c.position(t)}});
    }
  }
  json out{{"t", t},
           {"betas", io::vec(spec.betas)},
           {"alphas", io::vec(spec.alphas)},
           {"gammas", spec.n() ? io::vec(gamma_from_alpha(spec.betas, spec.alphas)) : json::array()},
           {"crest_lines", crests}};
  io::write_json(out_path(ctx, "crests.json"), out, ctx.meta);
  return 0;
}

int cmd_scatter(const json& cfg, const Context& ctx) {
  GridPotential p = io::potential_from_json(cfg.at("potential"), ctx.base_dir, cfg.value("seed", 0ULL));
  if (cfg.contains("decay_rate")) p.decay_rate = cfg["decay_rate"].get<double>();
  const ScatterResult r = scatter(p, scatter_options(cfg.value("options", json::object())));
  json out = io::to_json(r.data);
  out["mu"] = r.data.mu();
  out["contour_count"] = r.contour_count;
  out["bound_state_cap"] = r.cap;
  out["unitarity_max"] = r.unitarity_residual.size() ? r.unitarity_residual.cwiseAbs().maxCoeff() : 0.0;
  out["max_abs_R"] = r.data.R.size() ? r.data.R.cwiseAbs().maxCoeff() : 0.0;
  out["endpoint_discrepancy"] = r.endpoint_discrepancy;
  out["nondegeneracy_sum"] = r.nondegeneracy_sum;
  out["warnings"] = r.warnings;
  io::write_json(out_path(ctx, "scattering.json"), out, ctx.meta);
  io::write_csv(out_path(ctx, "unitarity.csv"), {"k", "abs_R", "abs_T", "residual"},
                {r.data.kgrid, r.data.R.cwiseAbs(), r.abs_t, r.unitarity_residual}, ctx.meta);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  return 0;
}

int cmd_invert(const json& cfg, const Context& ctx) {
  const ScatteringData data = load_data(cfg, ctx);
  const double t = cfg.value("t", 0.0);
  const Vector x = grid_from_json(cfg.value("grid", json::object()), 15.0, 0.01);
  const GLMOptions opt = glm_options(cfg.value("glm", json::object()));
  if (!ctx.deformed) {
    const GridPotential u = reconstruct_u(data, x, t, opt);
    io::write_csv(out_path(ctx, "potential.csv"), {"x", "u"}, {x, u.values}, ctx.meta);
    return 0;
  }
  const double eps = ctx.eps > 0 ? ctx.eps : cfg.value("eps", 0.0);
  if (!(eps > 0)) throw InvalidInput("deformed inversion needs --eps or \"eps\"");
  if (!cfg.contains("potential"))
    throw InvalidInput("deformed inversion needs \"potential\" to continue R into the strip");
  GridPotential p = io::potential_from_json(cfg["potential"], ctx.base_dir, cfg.value("seed", 0ULL));
  if (cfg.contains("decay_rate")) p.decay_rate = cfg["decay_rate"].get<double>();
  int n = cfg.value("n", -1);
  if (n < 0) {
    n = 0;
    for (Eigen::Index j = 0; j < data.betas.size(); ++j) n += data.betas[j] > eps ? 1 : 0;
  }
  StripOptions so;
  so.kmax = cfg.value("strip_kmax", so.kmax);
  so.dk = cfg.value("strip_dk", so.dk);
  const DeformedKernel K = build_deformed_kernel(p, data, n, eps, so);
  const GridPotential ud = reconstruct_deformed(K, x, t, opt);
  const GridPotential uc = reconstruct_u(data, x, t, opt);
  io::write_csv(out_path(ctx, "potential.csv"), {"x", "u"}, {x, ud.values}, ctx.meta);
  io::write_csv(out_path(ctx, "deformed_vs_classical.csv"), {"x", "u_deformed", "u_classical", "difference"},
                {x, ud.values, uc.values, ud.values - uc.values}, ctx.meta);
  json summary{{"eps", eps},
               {"n", n},
               {"t", t},
               {"min_abs_a_strip", K.min_abs_a},
               {"max_difference", (ud.values - uc.values).cwiseAbs().maxCoeff()}};
  io::write_json(out_path(ctx, "deformed_summary.json"), summary, ctx.meta);
  return 0;
}

int cmd_evolve(const json& cfg, const Context& ctx) {
  const double period = cfg.value("period", 256.0);
  const int modes = cfg.value("modes", 4096);
  const double x0 = cfg.value("x0", -period / 2);
  const double dt = cfg.value("dt", 1.25e-4);
  const double t0 = cfg.value("t0", 0.0);
  const int stride = std::max(1, cfg.value("stride", 1));
  std::vector<double> times = cfg.value("times", std::vector<double>{});
  if (times.empty()) throw InvalidInput("evolve: \"times\" is empty");
  const json& init = cfg.at("initial");
  PdeState s0;
  if (init.is_object() && !init.contains("file")) {
    const auto f = io::potential_function(init, cfg.value("seed", 0ULL), nullptr);
    s0 = PdeState::sample(f, x0, period, modes, t0);
  } else {
    const GridPotential g = io::potential_from_json(init, ctx.base_dir);
    s0 = PdeState::sample(
        [&](double x) {
          const double r = (x - g.x0) / g.dx;
          if (r < 0 || r > g.size() - 1) return 0.0;
          const int i = std::min(static_cast<int>(r), g.size() - 2);
          const double w = r - i;
          return (1 - w) * g.values[i] + w * g.values[i + 1];
        },
        x0, period, modes, t0);
  }
  KdvIntegrator I(period, modes);
  const Conserved c0 = I.conserved(s0);
  const auto snaps = I.evolve_to(s0, times, dt);
  std::vector<double> ct, cx, cu;
  json diag = json::array();
  for (const auto& s : snaps) {
    for (int i = 0; i < s.modes; i += stride) {
      ct.push_back(s.time);
      cx.push_back(s.x(i));
      cu.push_back(s.values[i]);
    }
    const Conserved c = I.conserved(s);
    diag.push_back(json{{"t", s.time},
                        {"mass", c.mass},
                        {"momentum", c.momentum},
                        {"energy", c.energy},
                        {"spectral_tail", I.spectral_tail(s)}});
  }
  io::write_csv(out_path(ctx, "frames.csv"), {"t", "x", "u"},
                {Eigen::Map<Vector>(ct.data(), ct.size()), Eigen::Map<Vector>(cx.data(), cx.size()),
                 Eigen::Map<Vector>(cu.data(), cu.size())},
                ctx.meta);
  json out{{"initial", json{{"t", t0}, {"mass", c0.mass}, {"momentum", c0.momentum}, {"energy", c0.energy}}},
           {"snapshots", diag},
           {"period", period},
           {"modes", modes},
           {"dt", dt}};
  io::write_json(out_path(ctx, "conserved.json"), out, ctx.meta);
  return 0;
}

int cmd_stability(const json& cfg, const Context& ctx) {
  StabilityConfig sc;
  sc.reference = io::spec_from_json(cfg.at("reference"));
  sc.a_decay = cfg.value("a_decay", sc.a_decay);
  sc.sigma = cfg.value("sigma", sc.sigma);
  sc.tau_cone = cfg.value("tau", sc.tau_cone);
  sc.eps = cfg.value("eps", sc.eps);
  sc.c_check = cfg.value("c_check", sc.c_check);
  json pj = cfg.value("perturbation", json{{"terms", json::array({json{{"kind", "exp_sech2"}, {"amplitude", 1.0}}})}});
  GridPotential shape = io::potential_from_json(pj, ctx.base_dir, cfg.value("seed", 0ULL));
  const std::vector<double> amps = cfg.value("amplitudes", std::vector<double>{1e-3});
  const std::vector<double> times = cfg.value("times", std::vector<double>{0.5, 2.0, 5.0});
  StabilityGrids g;
  if (cfg.contains("grids")) {
    const json& gj = cfg["grids"];
    g.pde_x0 = gj.value("x0", g.pde_x0);
    g.pde_period = gj.value("period", g.pde_period);
    g.pde_modes = gj.value("modes", g.pde_modes);
    g.dt = gj.value("dt", g.dt);
    g.margin = gj.value("margin", g.margin);
    g.profile_stride = gj.value("profile_stride", g.profile_stride);
  }
  if (cfg.contains("kernel_sweep")) {
    // unit shape against the reference on the same grid
    const json& kj = cfg["kernel_sweep"];
    KernelSweepConfig kc;
    kc.eps = kj.value("eps", kc.eps);
    kc.times = kj.value("times", kc.times);
    kc.x_offsets = kj.value("x_offsets", kc.x_offsets);
    kc.y_max = kj.value("y_max", kc.y_max);
    kc.u_max = kj.value("u_max", kc.u_max);
    kc.step = kj.value("step", kc.step);
    kc.c_check = kj.value("c_check", kc.c_check);
    kc.sigma = sc.sigma;
    kc.a_decay = sc.a_decay;
    if (sc.reference.n() == 0) throw InvalidInput("kernel_sweep needs at least one reference soliton");
    GridPotential ref = shape;
    for (int i = 0; i < ref.size(); ++i) ref.values[i] = eval_nsoliton(sc.reference, ref.x(i), 0.0);
    ref.decay_rate = 2 * sc.reference.betas[0];
    ref.envelope = std::numeric_limits<double>::quiet_NaN();
    const KernelSweepReport kr = kernel_bound_sweep(ref, shape, sc.reference.n(), kc);
    io::write_json(out_path(ctx, "kernel_sweep.json"), io::to_json(kr), ctx.meta);
  }
  const StabilityReport rep = run_experiment(sc, shape, amps, times, g, true);
  io::write_json(out_path(ctx, "stability_report.json"), io::to_json(rep), ctx.meta);
  for (const auto& p : rep.sweep[rep.headline].profiles) {
    char name[64];
    std::snprintf(name, sizeof name, "profile_t%g.csv", p.t);
    io::write_csv(out_path(ctx, name), {"x", "u_v", "shifted_reference", "difference"},
                  {p.x, p.u_v, p.reference, p.difference}, ctx.meta);
  }
  if (!rep.in_scope) {
    std::cerr << "outside the stability hypotheses:";
    for (const auto& a : rep.sweep)
      for (const auto& n : a.notes) std::cerr << " [" << a.amplitude << "] " << n;
    std::cerr << "\n";
    return 2;
  }
  return 0;
}

int cmd_selftest(const json& cfg, const Context& ctx) {
  (void)cfg;
  (void)ctx;
  int failures = 0;
  auto report = [&](const char* name, bool ok, double value) {
    std::printf("%s %s (%.3e)\n", ok ? "PASS" : "FAIL", name, value);
    failures += ok ? 0 : 1;
  };
  {
    const auto p = GridPotential::sample([](double x) { return -2 / (std::cosh(x) * std::cosh(x)); }, 20, 0.02, 2.0);
    ScatterOptions o;
    o.kmax = 4;
    const auto r = scatter(p, o);
    report("sech2 bound state", r.data.mu() == 1 && std::abs(r.data.betas[0] - 1) < 1e-6,
           r.data.mu() == 1 ? std::abs(r.data.betas[0] - 1) : 1.0);
  }
  {
    ScatteringData d;
    d.betas = Vector::Constant(1, 1.0);
    d.gammas = Vector::Constant(1, 2.0);
    d.normalize();
    const Vector x = uniform_grid(-5, 0.01, 1001);
    const GridPotential u = reconstruct_u(d, x, 0.0);
    double e = 0;
    for (int i = 0; i < x.size(); ++i) e = std::max(e, std::abs(u.values[i] + 2 / std::pow(std::cosh(x[i]), 2)));
    report("one-soliton reconstruction", e < 1e-6, e);
  }
  {
    SolitonSpec s{Vector::Ones(1), Vector::Ones(1)};
    const PdeState s0 = PdeState::sample([&](double x) { return eval_nsoliton(s, x, 0.0); }, -32, 64, 512);
    const PdeState s1 = pde_evolve(s0, 0.2, 1e-3);
    double e = 0;
    for (int i = 0; i < s1.modes; ++i) e = std::max(e, std::abs(s1.values[i] - eval_nsoliton(s, s1.x(i), 0.2)));
    report("one-soliton PDE transport", e < 1e-5, e);
  }
  return failures ? 1 : 0;
}

}  // namespace kdvist::cli
