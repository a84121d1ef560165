#include "io.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace kdvist::io {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void dump_rec(const json& j, int indent, int depth, std::string& out) {
  const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent) * (depth + 1), ' ') : "";
  const std::string pad_end = indent > 0 ? std::string(static_cast<std::size_t>(indent) * depth, ' ') : "";
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) { out += "{}"; return; }
      out += "{";
      out += nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) { out += ","; out += nl; }
        first = false;
        out += pad;
        out += json(it.key()).dump();
        out += indent > 0 ? ": " : ":";
        dump_rec(it.value(), indent, depth + 1, out);
      }
      out += nl;
      out += pad_end;
      out += "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) { out += "[]"; return; }
      // numeric arrays stay on one line
      bool flat = true;
      for (const auto& e : j) flat = flat && e.is_primitive();
      out += "[";
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += flat ? ", " : ",";
        if (!flat) { out += nl; out += pad; }
        first = false;
        dump_rec(e, indent, depth + 1, out);
      }
      if (!flat) { out += nl; out += pad_end; }
      out += "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_number(v) : "null";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump(const json& j, int indent) {
  std::string out;
  dump_rec(j, indent, 0, out);
  return out;
}

std::string config_hash(const json& j) {
  const std::string s = dump(j, 0);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

void write_json(const std::string& path, json body, const Meta& meta) {
  body["kdvist_version"] = kVersion;
  body["config_hash"] = meta.config_hash;
  body["command"] = meta.command;
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << dump(body) << "\n";
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<Vector>& columns, const Meta& meta) {
  if (header.size() != columns.size()) throw Error("csv: header/column mismatch");
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "# kdvist " << kVersion << " command=" << meta.command << " config_hash=" << meta.config_hash << "\n";
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << "\n";
  const Eigen::Index rows = columns.empty() ? 0 : columns[0].size();
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << format_number(columns[c][r]);
    out << "\n";
  }
}

GridPotential read_potential_csv(const std::string& path, double decay_rate) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  std::vector<double> xs, us;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double x, u;
    if (!(ls >> x >> u)) {
      if (xs.empty()) continue;  // header
      throw InvalidInput(path + ": malformed row '" + line + "'");
    }
    xs.push_back(x);
    us.push_back(u);
  }
  if (xs.size() < 5) throw InvalidInput(path + ": too few samples");
  GridPotential p;
  p.x0 = xs.front();
  p.dx = (xs.back() - xs.front()) / (xs.size() - 1);
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (std::abs(xs[i] - xs[i - 1] - p.dx) > 1e-6 * p.dx) throw InvalidInput(path + ": grid is not uniform");
  p.values = Eigen::Map<Vector>(us.data(), us.size());
  p.decay_rate = decay_rate;
  return p;
}

json vec(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector to_vector(const json& j, const char* what) {
  if (!j.is_array()) throw InvalidInput(std::string(what) + " must be an array");
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InvalidInput(std::string(what) + " must hold numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

json to_json(const ScatteringData& sd) {
  json j;
  j["time"] = sd.time;
  j["betas"] = vec(sd.betas);
  j["gammas"] = vec(sd.gammas);
  j["log_gammas"] = vec(sd.log_gammas);
  j["kgrid"] = vec(sd.kgrid);
  j["R_re"] = vec(sd.R.real());
  j["R_im"] = vec(sd.R.imag());
  return j;
}

ScatteringData scattering_from_json(const json& j) {
  ScatteringData sd;
  sd.time = j.value("time", 0.0);
  sd.betas = j.contains("betas") ? to_vector(j["betas"], "betas") : Vector();
  if (j.contains("log_gammas") && static_cast<Eigen::Index>(j["log_gammas"].size()) == sd.betas.size()) {
    sd.log_gammas = to_vector(j["log_gammas"], "log_gammas");
    sd.gammas = sd.log_gammas.array().exp();
  } else {
    sd.gammas = j.contains("gammas") ? to_vector(j["gammas"], "gammas") : Vector();
  }
  if (j.contains("kgrid")) {
    sd.kgrid = to_vector(j["kgrid"], "kgrid");
    const Vector re = to_vector(j.at("R_re"), "R_re");
    const Vector im = j.contains("R_im") ? to_vector(j["R_im"], "R_im") : Vector::Zero(re.size());
    if (re.size() != sd.kgrid.size() || im.size() != sd.kgrid.size())
      throw InvalidInput("scattering data: R and kgrid differ in length");
    sd.R.resize(re.size());
    for (Eigen::Index i = 0; i < re.size(); ++i) sd.R[i] = Complex(re[i], im[i]);
  }
  sd.normalize();
  sd.validate();
  return sd;
}

SolitonSpec spec_from_json(const json& j) {
  const Vector betas = j.contains("betas") ? to_vector(j["betas"], "betas") : Vector();
  SolitonSpec s;
  if (j.contains("gammas")) {
    s = SolitonSpec::from_gammas(betas, to_vector(j["gammas"], "gammas"));
  } else {
    s.betas = betas;
    s.alphas = j.contains("alphas") ? to_vector(j["alphas"], "alphas") : Vector::Ones(betas.size());
  }
  s.validate();
  return s;
}

std::function<double(double)> potential_function(const json& j, unsigned long long seed, double* decay_rate) {
  if (!j.is_object()) throw InvalidInput("inline potential must be an object");
  SolitonSpec sol;
  if (j.contains("solitons")) sol = spec_from_json(j["solitons"]);
  double decay = sol.n() ? 2 * sol.betas[0] : 4.0;
  struct Term {
    std::string kind;
    double amp, width, center;
  };
  std::vector<Term> terms;
  if (j.contains("terms")) {
    for (const auto& t : j["terms"]) {
      Term tm{t.at("kind").get<std::string>(), t.value("amplitude", 0.0), t.value("width", 1.0),
              t.value("center", 0.0)};
      if (tm.kind == "gaussian") {
      } else if (tm.kind == "exp_sech2") {
        decay = std::min(decay, 3.0 / tm.width);
      } else if (tm.kind == "random_bumps") {
        // Gaussian bumps with seeded centres and amplitudes in [-amp, amp]
        std::mt19937_64 rng(t.value("seed", seed));
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        const int count = t.value("count", 3);
        for (int c = 0; c < count; ++c) terms.push_back({"gaussian", tm.amp * U(rng), tm.width, 3.0 * U(rng)});
        continue;
      } else {
        throw InvalidInput("unknown potential term '" + tm.kind + "'");
      }
      if (!(tm.width > 0)) throw InvalidInput("potential term width must be positive");
      terms.push_back(tm);
    }
  }
  if (decay_rate) *decay_rate = j.value("decay_rate", decay);
  const double t0 = j.value("t", 0.0);
  return [sol, terms, t0](double x) {
    double u = sol.n() ? eval_nsoliton(sol, x, t0) : 0.0;
    for (const auto& tm : terms) {
      const double z = (x - tm.center) / tm.width;
      if (tm.kind == "gaussian") u += tm.amp * std::exp(-z * z);
      else u += tm.amp * std::exp(-std::abs(z)) / (std::cosh(z) * std::cosh(z));
    }
    return u;
  };
}

GridPotential potential_from_json(const json& j, const std::string& base_dir, unsigned long long seed) {
  if (j.is_string() || (j.is_object() && j.contains("file"))) {
    std::filesystem::path p(j.is_string() ? j.get<std::string>() : j["file"].get<std::string>());
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    return read_potential_csv(p.string(), j.is_object() ? j.value("decay_rate", 1.0) : 1.0);
  }
  double decay = 1.0;
  const auto f = potential_function(j, seed, &decay);
  return GridPotential::sample(f, j.value("L", 30.0), j.value("dx", 0.01), decay);
}

json to_json(const PerturbationReport& r) {
  return json{{"n", r.n},
              {"mu", r.mu},
              {"cap", r.cap},
              {"count_ok", r.count_ok},
              {"betas_ok", r.betas_ok},
              {"gammas_ok", r.gammas_ok},
              {"extra_ok", r.extra_ok},
              {"hypothesis_ok", r.hypothesis_ok},
              {"beta_margin", r.beta_margin},
              {"gamma_margin", r.gamma_margin},
              {"fitted_c", r.fitted_c},
              {"c_bound", r.c_bound},
              {"extra_max", r.extra_max},
              {"eps", r.eps},
              {"message", r.message}};
}

json to_json(const StabilityReport& r) {
  json j;
  const AmplitudeResult& h = r.sweep.at(r.headline);
  j["times"] = r.times;
  j["sup_in_region"] = h.sup_in_region;
  j["sup_in_cones"] = h.sup_in_cones;
  json ps = json::array();
  for (const auto& v : h.phase_shifts) ps.push_back(vec(v));
  j["phase_shifts"] = ps;
  j["perturbation_report"] = to_json(h.perturbation);
  j["scaling_fit"] = r.scaling_fit_valid ? json{{"exponent", r.scaling_fit.slope}, {"r2", r.scaling_fit.r2},
                                                 {"log_constant", r.scaling_fit.intercept}}
                                          : json(nullptr);
  j["in_scope"] = r.in_scope;
  j["eps"] = r.eps;
  j["headline_amplitude"] = h.amplitude;
  json regions = json::array();
  for (const auto& reg : r.regions) {
    json iv = json::array();
    for (const auto& [a, b] : reg.intervals) iv.push_back(json::array({a, b}));
    regions.push_back(json{{"t", reg.t}, {"intervals", iv}});
  }
  j["regions"] = regions;
  json sweep = json::array();
  for (const auto& a : r.sweep) {
    json ps2 = json::array();
    for (const auto& v : a.phase_shifts) ps2.push_back(vec(v));
    sweep.push_back(json{{"amplitude", a.amplitude},
                         {"weighted_norm", a.weighted_norm},
                         {"eps_equiv", a.eps_equiv},
                         {"in_scope", a.in_scope},
                         {"notes", a.notes},
                         {"betas", vec(a.betas)},
                         {"gammas", vec(a.gammas)},
                         {"sup_in_region", a.sup_in_region},
                         {"sup_in_cones", a.sup_in_cones},
                         {"phase_shifts", ps2},
                         {"spectral_tail", a.spectral_tail},
                         {"perturbation_report", to_json(a.perturbation)}});
  }
  j["sweep"] = sweep;
  return j;
}

json to_json(const KernelSweepReport& r) {
  auto fit = [](const LineFit& f) { return json{{"exponent", f.slope}, {"r2", f.r2}, {"log_constant", f.intercept}}; };
  return json{{"eps", r.eps},
              {"amplitude", r.amplitude},
              {"sup_c", r.sup_c},
              {"sup_cdx", r.sup_cdx},
              {"envelope_c", r.envelope_c},
              {"envelope_cdx", r.envelope_cdx},
              {"fitted_exponent_c", r.fit_c.slope},
              {"fitted_exponent_cdx", r.fit_cdx.slope},
              {"fit_c", fit(r.fit_c)},
              {"fit_cdx", fit(r.fit_cdx)},
              {"fit_envelope_c", fit(r.fit_env_c)},
              {"fit_envelope_cdx", fit(r.fit_env_cdx)}};
}

}  // namespace kdvist::io
