#include <doctest.h>

#include "commands.hpp"
#include "io.hpp"
#include "kdvist/quadrature.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace kdvist;
using io::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("kdvist_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

cli::Context context(const fs::path& out, const std::string& cmd, const json& cfg) {
  cli::Context c;
  c.out_dir = out.string();
  c.base_dir = out.string();
  c.meta = {cmd, io::config_hash(cfg)};
  return c;
}

int run_binary(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(KDVIST_BIN) + " " + args + " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
#ifdef WEXITSTATUS
  return WEXITSTATUS(rc);
#else
  return rc;
#endif
}

double sech2(double x) { return 1 / (std::cosh(x) * std::cosh(x)); }

}  // namespace

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, 1.0 / 3, -2.5e-300, 6.02e23, 0.0}) CHECK(std::stod(io::format_number(v)) == v);
  const json j{{"b", 1.0 / 3}, {"a", json::array({1, 2})}, {"c", std::nan("")}};
  const std::string s = io::dump(j);
  CHECK(s == io::dump(json::parse(io::dump(j))));
  CHECK(s.find("\"a\"") < s.find("\"b\""));
  CHECK(s.find("null") != std::string::npos);
}

TEST_CASE("config hash is stable and content sensitive") {
  const json a = json::parse(R"({"x": 1, "y": [1, 2]})");
  const json b = json::parse(R"({"y": [1, 2], "x": 1})");
  const json c = json::parse(R"({"y": [1, 3], "x": 1})");
  CHECK(io::config_hash(a) == io::config_hash(b));
  CHECK(io::config_hash(a) != io::config_hash(c));
  CHECK(io::config_hash(a).size() == 16);
}

TEST_CASE("potential csv round trip") {
  const fs::path d = scratch("csv");
  const GridPotential p = GridPotential::sample([](double x) { return -2 * sech2(x); }, 10, 0.05, 2.0);
  io::write_csv((d / "p.csv").string(), {"x", "u"}, {p.grid(), p.values}, {"test", "0"});
  const GridPotential q = io::read_potential_csv((d / "p.csv").string(), 2.0);
  REQUIRE(q.size() == p.size());
  CHECK((q.values - p.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK(q.x0 == p.x0);
  CHECK(q.dx == doctest::Approx(p.dx).epsilon(1e-14));

  std::ofstream((d / "bad.csv").string()) << "x,u\n0,1\n1,1\n2,1\n4,1\n5,1\n";
  CHECK_THROWS_AS(io::read_potential_csv((d / "bad.csv").string(), 1.0), InvalidInput);
}

TEST_CASE("scattering json round trip") {
  ScatteringData sd;
  sd.kgrid = make_kgrid(1.0, 0.25);
  sd.R = CVector::Zero(sd.kgrid.size());
  for (int i = 0; i < sd.kgrid.size(); ++i) sd.R[i] = Complex(0.1 / (1 + sd.kgrid[i] * sd.kgrid[i]), 0.01 * sd.kgrid[i]);
  sd.betas = Vector::LinSpaced(2, 0.5, 1.5);
  sd.gammas = Vector::Constant(2, 3.0);
  sd.time = 0.25;
  sd.normalize();
  const ScatteringData back = io::scattering_from_json(json::parse(io::dump(io::to_json(sd))));
  CHECK(back.time == sd.time);
  CHECK((back.R - sd.R).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.kgrid - sd.kgrid).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.log_gammas - sd.log_gammas).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("soliton command: alphas and gammas describe the same profile") {
  const fs::path d1 = scratch("sol1"), d2 = scratch("sol2");
  const SolitonSpec s{(Vector(2) << 1, 2).finished(), (Vector(2) << 1, 3).finished()};
  const json a{{"solitons", {{"betas", {1, 2}}, {"alphas", {1, 3}}}}, {"t", 0.1}, {"grid", {{"L", 5}, {"dx", 0.1}}}};
  json g = a;
  g["solitons"] = {{"betas", {1, 2}}, {"gammas", io::vec(gamma_from_alpha(s.betas, s.alphas))}};
  CHECK(cli::cmd_soliton(a, context(d1, "soliton", a)) == 0);
  CHECK(cli::cmd_soliton(g, context(d2, "soliton", g)) == 0);
  const GridPotential u1 = io::read_potential_csv((d1 / "soliton.csv").string(), 1.0);
  const GridPotential u2 = io::read_potential_csv((d2 / "soliton.csv").string(), 1.0);
  CHECK((u1.values - u2.values).cwiseAbs().maxCoeff() < 1e-12);
  for (int i = 0; i < u1.size(); i += 10) CHECK(u1.values[i] == doctest::Approx(eval_nsoliton(s, u1.x(i), 0.1)));
  const json cr = io::read_json((d1 / "crests.json").string());
  CHECK(cr.at("crest_lines").size() == 4);
  CHECK(cr.at("config_hash") == io::config_hash(a));
}

TEST_CASE("soliton command with no solitons") {
  const fs::path d = scratch("sol0");
  const json c{{"solitons", json::object()}, {"grid", {{"L", 2}, {"dx", 0.5}}}};
  CHECK(cli::cmd_soliton(c, context(d, "soliton", c)) == 0);
  const GridPotential u = io::read_potential_csv((d / "soliton.csv").string(), 1.0);
  CHECK(u.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scatter command on sech2 and on zero") {
  const fs::path d = scratch("sc");
  const json c{{"potential", {{"solitons", {{"betas", {1}}}}, {"L", 20}, {"dx", 0.02}}}, {"options", {{"kmax", 4}}}};
  CHECK(cli::cmd_scatter(c, context(d, "scatter", c)) == 0);
  const json s = io::read_json((d / "scattering.json").string());
  REQUIRE(s.at("betas").size() == 1);
  CHECK(s["betas"][0].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(s["gammas"][0].get<double>() == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(s["max_abs_R"].get<double>() < 1e-6);

  const fs::path z = scratch("sc0");
  const json c0{{"potential", {{"terms", json::array()}, {"L", 5}, {"dx", 0.05}}}, {"options", {{"kmax", 2}}}};
  CHECK(cli::cmd_scatter(c0, context(z, "scatter", c0)) == 0);
  const json s0 = io::read_json((z / "scattering.json").string());
  CHECK(s0.at("betas").empty());
  CHECK(s0["max_abs_R"].get<double>() == 0.0);
}

TEST_CASE("binary: byte identical reruns") {
  const fs::path d = scratch("bin");
  std::ofstream(d / "cfg.json") << R"({"potential": {"solitons": {"betas": [1]}, "L": 12, "dx": 0.05}, "options": {"kmax": 2, "dk": 0.05}})";
  REQUIRE(run_binary("scatter --config " + (d / "cfg.json").string() + " --out " + (d / "a").string(), d / "a.log") == 0);
  REQUIRE(run_binary("scatter --config " + (d / "cfg.json").string() + " --out " + (d / "b").string() + " --threads 2",
                     d / "b.log") == 0);
  CHECK(slurp(d / "a" / "scattering.json") == slurp(d / "b" / "scattering.json"));
  CHECK(slurp(d / "a" / "unitarity.csv") == slurp(d / "b" / "unitarity.csv"));
}

TEST_CASE("binary: exit codes") {
  const fs::path d = scratch("codes");
  CHECK(run_binary("scatter --config " + (d / "missing.json").string() + " --out " + d.string(), d / "m.log") == 1);

  std::ofstream(d / "stab.json") << R"({"reference": {"betas": [1]}, "amplitudes": [0.5], "times": [0.2],
    "grids": {"x0": -48, "period": 128, "modes": 2048, "dt": 0.00025, "margin": 8}})";
  CHECK(run_binary("stability --config " + (d / "stab.json").string() + " --out " + (d / "s").string(), d / "s.log") == 2);
  CHECK(fs::exists(d / "s" / "stability_report.json"));

  std::ofstream(d / "inv.json") << R"({"data": {"betas": [1], "gammas": [2], "time": 0},
    "potential": {"solitons": {"betas": [1]}, "L": 20, "dx": 0.02}, "t": 1.0,
    "grid": {"x0": -1, "dx": 0.05, "n": 20}})";
  CHECK(run_binary("invert --deformed --eps 0.2 --config " + (d / "inv.json").string() + " --out " + (d / "i").string(),
                   d / "i.log") == 1);
  CHECK(slurp(d / "i.log").find("region") != std::string::npos);
}
