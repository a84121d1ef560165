#include "commands.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

using kdvist::io::json;

int main(int argc, char** argv) {
  CLI::App app{"kdvist: KdV inverse scattering and soliton stability toolkit"};
  app.set_version_flag("--version", std::string(kdvist::kVersion));
  app.require_subcommand(1);

  std::string config_path, out_dir = ".";
  bool deformed = false;
  double eps = 0.0;
  int threads = 0;

  const char* names[] = {"soliton", "scatter", "invert", "evolve", "stability", "selftest"};
  const char* about[] = {"sample an n-soliton and its crest lines",
                         "forward scattering transform of a sampled potential",
                         "reconstruct a potential from scattering data",
                         "pseudo-spectral KdV evolution",
                         "perturbed n-soliton stability experiment",
                         "quick built-in checks"};
  for (int i = 0; i < 6; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], about[i]);
    auto* c = sub->add_option("--config", config_path, "JSON config");
    if (std::string(names[i]) != "selftest") c->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads (default: KDVIST_THREADS)");
    if (std::string(names[i]) == "invert") {
      sub->add_flag("--deformed", deformed, "use the strip-shifted kernel");
      sub->add_option("--eps", eps, "strip shift");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (threads <= 0) {
    if (const char* env = std::getenv("KDVIST_THREADS")) threads = std::atoi(env);
  }
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    json cfg = config_path.empty() ? json::object() : kdvist::io::read_json(config_path);
    if (!cfg.is_object()) throw kdvist::InvalidInput("config must be a JSON object");
    kdvist::cli::Context ctx;
    ctx.out_dir = cfg.value("output_dir", out_dir);
    if (out_dir != ".") ctx.out_dir = out_dir;
    ctx.base_dir = config_path.empty() ? "." : std::filesystem::path(config_path).parent_path().string();
    if (ctx.base_dir.empty()) ctx.base_dir = ".";
    ctx.deformed = deformed;
    ctx.eps = eps;
    // flags that change the result are part of the hash
    json hashed = cfg;
    if (deformed) hashed["__deformed"] = true;
    if (eps > 0) hashed["__eps"] = eps;
    ctx.meta = {cmd, kdvist::io::config_hash(hashed)};
    std::filesystem::create_directories(ctx.out_dir);

    if (cmd == "soliton") return kdvist::cli::cmd_soliton(cfg, ctx);
    if (cmd == "scatter") return kdvist::cli::cmd_scatter(cfg, ctx);
    if (cmd == "invert") return kdvist::cli::cmd_invert(cfg, ctx);
    if (cmd == "evolve") return kdvist::cli::cmd_evolve(cfg, ctx);
    if (cmd == "stability") return kdvist::cli::cmd_stability(cfg, ctx);
    return kdvist::cli::cmd_selftest(cfg, ctx);
  } catch (const std::exception& e) {
    std::cerr << "kdvist " << cmd << ": " << e.what() << "\n";
    return 1;
  }
}
