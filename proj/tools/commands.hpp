#pragma once

#include "io.hpp"

#include <string>

namespace kdvist::cli {

struct Context {
  std::string out_dir = ".";
  std::string base_dir = ".";  // relative paths in the config resolve here
  bool deformed = false;
  double eps = 0.0;            // <= 0: take it from the config
  io::Meta meta;
};

// Exit codes: 0 success, 2 outside the stability hypotheses, 1 error (thrown).
int cmd_soliton(const io::json& cfg, const Context& ctx);
int cmd_scatter(const io::json& cfg, const Context& ctx);
int cmd_invert(const io::json& cfg, const Context& ctx);
int cmd_evolve(const io::json& cfg, const Context& ctx);
int cmd_stability(const io::json& cfg, const Context& ctx);
int cmd_selftest(const io::json& cfg, const Context& ctx);

}  // namespace kdvist::cli
