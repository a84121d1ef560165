#pragma once

#include "kdvist/common.hpp"
#include "kdvist/deformed_glm.hpp"
#include "kdvist/potential.hpp"
#include "kdvist/scatter.hpp"
#include "kdvist/soliton.hpp"
#include "kdvist/stability.hpp"

#include <json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace kdvist::io {

using nlohmann::json;

// Every artifact carries these.
struct Meta {
  std::string command;
  std::string config_hash;
};

std::string format_number(double v);
// Deterministic dump: keys sorted, doubles as %.17g, non-finite as null.
std::string dump(const json& j, int indent = 2);
// FNV-1a 64 over the canonical compact dump.
std::string config_hash(const json& j);

json read_json(const std::string& path);
void write_json(const std::string& path, json body, const Meta& meta);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<Vector>& columns, const Meta& meta);

// Two columns x,u; '#' lines and a non-numeric header are skipped.
GridPotential read_potential_csv(const std::string& path, double decay_rate);

json vec(const Vector& v);
Vector to_vector(const json& j, const char* what);

json to_json(const ScatteringData& sd);
ScatteringData scattering_from_json(const json& j);

// {"betas": [...], "alphas": [...]} or with "gammas" in place of "alphas".
SolitonSpec spec_from_json(const json& j);

// A CSV path (relative to base_dir) or an inline description:
// {"L", "dx", "decay_rate", "solitons": {...}, "terms": [{"kind": ..., "amplitude": ...}], "seed"}
// Inline description only; decay_rate receives the declared or inferred tail rate.
std::function<double(double)> potential_function(const json& j, unsigned long long seed, double* decay_rate);
GridPotential potential_from_json(const json& j, const std::string& base_dir, unsigned long long seed = 0);

json to_json(const PerturbationReport& r);
json to_json(const StabilityReport& r);
json to_json(const KernelSweepReport& r);

}  // namespace kdvist::io
