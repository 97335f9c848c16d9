#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rotorcage/common.hpp"
#include "rotorcage/hamiltonian.hpp"

namespace rotorcage {

struct GridConfig {
  int nr = 30;
  int ntheta = 30;
  int nphi = 30;
  double r_max = 1.0;
};

struct SolverConfig {
  int n_eig = 20;
  bool has_sigma = false;  // explicit shift; otherwise chosen automatically
  double sigma = 0.0;
  double tol = 1e-6;
  int max_iter = 0;  // 0 = iteration budget chosen from n_eig
  std::uint64_t seed = 20240915ull;
};

struct PotentialConfig {
  std::string radial_path;
  std::string angular_path;
  int fourier_order = 4;
};

struct DecompositionConfig {
  int k_max = 4;
  double epsilon = 1e-3;
};

struct SpectroscopyConfig {
  double nu_origin = 4161.0;
  double resolution = 0.5;
};

struct OutputConfig {
  std::string directory = "out";
  std::vector<std::string> formats = {"json"};
};

// One JSON document with sections model / grid / solver / potential /
// decomposition / spectroscopy / output. Unknown keys are rejected so typos
// fail loudly instead of silently falling back to defaults.
struct PipelineConfig {
  ModelParams model;  // nu_origin mirrored from the spectroscopy section
  GridConfig grid;
  SolverConfig solver;
  PotentialConfig potential;
  DecompositionConfig decomposition;
  SpectroscopyConfig spectroscopy;
  OutputConfig output;

  void validate() const;  // bounds only; file existence is checked at use
};

PipelineConfig parse_config(const nlohmann::ordered_json& doc);

// Reads and validates a config file. ROTORCAGE_OUT, when set and non-empty,
// overrides output.directory.
PipelineConfig load_config(const std::string& path);

nlohmann::ordered_json config_to_json(const PipelineConfig& config);

// FNV-1a (64-bit) over the canonical serialization of every section except
// output, as 16 hex digits. Two runs of one configuration into different
// directories report the same fingerprint.
std::string config_hash(const PipelineConfig& config);

}  // namespace rotorcage
