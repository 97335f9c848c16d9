#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "rotorcage/config.hpp"
#include "rotorcage/grid.hpp"
#include "rotorcage/lanczos.hpp"
#include "rotorcage/potential.hpp"
#include "rotorcage/spectroscopy.hpp"
#include "rotorcage/states.hpp"
#include "rotorcage/tensor.hpp"

namespace rotorcage {

inline constexpr const char* kReportSchema = "rotorcage-report/1";

struct Diagnostics {
  double radial_rms = 0.0;
  double angular_rms = 0.0;
  long solver_iterations = 0;
  double max_residual = 0.0;
  double sigma_used = 0.0;
  std::vector<std::string> warnings;
};

// Full-run result. Sections are optional so subcommands can emit partial
// reports; emit_report marks absent sections as skipped rather than dropping
// them.
struct Report {
  std::string tool_version = kToolVersion;
  std::string config_hash;

  bool has_fits = false;
  HarmonicFit radial_fit;
  FourierFit angular_fit;

  bool has_decomposition = false;
  TensorDecomposition decomposition;

  bool has_channels = false;
  ConversionChannels channels;

  bool has_states = false;
  std::vector<AssignedState> states;

  bool has_peaks = false;
  std::vector<TransitionLine> peaks;

  bool has_pathways = false;
  std::vector<ConversionPathway> pathways;

  Diagnostics diagnostics;
};

// Executes every stage in order (potential fits, tensor decomposition,
// channel classification, grid, Hamiltonian, eigensolve, assignment,
// transitions, pathways), writing each stage's intermediate file into the
// output directory as it completes, then the report in every configured
// format. Stage failures propagate with the stage name prepended; files from
// completed stages stay on disk. An advisory lock file (.rotorcage.lock)
// serializes concurrent runs against one directory. Ambiguous assignments
// are downgraded to warnings and excluded from the transition analysis.
Report run_pipeline(const PipelineConfig& config);

// The initial states that still carry population at cryogenic temperature:
// for each spin species, every state sharing (n, j_dominant) with that
// species' lowest-energy member. Ortho states cannot relax below j = 1, so
// both species contribute. The report's Q1 peak table starts from exactly
// these states (the full list remains the final manifold), which reproduces
// the observed low-temperature four-line structure instead of flooding the
// table with transitions from unpopulated levels.
std::vector<AssignedState> thermal_initial_manifold(
    const std::vector<AssignedState>& states);

nlohmann::ordered_json report_to_json(const Report& report);

// format: "json" (report.json) or "csv-bundle" (one CSV per table).
// Identical reports produce byte-identical files.
void emit_report(const Report& report, const std::string& format,
                 const std::string& directory);

// Stage intermediates. Writers are deterministic; readers validate and throw
// InputError on malformed or missing files.
void write_fits_json(const std::string& path, const HarmonicFit& radial,
                     const FourierFit& angular);
void read_fits_json(const std::string& path, HarmonicFit& radial,
                    FourierFit& angular);

void write_decomposition_json(const std::string& path,
                              const TensorDecomposition& decomp,
                              const ConversionChannels& channels);
void read_decomposition_json(const std::string& path,
                             TensorDecomposition& decomp,
                             ConversionChannels& channels);

// Binary eigenpair container (magic RCEV1) carrying the grid geometry so
// assignment can resume without re-solving.
void write_eigen_bin(const std::string& path, const EigenPairs& pairs,
                     const Grid3D& grid);
EigenPairs read_eigen_bin(const std::string& path, Grid3D& grid);

void write_states_json(const std::string& path,
                       const std::vector<AssignedState>& states);
std::vector<AssignedState> read_states_json(const std::string& path);
void write_states_csv(const std::string& path,
                      const std::vector<AssignedState>& states);

void write_peaks_csv(const std::string& path,
                     const std::vector<TransitionLine>& peaks);
void write_pathways_csv(const std::string& path,
                        const std::vector<ConversionPathway>& pathways);

}  // namespace rotorcage
