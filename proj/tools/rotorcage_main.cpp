// rotorcage: confined-diatomic eigenstates, selection rules, and spectral
// analysis from the command line. Every subcommand reads/writes documented
// files only, so a full run can be resumed from any intermediate.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rotorcage/config.hpp"
#include "rotorcage/csv.hpp"
#include "rotorcage/pipeline.hpp"
#include "rotorcage/specfit.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace rotorcage;

namespace {

std::string resolve_out(const std::string& flag_value,
                        const std::string& fallback) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("ROTORCAGE_OUT"); env && *env) return env;
  return fallback;
}

void ensure_dir(const std::string& dir) {
  try {
    fs::create_directories(dir);
  } catch (const fs::filesystem_error& e) {
    throw InputError(std::string("cannot create output directory: ") +
                     e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write file: " + path);
  out << text;
  if (!out) throw InputError("write failed: " + path);
}

Spectrum load_spectrum(const std::string& path) {
  const CsvTable table = read_csv(path, {"wavenumber_cm1", "absorbance"});
  Spectrum s;
  for (const std::vector<double>& row : table.rows) {
    s.wavenumbers.push_back(row[0]);
    s.absorbance.push_back(row[1]);
  }
  s.validate();
  return s;
}

// Area of one tracked peak: single-Gaussian fit in a window around `center`.
double peak_area(const Spectrum& spec, double center, double sigma,
                 double half_width) {
  const double lo = std::max(center - half_width, spec.wavenumbers.front());
  const double hi = std::min(center + half_width, spec.wavenumbers.back());
  if (center < lo || center > hi)
    throw InputError("tracked peak center lies outside the spectrum");
  double floor_level = spec.absorbance.front(), height = 0.0;
  for (size_t i = 0; i < spec.wavenumbers.size(); ++i)
    if (spec.wavenumbers[i] >= lo && spec.wavenumbers[i] <= hi) {
      floor_level = std::min(floor_level, spec.absorbance[i]);
      height = std::max(height, spec.absorbance[i]);
    }
  GaussianPeak guess;
  guess.center = center;
  guess.sigma = sigma;
  guess.area = std::max(height - floor_level, 0.0) * sigma * 2.5066282746;
  const FitResult fit = fit_gaussian_peaks(spec, {guess}, lo, hi);
  return fit.peaks[0].area;
}

struct FitSpectrumArgs {
  std::string spectrum_path;
  std::vector<double> centers;
  double sigma = 2.0;
  double window_lo = 0.0, window_hi = 0.0;
  bool has_window = false;
};

int cmd_fit_spectrum(const FitSpectrumArgs& a, const std::string& out_dir,
                     bool verbose) {
  const Spectrum spec = load_spectrum(a.spectrum_path);
  const double lo = a.has_window ? a.window_lo : spec.wavenumbers.front();
  const double hi = a.has_window ? a.window_hi : spec.wavenumbers.back();

  std::vector<GaussianPeak> init;
  if (a.centers.empty()) {
    init = pick_peaks(spec, a.sigma);
    std::vector<GaussianPeak> inside;
    for (const GaussianPeak& p : init)
      if (p.center >= lo && p.center <= hi) inside.push_back(p);
    init.swap(inside);
    if (init.empty())
      throw InputError("no peaks found above 3x noise; pass --centers");
    if (verbose)
      std::fprintf(stderr, "picked %zu candidate peak(s)\n", init.size());
  } else {
    double floor_level = spec.absorbance.front();
    for (double y : spec.absorbance) floor_level = std::min(floor_level, y);
    for (double c : a.centers) {
      size_t nearest = 0;
      for (size_t i = 0; i < spec.wavenumbers.size(); ++i)
        if (std::abs(spec.wavenumbers[i] - c) <
            std::abs(spec.wavenumbers[nearest] - c))
          nearest = i;
      GaussianPeak p;
      p.center = c;
      p.sigma = a.sigma;
      p.area = std::max(spec.absorbance[nearest] - floor_level, 0.0) *
               a.sigma * 2.5066282746;
      init.push_back(p);
    }
  }

  const FitResult fit = fit_gaussian_peaks(spec, init, lo, hi);

  ensure_dir(out_dir);
  ordered_json j;
  j["schema"] = "rotorcage-specfit/1";
  j["window"] = {{"lo", round_g10(lo)},
                 {"hi", round_g10(hi)},
                 {"center", round_g10(fit.window_center)}};
  j["baseline"] = {{"offset", round_g10(fit.baseline.offset)},
                   {"slope", round_g10(fit.baseline.slope)}};
  j["rms"] = round_g10(fit.rms);
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  ordered_json peaks = ordered_json::array();
  for (size_t k = 0; k < fit.peaks.size(); ++k) {
    auto err = [&](int off) {
      const int i = 2 + 3 * static_cast<int>(k) + off;
      return round_g10(std::sqrt(std::max(fit.covariance(i, i), 0.0)));
    };
    peaks.push_back({{"center", round_g10(fit.peaks[k].center)},
                     {"center_err", err(0)},
                     {"sigma", round_g10(fit.peaks[k].sigma)},
                     {"sigma_err", err(1)},
                     {"fwhm", round_g10(kFwhmPerSigma * fit.peaks[k].sigma)},
                     {"area", round_g10(fit.peaks[k].area)},
                     {"area_err", err(2)}});
  }
  j["peaks"] = peaks;
  write_text(out_dir + "/spectrum_fit.json", j.dump(2) + "\n");

  // plot-ready overlay: data, fitted model, residual over the fit window
  {
    std::ostringstream out;
    out << "wavenumber_cm1,absorbance,model,residual\n";
    for (size_t i = 0; i < spec.wavenumbers.size(); ++i) {
      const double nu = spec.wavenumbers[i];
      if (nu < lo || nu > hi) continue;
      double model =
          fit.baseline.offset + fit.baseline.slope * (nu - fit.window_center);
      for (const GaussianPeak& p : fit.peaks) {
        const double z = (nu - p.center) / p.sigma;
        model += p.area * std::exp(-0.5 * z * z) / (p.sigma * 2.5066282746);
      }
      out << format_g10(nu) << ',' << format_g10(spec.absorbance[i]) << ','
          << format_g10(model) << ',' << format_g10(spec.absorbance[i] - model)
          << '\n';
    }
    write_text(out_dir + "/spectrum_fit.csv", out.str());
  }

  std::printf("fitted %zu peak(s), rms %.4g, %s\n", fit.peaks.size(), fit.rms,
              fit.converged ? "converged" : "NOT converged");
  for (const GaussianPeak& p : fit.peaks)
    std::printf("  center %10.4f  fwhm %7.4f  area %10.6g\n", p.center,
                kFwhmPerSigma * p.sigma, p.area);
  std::printf("wrote %s/spectrum_fit.json\n", out_dir.c_str());
  return 0;
}

struct KineticsArgs {
  std::string series_path;
  std::string manifest_path;
  std::string scan_dir;
  double center = 0.0;
  bool has_center = false;
  double sigma = 2.0;
  double half_width = 5.0;
};

int cmd_kinetics(const KineticsArgs& a, const std::string& out_dir,
                 bool verbose) {
  std::vector<std::pair<double, double>> series;

  const int sources = (!a.series_path.empty() ? 1 : 0) +
                      (!a.manifest_path.empty() ? 1 : 0) +
                      (!a.scan_dir.empty() ? 1 : 0);
  if (sources != 1)
    throw ConfigError(
        "pass exactly one of --series, --manifest, or --spectra-dir");

  if (!a.series_path.empty()) {
    const CsvTable t = read_csv(a.series_path, {"t_min", "area"});
    for (const std::vector<double>& row : t.rows)
      series.emplace_back(row[0], row[1]);
  } else {
    if (!a.has_center)
      throw ConfigError("--center is required when fitting peak areas");
    std::vector<std::pair<double, std::string>> files;
    if (!a.manifest_path.empty()) {
      std::ifstream in(a.manifest_path);
      if (!in) throw InputError("cannot open manifest: " + a.manifest_path);
      ordered_json doc;
      try {
        doc = ordered_json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw InputError(a.manifest_path + " is not valid JSON: " + e.what());
      }
      if (!doc.is_array())
        throw InputError(a.manifest_path +
                         ": manifest must be an array of {t_min, path}");
      const fs::path base = fs::path(a.manifest_path).parent_path();
      for (const ordered_json& entry : doc) {
        if (!entry.is_object() || !entry.contains("t_min") ||
            !entry.contains("path"))
          throw InputError(a.manifest_path +
                           ": manifest entries need t_min and path");
        fs::path p = entry.at("path").get<std::string>();
        if (p.is_relative()) p = base / p;
        files.emplace_back(entry.at("t_min").get<double>(), p.string());
      }
    } else {
      if (!fs::is_directory(a.scan_dir))
        throw InputError("not a directory: " + a.scan_dir);
      const std::regex name_re(R"(^t_([0-9]+(\.[0-9]+)?)min\.csv$)");
      for (const fs::directory_entry& e : fs::directory_iterator(a.scan_dir)) {
        std::smatch m;
        const std::string name = e.path().filename().string();
        if (std::regex_match(name, m, name_re))
          files.emplace_back(std::stod(m[1].str()), e.path().string());
      }
      if (files.empty())
        throw InputError("no t_<minutes>min.csv files in " + a.scan_dir);
    }
    std::stable_sort(files.begin(), files.end());
    for (const auto& [t, path] : files) {
      const Spectrum spec = load_spectrum(path);
      const double area = peak_area(spec, a.center, a.sigma, a.half_width);
      series.emplace_back(t, area);
      if (verbose)
        std::fprintf(stderr, "t = %8.3f min  area = %.6g  (%s)\n", t, area,
                     path.c_str());
    }
  }

  const KineticsFit fit = fit_conversion_kinetics(series);

  ensure_dir(out_dir);
  ordered_json j;
  j["schema"] = "rotorcage-kinetics/1";
  ordered_json pts = ordered_json::array();
  for (const auto& [t, area] : series)
    pts.push_back({{"t_min", round_g10(t)}, {"area", round_g10(area)}});
  j["series"] = pts;
  j["fit"] = {{"k_per_min", round_g10(fit.rate_k)},
              {"a0", round_g10(fit.a0)},
              {"a_inf", round_g10(fit.a_inf)},
              {"rms", round_g10(fit.rms)},
              {"degenerate", fit.degenerate},
              {"converged", fit.converged}};
  write_text(out_dir + "/kinetics.json", j.dump(2) + "\n");

  {
    std::ostringstream out;
    out << "t_min,area,model\n";
    for (const auto& [t, area] : series) {
      const double model =
          fit.a_inf + (fit.a0 - fit.a_inf) * std::exp(-fit.rate_k * t);
      out << format_g10(t) << ',' << format_g10(area) << ','
          << format_g10(model) << '\n';
    }
    write_text(out_dir + "/kinetics_fit.csv", out.str());
  }

  if (fit.degenerate)
    std::printf("series is constant within noise: k = 0 (degenerate)\n");
  std::printf("k = %.6g min^-1, a0 = %.6g, a_inf = %.6g, rms = %.4g\n",
              fit.rate_k, fit.a0, fit.a_inf, fit.rms);
  std::printf("wrote %s/kinetics.json\n", out_dir.c_str());
  return 0;
}

int cmd_fit_potential(const std::string& radial_path,
                      const std::string& angular_path, int order,
                      const std::string& out_dir) {
  const HarmonicFit radial =
      fit_radial_harmonic(load_radial_samples(radial_path));
  const FourierFit angular =
      fit_angular_fourier(load_angular_samples(angular_path), order);
  ensure_dir(out_dir);
  write_fits_json(out_dir + "/fits.json", radial, angular);
  std::printf("radial:  k = %.6g cm^-1/A^2, r0 = %.4g A, rms %.3g\n", radial.k,
              radial.r0, radial.rms);
  std::printf("angular: order %d, %zu terms, rms %.3g\n", angular.order,
              angular.terms.size(), angular.rms);
  std::printf("wrote %s/fits.json\n", out_dir.c_str());
  return 0;
}

int cmd_decompose(const std::string& fits_path, int k_max, double epsilon,
                  const std::string& out_dir) {
  HarmonicFit radial;
  FourierFit angular;
  read_fits_json(fits_path, radial, angular);
  const TensorDecomposition decomp =
      decompose_spherical_tensors(angular, k_max);
  const ConversionChannels channels = classify_channels(decomp, epsilon);
  ensure_dir(out_dir);
  write_decomposition_json(out_dir + "/decomposition.json", decomp, channels);
  for (int k = 0; k <= decomp.k_max; ++k)
    std::printf("R_%d = %.6g\n", k, decomp.rank(k));
  std::printf("delta_m = 0 channel: %s; |delta_m| = 1 channel: %s%s\n",
              channels.delta_m0_open ? "open" : "closed",
              channels.delta_m1_open ? "open" : "closed",
              channels.degenerate ? " (field is degenerate/null)" : "");
  std::printf("wrote %s/decomposition.json\n", out_dir.c_str());
  return 0;
}

int cmd_solve(const PipelineConfig& config, const std::string& fits_path,
              const std::string& out_dir, bool verbose) {
  HarmonicFit radial;
  FourierFit angular;
  read_fits_json(fits_path, radial, angular);
  const Grid3D grid = build_grid(config.grid.nr, config.grid.ntheta,
                                 config.grid.nphi, config.grid.r_max);
  const SparseHamiltonian h =
      assemble_hamiltonian(grid, config.model, radial, angular,
                           config.model.coupling_gamma != 0.0);
  if (verbose)
    std::fprintf(stderr, "assembled %s (%d x %d, %ld nonzeros)\n",
                 h.provenance.c_str(), h.dimension, h.dimension,
                 static_cast<long>(h.mat.nonZeros()));
  LanczosOptions opt;
  opt.n_eig = config.solver.n_eig;
  opt.tol = config.solver.tol;
  opt.max_iter = config.solver.max_iter;
  opt.seed = config.solver.seed;
  if (config.solver.has_sigma) {
    opt.auto_shift = false;
    opt.sigma = config.solver.sigma;
  }
  const EigenPairs pairs = solve_lowest(h, opt);
  ensure_dir(out_dir);
  write_eigen_bin(out_dir + "/eigen.bin", pairs, grid);
  std::printf("%d eigenvalues (max residual %.3g, %ld inner solves):\n",
              static_cast<int>(pairs.values.size()), pairs.max_residual,
              pairs.iterations);
  for (int i = 0; i < pairs.values.size(); ++i)
    std::printf("  %3d  %14.6f cm^-1\n", i, pairs.values[i]);
  std::printf("wrote %s/eigen.bin\n", out_dir.c_str());
  return 0;
}

int cmd_assign(const PipelineConfig& config, const std::string& eigen_path,
               bool strict, bool densities, const std::string& out_dir) {
  Grid3D grid;
  const EigenPairs pairs = read_eigen_bin(eigen_path, grid);
  AssignOptions opt;
  opt.strict = strict;
  const std::vector<AssignedState> states =
      assign_quantum_numbers(pairs, grid, config.model, opt);
  ensure_dir(out_dir);
  write_states_csv(out_dir + "/states.csv", states);
  write_states_json(out_dir + "/states.json", states);
  if (densities) {
    std::ostringstream rad;
    rad << "r_angstrom";
    for (int s = 0; s < pairs.values.size(); ++s) rad << ",state_" << s;
    rad << '\n';
    std::vector<ReducedDensity> dens;
    for (int s = 0; s < pairs.values.size(); ++s)
      dens.push_back(reduce_densities(pairs.vectors.col(s), grid));
    for (int ir = 0; ir < grid.nr; ++ir) {
      rad << format_g10(grid.r_nodes[ir]);
      for (const ReducedDensity& d : dens) rad << ',' << format_g10(d.radial[ir]);
      rad << '\n';
    }
    write_text(out_dir + "/radial_densities.csv", rad.str());
    for (int s = 0; s < pairs.values.size(); ++s) {
      std::ostringstream ang;
      ang << "theta_rad,phi_rad,rho\n";
      for (int it = 0; it < grid.ntheta; ++it)
        for (int ip = 0; ip < grid.nphi; ++ip)
          ang << format_g10(grid.theta_nodes[it]) << ','
              << format_g10(grid.phi_nodes[ip]) << ','
              << format_g10(dens[s].angular(it, ip)) << '\n';
      write_text(out_dir + "/angular_density_" + std::to_string(s) + ".csv",
                 ang.str());
    }
    std::printf("wrote %s/radial_densities.csv and %d angular density grids\n",
                out_dir.c_str(), static_cast<int>(pairs.values.size()));
  }
  std::printf("%-4s %-12s %-8s %-6s %-5s %s\n", "#", "E (cm^-1)", "ket", "spin",
              "n", "purity");
  for (size_t i = 0; i < states.size(); ++i) {
    const AssignedState& s = states[i];
    std::printf("%-4zu %-12.4f %-8s %-6s %-5d %.3f%s\n", i, s.energy,
                s.ket().c_str(), s.spin.c_str(), s.n, s.purity,
                s.ambiguous ? "  (ambiguous)" : "");
  }
  std::printf("wrote %s/states.csv, %s/states.json\n", out_dir.c_str(),
              out_dir.c_str());
  return 0;
}

int cmd_transitions(const PipelineConfig& config,
                    const std::string& states_path,
                    const std::string& decomposition_path,
                    const std::string& out_dir) {
  const std::vector<AssignedState> all = read_states_json(states_path);
  TensorDecomposition decomp;
  ConversionChannels channels;
  read_decomposition_json(decomposition_path, decomp, channels);

  std::vector<AssignedState> clean;
  for (size_t i = 0; i < all.size(); ++i) {
    if (all[i].ambiguous)
      std::fprintf(stderr, "warning: state %zu is ambiguous; excluded\n", i);
    else
      clean.push_back(all[i]);
  }
  if (clean.empty()) throw InputError("no unambiguous states to analyze");

  const std::vector<TransitionLine> peaks = enumerate_q1_transitions(
      thermal_initial_manifold(clean), clean, config.spectroscopy.nu_origin,
      config.spectroscopy.resolution);
  ensure_dir(out_dir);
  write_peaks_csv(out_dir + "/peaks.csv", peaks);
  std::printf("%-8s %-12s %-11s %-8s %s\n", "label", "position", "class",
              "delta_m", "transition");
  for (const TransitionLine& p : peaks)
    std::printf("%-8s %-12.4f %-11s %-8d %s -> %s\n", p.label.c_str(),
                p.position, p.cls.c_str(), p.delta_m, p.from_ket.c_str(),
                p.to_ket.c_str());

  bool have_ortho = false, have_para = false;
  for (const AssignedState& s : clean) {
    if (s.spin == "ortho") have_ortho = true;
    if (s.spin == "para") have_para = true;
  }
  if (have_ortho && have_para) {
    const std::vector<ConversionPathway> paths =
        conversion_pathways(clean, channels);
    write_pathways_csv(out_dir + "/pathways.csv", paths);
    int open_count = 0;
    for (const ConversionPathway& p : paths) open_count += p.open ? 1 : 0;
    std::printf("%zu conversion pathway(s), %d open\n", paths.size(),
                open_count);
  } else {
    std::fprintf(stderr,
                 "warning: only one spin species; pathways skipped\n");
  }
  std::printf("wrote %s/peaks.csv\n", out_dir.c_str());
  return 0;
}

int cmd_pipeline(PipelineConfig config, const std::string& out_flag,
                 const std::vector<std::string>& formats, bool has_seed,
                 std::uint64_t seed, bool verbose) {
  if (!out_flag.empty()) config.output.directory = out_flag;
  if (!formats.empty()) config.output.formats = formats;
  if (has_seed) config.solver.seed = seed;
  config.validate();

  const Report rep = run_pipeline(config);

  if (verbose)
    for (const std::string& w : rep.diagnostics.warnings)
      std::fprintf(stderr, "warning: %s\n", w.c_str());

  int ambiguous = 0;
  for (const AssignedState& s : rep.states) ambiguous += s.ambiguous ? 1 : 0;
  std::printf("states: %zu (%d ambiguous)  peaks: %zu  pathways: %zu\n",
              rep.states.size(), ambiguous,
              rep.has_peaks ? rep.peaks.size() : 0,
              rep.has_pathways ? rep.pathways.size() : 0);
  if (rep.has_channels)
    std::printf("delta_m = 0 channel: %s; |delta_m| = 1 channel: %s\n",
                rep.channels.delta_m0_open ? "open" : "closed",
                rep.channels.delta_m1_open ? "open" : "closed");
  std::printf("wrote report to %s\n", config.output.directory.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "eigenstates, selection rules, and spectra of a diatomic rotor "
      "confined in a crystal cage"};
  app.set_version_flag("--version",
                       std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);

  bool verbose = false;
  app.add_flag("--verbose", verbose, "progress details on stderr");

  // pipeline
  std::string pl_config, pl_out;
  std::vector<std::string> pl_formats;
  std::uint64_t pl_seed = 0;
  CLI::App* pipeline_cmd =
      app.add_subcommand("pipeline", "run every stage and emit the report");
  pipeline_cmd->add_option("--config", pl_config, "pipeline config JSON")
      ->required();
  pipeline_cmd->add_option("--out", pl_out, "output directory override");
  pipeline_cmd
      ->add_option("--format", pl_formats,
                   "report format(s): json or csv-bundle")
      ->check(CLI::IsMember({"json", "csv-bundle"}));
  CLI::Option* pl_seed_opt = pipeline_cmd->add_option(
      "--seed", pl_seed, "solver start-vector seed override");

  // fit-potential
  std::string fp_radial, fp_angular, fp_out;
  int fp_order = 4;
  CLI::App* fitpot_cmd = app.add_subcommand(
      "fit-potential", "fit the radial parabola and angular Fourier surface");
  fitpot_cmd->add_option("--radial", fp_radial, "radial scan CSV")->required();
  fitpot_cmd->add_option("--angular", fp_angular, "angular scan CSV")
      ->required();
  fitpot_cmd->add_option("--order", fp_order, "angular Fourier order");
  fitpot_cmd->add_option("--out", fp_out, "output directory");

  // decompose
  std::string dc_fits, dc_out;
  int dc_kmax = 4;
  double dc_eps = 1e-3;
  CLI::App* decompose_cmd = app.add_subcommand(
      "decompose", "spherical-tensor ranks and conversion channels");
  decompose_cmd->add_option("--fits", dc_fits, "fits.json from fit-potential")
      ->required();
  decompose_cmd->add_option("--k-max", dc_kmax, "highest tensor rank");
  decompose_cmd->add_option("--epsilon", dc_eps, "channel opening threshold");
  decompose_cmd->add_option("--out", dc_out, "output directory");

  // solve
  std::string sv_config, sv_fits, sv_out;
  CLI::App* solve_cmd =
      app.add_subcommand("solve", "assemble the Hamiltonian and eigensolve");
  solve_cmd->add_option("--config", sv_config, "pipeline config JSON")
      ->required();
  solve_cmd->add_option("--fits", sv_fits,
                        "fits.json (default <out>/fits.json)");
  solve_cmd->add_option("--out", sv_out, "output directory override");

  // assign
  std::string as_config, as_eigen, as_out;
  bool as_strict = false, as_densities = false;
  CLI::App* assign_cmd =
      app.add_subcommand("assign", "quantum-number assignment of eigenstates");
  assign_cmd->add_option("--config", as_config, "pipeline config JSON")
      ->required();
  assign_cmd->add_option("--eigen", as_eigen,
                         "eigen.bin (default <out>/eigen.bin)");
  assign_cmd->add_flag("--strict", as_strict,
                       "fail on ambiguous assignments instead of flagging");
  assign_cmd->add_flag("--densities", as_densities,
                       "also export reduced radial/angular density grids");
  assign_cmd->add_option("--out", as_out, "output directory override");

  // transitions
  std::string tr_config, tr_states, tr_decomp, tr_out;
  CLI::App* transitions_cmd = app.add_subcommand(
      "transitions", "Q-branch peak table and conversion pathways");
  transitions_cmd->add_option("--config", tr_config, "pipeline config JSON")
      ->required();
  transitions_cmd->add_option("--states", tr_states,
                              "states.json (default <out>/states.json)");
  transitions_cmd->add_option(
      "--decomposition", tr_decomp,
      "decomposition.json (default <out>/decomposition.json)");
  transitions_cmd->add_option("--out", tr_out, "output directory override");

  // fit-spectrum
  FitSpectrumArgs fs_args;
  std::string fs_out;
  CLI::App* fitspec_cmd = app.add_subcommand(
      "fit-spectrum", "Gaussian peak fit of a measured spectrum");
  fitspec_cmd->add_option("--spectrum", fs_args.spectrum_path, "spectrum CSV")
      ->required();
  fitspec_cmd
      ->add_option("--centers", fs_args.centers,
                   "initial peak centers (comma separated)")
      ->delimiter(',');
  fitspec_cmd->add_option("--sigma", fs_args.sigma, "initial peak sigma");
  CLI::Option* fs_lo =
      fitspec_cmd->add_option("--window-lo", fs_args.window_lo, "fit window");
  CLI::Option* fs_hi =
      fitspec_cmd->add_option("--window-hi", fs_args.window_hi, "fit window");
  fs_lo->needs(fs_hi);
  fs_hi->needs(fs_lo);
  fitspec_cmd->add_option("--out", fs_out, "output directory");

  // kinetics
  KineticsArgs kn_args;
  std::string kn_out;
  CLI::App* kinetics_cmd = app.add_subcommand(
      "kinetics", "exponential conversion fit of peak areas over time");
  kinetics_cmd->add_option("--series", kn_args.series_path,
                           "pre-extracted series CSV (t_min,area)");
  kinetics_cmd->add_option("--manifest", kn_args.manifest_path,
                           "JSON manifest [{t_min, path}]");
  kinetics_cmd->add_option("--spectra-dir", kn_args.scan_dir,
                           "directory of t_<minutes>min.csv spectra");
  CLI::Option* kn_center = kinetics_cmd->add_option(
      "--center", kn_args.center, "tracked peak position (cm^-1)");
  kinetics_cmd->add_option("--sigma", kn_args.sigma,
                           "initial peak sigma for area fits");
  kinetics_cmd->add_option("--half-width", kn_args.half_width,
                           "half width of the per-spectrum fit window");
  kinetics_cmd->add_option("--out", kn_out, "output directory");

  // lets the global --verbose appear after the subcommand name
  for (CLI::App* sub : app.get_subcommands([](CLI::App*) { return true; }))
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (pipeline_cmd->parsed()) {
      const PipelineConfig config = load_config(pl_config);
      return cmd_pipeline(config, pl_out, pl_formats,
                          pl_seed_opt->count() > 0, pl_seed, verbose);
    }
    if (fitpot_cmd->parsed())
      return cmd_fit_potential(fp_radial, fp_angular, fp_order,
                               resolve_out(fp_out, "out"));
    if (decompose_cmd->parsed())
      return cmd_decompose(dc_fits, dc_kmax, dc_eps,
                           resolve_out(dc_out, "out"));
    if (solve_cmd->parsed()) {
      const PipelineConfig config = load_config(sv_config);
      const std::string dir =
          sv_out.empty() ? config.output.directory : sv_out;
      const std::string fits =
          sv_fits.empty() ? dir + "/fits.json" : sv_fits;
      return cmd_solve(config, fits, dir, verbose);
    }
    if (assign_cmd->parsed()) {
      const PipelineConfig config = load_config(as_config);
      const std::string dir =
          as_out.empty() ? config.output.directory : as_out;
      const std::string eigen =
          as_eigen.empty() ? dir + "/eigen.bin" : as_eigen;
      return cmd_assign(config, eigen, as_strict, as_densities, dir);
    }
    if (transitions_cmd->parsed()) {
      const PipelineConfig config = load_config(tr_config);
      const std::string dir =
          tr_out.empty() ? config.output.directory : tr_out;
      const std::string states =
          tr_states.empty() ? dir + "/states.json" : tr_states;
      const std::string decomp =
          tr_decomp.empty() ? dir + "/decomposition.json" : tr_decomp;
      return cmd_transitions(config, states, decomp, dir);
    }
    if (fitspec_cmd->parsed()) {
      fs_args.has_window = fs_lo->count() > 0;
      return cmd_fit_spectrum(fs_args, resolve_out(fs_out, "out"), verbose);
    }
    if (kinetics_cmd->parsed()) {
      kn_args.has_center = kn_center->count() > 0;
      return cmd_kinetics(kn_args, resolve_out(kn_out, "out"), verbose);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "%s: error: %s\n", kToolName, e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s: unexpected error: %s\n", kToolName, e.what());
    return 1;
  }
  return 0;
}
