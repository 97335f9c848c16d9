#include "rotorcage/config.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

namespace rotorcage {

namespace {

using nlohmann::ordered_json;

void require_object(const ordered_json& j, const std::string& name) {
  if (!j.is_object())
    throw ConfigError("section \"" + name + "\" must be a JSON object");
}

void reject_unknown(const ordered_json& j, const std::string& section,
                    const std::set<std::string>& known) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw ConfigError("unknown key \"" + it.key() + "\" in section \"" +
                        section + "\"");
}

double get_num(const ordered_json& j, const std::string& section,
               const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  const ordered_json& v = j.at(key);
  if (!v.is_number())
    throw ConfigError(section + "." + key + " must be a number");
  return v.get<double>();
}

int get_int(const ordered_json& j, const std::string& section,
            const std::string& key, int fallback) {
  if (!j.contains(key)) return fallback;
  const ordered_json& v = j.at(key);
  if (!v.is_number_integer())
    throw ConfigError(section + "." + key + " must be an integer");
  return v.get<int>();
}

std::string get_str(const ordered_json& j, const std::string& section,
                    const std::string& key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  const ordered_json& v = j.at(key);
  if (!v.is_string())
    throw ConfigError(section + "." + key + " must be a string");
  return v.get<std::string>();
}

void check(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

void PipelineConfig::validate() const {
  model.validate();
  check(model.mass_total <= 1000.0, "model.mass_total exceeds 1000 u");
  check(model.b_rot <= 1e4, "model.b_rot exceeds 1e4 cm^-1");
  check(std::abs(model.coupling_gamma) <= 10.0,
        "model.coupling_gamma outside [-10, 10]");

  check(grid.nr >= 8 && grid.nr <= 256, "grid.nr outside [8, 256]");
  check(grid.ntheta >= 8 && grid.ntheta <= 256, "grid.ntheta outside [8, 256]");
  check(grid.nphi >= 8 && grid.nphi <= 256, "grid.nphi outside [8, 256]");
  check(grid.r_max > 0.0 && grid.r_max <= 100.0,
        "grid.r_max outside (0, 100] Angstrom");

  check(solver.n_eig >= 1 && solver.n_eig <= 500,
        "solver.n_eig outside [1, 500]");
  check(solver.tol > 0.0 && solver.tol <= 1e-2,
        "solver.tol outside (0, 1e-2]");
  check(solver.max_iter >= 0 && solver.max_iter <= 1000000,
        "solver.max_iter outside [0, 1e6]");
  if (solver.has_sigma)
    check(std::isfinite(solver.sigma), "solver.sigma must be finite");

  check(!potential.radial_path.empty(), "potential.radial path is required");
  check(!potential.angular_path.empty(), "potential.angular path is required");
  check(potential.fourier_order >= 1 && potential.fourier_order <= 16,
        "potential.fourier_order outside [1, 16]");

  check(decomposition.k_max >= 1 && decomposition.k_max <= 12,
        "decomposition.k_max outside [1, 12]");
  check(decomposition.epsilon > 0.0 && decomposition.epsilon < 1.0,
        "decomposition.epsilon outside (0, 1)");

  check(spectroscopy.nu_origin >= 0.0, "spectroscopy.nu_origin is negative");
  check(spectroscopy.resolution > 0.0 && spectroscopy.resolution <= 100.0,
        "spectroscopy.resolution outside (0, 100] cm^-1");

  check(!output.directory.empty(), "output.directory is required");
  check(!output.formats.empty(), "output.formats must list at least one format");
  for (const std::string& f : output.formats)
    check(f == "json" || f == "csv-bundle",
          "output.formats entries must be \"json\" or \"csv-bundle\"");
}

PipelineConfig parse_config(const ordered_json& doc) {
  if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown(doc, "(root)",
                 {"model", "grid", "solver", "potential", "decomposition",
                  "spectroscopy", "output"});

  PipelineConfig c;

  if (doc.contains("model")) {
    const ordered_json& j = doc.at("model");
    require_object(j, "model");
    reject_unknown(j, "model",
                   {"mass_total", "b_rot", "coupling_gamma", "energy_scale"});
    c.model.mass_total = get_num(j, "model", "mass_total", c.model.mass_total);
    c.model.b_rot = get_num(j, "model", "b_rot", c.model.b_rot);
    c.model.coupling_gamma =
        get_num(j, "model", "coupling_gamma", c.model.coupling_gamma);
    c.model.energy_scale =
        get_num(j, "model", "energy_scale", c.model.energy_scale);
  }

  if (doc.contains("grid")) {
    const ordered_json& j = doc.at("grid");
    require_object(j, "grid");
    reject_unknown(j, "grid", {"nr", "ntheta", "nphi", "r_max"});
    c.grid.nr = get_int(j, "grid", "nr", c.grid.nr);
    c.grid.ntheta = get_int(j, "grid", "ntheta", c.grid.ntheta);
    c.grid.nphi = get_int(j, "grid", "nphi", c.grid.nphi);
    c.grid.r_max = get_num(j, "grid", "r_max", c.grid.r_max);
  }

  if (doc.contains("solver")) {
    const ordered_json& j = doc.at("solver");
    require_object(j, "solver");
    reject_unknown(j, "solver", {"n_eig", "sigma", "tol", "max_iter", "seed"});
    c.solver.n_eig = get_int(j, "solver", "n_eig", c.solver.n_eig);
    if (j.contains("sigma")) {
      c.solver.has_sigma = true;
      c.solver.sigma = get_num(j, "solver", "sigma", 0.0);
    }
    c.solver.tol = get_num(j, "solver", "tol", c.solver.tol);
    c.solver.max_iter = get_int(j, "solver", "max_iter", c.solver.max_iter);
    if (j.contains("seed")) {
      const ordered_json& v = j.at("seed");
      if (!v.is_number_integer() ||
          (v.is_number_integer() && !v.is_number_unsigned() &&
           v.get<long long>() < 0))
        throw ConfigError("solver.seed must be a nonnegative integer");
      c.solver.seed = v.get<std::uint64_t>();
    }
  }

  if (doc.contains("potential")) {
    const ordered_json& j = doc.at("potential");
    require_object(j, "potential");
    reject_unknown(j, "potential", {"radial", "angular", "fourier_order"});
    c.potential.radial_path = get_str(j, "potential", "radial", "");
    c.potential.angular_path = get_str(j, "potential", "angular", "");
    c.potential.fourier_order =
        get_int(j, "potential", "fourier_order", c.potential.fourier_order);
  }

  if (doc.contains("decomposition")) {
    const ordered_json& j = doc.at("decomposition");
    require_object(j, "decomposition");
    reject_unknown(j, "decomposition", {"k_max", "epsilon"});
    c.decomposition.k_max =
        get_int(j, "decomposition", "k_max", c.decomposition.k_max);
    c.decomposition.epsilon =
        get_num(j, "decomposition", "epsilon", c.decomposition.epsilon);
  }

  if (doc.contains("spectroscopy")) {
    const ordered_json& j = doc.at("spectroscopy");
    require_object(j, "spectroscopy");
    reject_unknown(j, "spectroscopy", {"nu_origin", "resolution"});
    c.spectroscopy.nu_origin =
        get_num(j, "spectroscopy", "nu_origin", c.spectroscopy.nu_origin);
    c.spectroscopy.resolution =
        get_num(j, "spectroscopy", "resolution", c.spectroscopy.resolution);
  }

  if (doc.contains("output")) {
    const ordered_json& j = doc.at("output");
    require_object(j, "output");
    reject_unknown(j, "output", {"directory", "formats"});
    c.output.directory = get_str(j, "output", "directory", c.output.directory);
    if (j.contains("formats")) {
      const ordered_json& v = j.at("formats");
      if (!v.is_array())
        throw ConfigError("output.formats must be an array of strings");
      c.output.formats.clear();
      for (const ordered_json& f : v) {
        if (!f.is_string())
          throw ConfigError("output.formats must be an array of strings");
        c.output.formats.push_back(f.get<std::string>());
      }
    }
  }

  c.model.nu_origin = c.spectroscopy.nu_origin;
  c.validate();
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path);
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  PipelineConfig c = parse_config(doc);

  // relative potential paths count from the config file, not the CWD
  namespace fs = std::filesystem;
  const fs::path base = fs::absolute(fs::path(path)).parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && fs::path(p).is_relative())
      p = (base / p).lexically_normal().string();
  };
  resolve(c.potential.radial_path);
  resolve(c.potential.angular_path);

  if (const char* env = std::getenv("ROTORCAGE_OUT"); env && *env)
    c.output.directory = env;
  return c;
}

nlohmann::ordered_json config_to_json(const PipelineConfig& c) {
  ordered_json j;
  j["model"] = {{"mass_total", round_g10(c.model.mass_total)},
                {"b_rot", round_g10(c.model.b_rot)},
                {"coupling_gamma", round_g10(c.model.coupling_gamma)},
                {"energy_scale", round_g10(c.model.energy_scale)}};
  j["grid"] = {{"nr", c.grid.nr},
               {"ntheta", c.grid.ntheta},
               {"nphi", c.grid.nphi},
               {"r_max", round_g10(c.grid.r_max)}};
  j["solver"] = {{"n_eig", c.solver.n_eig},
                 {"tol", round_g10(c.solver.tol)},
                 {"max_iter", c.solver.max_iter},
                 {"seed", c.solver.seed}};
  if (c.solver.has_sigma) j["solver"]["sigma"] = round_g10(c.solver.sigma);
  j["potential"] = {{"radial", c.potential.radial_path},
                    {"angular", c.potential.angular_path},
                    {"fourier_order", c.potential.fourier_order}};
  j["decomposition"] = {{"k_max", c.decomposition.k_max},
                        {"epsilon", round_g10(c.decomposition.epsilon)}};
  j["spectroscopy"] = {{"nu_origin", round_g10(c.spectroscopy.nu_origin)},
                       {"resolution", round_g10(c.spectroscopy.resolution)}};
  j["output"] = {{"directory", c.output.directory},
                 {"formats", c.output.formats}};
  return j;
}

std::string config_hash(const PipelineConfig& c) {
  // fingerprints the physics inputs; where the report lands is not part of it
  ordered_json j = config_to_json(c);
  j.erase("output");
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace rotorcage
