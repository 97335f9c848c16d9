#include "rotorcage/pipeline.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace rotorcage {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void stage_fail(const char* stage, const Error& e) {
  throw Error(e.exit_code(), std::string("stage ") + stage + ": " + e.what());
}

// Advisory exclusive lock on <dir>/.rotorcage.lock, held for the run.
class DirLock {
public:
  explicit DirLock(const std::string& dir) {
    const std::string path = dir + "/.rotorcage.lock";
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ < 0) throw InputError("cannot create lock file: " + path);
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      fd_ = -1;
      throw InputError("output directory is locked by another run: " + dir);
    }
  }
  ~DirLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

private:
  int fd_ = -1;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write file: " + path);
  out << text;
  if (!out) throw InputError("write failed: " + path);
}

ordered_json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path);
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path + " is not valid JSON: " + e.what());
  }
}

const char* tag_name(BasisTag tag) {
  switch (tag) {
    case BasisTag::CosCos: return "coscos";
    case BasisTag::CosSin: return "cossin";
    case BasisTag::SinCos: return "sincos";
    case BasisTag::SinSin: return "sinsin";
  }
  return "coscos";
}

BasisTag tag_from_name(const std::string& name, const std::string& path) {
  if (name == "coscos") return BasisTag::CosCos;
  if (name == "cossin") return BasisTag::CosSin;
  if (name == "sincos") return BasisTag::SinCos;
  if (name == "sinsin") return BasisTag::SinSin;
  throw InputError(path + ": unknown basis tag \"" + name + "\"");
}

std::string rank_name(int driving_rank) {
  if (driving_rank == 2) return "2";
  if (driving_rank == 1) return "1";
  return "none";
}

ordered_json states_to_json(const std::vector<AssignedState>& states,
                            bool with_overlap) {
  ordered_json arr = ordered_json::array();
  for (size_t i = 0; i < states.size(); ++i) {
    const AssignedState& s = states[i];
    ordered_json row = {{"index", i},
                        {"energy_cm1", round_g10(s.energy)},
                        {"n", s.n},
                        {"l", s.l},
                        {"lambda", s.lambda},
                        {"m", s.m_value},
                        {"bar", s.m_bar},
                        {"ket", s.ket()},
                        {"j_dominant", s.j_dominant},
                        {"spin", s.spin},
                        {"purity", round_g10(s.purity)},
                        {"ambiguous", s.ambiguous},
                        {"cluster_id", s.cluster_id},
                        {"cluster_size", s.cluster_size}};
    if (with_overlap && s.overlap.size() > 0) {
      ordered_json table = ordered_json::array();
      for (Eigen::Index r = 0; r < s.overlap.rows(); ++r) {
        ordered_json line = ordered_json::array();
        for (Eigen::Index c = 0; c < s.overlap.cols(); ++c)
          line.push_back(round_g10(s.overlap(r, c)));
        table.push_back(line);
      }
      row["overlap"] = table;
    }
    arr.push_back(row);
  }
  return arr;
}

template <typename T>
T field(const ordered_json& j, const char* key, const std::string& path) {
  if (!j.contains(key))
    throw InputError(path + ": missing field \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InputError(path + ": field \"" + key + "\" has the wrong type");
  }
}

}  // namespace

void write_fits_json(const std::string& path, const HarmonicFit& radial,
                     const FourierFit& angular) {
  ordered_json j;
  j["radial"] = {{"k", round_g10(radial.k)},
                 {"r0", round_g10(radial.r0)},
                 {"v0", round_g10(radial.v0)},
                 {"rms", round_g10(radial.rms)}};
  ordered_json terms = ordered_json::array();
  for (const FourierTerm& t : angular.terms)
    terms.push_back({{"l", t.l},
                     {"m", t.m},
                     {"basis", tag_name(t.tag)},
                     {"name", term_name(t)},
                     {"coeff", round_g10(t.coeff)}});
  j["angular"] = {{"order", angular.order},
                  {"rms", round_g10(angular.rms)},
                  {"terms", terms}};
  write_text(path, j.dump(2) + "\n");
}

void read_fits_json(const std::string& path, HarmonicFit& radial,
                    FourierFit& angular) {
  const ordered_json j = load_json(path);
  if (!j.contains("radial") || !j.contains("angular"))
    throw InputError(path + ": expected radial and angular fit sections");
  const ordered_json& r = j.at("radial");
  radial.k = field<double>(r, "k", path);
  radial.r0 = field<double>(r, "r0", path);
  radial.v0 = field<double>(r, "v0", path);
  radial.rms = field<double>(r, "rms", path);
  const ordered_json& a = j.at("angular");
  angular.order = field<int>(a, "order", path);
  angular.rms = field<double>(a, "rms", path);
  angular.terms.clear();
  if (!a.contains("terms") || !a.at("terms").is_array())
    throw InputError(path + ": angular.terms must be an array");
  for (const ordered_json& t : a.at("terms")) {
    FourierTerm term;
    term.l = field<int>(t, "l", path);
    term.m = field<int>(t, "m", path);
    term.tag = tag_from_name(field<std::string>(t, "basis", path), path);
    term.coeff = field<double>(t, "coeff", path);
    angular.terms.push_back(term);
  }
}

void write_decomposition_json(const std::string& path,
                              const TensorDecomposition& decomp,
                              const ConversionChannels& channels) {
  ordered_json coeffs = ordered_json::array();
  for (int k = 0; k <= decomp.k_max; ++k)
    for (int q = -k; q <= k; ++q) {
      const std::complex<double> c = decomp.c(k, q);
      coeffs.push_back({{"k", k},
                        {"q", q},
                        {"re", round_g10(c.real())},
                        {"im", round_g10(c.imag())}});
    }
  ordered_json ranks = ordered_json::array();
  for (int k = 0; k <= decomp.k_max; ++k)
    ranks.push_back(round_g10(decomp.rank(k)));

  ordered_json j;
  j["k_max"] = decomp.k_max;
  j["rank_power"] = ranks;
  j["coefficients"] = coeffs;
  ordered_json rp = ordered_json::array();
  for (double v : channels.rank_powers) rp.push_back(round_g10(v));
  j["channels"] = {{"delta_m0_open", channels.delta_m0_open},
                   {"delta_m1_open", channels.delta_m1_open},
                   {"degenerate", channels.degenerate},
                   {"threshold", round_g10(channels.threshold)},
                   {"rank_powers", rp}};
  write_text(path, j.dump(2) + "\n");
}

void read_decomposition_json(const std::string& path,
                             TensorDecomposition& decomp,
                             ConversionChannels& channels) {
  const ordered_json j = load_json(path);
  decomp.k_max = field<int>(j, "k_max", path);
  if (decomp.k_max < 0 || decomp.k_max > 64)
    throw InputError(path + ": k_max out of range");
  decomp.coefficients.assign(decomp.k_max + 1, {});
  for (int k = 0; k <= decomp.k_max; ++k)
    decomp.coefficients[k].assign(2 * k + 1, {0.0, 0.0});
  if (!j.contains("coefficients") || !j.at("coefficients").is_array())
    throw InputError(path + ": coefficients must be an array");
  for (const ordered_json& c : j.at("coefficients")) {
    const int k = field<int>(c, "k", path);
    const int q = field<int>(c, "q", path);
    if (k < 0 || k > decomp.k_max || q < -k || q > k)
      throw InputError(path + ": coefficient outside the k_max triangle");
    decomp.coefficients[k][q + k] = {field<double>(c, "re", path),
                                     field<double>(c, "im", path)};
  }
  decomp.rank_power.assign(decomp.k_max + 1, 0.0);
  for (int k = 0; k <= decomp.k_max; ++k)
    for (int q = -k; q <= k; ++q)
      decomp.rank_power[k] += std::norm(decomp.c(k, q));

  if (!j.contains("channels"))
    throw InputError(path + ": missing channels section");
  const ordered_json& ch = j.at("channels");
  channels.delta_m0_open = field<bool>(ch, "delta_m0_open", path);
  channels.delta_m1_open = field<bool>(ch, "delta_m1_open", path);
  channels.degenerate = field<bool>(ch, "degenerate", path);
  channels.threshold = field<double>(ch, "threshold", path);
  channels.rank_powers.clear();
  if (ch.contains("rank_powers"))
    for (const ordered_json& v : ch.at("rank_powers"))
      channels.rank_powers.push_back(v.get<double>());
}

namespace {

constexpr char kEigenMagic[6] = {'R', 'C', 'E', 'V', '1', '\n'};

template <typename T>
void put(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T take(std::ifstream& in, const std::string& path) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw InputError(path + ": truncated eigenpair file");
  return value;
}

}  // namespace

void write_eigen_bin(const std::string& path, const EigenPairs& pairs,
                     const Grid3D& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write file: " + path);
  out.write(kEigenMagic, sizeof kEigenMagic);
  put(out, static_cast<std::int32_t>(grid.nr));
  put(out, static_cast<std::int32_t>(grid.ntheta));
  put(out, static_cast<std::int32_t>(grid.nphi));
  put(out, grid.r_max);
  const std::int32_t n = static_cast<std::int32_t>(pairs.vectors.rows());
  const std::int32_t k = static_cast<std::int32_t>(pairs.values.size());
  put(out, n);
  put(out, k);
  put(out, pairs.sigma_used);
  put(out, pairs.max_residual);
  put(out, static_cast<std::int64_t>(pairs.iterations));
  out.write(reinterpret_cast<const char*>(pairs.values.data()),
            sizeof(double) * k);
  out.write(reinterpret_cast<const char*>(pairs.residuals.data()),
            sizeof(double) * k);
  out.write(reinterpret_cast<const char*>(pairs.vectors.data()),
            sizeof(double) * static_cast<std::size_t>(n) * k);
  if (!out) throw InputError("write failed: " + path);
}

EigenPairs read_eigen_bin(const std::string& path, Grid3D& grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path);
  char magic[6];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kEigenMagic, sizeof magic) != 0)
    throw InputError(path + ": not an eigenpair file (bad magic)");
  const int nr = take<std::int32_t>(in, path);
  const int ntheta = take<std::int32_t>(in, path);
  const int nphi = take<std::int32_t>(in, path);
  const double r_max = take<double>(in, path);
  grid = build_grid(nr, ntheta, nphi, r_max);
  const int n = take<std::int32_t>(in, path);
  const int k = take<std::int32_t>(in, path);
  if (n != grid.dimension())
    throw InputError(path + ": vector length disagrees with the stored grid");
  if (k < 0 || k > n) throw InputError(path + ": invalid pair count");
  EigenPairs pairs;
  pairs.sigma_used = take<double>(in, path);
  pairs.max_residual = take<double>(in, path);
  pairs.iterations = static_cast<long>(take<std::int64_t>(in, path));
  pairs.values.resize(k);
  pairs.residuals.resize(k);
  pairs.vectors.resize(n, k);
  in.read(reinterpret_cast<char*>(pairs.values.data()), sizeof(double) * k);
  in.read(reinterpret_cast<char*>(pairs.residuals.data()),
          sizeof(double) * k);
  in.read(reinterpret_cast<char*>(pairs.vectors.data()),
          sizeof(double) * static_cast<std::size_t>(n) * k);
  if (!in) throw InputError(path + ": truncated eigenpair file");
  return pairs;
}

void write_states_json(const std::string& path,
                       const std::vector<AssignedState>& states) {
  ordered_json j;
  j["states"] = states_to_json(states, true);
  write_text(path, j.dump(2) + "\n");
}

std::vector<AssignedState> read_states_json(const std::string& path) {
  const ordered_json j = load_json(path);
  if (!j.contains("states") || !j.at("states").is_array())
    throw InputError(path + ": missing states array");
  std::vector<AssignedState> out;
  for (const ordered_json& s : j.at("states")) {
    AssignedState st;
    st.energy = field<double>(s, "energy_cm1", path);
    st.n = field<int>(s, "n", path);
    st.l = field<int>(s, "l", path);
    st.lambda = field<int>(s, "lambda", path);
    st.m_value = field<int>(s, "m", path);
    st.m_bar = field<bool>(s, "bar", path);
    st.j_dominant = field<int>(s, "j_dominant", path);
    st.spin = field<std::string>(s, "spin", path);
    st.purity = field<double>(s, "purity", path);
    st.ambiguous = field<bool>(s, "ambiguous", path);
    st.cluster_id = field<int>(s, "cluster_id", path);
    st.cluster_size = field<int>(s, "cluster_size", path);
    out.push_back(std::move(st));
  }
  return out;
}

void write_states_csv(const std::string& path,
                      const std::vector<AssignedState>& states) {
  std::ostringstream out;
  out << "energy_cm1,n,l,lambda,m,j,spin,purity\n";
  for (const AssignedState& s : states)
    out << format_g10(s.energy) << ',' << s.n << ',' << s.l << ','
        << s.lambda << ',' << s.m_label() << ',' << s.j_dominant << ','
        << s.spin << ',' << format_g10(s.purity) << '\n';
  write_text(path, out.str());
}

void write_peaks_csv(const std::string& path,
                     const std::vector<TransitionLine>& peaks) {
  std::ostringstream out;
  out << "label,position_cm1,class,delta_m,degeneracy\n";
  for (const TransitionLine& p : peaks)
    out << p.label << ',' << format_g10(p.position) << ',' << p.cls << ','
        << p.delta_m << ',' << p.degeneracy << '\n';
  write_text(path, out.str());
}

void write_pathways_csv(const std::string& path,
                        const std::vector<ConversionPathway>& pathways) {
  std::ostringstream out;
  out << "from,to,delta_m,open,driving_rank\n";
  for (const ConversionPathway& p : pathways)
    out << p.from_index << ',' << p.to_index << ',' << p.delta_m << ','
        << (p.open ? 1 : 0) << ',' << rank_name(p.driving_rank) << '\n';
  write_text(path, out.str());
}

std::vector<AssignedState> thermal_initial_manifold(
    const std::vector<AssignedState>& states) {
  std::vector<AssignedState> out;
  for (const char* spin : {"ortho", "para"}) {
    const AssignedState* lowest = nullptr;
    for (const AssignedState& s : states)
      if (s.spin == spin && (!lowest || s.energy < lowest->energy))
        lowest = &s;
    if (!lowest) continue;
    for (const AssignedState& s : states)
      if (s.spin == spin && s.n == lowest->n &&
          s.j_dominant == lowest->j_dominant)
        out.push_back(s);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const AssignedState& a, const AssignedState& b) {
                     return a.energy < b.energy;
                   });
  return out;
}

nlohmann::ordered_json report_to_json(const Report& rep) {
  ordered_json j;
  j["schema"] = kReportSchema;
  j["provenance"] = {{"tool", kToolName},
                     {"version", rep.tool_version},
                     {"config_hash", rep.config_hash}};

  if (rep.has_fits) {
    ordered_json terms = ordered_json::array();
    for (const FourierTerm& t : rep.angular_fit.terms)
      terms.push_back({{"l", t.l},
                       {"m", t.m},
                       {"basis", tag_name(t.tag)},
                       {"name", term_name(t)},
                       {"coeff", round_g10(t.coeff)}});
    j["fits"] = {{"radial",
                  {{"k", round_g10(rep.radial_fit.k)},
                   {"r0", round_g10(rep.radial_fit.r0)},
                   {"v0", round_g10(rep.radial_fit.v0)},
                   {"rms", round_g10(rep.radial_fit.rms)}}},
                 {"angular",
                  {{"order", rep.angular_fit.order},
                   {"rms", round_g10(rep.angular_fit.rms)},
                   {"terms", terms}}}};
  } else {
    j["fits"] = {{"skipped", true}};
  }

  if (rep.has_decomposition) {
    ordered_json coeffs = ordered_json::array();
    for (int k = 0; k <= rep.decomposition.k_max; ++k)
      for (int q = -k; q <= k; ++q) {
        const std::complex<double> c = rep.decomposition.c(k, q);
        coeffs.push_back({{"k", k},
                          {"q", q},
                          {"re", round_g10(c.real())},
                          {"im", round_g10(c.imag())}});
      }
    ordered_json ranks = ordered_json::array();
    for (int k = 0; k <= rep.decomposition.k_max; ++k)
      ranks.push_back(round_g10(rep.decomposition.rank(k)));
    j["decomposition"] = {{"k_max", rep.decomposition.k_max},
                          {"rank_power", ranks},
                          {"coefficients", coeffs}};
  } else {
    j["decomposition"] = {{"skipped", true}};
  }

  if (rep.has_channels) {
    ordered_json rp = ordered_json::array();
    for (double v : rep.channels.rank_powers) rp.push_back(round_g10(v));
    j["channels"] = {{"delta_m0_open", rep.channels.delta_m0_open},
                     {"delta_m1_open", rep.channels.delta_m1_open},
                     {"degenerate", rep.channels.degenerate},
                     {"threshold", round_g10(rep.channels.threshold)},
                     {"rank_powers", rp}};
  } else {
    j["channels"] = {{"skipped", true}};
  }

  j["states"] = rep.has_states ? states_to_json(rep.states, false)
                               : ordered_json{{"skipped", true}};

  if (rep.has_peaks) {
    ordered_json arr = ordered_json::array();
    for (const TransitionLine& p : rep.peaks) {
      ordered_json comps = ordered_json::array();
      for (const auto& [a, b] : p.components)
        comps.push_back(ordered_json::array({a, b}));
      arr.push_back({{"label", p.label},
                     {"position_cm1", round_g10(p.position)},
                     {"class", p.cls},
                     {"delta_m", p.delta_m},
                     {"degeneracy", p.degeneracy},
                     {"from", p.from_ket},
                     {"to", p.to_ket},
                     {"components", comps}});
    }
    j["peaks"] = arr;
  } else {
    j["peaks"] = {{"skipped", true}};
  }

  if (rep.has_pathways) {
    ordered_json arr = ordered_json::array();
    for (const ConversionPathway& p : rep.pathways)
      arr.push_back({{"from", p.from_index},
                     {"to", p.to_index},
                     {"from_ket", p.from_ket},
                     {"to_ket", p.to_ket},
                     {"delta_m", p.delta_m},
                     {"open", p.open},
                     {"driving_rank", rank_name(p.driving_rank)}});
    j["pathways"] = arr;
  } else {
    j["pathways"] = {{"skipped", true}};
  }

  j["diagnostics"] = {{"radial_fit_rms", round_g10(rep.diagnostics.radial_rms)},
                      {"angular_fit_rms",
                       round_g10(rep.diagnostics.angular_rms)},
                      {"solver_iterations", rep.diagnostics.solver_iterations},
                      {"solver_max_residual",
                       round_g10(rep.diagnostics.max_residual)},
                      {"sigma_used", round_g10(rep.diagnostics.sigma_used)},
                      {"warnings", rep.diagnostics.warnings}};
  return j;
}

void emit_report(const Report& rep, const std::string& format,
                 const std::string& directory) {
  if (format == "json") {
    write_text(directory + "/report.json", report_to_json(rep).dump(2) + "\n");
    return;
  }
  if (format != "csv-bundle")
    throw ConfigError("unknown report format: " + format);

  write_states_csv(directory + "/states.csv",
                   rep.has_states ? rep.states : std::vector<AssignedState>{});
  write_peaks_csv(directory + "/peaks.csv",
                  rep.has_peaks ? rep.peaks : std::vector<TransitionLine>{});
  write_pathways_csv(
      directory + "/pathways.csv",
      rep.has_pathways ? rep.pathways : std::vector<ConversionPathway>{});

  {
    std::ostringstream out;
    out << "k,q,re,im\n";
    if (rep.has_decomposition)
      for (int k = 0; k <= rep.decomposition.k_max; ++k)
        for (int q = -k; q <= k; ++q) {
          const std::complex<double> c = rep.decomposition.c(k, q);
          out << k << ',' << q << ',' << format_g10(c.real()) << ','
              << format_g10(c.imag()) << '\n';
        }
    write_text(directory + "/decomposition.csv", out.str());
  }
  {
    std::ostringstream out;
    out << "delta_m0_open,delta_m1_open,degenerate,threshold,r0,r1,r2\n";
    if (rep.has_channels) {
      const ConversionChannels& ch = rep.channels;
      out << (ch.delta_m0_open ? 1 : 0) << ',' << (ch.delta_m1_open ? 1 : 0)
          << ',' << (ch.degenerate ? 1 : 0) << ','
          << format_g10(ch.threshold);
      for (size_t i = 0; i < 3; ++i)
        out << ','
            << format_g10(i < ch.rank_powers.size() ? ch.rank_powers[i]
                                                    : 0.0);
      out << '\n';
    }
    write_text(directory + "/channels.csv", out.str());
  }
  {
    std::ostringstream out;
    out << "key,value\n";
    out << "schema," << kReportSchema << '\n';
    out << "tool," << kToolName << '\n';
    out << "version," << rep.tool_version << '\n';
    out << "config_hash," << rep.config_hash << '\n';
    out << "radial_fit_rms," << format_g10(rep.diagnostics.radial_rms) << '\n';
    out << "angular_fit_rms," << format_g10(rep.diagnostics.angular_rms)
        << '\n';
    out << "solver_iterations," << rep.diagnostics.solver_iterations << '\n';
    out << "solver_max_residual," << format_g10(rep.diagnostics.max_residual)
        << '\n';
    out << "sigma_used," << format_g10(rep.diagnostics.sigma_used) << '\n';
    for (size_t i = 0; i < rep.diagnostics.warnings.size(); ++i) {
      std::string w = rep.diagnostics.warnings[i];
      for (char& ch : w)
        if (ch == ',') ch = ';';
      out << "warning_" << i + 1 << ',' << w << '\n';
    }
    write_text(directory + "/diagnostics.csv", out.str());
  }
}

Report run_pipeline(const PipelineConfig& config) {
  config.validate();
  const std::string dir = config.output.directory;
  try {
    fs::create_directories(dir);
  } catch (const fs::filesystem_error& e) {
    throw InputError(std::string("cannot create output directory: ") +
                     e.what());
  }
  DirLock lock(dir);

  Report rep;
  rep.config_hash = config_hash(config);

  HarmonicFit radial;
  try {
    radial = fit_radial_harmonic(
        load_radial_samples(config.potential.radial_path));
  } catch (const Error& e) {
    stage_fail("fit_radial_harmonic", e);
  }

  FourierFit angular;
  try {
    angular = fit_angular_fourier(
        load_angular_samples(config.potential.angular_path),
        config.potential.fourier_order);
  } catch (const Error& e) {
    stage_fail("fit_angular_fourier", e);
  }
  rep.radial_fit = radial;
  rep.angular_fit = angular;
  rep.has_fits = true;
  rep.diagnostics.radial_rms = radial.rms;
  rep.diagnostics.angular_rms = angular.rms;
  write_fits_json(dir + "/fits.json", radial, angular);

  try {
    rep.decomposition =
        decompose_spherical_tensors(angular, config.decomposition.k_max);
    rep.has_decomposition = true;
  } catch (const Error& e) {
    stage_fail("decompose_spherical_tensors", e);
  }

  try {
    rep.channels =
        classify_channels(rep.decomposition, config.decomposition.epsilon);
    rep.has_channels = true;
  } catch (const Error& e) {
    stage_fail("classify_channels", e);
  }
  write_decomposition_json(dir + "/decomposition.json", rep.decomposition,
                           rep.channels);

  Grid3D grid;
  try {
    grid = build_grid(config.grid.nr, config.grid.ntheta, config.grid.nphi,
                      config.grid.r_max);
  } catch (const Error& e) {
    stage_fail("build_grid", e);
  }

  SparseHamiltonian h;
  try {
    h = assemble_hamiltonian(grid, config.model, radial, angular,
                             config.model.coupling_gamma != 0.0);
  } catch (const Error& e) {
    stage_fail("assemble_hamiltonian", e);
  }

  LanczosOptions lopt;
  lopt.n_eig = config.solver.n_eig;
  lopt.tol = config.solver.tol;
  lopt.max_iter = config.solver.max_iter;
  lopt.seed = config.solver.seed;
  if (config.solver.has_sigma) {
    lopt.auto_shift = false;
    lopt.sigma = config.solver.sigma;
  }

  EigenPairs pairs;
  try {
    pairs = solve_lowest(h, lopt);
  } catch (const PartialConvergenceError& e) {
    // keep what converged so a resumed run can inspect it
    write_eigen_bin(dir + "/eigen.bin", e.partial, grid);
    throw PartialConvergenceError(
        std::string("stage solve_lowest: ") + e.what(), e.partial);
  } catch (const Error& e) {
    stage_fail("solve_lowest", e);
  }
  rep.diagnostics.solver_iterations = pairs.iterations;
  rep.diagnostics.max_residual = pairs.max_residual;
  rep.diagnostics.sigma_used = pairs.sigma_used;
  write_eigen_bin(dir + "/eigen.bin", pairs, grid);

  try {
    AssignOptions aopt;
    aopt.strict = false;  // ambiguity becomes a warning, not a failure
    rep.states = assign_quantum_numbers(pairs, grid, config.model, aopt);
    rep.has_states = true;
  } catch (const Error& e) {
    stage_fail("assign_quantum_numbers", e);
  }
  write_states_csv(dir + "/states.csv", rep.states);
  write_states_json(dir + "/states.json", rep.states);

  std::vector<AssignedState> clean;
  for (size_t i = 0; i < rep.states.size(); ++i) {
    if (rep.states[i].ambiguous) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "state %zu is ambiguous (purity %.3f); excluded from the "
                    "transition analysis",
                    i, rep.states[i].purity);
      rep.diagnostics.warnings.push_back(buf);
    } else {
      clean.push_back(rep.states[i]);
    }
  }

  if (clean.empty()) {
    rep.diagnostics.warnings.push_back(
        "no unambiguous states; transition analysis skipped");
  } else {
    try {
      rep.peaks = enumerate_q1_transitions(
          thermal_initial_manifold(clean), clean,
          config.spectroscopy.nu_origin, config.spectroscopy.resolution);
      rep.has_peaks = true;
    } catch (const Error& e) {
      stage_fail("enumerate_q1_transitions", e);
    }
    write_peaks_csv(dir + "/peaks.csv", rep.peaks);

    bool have_ortho = false, have_para = false;
    for (const AssignedState& s : clean) {
      if (s.spin == "ortho") have_ortho = true;
      if (s.spin == "para") have_para = true;
    }
    if (have_ortho && have_para) {
      try {
        rep.pathways = conversion_pathways(clean, rep.channels);
        rep.has_pathways = true;
      } catch (const Error& e) {
        stage_fail("conversion_pathways", e);
      }
      write_pathways_csv(dir + "/pathways.csv", rep.pathways);
    } else {
      rep.diagnostics.warnings.push_back(
          "only one spin species present; pathway analysis skipped");
    }
  }

  for (const std::string& format : config.output.formats)
    emit_report(rep, format, dir);
  return rep;
}

}  // namespace rotorcage
