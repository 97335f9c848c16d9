#include "rotorcage/potential.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <set>

#include "rotorcage/common.hpp"
#include "rotorcage/csv.hpp"

namespace rotorcage {

std::string term_name(const FourierTerm& t) {
  auto part = [](bool is_cos, int n, const char* var) -> std::string {
    if (n == 0 && is_cos) return "1";
    std::string f = is_cos ? "cos" : "sin";
    return f + "(" + std::to_string(n) + var + ")";
  };
  bool tc = (t.tag == BasisTag::CosCos || t.tag == BasisTag::CosSin);
  bool pc = (t.tag == BasisTag::CosCos || t.tag == BasisTag::SinCos);
  std::string a = part(tc, t.l, "theta");
  std::string b = part(pc, t.m, "phi");
  if (a == "1") return b;
  if (b == "1") return a;
  return a + "*" + b;
}

namespace {

double basis_eval(const FourierTerm& t, double theta, double phi) {
  double a = (t.tag == BasisTag::CosCos || t.tag == BasisTag::CosSin)
                 ? std::cos(t.l * theta)
                 : std::sin(t.l * theta);
  double b = (t.tag == BasisTag::CosCos || t.tag == BasisTag::SinCos)
                 ? std::cos(t.m * phi)
                 : std::sin(t.m * phi);
  return a * b;
}

// Term list for a given order. sin(0x) columns are identically zero and are
// never generated.
std::vector<FourierTerm> make_terms(int order) {
  std::vector<FourierTerm> terms;
  for (int l = 0; l <= order; ++l) {
    for (int m = 0; m <= order; ++m) {
      terms.push_back({l, m, BasisTag::CosCos, 0.0});
      if (m >= 1) terms.push_back({l, m, BasisTag::CosSin, 0.0});
      if (l >= 1) terms.push_back({l, m, BasisTag::SinCos, 0.0});
      if (l >= 1 && m >= 1) terms.push_back({l, m, BasisTag::SinSin, 0.0});
    }
  }
  return terms;
}

}  // namespace

double FourierFit::eval(double theta, double phi) const {
  double v = 0.0;
  for (const auto& t : terms) v += t.coeff * basis_eval(t, theta, phi);
  return v;
}

double FourierFit::spherical_mean() const {
  // Only m = 0 terms survive the phi average. For those,
  //   integral_0^pi cos(l theta) sin(theta) dtheta = 2/(1-l^2) for even l,
  //   integral_0^pi sin(l theta) sin(theta) dtheta = pi/2 for l = 1,
  // and zero otherwise.
  double mean = 0.0;
  for (const auto& t : terms) {
    if (t.m != 0 || t.tag == BasisTag::CosSin || t.tag == BasisTag::SinSin)
      continue;
    if (t.tag == BasisTag::CosCos) {
      if (t.l % 2 == 0) mean += t.coeff * 0.5 * 2.0 / (1.0 - t.l * (double)t.l);
    } else {  // SinCos
      if (t.l == 1) mean += t.coeff * 0.5 * (kPi / 2.0);
    }
  }
  return mean;
}

RadialSamples load_radial_samples(const std::string& path) {
  CsvTable table = read_csv(path, {"r_angstrom", "v_wavenumber"});
  RadialSamples s;
  for (const auto& row : table.rows) {
    s.r.push_back(row[0]);
    s.v.push_back(row[1]);
  }
  if (s.r.size() < 5)
    throw InputError(path + ": need at least 5 radial samples, got " +
                     std::to_string(s.r.size()));
  for (size_t i = 0; i < s.r.size(); ++i) {
    if (!std::isfinite(s.r[i]) || !std::isfinite(s.v[i]))
      throw InputError(path + ": non-finite sample at row " +
                       std::to_string(i + 2));
    if (i > 0 && !(s.r[i] > s.r[i - 1]))
      throw InputError(path + ": r values must be strictly increasing (row " +
                       std::to_string(i + 2) + ")");
  }
  return s;
}

AngularSamples load_angular_samples(const std::string& path) {
  CsvTable table =
      read_csv(path, {"theta_rad", "phi_rad", "v_wavenumber"});
  if (table.rows.empty()) throw InputError(path + ": no angular samples");

  // Group rows by theta in file order; every block must repeat the same phi
  // sequence or the grid is not rectangular.
  AngularSamples s;
  std::vector<double> cur_phis;
  double cur_theta = table.rows[0][0];
  s.thetas.push_back(cur_theta);
  std::vector<std::vector<double>> blocks(1);

  for (size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (!std::isfinite(row[0]) || !std::isfinite(row[1]) ||
        !std::isfinite(row[2]))
      throw InputError(path + ": non-finite value at row " +
                       std::to_string(i + 2));
    if (row[0] != cur_theta) {
      cur_theta = row[0];
      s.thetas.push_back(cur_theta);
      blocks.emplace_back();
    }
    if (s.thetas.size() == 1) cur_phis.push_back(row[1]);
    blocks.back().push_back(row[2]);
    size_t k = blocks.back().size() - 1;
    if (s.thetas.size() > 1) {
      if (k >= cur_phis.size() || row[1] != cur_phis[k])
        throw InputError(path + ": non-rectangular angular grid near row " +
                         std::to_string(i + 2));
    }
  }
  s.phis = cur_phis;

  if (s.thetas.size() < 2)
    throw InputError(path +
                     ": a single theta row cannot span the polar range");
  for (const auto& b : blocks)
    if (b.size() != s.phis.size())
      throw InputError(path + ": non-rectangular angular grid");

  for (size_t i = 0; i < s.thetas.size(); ++i) {
    double t = s.thetas[i];
    if (!(t > 0.0 && t < kPi))
      throw InputError(path + ": theta nodes must lie strictly inside (0,pi)");
    if (i > 0 && !(t > s.thetas[i - 1]))
      throw InputError(path + ": duplicate or decreasing theta abscissa");
  }

  // phi must be uniform over one period.
  size_t np = s.phis.size();
  if (np < 2) throw InputError(path + ": need at least 2 phi nodes");
  double dphi = s.phis[1] - s.phis[0];
  if (!(dphi > 0)) throw InputError(path + ": duplicate or decreasing phi abscissa");
  for (size_t i = 1; i < np; ++i) {
    double d = s.phis[i] - s.phis[i - 1];
    if (std::abs(d - dphi) > 1e-9 * std::max(1.0, std::abs(dphi)))
      throw InputError(path + ": phi nodes must be uniformly spaced");
  }
  if (std::abs(np * dphi - 2.0 * kPi) > 1e-6)
    throw InputError(path + ": phi nodes must cover one 2*pi period");

  for (const auto& b : blocks)
    s.values.insert(s.values.end(), b.begin(), b.end());
  return s;
}

HarmonicFit fit_radial_harmonic(const RadialSamples& samples) {
  const size_t n = samples.r.size();
  if (n < 5)
    throw InputError("harmonic fit needs at least 5 samples, got " +
                     std::to_string(n));

  Eigen::MatrixXd A(n, 3);
  Eigen::VectorXd b(n);
  for (size_t i = 0; i < n; ++i) {
    double r = samples.r[i];
    A(i, 0) = 1.0;
    A(i, 1) = r;
    A(i, 2) = r * r;
    b(i) = samples.v[i];
  }
  Eigen::Vector3d a = A.colPivHouseholderQr().solve(b);

  // Relative gate: a scan whose curvature term contributes nothing at the
  // data's own scale is flat, not confining, even if rounding leaves the
  // best-fit k a hair above zero.
  double k = 2.0 * a(2);
  double span = samples.r.back() - samples.r.front();
  double vscale = 1.0;
  for (double v : samples.v) vscale = std::max(vscale, std::abs(v));
  if (!(k * span * span > 1e-10 * vscale))
    throw NumericError(
        "harmonic fit rejected: data are not confining (k = " +
        format_g10(k) + " cm^-1 A^-2)");

  HarmonicFit fit;
  fit.k = k;
  fit.r0 = -a(1) / (2.0 * a(2));
  fit.v0 = a(0) - a(1) * a(1) / (4.0 * a(2));
  double ss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double res = fit.eval(samples.r[i]) - samples.v[i];
    ss += res * res;
  }
  fit.rms = std::sqrt(ss / n);
  return fit;
}

FourierFit fit_angular_fourier(const AngularSamples& samples, int order) {
  if (order < 0) throw ConfigError("fourier order must be >= 0");
  const size_t nt = samples.thetas.size();
  const size_t np = samples.phis.size();
  const size_t rows = nt * np;

  std::vector<FourierTerm> terms = make_terms(order);
  const size_t cols = terms.size();
  if (rows < cols)
    throw NumericError("fourier fit ill-posed: " + std::to_string(cols) +
                       " basis terms but only " + std::to_string(rows) +
                       " samples");

  Eigen::MatrixXd A(rows, cols);
  Eigen::VectorXd b(rows);
  for (size_t it = 0; it < nt; ++it) {
    for (size_t ip = 0; ip < np; ++ip) {
      size_t r = it * np + ip;
      for (size_t c = 0; c < cols; ++c)
        A(r, c) = basis_eval(terms[c], samples.thetas[it], samples.phis[ip]);
      b(r) = samples.values[r];
    }
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-10);
  if (static_cast<size_t>(qr.rank()) < cols) {
    // The columns permuted past the numerical rank are the dependent ones.
    std::string bad;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index p = qr.rank(); p < static_cast<Eigen::Index>(cols); ++p) {
      if (!bad.empty()) bad += ", ";
      bad += term_name(terms[perm(p)]);
    }
    throw NumericError(
        "fourier fit ill-posed: sampled grid cannot resolve terms: " + bad);
  }
  Eigen::VectorXd x = qr.solve(b);

  FourierFit fit;
  fit.order = order;
  fit.terms = std::move(terms);
  for (size_t c = 0; c < cols; ++c) fit.terms[c].coeff = x(c);
  double ss = (A * x - b).squaredNorm();
  fit.rms = std::sqrt(ss / rows);
  return fit;
}

}  // namespace rotorcage
