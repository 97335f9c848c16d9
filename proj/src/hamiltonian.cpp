#include "rotorcage/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "rotorcage/common.hpp"

namespace rotorcage {

void ModelParams::validate() const {
  if (!std::isfinite(mass_total) || mass_total <= 0.0)
    throw ConfigError("mass_total must be a positive finite mass in u");
  if (!std::isfinite(b_rot) || b_rot <= 0.0)
    throw ConfigError("b_rot must be a positive finite rotational constant");
  if (!std::isfinite(nu_origin) || nu_origin < 0.0)
    throw ConfigError("nu_origin must be a nonnegative finite wavenumber");
  if (!std::isfinite(coupling_gamma))
    throw ConfigError("coupling_gamma must be finite");
  if (!std::isfinite(energy_scale) || energy_scale <= 0.0)
    throw ConfigError("energy_scale must be a positive finite wavenumber");
}

namespace {

// Blended second/fourth order periodic stencil for the phi second
// derivative. The blend weight follows the grid aspect ratio so the leading
// phi discretization error cancels against the theta one on rotor levels
// rather than compounding it. Clamping g to [-3, 1] keeps the circulant
// symbol c0 + 2 c1 cos(x) + 2 c2 cos(2x) nonnegative.
struct PhiStencil {
  double c0, c1, c2;
};

PhiStencil phi_stencil(double dtheta, double dphi) {
  const double ratio = dtheta / dphi;
  const double g = std::clamp(1.0 - 2.5 * ratio * ratio, -3.0, 1.0);
  PhiStencil s;
  s.c0 = (1.0 - g) * 2.0 + g * (30.0 / 12.0);
  s.c1 = -(1.0 - g) - g * (16.0 / 12.0);
  s.c2 = g / 12.0;
  return s;
}

// Appends b * (sphere Laplacian) for one (theta, phi) block whose local node
// (j, k) lives at matrix index base + j*nphi + k. Off-diagonal values are
// computed once per undirected pair and pushed to both triangles, so the
// assembled matrix is symmetric to the last bit.
void append_angular_block(std::vector<Eigen::Triplet<double>>& t,
                          const std::vector<double>& sin_nodes,
                          const std::vector<double>& sin_half,
                          int ntheta, int nphi, double dtheta, double dphi,
                          double b, int base) {
  const PhiStencil ps = phi_stencil(dtheta, dphi);
  const double inv_dt2 = 1.0 / (dtheta * dtheta);
  const double inv_dp2 = 1.0 / (dphi * dphi);
  for (int j = 0; j < ntheta; ++j) {
    const double sj = sin_nodes[j];
    const double phi_scale = b * inv_dp2 / (sj * sj);
    const double theta_diag = b * (sin_half[j] + sin_half[j + 1]) * inv_dt2 / sj;
    const double v1 = ps.c1 * phi_scale;
    const double v2 = ps.c2 * phi_scale;
    for (int k = 0; k < nphi; ++k) {
      const int a = base + j * nphi + k;
      t.emplace_back(a, a, theta_diag + ps.c0 * phi_scale);
      const int a1 = base + j * nphi + (k + 1) % nphi;
      t.emplace_back(a, a1, v1);
      t.emplace_back(a1, a, v1);
      if (v2 != 0.0) {
        const int a2 = base + j * nphi + (k + 2) % nphi;
        t.emplace_back(a, a2, v2);
        t.emplace_back(a2, a, v2);
      }
    }
    if (j + 1 < ntheta) {
      // Flux form in the node-density metric: sqrt(s_j s_{j+1}) symmetrizes
      // the conservative divided difference.
      const double off =
          -b * sin_half[j + 1] * inv_dt2 / std::sqrt(sj * sin_nodes[j + 1]);
      for (int k = 0; k < nphi; ++k) {
        const int lo = base + j * nphi + k;
        const int hi = base + (j + 1) * nphi + k;
        t.emplace_back(lo, hi, off);
        t.emplace_back(hi, lo, off);
      }
    }
  }
}

std::vector<double> half_node_sines(int ntheta, double dtheta) {
  std::vector<double> s(static_cast<size_t>(ntheta) + 1);
  for (int j = 0; j <= ntheta; ++j) s[j] = std::sin(j * dtheta);
  return s;
}

SparseHamiltonian finish(int dim, std::vector<Eigen::Triplet<double>>&& t,
                         double v_min, bool has_potential,
                         std::string provenance) {
  SparseHamiltonian h;
  h.dimension = dim;
  h.mat.resize(dim, dim);
  h.mat.setFromTriplets(t.begin(), t.end());
  h.mat.makeCompressed();
  h.v_min = v_min;
  h.has_potential = has_potential;
  h.provenance = std::move(provenance);
  return h;
}

}  // namespace

SparseHamiltonian assemble_hamiltonian(const Grid3D& grid,
                                       const ModelParams& params,
                                       const HarmonicFit& radial,
                                       const FourierFit& angular,
                                       bool include_coupling) {
  params.validate();
  const int nr = grid.nr;
  const int nt = grid.ntheta;
  const int np = grid.nphi;
  const int block = nt * np;
  const int dim = grid.dimension();

  const double c = kKineticScale / params.mass_total;
  const double inv_dr2 = 1.0 / (grid.dr * grid.dr);
  const double rad_diag = 2.0 * c * inv_dr2;
  const double rad_off = -c * inv_dr2;

  std::vector<double> v_rad(nr);
  for (int i = 0; i < nr; ++i) v_rad[i] = radial.eval(grid.r_nodes[i]);
  std::vector<double> v_ang(block);
  for (int j = 0; j < nt; ++j)
    for (int k = 0; k < np; ++k)
      v_ang[j * np + k] = angular.eval(grid.theta_nodes[j], grid.phi_nodes[k]);

  double v_rad_min = v_rad[0];
  for (double v : v_rad) v_rad_min = std::min(v_rad_min, v);
  const double v_ang_mean = angular.spherical_mean();
  const double gamma_over_scale =
      include_coupling ? params.coupling_gamma / params.energy_scale : 0.0;

  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<size_t>(dim) * 10);

  const std::vector<double> sin_half = half_node_sines(nt, grid.dtheta);
  double v_min = 0.0;
  bool first = true;
  for (int i = 0; i < nr; ++i) {
    const int base = i * block;
    append_angular_block(t, grid.sin_theta, sin_half, nt, np, grid.dtheta,
                         grid.dphi, params.b_rot, base);
    for (int j = 0; j < nt; ++j) {
      for (int k = 0; k < np; ++k) {
        const int a = base + j * np + k;
        const double va = v_ang[j * np + k];
        const double v = v_rad[i] + va +
                         gamma_over_scale * (v_rad[i] - v_rad_min) *
                             (va - v_ang_mean);
        if (!std::isfinite(v)) {
          char buf[160];
          std::snprintf(buf, sizeof buf,
                        "potential is not finite at grid node (ir=%d, "
                        "itheta=%d, iphi=%d): r=%.6g theta=%.6g phi=%.6g",
                        i, j, k, grid.r_nodes[i], grid.theta_nodes[j],
                        grid.phi_nodes[k]);
          throw NumericError(buf);
        }
        if (first || v < v_min) v_min = v;
        first = false;
        t.emplace_back(a, a, rad_diag + v);
        if (i + 1 < nr) {
          const int b = a + block;
          t.emplace_back(a, b, rad_off);
          t.emplace_back(b, a, rad_off);
        }
      }
    }
  }

  char prov[256];
  std::snprintf(prov, sizeof prov,
                "3d nr=%d ntheta=%d nphi=%d r_max=%.10g b_rot=%.10g "
                "mass=%.10g coupling=%s",
                nr, nt, np, grid.r_max, params.b_rot, params.mass_total,
                include_coupling ? "on" : "off");
  return finish(dim, std::move(t), v_min, true, prov);
}

SparseHamiltonian assemble_radial_only(int nr, double r_max,
                                       const ModelParams& params,
                                       const HarmonicFit* potential) {
  params.validate();
  if (nr < 8) throw ConfigError("radial grid needs at least 8 interior nodes");
  if (!std::isfinite(r_max) || r_max <= 0.0)
    throw ConfigError("r_max must be a positive finite length");

  const double dr = 2.0 * r_max / (nr + 1);
  const double c = kKineticScale / params.mass_total;
  const double inv_dr2 = 1.0 / (dr * dr);

  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<size_t>(nr) * 3);
  double v_min = 0.0;
  bool first = true;
  for (int i = 0; i < nr; ++i) {
    const double r = -r_max + (i + 1) * dr;
    double v = 0.0;
    if (potential) {
      v = potential->eval(r);
      if (!std::isfinite(v)) {
        char buf[96];
        std::snprintf(buf, sizeof buf,
                      "radial potential is not finite at r=%.6g", r);
        throw NumericError(buf);
      }
      if (first || v < v_min) v_min = v;
      first = false;
    }
    t.emplace_back(i, i, 2.0 * c * inv_dr2 + v);
    if (i + 1 < nr) {
      t.emplace_back(i, i + 1, -c * inv_dr2);
      t.emplace_back(i + 1, i, -c * inv_dr2);
    }
  }

  char prov[128];
  std::snprintf(prov, sizeof prov, "radial nr=%d r_max=%.10g mass=%.10g", nr,
                r_max, params.mass_total);
  return finish(nr, std::move(t), potential ? v_min : 0.0,
                potential != nullptr, prov);
}

SparseHamiltonian assemble_angular_only(int ntheta, int nphi,
                                        const ModelParams& params,
                                        const FourierFit* field) {
  params.validate();
  if (ntheta < 8 || nphi < 8)
    throw ConfigError("angular grid needs at least 8 nodes per direction");

  const double dtheta = kPi / ntheta;
  const double dphi = 2.0 * kPi / nphi;
  std::vector<double> sin_nodes(ntheta);
  for (int j = 0; j < ntheta; ++j) sin_nodes[j] = std::sin((j + 0.5) * dtheta);
  const std::vector<double> sin_half = half_node_sines(ntheta, dtheta);

  const int dim = ntheta * nphi;
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<size_t>(dim) * 8);
  append_angular_block(t, sin_nodes, sin_half, ntheta, nphi, dtheta, dphi,
                       params.b_rot, 0);

  double v_min = 0.0;
  bool first = true;
  if (field) {
    for (int j = 0; j < ntheta; ++j) {
      for (int k = 0; k < nphi; ++k) {
        const double v = field->eval((j + 0.5) * dtheta, k * dphi);
        if (!std::isfinite(v)) {
          char buf[120];
          std::snprintf(buf, sizeof buf,
                        "angular field is not finite at theta=%.6g phi=%.6g",
                        (j + 0.5) * dtheta, k * dphi);
          throw NumericError(buf);
        }
        if (first || v < v_min) v_min = v;
        first = false;
        t.emplace_back(j * nphi + k, j * nphi + k, v);
      }
    }
  }

  char prov[128];
  std::snprintf(prov, sizeof prov, "angular ntheta=%d nphi=%d b_rot=%.10g",
                ntheta, nphi, params.b_rot);
  return finish(dim, std::move(t), field ? v_min : 0.0, field != nullptr,
                prov);
}

SparseHamiltonian make_matrix(int dim,
                              const std::vector<Eigen::Triplet<double>>& t) {
  if (dim <= 0) throw ConfigError("matrix dimension must be positive");
  SparseHamiltonian h;
  h.dimension = dim;
  h.mat.resize(dim, dim);
  h.mat.setFromTriplets(t.begin(), t.end());
  h.mat.makeCompressed();
  h.provenance = "adhoc";
  return h;
}

void dump_matrix(const SparseHamiltonian& h, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open matrix dump target: " + path);
  char buf[96];
  for (int col = 0; col < h.mat.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(h.mat, col); it; ++it) {
      std::snprintf(buf, sizeof buf, "%d %d %.17g\n",
                    static_cast<int>(it.row()), static_cast<int>(it.col()),
                    it.value());
      out << buf;
    }
  }
  if (!out.good()) throw InputError("failed writing matrix dump: " + path);
}

}  // namespace rotorcage
