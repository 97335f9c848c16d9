#include "rotorcage/grid.hpp"

#include <cmath>

#include "rotorcage/common.hpp"

namespace rotorcage {

Grid3D build_grid(int nr, int ntheta, int nphi, double r_max) {
  if (nr < 8 || ntheta < 8 || nphi < 8)
    throw ConfigError("grid counts must be at least 8 in every direction");
  if (!(r_max > 0.0)) throw ConfigError("r_max must be positive");

  Grid3D g;
  g.nr = nr;
  g.ntheta = ntheta;
  g.nphi = nphi;
  g.r_max = r_max;
  g.dr = 2.0 * r_max / (nr + 1);
  g.dtheta = kPi / ntheta;
  g.dphi = 2.0 * kPi / nphi;

  g.r_nodes.resize(nr);
  for (int i = 0; i < nr; ++i) g.r_nodes[i] = -r_max + (i + 1) * g.dr;
  g.theta_nodes.resize(ntheta);
  g.sin_theta.resize(ntheta);
  for (int j = 0; j < ntheta; ++j) {
    g.theta_nodes[j] = (j + 0.5) * g.dtheta;
    g.sin_theta[j] = std::sin(g.theta_nodes[j]);
  }
  g.phi_nodes.resize(nphi);
  for (int k = 0; k < nphi; ++k) g.phi_nodes[k] = k * g.dphi;
  return g;
}

}  // namespace rotorcage
