#pragma once

#include <vector>

namespace rotorcage {

// Product grid for the confined-rotor problem. Radial nodes are the interior
// points of a uniform Dirichlet mesh on [-r_max, +r_max]; theta nodes are
// midpoint-offset so the poles (and the 1/sin^2 singularity) are never
// sampled; phi is uniform and periodic. Flattened index: (ir*ntheta + it)*nphi + ip.
struct Grid3D {
  int nr = 0, ntheta = 0, nphi = 0;
  double r_max = 0.0;
  double dr = 0.0, dtheta = 0.0, dphi = 0.0;
  std::vector<double> r_nodes;
  std::vector<double> theta_nodes;
  std::vector<double> phi_nodes;
  std::vector<double> sin_theta;

  int dimension() const { return nr * ntheta * nphi; }
  int index(int ir, int it, int ip) const {
    return (ir * ntheta + it) * nphi + ip;
  }
  // Integration measure dr * sin(theta) dtheta dphi at a node.
  double weight(int it) const { return dr * sin_theta[it] * dtheta * dphi; }
};

Grid3D build_grid(int nr, int ntheta, int nphi, double r_max);

}  // namespace rotorcage
