#pragma once

#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "rotorcage/grid.hpp"
#include "rotorcage/potential.hpp"

namespace rotorcage {

struct ModelParams {
  double mass_total = 2.016;    // u
  double b_rot = 60.0;          // cm^-1
  double nu_origin = 4161.0;    // cm^-1
  double coupling_gamma = 1.0;  // dimensionless; 0 disables the product term
  double energy_scale = 1.0;    // cm^-1, normalizes the product term

  void validate() const;
};

// Symmetric operator in the weight-symmetrized basis: both triangles are
// materialized so matvecs and factorizations need no symmetry bookkeeping.
// Eigenvectors of this matrix are W^(1/2) psi; their squared entries are the
// probability mass per grid node.
struct SparseHamiltonian {
  Eigen::SparseMatrix<double> mat;
  int dimension = 0;
  double v_min = 0.0;      // minimum of the potential over the grid
  bool has_potential = false;
  std::string provenance;  // grid/params summary for reports

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return mat * x; }
};

// Full 3D assembly: radial kinetic + b_rot * angular Laplacian + diagonal
// potential V_rad + V_ang + gamma*(V_rad - min V_rad)*(V_ang - mean V_ang)/E_ref.
SparseHamiltonian assemble_hamiltonian(const Grid3D& grid,
                                       const ModelParams& params,
                                       const HarmonicFit& radial,
                                       const FourierFit& angular,
                                       bool include_coupling);

// Radial-sector-only operator (kinetic + optional 1D potential), used for
// validating the translational discretization against harmonic analytics.
SparseHamiltonian assemble_radial_only(int nr, double r_max,
                                       const ModelParams& params,
                                       const HarmonicFit* potential);

// Angular-sector-only operator (b_rot * Laplacian + optional field), used for
// validating against the free-rotor spectrum.
SparseHamiltonian assemble_angular_only(int ntheta, int nphi,
                                        const ModelParams& params,
                                        const FourierFit* field);

// Wraps an arbitrary symmetric triplet list (validation and test matrices).
SparseHamiltonian make_matrix(int dim,
                              const std::vector<Eigen::Triplet<double>>& t);

// Coordinate text dump, `row col value` per line, 0-based.
void dump_matrix(const SparseHamiltonian& h, const std::string& path);

}  // namespace rotorcage
