#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rotorcage/common.hpp"
#include "rotorcage/grid.hpp"
#include "rotorcage/hamiltonian.hpp"
#include "rotorcage/lanczos.hpp"

namespace rotorcage {

// Marginals of |psi|^2. Entries are densities, not cell masses: the radial
// profile integrates to 1 against dr, the angular one against sin(theta)
// dtheta dphi.
struct ReducedDensity {
  Eigen::VectorXd radial;   // nr
  Eigen::MatrixXd angular;  // ntheta x nphi
};

ReducedDensity reduce_densities(const Eigen::VectorXd& state_vector,
                                const Grid3D& grid);

struct AssignedState {
  double energy = 0.0;
  int n = 0;           // radial node count
  int l = 0;           // parity class of n (bookkeeping label)
  int lambda = 0;      // total angular label, = j_dominant
  int m_value = 0;     // |projection| label
  bool m_bar = false;  // higher-energy member of a split |m| pair
  int j_dominant = 0;
  std::string spin;    // "ortho" | "para"
  double purity = 0.0; // dominant-j overlap weight
  bool ambiguous = false;
  int cluster_id = 0;
  int cluster_size = 1;
  // P_jm table: row j in 0..j_max, column m+j_max; zero where |m| > j.
  Eigen::MatrixXd overlap;

  std::string m_label() const;  // "0", "1", "1bar", ...
  std::string ket() const;      // "|<lambda><m>>" tag, e.g. "|11bar>"
};

struct AssignOptions {
  int j_max = 6;
  double purity_floor = 0.5;
  bool strict = true;         // throw on ambiguity instead of flagging it
  double cluster_tol = 0.05;  // cm^-1 gap that still counts as degenerate
  double node_floor = 1e-3;   // relative amplitude floor for node counting
};

// Raised in strict mode when no single j carries at least the purity floor.
class AmbiguousAssignment : public NumericError {
public:
  AmbiguousAssignment(const std::string& what, int state,
                      Eigen::MatrixXd table)
      : NumericError(what), state_index(state), overlap(std::move(table)) {}
  int state_index;
  Eigen::MatrixXd overlap;
};

// Raised when a degenerate cluster cannot receive distinct (n,l,lambda,m)
// labels (more members than the 2j+1 slots, or persisting duplicates).
class ClusterLabelError : public NumericError {
public:
  using NumericError::NumericError;
};

// Radial node count of one state: sign changes of the leading left singular
// vector of the (nr x angular) reshape. The rank-1 radial factor separates
// cleanly because radial factors of different node counts are orthogonal;
// entries below floor_rel * max are treated as numerical zeros.
int count_radial_nodes(const Eigen::VectorXd& state_vector, const Grid3D& grid,
                       double floor_rel = 1e-3);

std::vector<AssignedState> assign_quantum_numbers(
    const EigenPairs& pairs, const Grid3D& grid, const ModelParams& params,
    const AssignOptions& opt = {});

}  // namespace rotorcage
