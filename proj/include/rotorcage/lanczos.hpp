#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "rotorcage/common.hpp"
#include "rotorcage/hamiltonian.hpp"

namespace rotorcage {

struct EigenPairs {
  Eigen::VectorXd values;    // ascending
  Eigen::MatrixXd vectors;   // columns match values; unit norm, largest
                             // magnitude entry made positive
  Eigen::VectorXd residuals; // ||A x - lambda x|| per pair
  long iterations = 0;       // inner solves spent
  double max_residual = 0.0;
  double sigma_used = 0.0;
};

struct LanczosOptions {
  int n_eig = 6;
  double tol = 1e-6;  // accept when ||A x - lambda x|| <= tol * max(1, |lambda|)
  long max_iter = 0;  // total inner-solve budget; 0 derives one from n_eig
  std::uint64_t seed = 20240915ull;
  bool auto_shift = true;  // sigma below the spectrum via v_min or Gershgorin
  double sigma = 0.0;      // honored when auto_shift is false
};

// The requested shift made the factorization numerically singular; retry with
// suggested_sigma (nudged below the offending eigenvalue).
class ShiftAdjustError : public NumericError {
public:
  ShiftAdjustError(const std::string& what, double suggestion)
      : NumericError(what), suggested_sigma(suggestion) {}
  double suggested_sigma;
};

// The iteration budget ran out first. Whatever converged is carried along so
// callers can salvage a partial spectrum; maps to exit code 5.
class PartialConvergenceError : public Error {
public:
  PartialConvergenceError(const std::string& what, EigenPairs pairs)
      : Error(5, what), partial(std::move(pairs)) {}
  EigenPairs partial;
};

// Shift-invert Lanczos for the lowest n_eig eigenpairs of a symmetric sparse
// operator. Deterministic for a fixed seed: start vectors come from a counted
// PRNG stream and every accepted vector gets a fixed sign convention.
EigenPairs solve_lowest(const SparseHamiltonian& h, const LanczosOptions& opt);

// Dense reference path (SelfAdjointEigenSolver), dimension capped at 4000.
// Exists so the iterative path can be validated against an independent oracle.
EigenPairs dense_oracle_solve(const SparseHamiltonian& h, int n_eig);

}  // namespace rotorcage
