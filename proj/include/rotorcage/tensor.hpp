#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "rotorcage/potential.hpp"

namespace rotorcage {

// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

// Complex spherical harmonic Y_lm(theta, phi), Condon-Shortley phase.
std::complex<double> sph_harm(int l, int m, double theta, double phi);

// Crystal-field expansion V = sum_kq c_kq Y_kq with per-rank power
// R_k = sum_q |c_kq|^2. For real fields c_{k,-q} = (-1)^q conj(c_kq).
struct TensorDecomposition {
  int k_max = 0;
  std::vector<std::vector<std::complex<double>>> coefficients;  // [k][q+k]
  std::vector<double> rank_power;                               // [k]

  std::complex<double> c(int k, int q) const { return coefficients[k][q + k]; }
  double rank(int k) const { return rank_power[k]; }

  std::complex<double> reconstruct(double theta, double phi) const;
};

struct ConversionChannels {
  bool delta_m0_open = false;
  bool delta_m1_open = false;
  bool degenerate = false;  // null field: no rank power anywhere
  double threshold = 1e-3;
  std::vector<double> rank_powers;  // R_0, R_1, R_2
};

// Projects the fitted field onto Y_kq by Gauss-Legendre x uniform-phi
// quadrature, exact for band-limited fields at the chosen node counts.
TensorDecomposition decompose_spherical_tensors(const FourierFit& field,
                                                int k_max);

// Sample-grid variant: routes through an auxiliary Fourier fit of order k_max.
// Fails if the grid is too coarse to resolve degree-k_max harmonics.
TensorDecomposition decompose_spherical_tensors(const AngularSamples& field,
                                                int k_max);

// delta_m0 open iff R_2 exceeds eps * (R_0+R_1+R_2); delta_m1 likewise on R_1.
ConversionChannels classify_channels(const TensorDecomposition& decomp,
                                     double epsilon);

// Dense <Y_jm| V |Y_j'm'> for j, j' <= j_max; row/col index j^2 + (j + m).
Eigen::MatrixXcd potential_matrix_elements(const FourierFit& field, int j_max);

}  // namespace rotorcage
