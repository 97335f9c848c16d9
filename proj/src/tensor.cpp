#include "rotorcage/tensor.hpp"

#include <cmath>

#include "rotorcage/common.hpp"

namespace rotorcage {

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  // Newton iteration on P_n; nodes are symmetric about 0.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
}

namespace {

// P_l^m(x) for m >= 0, Condon-Shortley phase included.
double assoc_legendre(int l, int m, double x) {
  double somx2 = std::sqrt(std::max(0.0, (1.0 - x) * (1.0 + x)));
  double pmm = 1.0;
  for (int i = 1; i <= m; ++i) pmm *= -(2.0 * i - 1.0) * somx2;
  if (l == m) return pmm;
  double pmmp1 = x * (2.0 * m + 1.0) * pmm;
  if (l == m + 1) return pmmp1;
  double pll = 0.0;
  for (int ll = m + 2; ll <= l; ++ll) {
    pll = (x * (2.0 * ll - 1.0) * pmmp1 - (ll + m - 1.0) * pmm) / (ll - m);
    pmm = pmmp1;
    pmmp1 = pll;
  }
  return pll;
}

double sph_norm(int l, int m) {
  // sqrt((2l+1)/(4pi) * (l-m)!/(l+m)!), m >= 0
  double logfac = 0.0;
  for (int i = l - m + 1; i <= l + m; ++i) logfac += std::log((double)i);
  return std::sqrt((2.0 * l + 1.0) / (4.0 * kPi) * std::exp(-logfac));
}

}  // namespace

std::complex<double> sph_harm(int l, int m, double theta, double phi) {
  int am = std::abs(m);
  double p = sph_norm(l, am) * assoc_legendre(l, am, std::cos(theta));
  std::complex<double> e(std::cos(am * phi), std::sin(am * phi));
  std::complex<double> y = p * e;
  if (m < 0) y = (am % 2 ? -1.0 : 1.0) * std::conj(y);
  return y;
}

std::complex<double> TensorDecomposition::reconstruct(double theta,
                                                      double phi) const {
  std::complex<double> v = 0.0;
  for (int k = 0; k <= k_max; ++k)
    for (int q = -k; q <= k; ++q) v += c(k, q) * sph_harm(k, q, theta, phi);
  return v;
}

namespace {

TensorDecomposition decompose_on_quadrature(const FourierFit& field,
                                            int k_max) {
  // Node counts sized so products Y_kq * (fit basis) integrate exactly for
  // smooth fields; the integrands are trigonometric polynomials of degree
  // <= k_max + order in theta and phi.
  int deg = k_max + field.order;
  int ntheta = std::min(256, std::max(64, 2 * deg + 8));
  int nphi = std::min(256, std::max(64, 2 * deg + 8));

  std::vector<double> gx, gw;
  gauss_legendre(ntheta, gx, gw);
  double dphi = 2.0 * kPi / nphi;

  TensorDecomposition d;
  d.k_max = k_max;
  d.coefficients.resize(k_max + 1);
  for (int k = 0; k <= k_max; ++k)
    d.coefficients[k].assign(2 * k + 1, {0.0, 0.0});

  // Cache field values on the quadrature grid.
  std::vector<double> vals(ntheta * nphi);
  std::vector<double> thetas(ntheta);
  for (int i = 0; i < ntheta; ++i) {
    thetas[i] = std::acos(gx[i]);
    for (int j = 0; j < nphi; ++j)
      vals[i * nphi + j] = field.eval(thetas[i], j * dphi);
  }

  for (int k = 0; k <= k_max; ++k) {
    for (int q = -k; q <= k; ++q) {
      std::complex<double> acc = 0.0;
      for (int i = 0; i < ntheta; ++i) {
        std::complex<double> inner = 0.0;
        for (int j = 0; j < nphi; ++j)
          inner += std::conj(sph_harm(k, q, thetas[i], j * dphi)) *
                   vals[i * nphi + j];
        acc += gw[i] * inner;
      }
      d.coefficients[k][q + k] = acc * dphi;
    }
  }

  d.rank_power.assign(k_max + 1, 0.0);
  for (int k = 0; k <= k_max; ++k)
    for (int q = -k; q <= k; ++q) d.rank_power[k] += std::norm(d.c(k, q));
  return d;
}

}  // namespace

TensorDecomposition decompose_spherical_tensors(const FourierFit& field,
                                                int k_max) {
  if (k_max < 2) throw ConfigError("tensor decomposition needs k_max >= 2");
  return decompose_on_quadrature(field, k_max);
}

TensorDecomposition decompose_spherical_tensors(const AngularSamples& field,
                                                int k_max) {
  if (k_max < 2) throw ConfigError("tensor decomposition needs k_max >= 2");
  // Degree-k_max harmonics need k_max+1 distinct theta rows and more than
  // 2*k_max phi columns to be distinguishable on the sample grid.
  if (static_cast<int>(field.thetas.size()) < k_max + 1 ||
      static_cast<int>(field.phis.size()) < 2 * k_max + 1)
    throw NumericError(
        "sample grid too coarse to resolve rank " + std::to_string(k_max) +
        " harmonics; need a finer angular grid (at least " +
        std::to_string(k_max + 1) + " theta x " + std::to_string(2 * k_max + 1) +
        " phi nodes)");
  FourierFit fit = fit_angular_fourier(field, k_max);
  return decompose_on_quadrature(fit, k_max);
}

ConversionChannels classify_channels(const TensorDecomposition& decomp,
                                     double epsilon) {
  if (decomp.k_max < 2)
    throw ConfigError("channel classification needs ranks 0..2");
  if (!(epsilon > 0.0)) throw ConfigError("channel threshold must be > 0");

  ConversionChannels ch;
  ch.threshold = epsilon;
  ch.rank_powers = {decomp.rank(0), decomp.rank(1), decomp.rank(2)};
  double total = ch.rank_powers[0] + ch.rank_powers[1] + ch.rank_powers[2];
  if (total <= 0.0) {
    ch.degenerate = true;  // null field: nothing to drive any channel
    return ch;
  }
  ch.delta_m0_open = ch.rank_powers[2] > epsilon * total;
  ch.delta_m1_open = ch.rank_powers[1] > epsilon * total;
  return ch;
}

Eigen::MatrixXcd potential_matrix_elements(const FourierFit& field,
                                           int j_max) {
  int dim = (j_max + 1) * (j_max + 1);
  int deg = 2 * j_max + field.order;
  int ntheta = std::min(256, std::max(64, 2 * deg + 8));
  int nphi = std::min(256, std::max(64, 2 * deg + 8));

  std::vector<double> gx, gw;
  gauss_legendre(ntheta, gx, gw);
  double dphi = 2.0 * kPi / nphi;

  // Tabulate Y_jm and field values once; the matrix element is a plain
  // quadrature sum <Y_jm| V |Y_j'm'>.
  std::vector<double> thetas(ntheta);
  for (int i = 0; i < ntheta; ++i) thetas[i] = std::acos(gx[i]);

  Eigen::MatrixXcd Y(dim, ntheta * nphi);
  std::vector<double> vals(ntheta * nphi);
  for (int i = 0; i < ntheta; ++i) {
    for (int jn = 0; jn < nphi; ++jn) {
      double ph = jn * dphi;
      vals[i * nphi + jn] = field.eval(thetas[i], ph);
      for (int j = 0; j <= j_max; ++j)
        for (int m = -j; m <= j; ++m)
          Y(j * j + j + m, i * nphi + jn) = sph_harm(j, m, thetas[i], ph);
    }
  }

  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
  for (int a = 0; a < dim; ++a) {
    for (int b = 0; b < dim; ++b) {
      std::complex<double> acc = 0.0;
      for (int i = 0; i < ntheta; ++i) {
        std::complex<double> inner = 0.0;
        for (int jn = 0; jn < nphi; ++jn) {
          int p = i * nphi + jn;
          inner += std::conj(Y(a, p)) * vals[p] * Y(b, p);
        }
        acc += gw[i] * inner;
      }
      out(a, b) = acc * dphi;
    }
  }
  return out;
}

}  // namespace rotorcage
