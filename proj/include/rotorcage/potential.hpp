#pragma once

#include <string>
#include <vector>

namespace rotorcage {

// Sampled 1D confinement scan: displacement r (Angstrom) from the cage
// center, energy v (cm^-1). r strictly increasing, at least 5 points.
struct RadialSamples {
  std::vector<double> r;
  std::vector<double> v;
};

// v0 + k/2 (r - r0)^2
struct HarmonicFit {
  double k = 0.0;   // force constant, cm^-1 A^-2
  double r0 = 0.0;  // equilibrium offset, A
  double v0 = 0.0;  // energy offset, cm^-1
  double rms = 0.0;

  double eval(double r) const {
    double d = r - r0;
    return v0 + 0.5 * k * d * d;
  }
};

// Rectangular orientation scan, row-major with theta as the outer index.
// theta strictly inside (0,pi); phi uniform over one 2*pi period.
struct AngularSamples {
  std::vector<double> thetas;
  std::vector<double> phis;
  std::vector<double> values;  // thetas.size() * phis.size()

  double at(size_t it, size_t ip) const { return values[it * phis.size() + ip]; }
};

enum class BasisTag { CosCos, CosSin, SinCos, SinSin };

struct FourierTerm {
  int l = 0;  // theta index
  int m = 0;  // phi index
  BasisTag tag = BasisTag::CosCos;
  double coeff = 0.0;
};

std::string term_name(const FourierTerm& t);

// Least-squares surface sum_i c_i * T_l(theta) * T_m(phi) with
// T in {cos, sin}; 2*pi-periodic in phi by construction.
struct FourierFit {
  std::vector<FourierTerm> terms;
  int order = 0;
  double rms = 0.0;

  double eval(double theta, double phi) const;

  // Mean over the unit sphere, (1/4pi) * integral of V dOmega, evaluated
  // analytically per basis term.
  double spherical_mean() const;
};

RadialSamples load_radial_samples(const std::string& path);
AngularSamples load_angular_samples(const std::string& path);

// Least squares in the monomial basis (1, r, r^2), converted to (k, r0, v0).
// Rejects non-confining data (best-fit k <= 0).
HarmonicFit fit_radial_harmonic(const RadialSamples& samples);

// All cos/sin products with theta index <= order and phi index <= order.
// A rank-deficient design matrix raises an error naming the dependent terms.
FourierFit fit_angular_fourier(const AngularSamples& samples, int order);

}  // namespace rotorcage
