// Regenerates the bundled example potentials from their closed forms.
// The shipped CSVs in data/ are exactly this program's output.
//
//   radial:       v(r) = 1/2 * 8000 * r^2                 (cm^-1, r in A)
//   CO2-like:     v = 200 + 240*P2(cos t) - 240*sin^2(t)*cos(2p)
//   N2O-like:     CO2-like + 40*cos(t)   (odd-rank admixture)
//
// The angular surfaces are rank-2 dominant; the N2O-like variant adds a
// rank-1 component so both conversion channels open.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "rotorcage/common.hpp"

namespace {

using rotorcage::format_g10;
using rotorcage::kPi;

double angular_field(double theta, double phi, bool odd_component) {
  const double c = std::cos(theta), s = std::sin(theta);
  double v = 200.0 + 240.0 * 0.5 * (3.0 * c * c - 1.0) -
             240.0 * s * s * std::cos(2.0 * phi);
  if (odd_component) v += 40.0 * c;
  return v;
}

void write_radial(const std::string& path) {
  std::ofstream out(path);
  out << "r_angstrom,v_wavenumber\n";
  for (int i = 0; i <= 40; ++i) {
    const double r = -1.0 + 0.05 * i;
    out << format_g10(r) << ',' << format_g10(0.5 * 8000.0 * r * r) << '\n';
  }
}

void write_angular(const std::string& path, bool odd_component) {
  const int nt = 48, np = 48;
  std::ofstream out(path);
  out << "theta_rad,phi_rad,v_wavenumber\n";
  for (int j = 0; j < nt; ++j) {
    const double theta = (j + 0.5) * kPi / nt;
    for (int k = 0; k < np; ++k) {
      const double phi = 2.0 * kPi * k / np;
      out << format_g10(theta) << ',' << format_g10(phi) << ','
          << format_g10(angular_field(theta, phi, odd_component)) << '\n';
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::string dir = argc > 1 ? argv[1] : "data";
  write_radial(dir + "/co2_like_radial.csv");
  write_angular(dir + "/co2_like_angular.csv", false);
  write_angular(dir + "/n2o_like_angular.csv", true);
  std::printf("wrote co2_like_radial.csv, co2_like_angular.csv, "
              "n2o_like_angular.csv to %s/\n", dir.c_str());
  return 0;
}
