#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "rotorcage/common.hpp"
#include "rotorcage/csv.hpp"
#include "rotorcage/potential.hpp"

using namespace rotorcage;
namespace fs = std::filesystem;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p);
  out << text;
  out.close();
  return p.string();
}

bool contains(const std::exception& e, const std::string& needle) {
  return std::string(e.what()).find(needle) != std::string::npos;
}

// Independent quadratic least squares: normal equations solved by Cramer's
// rule in long double. Returns (a0, a1, a2) for v ~ a0 + a1 r + a2 r^2.
void quadratic_oracle(const std::vector<double>& r,
                      const std::vector<double>& v, long double out[3]) {
  long double s[5] = {0, 0, 0, 0, 0};
  long double t[3] = {0, 0, 0};
  for (size_t i = 0; i < r.size(); ++i) {
    long double p = 1.0L;
    for (int k = 0; k < 5; ++k) {
      s[k] += p;
      if (k < 3) t[k] += p * (long double)v[i];
      p *= r[i];
    }
  }
  auto det3 = [](long double m[3][3]) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  };
  long double A[3][3] = {{s[0], s[1], s[2]},
                         {s[1], s[2], s[3]},
                         {s[2], s[3], s[4]}};
  long double d = det3(A);
  for (int c = 0; c < 3; ++c) {
    long double M[3][3];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) M[i][j] = (j == c) ? t[i] : A[i][j];
    out[c] = det3(M) / d;
  }
}

AngularSamples make_surface(int nt, int np,
                            double (*f)(double theta, double phi)) {
  AngularSamples s;
  for (int i = 0; i < nt; ++i) s.thetas.push_back((i + 0.5) * kPi / nt);
  for (int k = 0; k < np; ++k) s.phis.push_back(2.0 * kPi * k / np);
  for (double th : s.thetas)
    for (double ph : s.phis) s.values.push_back(f(th, ph));
  return s;
}

double cage_surface(double th, double ph) {
  const double c = std::cos(th), s = std::sin(th);
  return 200.0 + 240.0 * 0.5 * (3.0 * c * c - 1.0) -
         240.0 * s * s * std::cos(2.0 * ph);
}

double tilted_surface(double th, double ph) {
  return cage_surface(th, ph) + 40.0 * std::cos(th);
}

}  // namespace

TEST_CASE("radial harmonic fit recovers exact generating parameters") {
  RadialSamples s;
  const double k = 8000.0, r0 = 0.03, v0 = 12.5;
  for (int i = 0; i <= 40; ++i) {
    double r = -1.0 + 0.05 * i;
    s.r.push_back(r);
    s.v.push_back(v0 + 0.5 * k * (r - r0) * (r - r0));
  }
  const HarmonicFit fit = fit_radial_harmonic(s);
  CHECK(fit.k == doctest::Approx(k).epsilon(1e-10));
  CHECK(fit.r0 == doctest::Approx(r0).epsilon(1e-8));
  CHECK(fit.v0 == doctest::Approx(v0).epsilon(1e-8));
  CHECK(fit.rms < 1e-8 * v0);
  CHECK(fit.eval(0.25) ==
        doctest::Approx(v0 + 0.5 * k * (0.25 - r0) * (0.25 - r0)));
}

TEST_CASE("radial fit agrees with a Cramer-rule oracle on rough data") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> noise(-15.0, 15.0);
  RadialSamples s;
  for (int i = 0; i <= 30; ++i) {
    double r = -0.9 + 0.06 * i;
    s.r.push_back(r);
    s.v.push_back(30.0 + 0.5 * 5200.0 * (r - 0.05) * (r - 0.05) + noise(rng));
  }
  long double a[3];
  quadratic_oracle(s.r, s.v, a);
  const HarmonicFit fit = fit_radial_harmonic(s);
  CHECK(fit.k == doctest::Approx((double)(2.0L * a[2])).epsilon(1e-9));
  CHECK(fit.r0 ==
        doctest::Approx((double)(-a[1] / (2.0L * a[2]))).epsilon(1e-9));
  CHECK(fit.v0 ==
        doctest::Approx((double)(a[0] - a[1] * a[1] / (4.0L * a[2])))
            .epsilon(1e-9));

  // rms must match the oracle's residual norm, not just be "small"
  long double ss = 0.0L;
  for (size_t i = 0; i < s.r.size(); ++i) {
    long double res =
        a[0] + a[1] * s.r[i] + a[2] * s.r[i] * s.r[i] - s.v[i];
    ss += res * res;
  }
  CHECK(fit.rms ==
        doctest::Approx((double)std::sqrt((double)(ss / s.r.size())))
            .epsilon(1e-8));
}

TEST_CASE("non-confining radial data are rejected") {
  RadialSamples flat, inverted;
  for (int i = 0; i <= 10; ++i) {
    double r = -0.5 + 0.1 * i;
    flat.r.push_back(r);
    flat.v.push_back(100.0 + 3.0 * r);
    inverted.r.push_back(r);
    inverted.v.push_back(100.0 - 50.0 * r * r);
  }
  CHECK_THROWS_AS(fit_radial_harmonic(inverted), NumericError);
  CHECK_THROWS_AS(fit_radial_harmonic(flat), NumericError);
  try {
    fit_radial_harmonic(inverted);
  } catch (const NumericError& e) {
    CHECK(contains(e, "not confining"));
  }
}

TEST_CASE("radial fit requires at least five samples") {
  RadialSamples s;
  s.r = {0.0, 0.1, 0.2, 0.3};
  s.v = {0.0, 1.0, 4.0, 9.0};
  CHECK_THROWS_AS(fit_radial_harmonic(s), InputError);
}

TEST_CASE("radial loader validates header, shape, and ordering") {
  SUBCASE("round trip") {
    const std::string p = write_temp(
        "rc_rad_ok.csv",
        "r_angstrom,v_wavenumber\n-0.2,40\n-0.1,10\n0,0\n0.1,10\n0.2,40\n");
    const RadialSamples s = load_radial_samples(p);
    REQUIRE(s.r.size() == 5);
    CHECK(s.r[0] == doctest::Approx(-0.2));
    CHECK(s.v[4] == doctest::Approx(40.0));
  }
  SUBCASE("wrong header") {
    const std::string p = write_temp("rc_rad_hdr.csv",
                                     "radius,energy\n0,0\n1,1\n2,4\n3,9\n4,16\n");
    CHECK_THROWS_AS(load_radial_samples(p), InputError);
  }
  SUBCASE("ragged row reports its 1-based line") {
    const std::string p = write_temp(
        "rc_rad_rag.csv",
        "r_angstrom,v_wavenumber\n0,0\n0.1,1,99\n0.2,4\n0.3,9\n0.4,16\n");
    try {
      load_radial_samples(p);
      FAIL("expected InputError");
    } catch (const InputError& e) {
      CHECK(contains(e, "3"));
    }
  }
  SUBCASE("non-numeric cell reports its line") {
    const std::string p = write_temp(
        "rc_rad_nan.csv",
        "r_angstrom,v_wavenumber\n0,0\n0.1,abc\n0.2,4\n0.3,9\n0.4,16\n");
    try {
      load_radial_samples(p);
      FAIL("expected InputError");
    } catch (const InputError& e) {
      CHECK(contains(e, "3"));
    }
  }
  SUBCASE("non-increasing r") {
    const std::string p = write_temp(
        "rc_rad_ord.csv",
        "r_angstrom,v_wavenumber\n0,0\n0.2,4\n0.1,1\n0.3,9\n0.4,16\n");
    CHECK_THROWS_AS(load_radial_samples(p), InputError);
  }
  SUBCASE("too few rows") {
    const std::string p =
        write_temp("rc_rad_few.csv", "r_angstrom,v_wavenumber\n0,0\n0.1,1\n");
    CHECK_THROWS_AS(load_radial_samples(p), InputError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_radial_samples("/nonexistent/rc_rad.csv"),
                    InputError);
  }
}

TEST_CASE("angular fit reproduces a band-limited surface exactly") {
  const AngularSamples s = make_surface(24, 24, tilted_surface);
  const FourierFit fit = fit_angular_fourier(s, 4);
  CHECK(fit.rms < 1e-8);

  // off-grid probes: the generating surface is order <= 2, so the order-4
  // basis must reproduce it, not merely interpolate the samples
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uth(0.01, kPi - 0.01);
  std::uniform_real_distribution<double> uph(0.0, 2.0 * kPi);
  for (int i = 0; i < 200; ++i) {
    const double th = uth(rng), ph = uph(rng);
    CHECK(fit.eval(th, ph) ==
          doctest::Approx(tilted_surface(th, ph)).epsilon(1e-8));
  }
}

TEST_CASE("recovered fourier coefficients match the generating form") {
  // 200 + 240 P2(cos t) - 240 sin^2 t cos 2p
  //   = 260 + 180 cos 2t - 120 cos 2p + 120 cos 2t cos 2p
  const AngularSamples s = make_surface(24, 24, cage_surface);
  const FourierFit fit = fit_angular_fourier(s, 4);
  double c00 = 0, c20 = 0, c02 = 0, c22 = 0, rest = 0;
  for (const FourierTerm& t : fit.terms) {
    if (t.tag != BasisTag::CosCos) {
      rest += std::abs(t.coeff);
      continue;
    }
    if (t.l == 0 && t.m == 0)
      c00 = t.coeff;
    else if (t.l == 2 && t.m == 0)
      c20 = t.coeff;
    else if (t.l == 0 && t.m == 2)
      c02 = t.coeff;
    else if (t.l == 2 && t.m == 2)
      c22 = t.coeff;
    else
      rest += std::abs(t.coeff);
  }
  CHECK(c00 == doctest::Approx(260.0).epsilon(1e-8));
  CHECK(c20 == doctest::Approx(180.0).epsilon(1e-8));
  CHECK(c02 == doctest::Approx(-120.0).epsilon(1e-8));
  CHECK(c22 == doctest::Approx(120.0).epsilon(1e-8));
  CHECK(rest < 1e-6);
}

TEST_CASE("spherical mean matches midpoint quadrature") {
  const AngularSamples s = make_surface(24, 24, tilted_surface);
  const FourierFit fit = fit_angular_fourier(s, 4);

  // the analytic mean of the generating surface is the constant term alone:
  // P2, the cos 2phi part, and cos theta all average to zero on the sphere
  CHECK(fit.spherical_mean() == doctest::Approx(200.0).epsilon(1e-9));

  // quadrature oracle on the fitted object itself: composite Simpson in
  // theta (the integrand is not periodic there) and a uniform phi sum,
  // which is exact for band-limited fields
  const int NT = 2000, NP = 64;
  double acc = 0.0;
  for (int i = 0; i <= NT; ++i) {
    const double th = i * kPi / NT;
    const double sw = (i == 0 || i == NT) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    double ring = 0.0;
    for (int k = 0; k < NP; ++k) ring += fit.eval(th, 2.0 * kPi * k / NP);
    acc += sw * ring * std::sin(th);
  }
  acc *= (kPi / NT / 3.0) * (2.0 * kPi / NP) / (4.0 * kPi);
  CHECK(fit.spherical_mean() == doctest::Approx(acc).epsilon(1e-9));
}

TEST_CASE("spherical mean handles the odd sin(theta) basis term") {
  FourierFit f;
  f.order = 1;
  f.terms = {{1, 0, BasisTag::SinCos, 8.0}, {0, 0, BasisTag::CosCos, 3.0}};
  // mean of sin(theta) over the sphere is pi/4
  CHECK(f.spherical_mean() == doctest::Approx(3.0 + 8.0 * kPi / 4.0));
}

TEST_CASE("rank-deficient angular designs are rejected with term names") {
  // two theta rows cannot carry five independent cos(l theta) columns
  AngularSamples s;
  s.thetas = {1.0, 2.0};
  for (int k = 0; k < 48; ++k) s.phis.push_back(2.0 * kPi * k / 48);
  for (size_t i = 0; i < 2 * 48; ++i) s.values.push_back(1.0);
  try {
    fit_angular_fourier(s, 4);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(contains(e, "ill-posed"));
    CHECK(contains(e, "theta"));
  }
}

TEST_CASE("underdetermined angular fit is rejected up front") {
  AngularSamples s;
  s.thetas = {0.5, 1.0, 1.5};
  s.phis = {0.0, kPi};
  for (size_t i = 0; i < 6; ++i) s.values.push_back(1.0);
  CHECK_THROWS_AS(fit_angular_fourier(s, 4), NumericError);
}

TEST_CASE("angular loader validates the grid layout") {
  auto grid_csv = [](bool truncate, bool bad_theta, bool stretch_phi) {
    std::string text = "theta_rad,phi_rad,v_wavenumber\n";
    for (int i = 0; i < 4; ++i) {
      double th = bad_theta ? (i * kPi / 3.0) : ((i + 0.5) * kPi / 4.0);
      for (int k = 0; k < 4; ++k) {
        if (truncate && i == 3 && k == 3) break;
        double ph = 2.0 * kPi * k / 4.0;
        if (stretch_phi && k == 2) ph += 0.1;
        text += format_g10(th) + "," + format_g10(ph) + ",1.0\n";
      }
    }
    return text;
  };
  SUBCASE("well-formed grid loads") {
    const std::string p =
        write_temp("rc_ang_ok.csv", grid_csv(false, false, false));
    const AngularSamples s = load_angular_samples(p);
    CHECK(s.thetas.size() == 4);
    CHECK(s.phis.size() == 4);
    CHECK(s.values.size() == 16);
    CHECK(s.at(2, 3) == doctest::Approx(1.0));
  }
  SUBCASE("truncated block") {
    const std::string p =
        write_temp("rc_ang_trunc.csv", grid_csv(true, false, false));
    try {
      load_angular_samples(p);
      FAIL("expected InputError");
    } catch (const InputError& e) {
      CHECK(contains(e, "rectangular"));
    }
  }
  SUBCASE("theta on the pole") {
    const std::string p =
        write_temp("rc_ang_pole.csv", grid_csv(false, true, false));
    CHECK_THROWS_AS(load_angular_samples(p), InputError);
  }
  SUBCASE("non-uniform phi") {
    const std::string p =
        write_temp("rc_ang_phi.csv", grid_csv(false, false, true));
    CHECK_THROWS_AS(load_angular_samples(p), InputError);
  }
  SUBCASE("phi not covering a full period") {
    std::string text = "theta_rad,phi_rad,v_wavenumber\n";
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k < 4; ++k)
        text += format_g10((i + 0.5) * kPi / 4.0) + "," +
                format_g10(kPi * k / 4.0) + ",1.0\n";
    const std::string p = write_temp("rc_ang_halfperiod.csv", text);
    CHECK_THROWS_AS(load_angular_samples(p), InputError);
  }
}

TEST_CASE("csv writer and reader round-trip at 10 significant digits") {
  const fs::path p = fs::temp_directory_path() / "rc_csv_round.csv";
  write_csv(p.string(), {"a", "b"},
            {{1.0 / 3.0, 2.0e-7}, {123456.789012345, -0.125}});
  const CsvTable t = read_csv(p.string(), {"a", "b"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  CHECK(t.rows[1][0] == doctest::Approx(123456.789).epsilon(1e-9));
  CHECK(t.rows[1][1] == -0.125);
}
