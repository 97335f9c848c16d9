#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rotorcage/common.hpp"

namespace rotorcage {

struct Spectrum {
  std::vector<double> wavenumbers;  // strictly ascending, cm^-1
  std::vector<double> absorbance;
  // minutes since deposition; NaN when the spectrum is not part of a series
  double time_tag = std::numeric_limits<double>::quiet_NaN();

  void validate() const;
};

struct GaussianPeak {
  double center = 0.0;  // cm^-1
  double sigma = 1.0;   // cm^-1, > 0
  double area = 0.0;    // absorbance * cm^-1, >= 0
};

// FWHM factor reported next to sigma.
inline constexpr double kFwhmPerSigma = 2.3548;

// Baseline is offset + slope * (nu - window center); anchoring the slope at
// the window center keeps baseline parameters invariant under axis shifts.
struct Baseline {
  double offset = 0.0;
  double slope = 0.0;
};

struct FitResult {
  std::vector<GaussianPeak> peaks;
  Baseline baseline;
  double window_center = 0.0;
  double rms = 0.0;            // sqrt(SSR / n_points)
  Eigen::MatrixXd covariance;  // order: offset, slope, then (c, sigma, A) per peak
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;  // infinity norm of J^T r at the solution
};

// Damped least squares over baseline + Gaussian sum. Accepted steps never
// increase the residual; convergence is relative residual change < 1e-10 or
// gradient norm < 1e-8, capped at 200 iterations (converged = false then).
// A fit driven against the window edge raises a numeric error.
FitResult fit_gaussian_peaks(const Spectrum& spectrum,
                             const std::vector<GaussianPeak>& init,
                             double window_lo, double window_hi,
                             const Baseline& init_baseline = {});

// Synthetic spectrum on a uniform grid; noise is Gaussian with the given
// standard deviation, drawn from a counted deterministic stream.
Spectrum simulate_spectrum(const std::vector<GaussianPeak>& peaks,
                           const Baseline& baseline, double wmin, double wmax,
                           double spacing, double noise_amplitude,
                           std::uint64_t seed);

// Fallback initial guesses: local maxima more than 3x the estimated noise
// above the spectrum floor.
std::vector<GaussianPeak> pick_peaks(const Spectrum& spectrum,
                                     double sigma_guess = 2.0);

struct KineticsFit {
  double rate_k = 0.0;  // min^-1, >= 0
  double a0 = 0.0;
  double a_inf = 0.0;   // >= 0
  double rms = 0.0;
  bool degenerate = false;  // constant series; k pinned to 0
  bool converged = true;
};

// First-order decay to a plateau: A(t) = a_inf + (a0 - a_inf) exp(-k t).
KineticsFit fit_conversion_kinetics(
    const std::vector<std::pair<double, double>>& series);

}  // namespace rotorcage
