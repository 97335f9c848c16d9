#include "rotorcage/specfit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

namespace rotorcage {

void Spectrum::validate() const {
  if (wavenumbers.size() != absorbance.size())
    throw InputError("spectrum arrays differ in length");
  if (wavenumbers.size() < 2)
    throw InputError("spectrum needs at least two samples");
  for (size_t i = 0; i < wavenumbers.size(); ++i) {
    if (!std::isfinite(wavenumbers[i]) || !std::isfinite(absorbance[i]))
      throw InputError("spectrum contains non-finite values at row " +
                       std::to_string(i + 1));
    if (i > 0 && wavenumbers[i] <= wavenumbers[i - 1])
      throw InputError("wavenumbers must be strictly ascending (row " +
                       std::to_string(i + 1) + ")");
  }
}

namespace {

constexpr double kSqrt2Pi = 2.506628274631000502;

struct LmOutcome {
  bool converged = false;
  bool stalled = false;  // damping exhausted without an acceptable step
  int iterations = 0;
  double ssr = 0.0;
  double grad_inf = 0.0;
};

// Damped Gauss-Newton with Marquardt scaling. Steps are accepted only when
// feasible and not increasing the residual, so the accepted-SSR sequence is
// non-increasing by construction.
LmOutcome lm_minimize(
    Eigen::VectorXd& p,
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&,
                             Eigen::MatrixXd&)>& eval,
    const std::function<bool(const Eigen::VectorXd&)>& feasible,
    int max_iter) {
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  eval(p, r, jac);
  double ssr = r.squaredNorm();
  double lambda = 1e-3;
  LmOutcome out;
  out.ssr = ssr;

  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd g = jac.transpose() * r;
    out.grad_inf = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
    if (out.grad_inf < 1e-8) {
      out.converged = true;
      return out;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    bool accepted = false;
    bool tiny_gain = false;
    while (lambda <= 1e14) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index i = 0; i < a.rows(); ++i)
        a(i, i) += lambda * std::max(jtj(i, i), 1e-12);
      const Eigen::VectorXd step = a.ldlt().solve(-g);
      const Eigen::VectorXd cand = p + step;
      if (feasible(cand)) {
        Eigen::VectorXd rc;
        Eigen::MatrixXd jc;
        eval(cand, rc, jc);
        const double ssrc = rc.squaredNorm();
        if (ssrc <= ssr) {
          tiny_gain = (ssr - ssrc) < 1e-10 * std::max(ssr, 1e-300);
          p = cand;
          r.swap(rc);
          jac.swap(jc);
          ssr = ssrc;
          lambda = std::max(lambda / 3.0, 1e-12);
          accepted = true;
          break;
        }
      }
      lambda *= 2.0;
    }
    out.iterations = it + 1;
    out.ssr = ssr;
    if (!accepted) {
      out.stalled = true;
      const Eigen::VectorXd g2 = jac.transpose() * r;
      out.grad_inf = g2.size() ? g2.cwiseAbs().maxCoeff() : 0.0;
      return out;
    }
    if (tiny_gain) {
      out.converged = true;
      const Eigen::VectorXd g2 = jac.transpose() * r;
      out.grad_inf = g2.size() ? g2.cwiseAbs().maxCoeff() : 0.0;
      return out;
    }
  }
  const Eigen::VectorXd g = jac.transpose() * r;
  out.grad_inf = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
  return out;
}

// Standard normal deviates from a counted uniform stream (Box-Muller), so
// synthetic data is reproducible independent of library internals.
class NormalStream {
public:
  explicit NormalStream(std::uint64_t seed) : rng_(seed) {}
  double next() {
    if (have_) {
      have_ = false;
      return spare_;
    }
    const double u1 =
        std::max(static_cast<double>(rng_() >> 11) * 0x1.0p-53, 0x1.0p-53);
    const double u2 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    const double rad = std::sqrt(-2.0 * std::log(u1));
    spare_ = rad * std::sin(2.0 * kPi * u2);
    have_ = true;
    return rad * std::cos(2.0 * kPi * u2);
  }

private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool have_ = false;
};

}  // namespace

FitResult fit_gaussian_peaks(const Spectrum& spectrum,
                             const std::vector<GaussianPeak>& init,
                             double window_lo, double window_hi,
                             const Baseline& init_baseline) {
  spectrum.validate();
  if (init.empty()) throw ConfigError("at least one peak guess is required");
  if (!(window_lo < window_hi))
    throw ConfigError("fit window must have positive width");
  if (window_lo < spectrum.wavenumbers.front() - 1e-9 ||
      window_hi > spectrum.wavenumbers.back() + 1e-9)
    throw ConfigError("fit window extends beyond the spectrum's range");

  std::vector<double> x, y;
  for (size_t i = 0; i < spectrum.wavenumbers.size(); ++i)
    if (spectrum.wavenumbers[i] >= window_lo &&
        spectrum.wavenumbers[i] <= window_hi) {
      x.push_back(spectrum.wavenumbers[i]);
      y.push_back(spectrum.absorbance[i]);
    }
  const int n_peaks = static_cast<int>(init.size());
  const int n_par = 2 + 3 * n_peaks;
  if (static_cast<int>(x.size()) < n_par)
    throw InputError("fit window holds fewer samples than parameters");

  const double xc = 0.5 * (window_lo + window_hi);
  const double sigma_min = 1e-6 * (window_hi - window_lo);

  Eigen::VectorXd p(n_par);
  p[0] = init_baseline.offset;
  p[1] = init_baseline.slope;
  for (int k = 0; k < n_peaks; ++k) {
    if (!(init[k].sigma > 0.0))
      throw ConfigError("peak guess sigma must be positive");
    if (init[k].area < 0.0)
      throw ConfigError("peak guess area must be nonnegative");
    if (init[k].center < window_lo || init[k].center > window_hi)
      throw ConfigError("peak guess center lies outside the fit window");
    p[2 + 3 * k] = init[k].center;
    p[3 + 3 * k] = init[k].sigma;
    p[4 + 3 * k] = init[k].area;
  }

  auto eval = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r,
                  Eigen::MatrixXd& jac) {
    const int n = static_cast<int>(x.size());
    r.resize(n);
    jac.resize(n, n_par);
    for (int i = 0; i < n; ++i) {
      double model = q[0] + q[1] * (x[i] - xc);
      jac(i, 0) = 1.0;
      jac(i, 1) = x[i] - xc;
      for (int k = 0; k < n_peaks; ++k) {
        const double c = q[2 + 3 * k], s = q[3 + 3 * k], a = q[4 + 3 * k];
        const double z = (x[i] - c) / s;
        const double shape = std::exp(-0.5 * z * z) / (s * kSqrt2Pi);
        const double g = a * shape;
        model += g;
        jac(i, 2 + 3 * k) = g * z / s;
        jac(i, 3 + 3 * k) = g * (z * z - 1.0) / s;
        jac(i, 4 + 3 * k) = shape;
      }
      r[i] = model - y[i];
    }
  };

  bool window_violation = false;
  auto feasible = [&](const Eigen::VectorXd& q) {
    for (int k = 0; k < n_peaks; ++k) {
      const double c = q[2 + 3 * k], s = q[3 + 3 * k], a = q[4 + 3 * k];
      if (c < window_lo || c > window_hi) {
        window_violation = true;
        return false;
      }
      if (!(s >= sigma_min) || a < 0.0) return false;
    }
    window_violation = false;
    return true;
  };

  Eigen::VectorXd params = p;
  const LmOutcome lm = lm_minimize(params, eval, feasible, 200);
  if (lm.stalled && window_violation) {
    char buf[128];
    std::snprintf(buf, sizeof buf,
                  "a peak center escaped the fit window [%.6g, %.6g]",
                  window_lo, window_hi);
    throw NumericError(buf);
  }

  FitResult res;
  res.baseline.offset = params[0];
  res.baseline.slope = params[1];
  res.window_center = xc;
  for (int k = 0; k < n_peaks; ++k)
    res.peaks.push_back(
        {params[2 + 3 * k], params[3 + 3 * k], params[4 + 3 * k]});
  res.converged = lm.converged;
  res.iterations = lm.iterations;
  res.gradient_norm = lm.grad_inf;
  res.rms = std::sqrt(lm.ssr / static_cast<double>(x.size()));

  // covariance = s^2 (J^T J)^+, pseudo-inverted for near-singular fits
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  eval(params, r, jac);
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jtj);
  const double lam_max = es.eigenvalues().cwiseAbs().maxCoeff();
  Eigen::MatrixXd pinv = Eigen::MatrixXd::Zero(n_par, n_par);
  for (int i = 0; i < n_par; ++i) {
    const double lam = es.eigenvalues()[i];
    if (lam > 1e-12 * lam_max)
      pinv += es.eigenvectors().col(i) * es.eigenvectors().col(i).transpose() /
              lam;
  }
  const int dof = std::max(static_cast<int>(x.size()) - n_par, 1);
  res.covariance = pinv * (lm.ssr / dof);
  return res;
}

Spectrum simulate_spectrum(const std::vector<GaussianPeak>& peaks,
                           const Baseline& baseline, double wmin, double wmax,
                           double spacing, double noise_amplitude,
                           std::uint64_t seed) {
  if (!(spacing > 0.0)) throw ConfigError("spacing must be positive");
  if (!(wmin < wmax)) throw ConfigError("empty simulation range");
  for (const GaussianPeak& pk : peaks)
    if (!(pk.sigma > 0.0)) throw ConfigError("peak sigma must be positive");

  const double xc = 0.5 * (wmin + wmax);
  NormalStream noise(seed);
  Spectrum s;
  const int n = static_cast<int>(std::floor((wmax - wmin) / spacing)) + 1;
  s.wavenumbers.reserve(n);
  s.absorbance.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double nu = wmin + i * spacing;
    double val = baseline.offset + baseline.slope * (nu - xc);
    for (const GaussianPeak& pk : peaks) {
      const double z = (nu - pk.center) / pk.sigma;
      val += pk.area * std::exp(-0.5 * z * z) / (pk.sigma * kSqrt2Pi);
    }
    if (noise_amplitude != 0.0) val += noise_amplitude * noise.next();
    s.wavenumbers.push_back(nu);
    s.absorbance.push_back(val);
  }
  return s;
}

std::vector<GaussianPeak> pick_peaks(const Spectrum& spectrum,
                                     double sigma_guess) {
  spectrum.validate();
  if (!(sigma_guess > 0.0)) throw ConfigError("sigma guess must be positive");
  const std::vector<double>& y = spectrum.absorbance;
  const size_t n = y.size();

  // noise from second differences: var(y'' ) = 6 sigma^2 for white noise
  double acc = 0.0;
  for (size_t i = 1; i + 1 < n; ++i) {
    const double d2 = y[i + 1] - 2.0 * y[i] + y[i - 1];
    acc += d2 * d2;
  }
  const double noise =
      n > 2 ? std::sqrt(acc / (6.0 * static_cast<double>(n - 2))) : 0.0;
  const double floor_level = *std::min_element(y.begin(), y.end());

  std::vector<GaussianPeak> out;
  for (size_t i = 1; i + 1 < n; ++i) {
    if (y[i] > y[i - 1] && y[i] >= y[i + 1] &&
        y[i] - floor_level > 3.0 * noise) {
      GaussianPeak pk;
      pk.center = spectrum.wavenumbers[i];
      pk.sigma = sigma_guess;
      pk.area = (y[i] - floor_level) * sigma_guess * kSqrt2Pi;
      out.push_back(pk);
    }
  }
  return out;
}

KineticsFit fit_conversion_kinetics(
    const std::vector<std::pair<double, double>>& series) {
  if (series.size() < 4)
    throw InputError("kinetics fit needs at least 4 points");
  std::vector<std::pair<double, double>> pts = series;
  std::stable_sort(pts.begin(), pts.end());
  for (const auto& [t, a] : pts)
    if (!std::isfinite(t) || !std::isfinite(a))
      throw InputError("kinetics series contains non-finite values");

  double mean = 0.0, lo = pts[0].second, hi = pts[0].second;
  for (const auto& [t, a] : pts) {
    mean += a;
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  mean /= static_cast<double>(pts.size());

  KineticsFit fit;
  if (hi - lo <= 1e-9 * std::max(1.0, std::abs(mean))) {
    fit.rate_k = 0.0;
    fit.a0 = fit.a_inf = mean;
    fit.degenerate = true;
    double ss = 0.0;
    for (const auto& [t, a] : pts) ss += (a - mean) * (a - mean);
    fit.rms = std::sqrt(ss / static_cast<double>(pts.size()));
    return fit;
  }

  const double t_max = std::max(std::abs(pts.back().first), 1.0);
  Eigen::VectorXd p(3);  // k, a0, a_inf
  p[0] = 2.0 / t_max;
  p[1] = pts.front().second;
  p[2] = std::max(pts.back().second, 0.0);

  auto eval = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r,
                  Eigen::MatrixXd& jac) {
    const int n = static_cast<int>(pts.size());
    r.resize(n);
    jac.resize(n, 3);
    for (int i = 0; i < n; ++i) {
      const double t = pts[i].first;
      const double e = std::exp(-q[0] * t);
      r[i] = q[2] + (q[1] - q[2]) * e - pts[i].second;
      jac(i, 0) = -(q[1] - q[2]) * t * e;
      jac(i, 1) = e;
      jac(i, 2) = 1.0 - e;
    }
  };
  auto feasible = [](const Eigen::VectorXd& q) {
    return q[0] >= 0.0 && q[2] >= 0.0;
  };

  const LmOutcome lm = lm_minimize(p, eval, feasible, 200);
  fit.rate_k = p[0];
  fit.a0 = p[1];
  fit.a_inf = p[2];
  fit.rms = std::sqrt(lm.ssr / static_cast<double>(pts.size()));
  fit.converged = lm.converged;
  return fit;
}

}  // namespace rotorcage
