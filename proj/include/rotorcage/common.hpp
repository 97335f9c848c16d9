#pragma once

#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace rotorcage {

inline constexpr const char* kToolName = "rotorcage";
inline constexpr const char* kToolVersion = "1.0.0";

// Unit system throughout: energies in cm^-1, lengths in Angstrom, masses in u.
// hbar^2/(2 * 1u * 1A^2) expressed in cm^-1; 7 significant figures.
inline constexpr double kKineticScale = 16.85763;

// hc/k_B in cm*K; 7 significant figures.
inline constexpr double kHcOverKb = 1.438777;

inline constexpr double kPi = 3.14159265358979323846;

// Error families carry the process exit code so the CLI maps failures to a
// stable status: 2 config, 3 input, 4 numerical, 5 partial convergence.
class Error : public std::runtime_error {
public:
  Error(int exit_code, const std::string& what)
      : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const { return exit_code_; }

private:
  int exit_code_;
};

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error(2, what) {}
};

class InputError : public Error {
public:
  explicit InputError(const std::string& what) : Error(3, what) {}
};

class NumericError : public Error {
public:
  explicit NumericError(const std::string& what) : Error(4, what) {}
};

// Fixed 10-significant-digit formatting used for every float that lands in a
// report or CSV. Emitted values are round-tripped through strtod before being
// stored in JSON so that byte-identical reruns are a well-defined promise.
inline std::string format_g10(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

inline double round_g10(double x) {
  return std::strtod(format_g10(x).c_str(), nullptr);
}

}  // namespace rotorcage
