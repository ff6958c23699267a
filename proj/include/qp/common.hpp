#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace qp {

using cplx = std::complex<double>;

constexpr double pi = 3.14159265358979323846264338327950288;

// Thrown when a model/config violates a structural precondition.
struct invalid_model : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a numerical stage cannot complete (non-convergence,
// unsupported geometry, degenerate kernel, inconsistent linear system).
struct solve_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double sqr(double v) { return v * v; }

// Continuous unwrap of a phase sequence: adds multiples of 2*pi so that
// consecutive differences stay in (-pi, pi].
inline std::vector<double> unwrap_phase(const std::vector<double>& raw) {
  std::vector<double> out(raw.size());
  if (raw.empty()) return out;
  out[0] = raw[0];
  double shift = 0.0;
  for (size_t k = 1; k < raw.size(); ++k) {
    double d = raw[k] - raw[k - 1];
    while (d > pi) {
      d -= 2 * pi;
      shift -= 2 * pi;
    }
    while (d <= -pi) {
      d += 2 * pi;
      shift += 2 * pi;
    }
    out[k] = raw[k] + shift;
  }
  return out;
}

}  // namespace qp
