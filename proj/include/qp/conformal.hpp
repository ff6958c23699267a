#pragma once

#include <functional>

#include "qp/common.hpp"

namespace qp {

// radial description of a star-shaped Jordan contour about 0
using RadialCurve = std::function<double(double)>;

struct TheodorsenOptions {
  int j = 1000;          // quadrature nodes
  double tol = 1e-6;     // sup-norm stopping criterion on the sweep
  int max_sweeps = 400;
  double relax = 0.5;    // relaxation on the first sweeps
  int relax_sweeps = 5;
};

// Analytic completion u + i*conj(u) of real periodic boundary samples as a
// finite power series: the Schwarz integral of the trigonometric
// interpolant. Evaluation is uniformly accurate on the closed disc, which a
// plain trapezoid of the Poisson kernel is not near |z| = 1.
class SchwarzSeries {
 public:
  SchwarzSeries() = default;
  explicit SchwarzSeries(const std::vector<double>& samples);
  cplx eval(cplx z) const;   // value at |z| <= 1
  cplx deriv(cplx z) const;  // d/dz
  double mean() const { return coef_.empty() ? 0.0 : coef_[0].real(); }

 private:
  std::vector<cplx> coef_;  // c_0, 2c_1, ..., 2c_{J/2-1}, c_{J/2}
};

// Boundary correspondence of the conformal map gamma0 from the unit disc
// onto the interior of a star-shaped contour, gamma0(0) = 0, gamma0'(0) > 0.
class ConformalMap {
 public:
  ConformalMap(RadialCurve curve, const TheodorsenOptions& opt);

  cplx eval(cplx z) const;              // gamma0(z), |z| <= 1
  cplx deriv(cplx z) const;             // d gamma0 / dz, |z| < 1
  cplx boundary(double phi) const;      // gamma0(e^{i phi}) via correspondence
  cplx inverse(cplx x) const;           // gamma(x): Newton inversion
  double boundary_angle(double phi) const;   // psi~(phi)
  double boundary_radius(double phi) const;  // rho(psi~(phi))

  // eta solving gamma0(eta) = 1 on [0,1], and gamma'(1) = 1/gamma0'(eta)
  struct EtaData {
    double eta = 0;
    cplx dgamma_at_1 = 0;  // derivative of the inverse map at x = 1
  };
  EtaData eta_and_derivative() const;

  int nodes() const { return j_; }
  const std::vector<double>& psi() const { return psi_; }
  const std::vector<double>& phi_grid() const { return phi_; }
  double final_sweep_change() const { return final_change_; }
  int sweeps_used() const { return sweeps_; }

 private:
  cplx schwarz(cplx z) const;        // Schwarz integral of log rho(psi~)
  cplx schwarz_deriv(cplx z) const;  // its derivative
  RadialCurve curve_;
  int j_;
  std::vector<double> phi_, psi_, logrho_, rho_;
  std::vector<cplx> tnodes_;
  SchwarzSeries series_;
  double final_change_ = 0;
  int sweeps_ = 0;
};

// discrete conjugation on a uniform grid (Wittich rule: alternate-node
// trapezoid of the cotangent kernel, exact for low trigonometric degree)
std::vector<double> conjugate_function(const std::vector<double>& f);

// trigonometric interpolation of uniform periodic samples
double trig_interp(const std::vector<double>& values, double phi);

}  // namespace qp
