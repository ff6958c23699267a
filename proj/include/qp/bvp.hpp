#pragma once

#include <functional>
#include <memory>

#include "qp/affine.hpp"
#include "qp/conformal.hpp"
#include "qp/kernel.hpp"
#include "qp/model.hpp"

namespace qp {

// real affine functional (rows of the eventual linear system)
struct AffineR {
  double base = 0;
  Eigen::VectorXd coef;
  AffineR() = default;
  explicit AffineR(int m) : coef(Eigen::VectorXd::Zero(m)) {}
  double eval(const Eigen::VectorXd& u) const { return base + coef.dot(u); }
};

// Boundary condition Re(i U(x) f(x)) = w(x) sampled on the image contour,
// with f = prod(x - xi_i) * g0 regular inside after the poles are folded.
struct RHProblem {
  int m = 0;                    // unknown dimension
  std::vector<double> phi;      // uniform grid on the unit circle
  std::vector<cplx> x;          // contour points gamma0(e^{i phi})
  std::vector<double> partner;  // generating cut parameter per node
  std::vector<cplx> U;
  std::vector<AffineR> w;
  std::vector<cplx> poles;
  std::vector<int> pole_mult;
  int chi = 0;  // -(1/pi) [arg U] along the contour
  std::shared_ptr<const ConformalMap> map;
  // chi = 0 only: required value of f at z = 0 (fixes the free constant)
  AffineC f_at_zero;
  bool has_f0 = false;
};

// assembled per-model by the assembly module; exposed here for tests
int compute_index(const std::vector<cplx>& U);

// Solution operator of the Riemann-Hilbert problem: the boundary
// coefficient phase is factored into an analytic exponential, which reduces
// the condition to Re(z^n Phi) = w/r with r > 0; Phi follows by matching
// Fourier coefficients. K (chi = 0 only) is fixed by the value at 0 being
// real; for chi < 0 the low-order coefficients of the data are the
// solvability conditions.
class RHSolution {
 public:
  RHSolution(const RHProblem& problem);

  int winding() const { return n_; }
  int chi() const { return -2 * n_; }

  // f(z) for |z| <= 1; affine in the unknowns
  AffineC f_at(cplx z) const;
  // g0 at a point of the z-disc (divides out the pole product)
  AffineC g0_at_z(cplx z) const;
  // g0 at x inside the contour (Newton inversion through the map)
  AffineC g0_at_x(cplx x) const;

  // the paper-facing solvability integrals, k = 0..-chi-1, affine
  const std::vector<AffineC>& conditions() const { return conditions_; }
  // strict Fourier solvability (low coefficients of w/r), affine
  const std::vector<AffineC>& fourier_conditions() const { return fourier_conditions_; }

  // residual of the boundary condition at off-grid angles after substitution
  double heldout_residual(const RHProblem& problem, const Eigen::VectorXd& u,
                          const std::vector<double>& angles, const std::vector<cplx>& U,
                          const std::vector<AffineR>& w) const;

 private:
  int m_ = 0, n_ = 0, jgrid_ = 0;
  std::vector<cplx> poles_;
  std::vector<int> pole_mult_;
  SchwarzSeries stheta_;
  std::vector<std::vector<cplx>> phi_coefs_;  // per column, shifted series
  std::vector<double> kconst_;                // chi = 0 free constant, per column
  std::vector<AffineC> conditions_, fourier_conditions_;
  std::shared_ptr<const ConformalMap> map_;
};

// Taylor coefficients around a point via the Cauchy integral, for affine
// analytic data (the closure equations read off low-order coefficients)
std::vector<AffineC> cauchy_taylor(const std::function<AffineC(cplx)>& f, cplx center,
                                   double radius, int orders, int nodes = 64);

}  // namespace qp
