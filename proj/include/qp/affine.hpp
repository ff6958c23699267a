#pragma once

#include <Eigen/Dense>

#include "qp/common.hpp"

namespace qp {

// Complex value that is affine in the vector of unknown corner
// probabilities: base + coef . u. The whole boundary-value pipeline is
// linear in the right-hand data, so propagating these through it turns the
// final closure into an ordinary real linear system.
struct AffineC {
  cplx base{0.0, 0.0};
  Eigen::VectorXcd coef;

  AffineC() = default;
  explicit AffineC(int m) : coef(Eigen::VectorXcd::Zero(m)) {}
  AffineC(cplx b, Eigen::VectorXcd c) : base(b), coef(std::move(c)) {}

  static AffineC constant(cplx v, int m) { return {v, Eigen::VectorXcd::Zero(m)}; }
  static AffineC unknown(int idx, int m) {
    AffineC a(m);
    a.coef(idx) = 1.0;
    return a;
  }

  int dim() const { return static_cast<int>(coef.size()); }
  cplx eval(const Eigen::VectorXd& u) const { return base + (coef.transpose() * u.cast<cplx>())(0); }

  AffineC& operator+=(const AffineC& o) {
    base += o.base;
    coef += o.coef;
    return *this;
  }
  AffineC& operator-=(const AffineC& o) {
    base -= o.base;
    coef -= o.coef;
    return *this;
  }
  AffineC& operator*=(cplx s) {
    base *= s;
    coef *= s;
    return *this;
  }
  friend AffineC operator+(AffineC a, const AffineC& b) { return a += b; }
  friend AffineC operator-(AffineC a, const AffineC& b) { return a -= b; }
  friend AffineC operator*(cplx s, AffineC a) { return a *= s; }
  friend AffineC operator*(AffineC a, cplx s) { return a *= s; }
  friend AffineC operator/(AffineC a, cplx s) { return a *= (1.0 / s); }

  AffineC conj_parts() const { return {std::conj(base), coef.conjugate()}; }
  // real and imaginary parts as real-coefficient rows (u is real)
  Eigen::VectorXd real_row() const { return coef.real(); }
  Eigen::VectorXd imag_row() const { return coef.imag(); }
};

}  // namespace qp
