#pragma once

#include <array>
#include <memory>

#include "qp/model.hpp"

namespace qp {

// roots of a complex-coefficient polynomial (ascending coefficients) via the
// companion matrix, Newton-polished; trailing ~zero leading coefficients drop
// the degree
std::vector<cplx> poly_roots(std::vector<cplx> coeffs, double drop_tol = 1e-13);

// The S_d kernel R(x,y) = xy - Psi(x,y) with its two quadratic views
//   R = ahat(x) y^2 + bhat(x) y + chat(x) = a(y) x^2 + b(y) x + c(y).
// Extended mode keeps Psi as the rational xy * E[x^xi1 y^xi2]; the quadratic
// views then do not apply and the analytic pipeline rejects the model.
struct KernelPoly {
  JumpDistribution sd;  // jump law of the homogeneous region
  bool extended = false;
  std::array<double, 3> ahat{}, bhat{}, chat{};  // coefficients in x, degree 2
  std::array<double, 3> a{}, b{}, c{};           // coefficients in y

  cplx psi(cplx x, cplx y) const;
  cplx R(cplx x, cplx y) const;
  cplx ahat_at(cplx x) const { return (ahat[2] * x + ahat[1]) * x + ahat[0]; }
  cplx bhat_at(cplx x) const { return (bhat[2] * x + bhat[1]) * x + bhat[0]; }
  cplx chat_at(cplx x) const { return (chat[2] * x + chat[1]) * x + chat[0]; }
  cplx a_at(cplx y) const { return (a[2] * y + a[1]) * y + a[0]; }
  cplx b_at(cplx y) const { return (b[2] * y + b[1]) * y + b[0]; }
  cplx c_at(cplx y) const { return (c[2] * y + c[1]) * y + c[0]; }
  // discriminants of the quadratic views
  cplx disc_y(cplx x) const { return bhat_at(x) * bhat_at(x) - 4.0 * ahat_at(x) * chat_at(x); }
  cplx disc_x(cplx y) const { return b_at(y) * b_at(y) - 4.0 * a_at(y) * c_at(y); }
};

KernelPoly kernel_coeffs(const ModelSpec& spec);

enum class OuterRootKind { both_positive, one_infinite, one_negative };

struct BranchPair {
  double r1 = 0, r2 = 0;        // the two branch points inside the unit disc
  double r3 = 0, r4 = 0;        // outer pair; r4 may be +-inf or negative
  OuterRootKind outer = OuterRootKind::both_positive;
};

struct BranchPoints {
  BranchPair x;  // roots of D_Y(x) = bhat^2 - 4*ahat*chat
  BranchPair y;  // roots of D_X(y) = b^2 - 4*a*c
};

BranchPoints branch_points(const KernelPoly& kp);

// smallest-modulus algebraic roots; `hint` breaks the conjugate tie on cuts
// by continuity with the previous sample
cplx root_X0(const KernelPoly& kp, cplx y);
cplx root_X0(const KernelPoly& kp, cplx y, cplx hint);
cplx root_Y0(const KernelPoly& kp, cplx x);
cplx root_Y0(const KernelPoly& kp, cplx x, cplx hint);

// Image contour of a cut under the conjugate root pair, described radially
// about 0. which = M: contour in the x-plane traced by X(y), y in [y1,y2];
// which = L: contour in the y-plane traced by Y(x), x in [x1,x2].
class CutContour {
 public:
  enum class Which { M, L };

  CutContour(const KernelPoly& kp, const BranchPoints& bp, Which which);

  double radius(double phi) const;         // radial distance at angle phi
  double cut_parameter(double phi) const;  // generating point on the cut
  cplx point(double phi) const { return std::polar(radius(phi), phi); }

  double extreme_right() const { return beta_right_; }  // closed-form
  double extreme_left() const { return beta_left_; }    // (negative)
  Which which() const { return which_; }
  double cut_lo() const { return lo_; }
  double cut_hi() const { return hi_; }

 private:
  struct Sample {
    double par, re, mod2, theta;
  };
  Sample eval(double par) const;
  const KernelPoly kp_;
  Which which_;
  double lo_, hi_;  // cut endpoints in the generating plane
  double beta_right_, beta_left_;
  std::vector<Sample> table_;  // theta decreasing from pi to 0
};

// Jordan/star-shape gate: builds both contours or throws solve_error.
struct ContourPair {
  std::shared_ptr<CutContour> M, L;
};
ContourPair build_contours(const KernelPoly& kp, const BranchPoints& bp);

struct PolarContour {
  std::vector<double> phi, rho;  // uniform angles on [0, 2*pi)
  double extreme_right = 0, extreme_left = 0;
  double extreme_residual = 0;  // sampled extremes vs closed forms
};

// uniform polar sampling, doubled adaptively until the sampled extreme
// points land on the closed forms
PolarContour sample_contour(const CutContour& c, int num_points);

// zero of R(g s, g s^{-1}) in the closed unit disc on the branch with
// g(1) = 1, plus the second zero (identically 0 when Psi(0,0) = 0)
struct SymmetricZeros {
  std::vector<double> phi;   // s = e^{i phi}
  std::vector<cplx> g;       // branch through g(1) = 1
  std::vector<cplx> other;   // companion zero in the disc
  bool fixed_point_used = true;
};

SymmetricZeros symmetric_zeros(const KernelPoly& kp, int num_points);
cplx symmetric_zero_at(const KernelPoly& kp, cplx s, cplx seed);

struct PointCloud {
  std::vector<cplx> s1, s2;  // x(phi) = g e^{i phi}, y(phi) = g e^{-i phi}
};

PointCloud contours_S1_S2(const KernelPoly& kp, int num_points);

}  // namespace qp
