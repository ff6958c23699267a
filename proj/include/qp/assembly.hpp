#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>

#include "qp/affine.hpp"
#include "qp/kernel.hpp"
#include "qp/model.hpp"

namespace qp {

// Unknown ordering: the full corner grid pi(n1,n2) flattened row-major,
// u[n1*(N2+1)+n2], dimension (N1+1)*(N2+1).
inline int unknown_index(const ModelSpec& spec, int n1, int n2) {
  return n1 * (spec.n2 + 1) + n2;
}
inline int unknown_count(const ModelSpec& spec) { return (spec.n1 + 1) * (spec.n2 + 1); }

// band polynomials of the saturated row/column systems
cplx band_f1(const ModelSpec& spec, int n2, cplx x);
cplx band_f2(const ModelSpec& spec, int n2, cplx x);
cplx band_f3(const ModelSpec& spec, int n2, cplx x);
cplx band_g1(const ModelSpec& spec, int n1, cplx y);  // tilde-f1
cplx band_g2(const ModelSpec& spec, int n1, cplx y);  // tilde-f2
cplx band_g3(const ModelSpec& spec, int n1, cplx y);  // tilde-f3
// extended-mode sub-band (diagnostics only)
cplx band_f4(const ModelSpec& spec, int n2, cplx x);
cplx band_g4(const ModelSpec& spec, int n1, cplx y);

// full matrices for identity checks; nearest-neighbour mode is lower
// triangular, extended mode adds the superdiagonal band
Eigen::MatrixXcd build_K_matrix(const ModelSpec& spec, cplx x);
Eigen::MatrixXcd build_M_matrix(const ModelSpec& spec, cplx y);

// Cramer components at a point: g_{n2}(x) = e[n2]*g0(x) + t[n2], n2 = 0..N2
// (e[0] = 1, t[0] = 0), solved by forward substitution on the band system.
struct CramerEval {
  std::vector<cplx> e;
  std::vector<AffineC> t;
};
CramerEval cramer_x(const ModelSpec& spec, cplx x);
CramerEval cramer_y(const ModelSpec& spec, cplx y);

// functional-equation coefficients at a zero pair or generic point
struct CoeffsABC {
  cplx A, B;
  AffineC C;
};
CoeffsABC functional_coeffs(const ModelSpec& spec, cplx x, cplx y, const CramerEval& cx,
                            const CramerEval& cy);

// values and derivatives at a point via a Cauchy circle (radius avoids the
// poles of e, t at the roots of the band polynomial f3)
struct CramerJet {
  std::vector<std::vector<cplx>> e;    // e[n2][order]
  std::vector<std::vector<AffineC>> t; // t[n2][order]
};
CramerJet cramer_x_jet(const ModelSpec& spec, cplx x0, int orders, double radius = 0.08,
                       int nodes = 64);
CramerJet cramer_y_jet(const ModelSpec& spec, cplx y0, int orders, double radius = 0.08,
                       int nodes = 64);

struct SolveOptions {
  int j = 1000;              // Theodorsen / boundary grid
  double theo_tol = 1e-6;    // Theodorsen sweep tolerance
  double ls_tol = 1e-8;      // linear-system consistency gate
  int cauchy_nodes = 64;     // closure-coefficient quadrature
  bool check_heldout = true;
  bool keep_boundary = false;  // retain boundary samples in the diagnostics
};

struct SolveDiagnostics {
  int chi_g = 0, chi_h = 0;
  double ls_residual = 0;          // worst equation defect at the solution
  double boundary_residual_g = 0;  // held-out Re(iUf) - w defect
  double boundary_residual_h = 0;
  double condition_residual = 0;   // solvability integrals at the solution
  double equilibrium_residual = 0;
  double normalization_defect = 0;
  double eta_m = 0, eta_l = 0;
  int poles_g = 0, poles_h = 0;
  double theodorsen_change_m = 0, theodorsen_change_l = 0;
  std::vector<cplx> pole_values_g, pole_values_h;
  std::vector<double> condition_residuals_g, condition_residuals_h;
  // boundary samples (angle, contour point, |U|, w at the solution), kept
  // when the caller asks for a boundary dump
  struct BoundarySample {
    double phi = 0;
    cplx x;
    double absU = 0, w = 0;
  };
  std::vector<BoundarySample> boundary_g, boundary_h;
};

// Full stationary description: corner probabilities plus the boundary
// generating functions reconstructed from the solved problem.
struct StationarySolution {
  std::shared_ptr<const ModelSpec> spec;
  Eigen::VectorXd pi;  // corner grid, unknown ordering
  SolveDiagnostics diag;

  std::function<cplx(cplx)> g0, h0;      // boundary generating functions
  std::function<cplx(int, cplx)> g_n2;   // g_{n2}(x), n2 = 0..N2
  std::function<cplx(int, cplx)> h_n1;   // h_{n1}(y), n1 = 0..N1
  // scalar prerequisites for metrics, all evaluated at the solve
  double g0_1 = 0, h0_1 = 0;             // g0(1), h0(1)
  double dg0_1 = 0, dh0_1 = 0;           // g0'(1), h0'(1)
  double d2g0_1 = 0, d2h0_1 = 0;

  double corner(int n1, int n2) const { return pi[n1 * (spec->n2 + 1) + n2]; }
};

StationarySolution corner_linear_system(const ModelSpec& spec, const SolveOptions& opt = {});

// g(x,y) = (A g0 + B h0 + C)/R with a limit step near kernel zeros
cplx evaluate_joint_pgf(const StationarySolution& sol, cplx x, cplx y);

// probabilities on [0,w1) x [0,w2) rebuilt from the analytic solution:
// corner values, series coefficients of the boundary functions, and a
// double Cauchy loop over the joint pgf for the homogeneous region
Eigen::MatrixXd reconstruct_window(const StationarySolution& sol, int w1, int w2);

}  // namespace qp
