#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qp/bvp.hpp"
#include "qp/rng.hpp"

using namespace qp;

namespace {

cplx poly_eval(const std::vector<double>& c, cplx z) {
  cplx v = 0;
  for (int k = static_cast<int>(c.size()) - 1; k >= 0; --k) v = v * z + c[k];
  return v;
}

// manufactured boundary problem: given U with known winding and regular
// target functions F (base) and G (unit-unknown column), the sampled
// w = Re(iU(F + u G)) must reproduce F and G through the solver
RHProblem manufactured(int j, int winding, const std::vector<double>& fpoly,
                       const std::vector<double>& gpoly) {
  RHProblem p;
  p.m = 1;
  p.phi.resize(j);
  p.U.resize(j);
  p.w.assign(j, AffineR(1));
  p.x.assign(j, 0.0);
  p.partner.assign(j, 0.0);
  for (int k = 0; k < j; ++k) {
    p.phi[k] = 2 * pi * k / j;
    cplx t = std::polar(1.0, p.phi[k]);
    cplx u = 2.0 + 0.25 * (t + 1.0 / t) + 0.05 * (t - 1.0 / t);  // conjugate symmetric
    for (int q = 0; q < winding; ++q) u *= t;
    p.U[k] = u;
    p.w[k].base = (cplx(0, 1) * u * poly_eval(fpoly, t)).real();
    p.w[k].coef(0) = (cplx(0, 1) * u * poly_eval(gpoly, t)).real();
  }
  p.chi = -2 * winding;
  return p;
}

}  // namespace

TEST_CASE("compute_index: constants, windings, synthetic multiplication") {
  const int j = 128;
  std::vector<cplx> c(j, cplx(2, 1));
  CHECK(compute_index(c) == 0);
  std::vector<cplx> t(j), tx(j);
  for (int k = 0; k < j; ++k) {
    t[k] = std::polar(1.0, 2 * pi * k / j) * (2.0 + 0.3 * std::cos(2 * pi * k / j));
    tx[k] = t[k] * std::polar(1.0, 2 * pi * k / j);
  }
  int chi = compute_index(t);
  CHECK(chi == -2);
  CHECK(compute_index(tx) == chi - 2);  // one more loop of arg costs 2
}

TEST_CASE("compute_index rejects coarse sampling") {
  std::vector<cplx> fast(8);
  for (int k = 0; k < 8; ++k) fast[k] = std::polar(1.0, 3 * 2 * pi * k / 8.0);
  CHECK_THROWS_AS(compute_index(fast), solve_error);
}

TEST_CASE("manufactured RH problem with chi = -2 is reproduced") {
  std::vector<double> F{0.3, 0.2, -0.1, 0.05}, G{-0.1, 0.15, 0.2};
  RHProblem p = manufactured(256, 1, F, G);
  CHECK(compute_index(p.U) == -2);
  RHSolution sol(p);
  CHECK(sol.winding() == 1);
  CHECK(sol.chi() == -2);

  Philox rng(31u);
  for (int k = 0; k < 60; ++k) {
    cplx z = std::polar(rng.next_double(), 2 * pi * rng.next_double());
    AffineC f = sol.f_at(z);
    CHECK(std::abs(f.base - poly_eval(F, z)) < 1e-10);
    CHECK(std::abs(f.coef(0) - poly_eval(G, z)) < 1e-10);
  }

  // data produced by an actual regular solution: conditions all vanish
  for (const AffineC& cond : sol.fourier_conditions()) {
    CHECK(std::abs(cond.base) < 1e-12);
    CHECK(std::abs(cond.coef(0)) < 1e-12);
  }
  REQUIRE(sol.conditions().size() == 2);
  Eigen::VectorXd u(1);
  u << 0.7;
  for (const AffineC& cond : sol.conditions()) CHECK(std::abs(cond.eval(u)) < 1e-10);

  // boundary condition at held-out angles
  std::vector<double> angles;
  std::vector<cplx> U2;
  std::vector<AffineR> w2;
  for (int k = 0; k < 31; ++k) {
    double phi = 2 * pi * (k + 0.5) / 31;
    cplx t = std::polar(1.0, phi);
    cplx uu = 2.0 + 0.25 * (t + 1.0 / t) + 0.05 * (t - 1.0 / t);
    uu *= t;
    AffineR w(1);
    w.base = (cplx(0, 1) * uu * poly_eval(F, t)).real();
    w.coef(0) = (cplx(0, 1) * uu * poly_eval(G, t)).real();
    angles.push_back(phi);
    U2.push_back(uu);
    w2.push_back(w);
  }
  CHECK(sol.heldout_residual(p, u, angles, U2, w2) < 1e-9);
}

TEST_CASE("homogeneous data with negative index gives the zero solution") {
  std::vector<double> Z{0.0};
  RHProblem p = manufactured(128, 1, Z, Z);
  RHSolution sol(p);
  Philox rng(37u);
  for (int k = 0; k < 20; ++k) {
    cplx z = std::polar(0.9 * rng.next_double(), 2 * pi * rng.next_double());
    CHECK(std::abs(sol.f_at(z).base) < 1e-14);
    CHECK(std::abs(sol.f_at(z).coef(0)) < 1e-14);
  }
}

TEST_CASE("chi = 0: the free constant comes from the value at the origin") {
  std::vector<double> F{0.4, -0.2, 0.1}, G{0.2, 0.3};
  RHProblem p = manufactured(256, 0, F, G);
  CHECK(compute_index(p.U) == 0);
  p.has_f0 = true;
  p.f_at_zero = AffineC(1);
  p.f_at_zero.base = F[0];
  p.f_at_zero.coef(0) = G[0];
  RHSolution sol(p);
  Philox rng(41u);
  for (int k = 0; k < 40; ++k) {
    cplx z = std::polar(rng.next_double(), 2 * pi * rng.next_double());
    CHECK(std::abs(sol.f_at(z).base - poly_eval(F, z)) < 1e-10);
    CHECK(std::abs(sol.f_at(z).coef(0) - poly_eval(G, z)) < 1e-10);
  }
}

TEST_CASE("linearity of the solution operator in the unknowns") {
  std::vector<double> F{0.3, 0.1}, G{0.05, -0.2, 0.1};
  RHProblem p = manufactured(128, 1, F, G);
  RHSolution sol(p);
  Philox rng(43u);
  for (int k = 0; k < 20; ++k) {
    cplx z = std::polar(0.8 * rng.next_double(), 2 * pi * rng.next_double());
    Eigen::VectorXd u1(1), u2(1);
    u1 << rng.next_double();
    u2 << rng.next_double();
    cplx a = sol.f_at(z).eval(u1), b = sol.f_at(z).eval(u2);
    Eigen::VectorXd usum = u1 + u2;
    cplx c = sol.f_at(z).eval(usum);
    CHECK(std::abs(c + sol.f_at(z).base - (a + b)) < 1e-12);
  }
}

TEST_CASE("index stability under grid refinement") {
  std::vector<double> F{0.3, 0.2}, G{0.1};
  RHProblem p1 = manufactured(128, 1, F, G);
  RHProblem p2 = manufactured(256, 1, F, G);
  CHECK(compute_index(p1.U) == compute_index(p2.U));
}

TEST_CASE("cauchy_taylor is exact on polynomials") {
  auto f = [](cplx x) {
    AffineC a(1);
    a.base = 0.3 + x * (0.2 + x * (-0.1 + 0.4 * x));
    a.coef(0) = 1.0 + x * x;
    return a;
  };
  auto jets = cauchy_taylor(f, cplx(0, 0), 0.3, 5, 64);
  std::vector<double> base{0.3, 0.2, -0.1, 0.4, 0.0};
  std::vector<double> unit{1.0, 0.0, 1.0, 0.0, 0.0};
  for (int k = 0; k < 5; ++k) {
    CHECK(std::abs(jets[k].base - base[k]) < 1e-10);
    CHECK(std::abs(jets[k].coef(0) - unit[k]) < 1e-10);
  }
  // radius independence (analyticity)
  auto jets2 = cauchy_taylor(f, cplx(0, 0), 0.15, 5, 64);
  for (int k = 0; k < 5; ++k) CHECK(std::abs(jets[k].base - jets2[k].base) < 1e-8);
}
