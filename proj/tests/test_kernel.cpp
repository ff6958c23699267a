#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qp/kernel.hpp"
#include "qp/model.hpp"
#include "qp/rng.hpp"
#include "qp/stability.hpp"

using namespace qp;

namespace {

// random nearest-neighbour homogeneous cell with negative drifts
ModelSpec random_ergodic_model(Philox& rng) {
  for (;;) {
    double w[3][3];
    double total = 0;
    for (auto& row : w)
      for (double& v : row) v = rng.next_double();
    w[0][0] = 0.0;  // no south-west jump
    for (auto& row : w)
      for (double v : row) total += v;
    ModelSpec spec = make_model(1, 1, SupportMode::nearest);
    JumpDistribution d;
    for (int i = -1; i <= 1; ++i)
      for (int j = -1; j <= 1; ++j) d.set(i, j, w[i + 1][j + 1] / total);
    double ex = 0, ey = 0;
    for (int i = -1; i <= 1; ++i)
      for (int j = -1; j <= 1; ++j) {
        ex += i * d.at(i, j);
        ey += j * d.at(i, j);
      }
    if (ex >= -0.02 || ey >= -0.02) continue;
    for (int c1 = 0; c1 <= 1; ++c1)
      for (int c2 = 0; c2 <= 1; ++c2) {
        JumpDistribution cell = d;
        if (c1 == 0) {
          for (int j = -1; j <= 1; ++j) {
            cell.add(0, j, cell.at(-1, j));
            cell.set(-1, j, 0);
          }
        }
        if (c2 == 0) {
          for (int i = -1; i <= 1; ++i) {
            cell.add(i, 0, cell.at(i, -1));
            cell.set(i, -1, 0);
          }
        }
        spec.cell(c1, c2) = cell;
      }
    return spec;
  }
}

}  // namespace

TEST_CASE("poly_roots on a factored cubic") {
  // (z-1)(z-2i)(z+3)
  std::vector<cplx> c{cplx(0, 6), cplx(-3, -4), cplx(2, -2), cplx(1, 0)};
  auto roots = poly_roots(c);
  REQUIRE(roots.size() == 3);
  for (cplx z : {cplx(1, 0), cplx(0, 2), cplx(-3, 0)}) {
    double best = 1e300;
    for (cplx r : roots) best = std::min(best, std::abs(r - z));
    CHECK(best < 1e-12);
  }
}

TEST_CASE("kernel vanishes at (1,1) and matches both quadratic views") {
  Philox rng(2u);
  for (int trial = 0; trial < 10; ++trial) {
    ModelSpec spec = random_ergodic_model(rng);
    KernelPoly kp = kernel_coeffs(spec);
    CHECK(std::abs(kp.R(1.0, 1.0)) < 1e-12);
    for (int k = 0; k < 50; ++k) {
      cplx x(2 * rng.next_double() - 1, 2 * rng.next_double() - 1);
      cplx y(2 * rng.next_double() - 1, 2 * rng.next_double() - 1);
      cplx direct = kp.R(x, y);
      cplx viewy = (kp.ahat_at(x) * y + kp.bhat_at(x)) * y + kp.chat_at(x);
      cplx viewx = (kp.a_at(y) * x + kp.b_at(y)) * x + kp.c_at(y);
      CHECK(std::abs(direct - viewy) < 1e-13);
      CHECK(std::abs(direct - viewx) < 1e-13);
    }
  }
}

TEST_CASE("symmetric model has identical coefficient views") {
  ModelSpec spec = build_ra_model(ra_params_scaled(0.1, 0.6, 2, 2));
  KernelPoly kp = kernel_coeffs(spec);
  for (int k = 0; k < 3; ++k) {
    CHECK(kp.ahat[k] == doctest::Approx(kp.a[k]).epsilon(1e-15));
    CHECK(kp.bhat[k] == doctest::Approx(kp.b[k]).epsilon(1e-15));
    CHECK(kp.chat[k] == doctest::Approx(kp.c[k]).epsilon(1e-15));
  }
}

TEST_CASE("branch points: interleaving and negative discriminant between pairs") {
  Philox rng(5u);
  for (int trial = 0; trial < 50; ++trial) {
    ModelSpec spec = random_ergodic_model(rng);
    KernelPoly kp = kernel_coeffs(spec);
    BranchPoints bp = branch_points(kp);
    CHECK(bp.x.r1 > 0);
    CHECK(bp.x.r2 < 1);
    CHECK(bp.x.r1 <= bp.x.r2);
    CHECK(std::abs(kp.disc_y(bp.x.r1)) < 1e-11);
    CHECK(std::abs(kp.disc_y(bp.x.r2)) < 1e-11);
    CHECK(kp.disc_y(0.5 * (bp.x.r1 + bp.x.r2)).real() < 0);
    if (bp.x.outer == OuterRootKind::both_positive)
      CHECK(kp.disc_y(0.5 * (bp.x.r3 + bp.x.r4)).real() < 0);
    CHECK(bp.y.r1 > 0);
    CHECK(bp.y.r2 < 1);
  }
}

TEST_CASE("branch points: outer pair splits sign when p10 < 2*sqrt(p11*p1m1)") {
  ModelSpec spec = make_model(1, 1, SupportMode::nearest);
  JumpDistribution d;
  d.set(1, 1, 0.2);
  d.set(1, -1, 0.2);
  d.set(1, 0, 0.01);
  d.set(-1, 0, 0.29);
  d.set(0, -1, 0.15);
  d.set(0, 1, 0.05);
  d.set(0, 0, 0.1);
  ModelSpec base = spec;
  for (int c1 = 0; c1 <= 1; ++c1)
    for (int c2 = 0; c2 <= 1; ++c2) {
      JumpDistribution cell = d;
      if (c1 == 0)
        for (int j = -1; j <= 1; ++j) {
          cell.add(0, j, cell.at(-1, j));
          cell.set(-1, j, 0);
        }
      if (c2 == 0)
        for (int i = -1; i <= 1; ++i) {
          cell.add(i, 0, cell.at(i, -1));
          cell.set(i, -1, 0);
        }
      spec.cell(c1, c2) = cell;
    }
  KernelPoly kp = kernel_coeffs(spec);
  REQUIRE(0.01 < 2 * std::sqrt(0.2 * 0.2));
  BranchPoints bp = branch_points(kp);
  CHECK(bp.x.outer == OuterRootKind::one_negative);
}

TEST_CASE("X0 root: inside the disc on the unit circle, and X0(1)=1 when Ex<0") {
  Philox rng(9u);
  for (int trial = 0; trial < 10; ++trial) {
    ModelSpec spec = random_ergodic_model(rng);
    KernelPoly kp = kernel_coeffs(spec);
    CHECK(std::abs(root_X0(kp, 1.0) - 1.0) < 1e-10);
    CHECK(std::abs(root_Y0(kp, 1.0) - 1.0) < 1e-10);
    for (int k = 0; k < 100; ++k) {
      double phi = 2 * pi * (k + 0.5) / 100;
      cplx y = std::polar(1.0, phi);
      cplx x0 = root_X0(kp, y);
      CHECK(std::abs(x0) < 1.0);
      CHECK(std::abs(kp.R(x0, y)) < 1e-12);
    }
  }
}

TEST_CASE("Rouche premise: |Psi| < 1 on the torus away from (1,1)") {
  Philox rng(13u);
  ModelSpec spec = random_ergodic_model(rng);
  KernelPoly kp = kernel_coeffs(spec);
  for (int k = 0; k < 200; ++k) {
    cplx x = std::polar(1.0, 2 * pi * rng.next_double());
    cplx y = std::polar(1.0, 2 * pi * rng.next_double());
    if (std::abs(x - 1.0) < 1e-3 || std::abs(y - 1.0) < 1e-3) continue;
    CHECK(std::abs(kp.psi(x, y)) < 1.0 + 1e-12);
  }
}

TEST_CASE("contour M: radial samples satisfy |x|^2 = m(Re x) and extremes match") {
  ModelSpec spec = build_ra_model(ra_params_scaled(0.1, 0.6, 2, 2));
  KernelPoly kp = kernel_coeffs(spec);
  BranchPoints bp = branch_points(kp);
  ContourPair cp = build_contours(kp, bp);
  PolarContour pc = sample_contour(*cp.M, 1024);
  CHECK(pc.extreme_residual < 1e-8);
  CHECK(pc.extreme_right == doctest::Approx(std::sqrt((kp.c_at(bp.y.r2) / kp.a_at(bp.y.r2)).real()))
                                .epsilon(1e-12));
  for (size_t k = 0; k < pc.phi.size(); k += 7) {
    // recompute the squared modulus from the real part through the cut
    cplx x = std::polar(pc.rho[k], pc.phi[k]);
    double y = cp.M->cut_parameter(pc.phi[k]);
    CHECK(y >= bp.y.r1 - 1e-12);
    CHECK(y <= bp.y.r2 + 1e-12);
    double re_expected = (-kp.b_at(y) / (2.0 * kp.a_at(y))).real();
    double mod2 = (kp.c_at(y) / kp.a_at(y)).real();
    CHECK(std::abs(x.real() - re_expected) < 1e-9);
    CHECK(std::abs(std::norm(x) - mod2) < 1e-10);
    // conjugate symmetry
    CHECK(cp.M->radius(2 * pi - pc.phi[k]) == doctest::Approx(pc.rho[k]).epsilon(1e-12));
  }
}

TEST_CASE("contour points are genuine kernel zero pairs: Y0(X0(y)) = y on the cut") {
  Philox rng(17u);
  for (int trial = 0; trial < 5; ++trial) {
    ModelSpec spec = random_ergodic_model(rng);
    KernelPoly kp = kernel_coeffs(spec);
    BranchPoints bp = branch_points(kp);
    ContourPair cp = build_contours(kp, bp);
    for (int k = 1; k < 40; ++k) {
      double phi = pi * k / 40;
      double y = cp.M->cut_parameter(phi);
      cplx x = cp.M->point(phi);
      CHECK(std::abs(kp.R(x, y)) < 1e-10);
      cplx yback = root_Y0(kp, x, y);
      CHECK(std::abs(yback - y) < 1e-10);
    }
  }
}

TEST_CASE("m(Re x) is nondecreasing along the cut") {
  ModelSpec spec = build_ra_model(ra_params_scaled(0.12, 0.55, 2, 2));
  KernelPoly kp = kernel_coeffs(spec);
  BranchPoints bp = branch_points(kp);
  double prev = -1e300;
  for (int k = 0; k <= 200; ++k) {
    double y = bp.y.r1 + (bp.y.r2 - bp.y.r1) * k / 200.0;
    double mod2 = (kp.c_at(y) / kp.a_at(y)).real();
    CHECK(mod2 >= prev - 1e-12);
    prev = mod2;
  }
}

TEST_CASE("symmetric zeros: g(1)=1, g(-1)=-1, reflection property") {
  Philox rng(23u);
  ModelSpec spec = random_ergodic_model(rng);
  KernelPoly kp = kernel_coeffs(spec);
  const int n = 200;
  SymmetricZeros z = symmetric_zeros(kp, n);
  CHECK(std::abs(z.g[0] - 1.0) < 1e-10);
  CHECK(std::abs(z.g[n / 2] + 1.0) < 1e-9);
  for (int k = 0; k < n; k += 4) {
    cplx s = std::polar(1.0, z.phi[k]);
    // if g(s) is a zero then so is -g(-s)
    cplx candidate = -z.g[(k + n / 2) % n];
    CHECK(std::abs(kp.R(candidate * s, candidate / s)) < 1e-9);
    CHECK(std::abs(z.g[k]) <= 1 + 1e-9);
    // conjugate branch: g(conj s) = conj(g(s))
    CHECK(std::abs(z.g[(n - k) % n] - std::conj(z.g[k])) < 1e-9);
  }
}

TEST_CASE("S1/S2 clouds: unit disc, conjugate symmetry, symmetric coincidence") {
  ModelSpec spec = build_ra_model(ra_params_scaled(0.1, 0.6, 2, 2));
  KernelPoly kp = kernel_coeffs(spec);
  const int n = 256;
  PointCloud pc = contours_S1_S2(kp, n);
  for (int k = 0; k < n; ++k) {
    CHECK(std::abs(pc.s1[k]) <= 1 + 1e-9);
    CHECK(std::abs(pc.s2[k]) <= 1 + 1e-9);
    // each cloud is symmetric about the real axis
    CHECK(std::abs(std::conj(pc.s1[k]) - pc.s1[(n - k) % n]) < 1e-9);
    CHECK(std::abs(std::conj(pc.s2[k]) - pc.s2[(n - k) % n]) < 1e-9);
    // symmetric model: g is real on the circle, so S1 coincides with S2
    // under conjugation point by point
    CHECK(std::abs(std::conj(pc.s1[k]) - pc.s2[k]) < 1e-9);
  }
}

TEST_CASE("Psi(0,0)=0 walks traverse the symmetric contours twice") {
  // RA models have no south-west jump; g(0)... the curve x(phi) closes after
  // half a revolution, so points at phi and phi+pi coincide
  ModelSpec spec = build_ra_model(ra_params_scaled(0.1, 0.6, 2, 2));
  KernelPoly kp = kernel_coeffs(spec);
  REQUIRE(kp.sd.at(-1, -1) == 0.0);
  const int n = 256;
  PointCloud pc = contours_S1_S2(kp, n);
  for (int k = 0; k < n / 2; k += 8) {
    CHECK(std::abs(pc.s1[k] - pc.s1[k + n / 2]) < 1e-8);
    CHECK(std::abs(pc.s2[k] - pc.s2[k + n / 2]) < 1e-8);
  }
}
