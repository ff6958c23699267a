#include "qp/kernel.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace qp {

std::vector<cplx> poly_roots(std::vector<cplx> coeffs, double drop_tol) {
  double scale = 0;
  for (const cplx& c : coeffs) scale = std::max(scale, std::abs(c));
  if (scale == 0) throw solve_error("poly_roots: zero polynomial");
  while (coeffs.size() > 1 && std::abs(coeffs.back()) < drop_tol * scale) coeffs.pop_back();
  int n = static_cast<int>(coeffs.size()) - 1;
  if (n <= 0) return {};
  Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(n, n);
  for (int k = 0; k < n; ++k) comp(k, n - 1) = -coeffs[k] / coeffs[n];
  for (int k = 1; k < n; ++k) comp(k, k - 1) = 1.0;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
  std::vector<cplx> roots(n);
  auto eval = [&](cplx z, cplx& p, cplx& dp) {
    p = 0;
    dp = 0;
    for (int k = n; k >= 0; --k) {
      dp = dp * z + p;
      p = p * z + coeffs[k];
    }
  };
  for (int k = 0; k < n; ++k) {
    cplx z = es.eigenvalues()(k);
    for (int it = 0; it < 8; ++it) {  // Newton polish
      cplx p, dp;
      eval(z, p, dp);
      if (std::abs(dp) < 1e-300) break;
      cplx step = p / dp;
      z -= step;
      if (std::abs(step) < 1e-16 * (1 + std::abs(z))) break;
    }
    roots[k] = z;
  }
  return roots;
}

cplx KernelPoly::psi(cplx x, cplx y) const {
  cplx e = 0;
  for (int i = JumpDistribution::jmin; i <= JumpDistribution::jmax; ++i)
    for (int j = JumpDistribution::jmin; j <= JumpDistribution::jmax; ++j) {
      double p = sd.at(i, j);
      if (p == 0.0) continue;
      e += p * std::pow(x, i) * std::pow(y, j);
    }
  return x * y * e;
}

cplx KernelPoly::R(cplx x, cplx y) const { return x * y - psi(x, y); }

KernelPoly kernel_coeffs(const ModelSpec& spec) {
  KernelPoly kp;
  kp.sd = spec.cell(spec.n1, spec.n2);
  kp.extended = spec.mode == SupportMode::extended;
  const JumpDistribution& p = kp.sd;
  kp.ahat = {-p.at(-1, 1), -p.at(0, 1), -p.at(1, 1)};
  kp.bhat = {-p.at(-1, 0), 1 - p.at(0, 0), -p.at(1, 0)};
  kp.chat = {-p.at(-1, -1), -p.at(0, -1), -p.at(1, -1)};
  kp.a = {-p.at(1, -1), -p.at(1, 0), -p.at(1, 1)};
  kp.b = {-p.at(0, -1), 1 - p.at(0, 0), -p.at(0, 1)};
  kp.c = {-p.at(-1, -1), -p.at(-1, 0), -p.at(-1, 1)};
  return kp;
}

namespace {

std::array<double, 5> discriminant_coeffs(const std::array<double, 3>& b2,
                                          const std::array<double, 3>& ac1,
                                          const std::array<double, 3>& ac2) {
  // b(x)^2 - 4*a(x)*c(x) as a quartic
  std::array<double, 5> q{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) q[i + j] += b2[i] * b2[j] - 4 * ac1[i] * ac2[j];
  return q;
}

BranchPair classify_branch(const std::array<double, 5>& q, double p_up, double p_upleft,
                           double p_upright) {
  BranchPair out;
  std::vector<cplx> roots = poly_roots({q[0], q[1], q[2], q[3], q[4]});
  std::vector<double> real;
  for (cplx r : roots) {
    if (std::abs(r.imag()) > 1e-8 * (1 + std::abs(r)))
      throw solve_error("branch points: complex discriminant root (degenerate kernel)");
    real.push_back(r.real());
  }
  std::sort(real.begin(), real.end());
  std::vector<double> inner, outer;
  for (double r : real) (r > -1e-12 && r < 1.0 - 1e-12 ? inner : outer).push_back(r);
  if (inner.size() != 2)
    throw solve_error("branch points: expected two discriminant roots inside the unit interval");
  out.r1 = inner[0];
  out.r2 = inner[1];
  if (out.r2 - out.r1 < 1e-10)
    throw solve_error("branch points: repeated interior branch point (degenerate kernel)");

  double lead_gap = p_up - 2 * std::sqrt(p_upleft * p_upright);
  if (outer.size() == 1) {
    out.outer = OuterRootKind::one_infinite;
    out.r3 = outer[0];
    out.r4 = std::numeric_limits<double>::infinity();
  } else if (outer.size() == 2) {
    out.r3 = outer[0];
    out.r4 = outer[1];
    out.outer = (outer[0] < 0 || outer[1] < 0) ? OuterRootKind::one_negative
                                               : OuterRootKind::both_positive;
    if (out.outer == OuterRootKind::both_positive && lead_gap < 0)
      throw solve_error("branch points: outer-root layout contradicts the leading coefficient");
  } else {
    throw solve_error("branch points: unexpected outer-root count");
  }
  return out;
}

}  // namespace

BranchPoints branch_points(const KernelPoly& kp) {
  if (kp.extended) throw solve_error("branch points need the nearest-neighbour kernel");
  BranchPoints bp;
  const JumpDistribution& p = kp.sd;
  bp.x = classify_branch(discriminant_coeffs(kp.bhat, kp.ahat, kp.chat), p.at(1, 0), p.at(1, 1),
                         p.at(1, -1));
  bp.y = classify_branch(discriminant_coeffs(kp.b, kp.a, kp.c), p.at(0, 1), p.at(1, 1),
                         p.at(-1, 1));
  return bp;
}

namespace {

// stable quadratic roots of a z^2 + b z + c
std::pair<cplx, cplx> quad_roots(cplx a, cplx b, cplx c) {
  cplx d = std::sqrt(b * b - 4.0 * a * c);
  if (std::real(std::conj(b) * d) < 0) d = -d;
  cplx q = -0.5 * (b + d);
  if (std::abs(q) < 1e-300) {
    if (std::abs(a) < 1e-300) throw solve_error("degenerate quadratic");
    return {0.0, 0.0};
  }
  return {q / a, c / q};
}

cplx small_root(cplx a, cplx b, cplx c, const cplx* hint) {
  if (std::abs(a) < 1e-14 * (std::abs(b) + std::abs(c))) {
    if (std::abs(b) < 1e-300) throw solve_error("kernel root: degenerate leading coefficient");
    return -c / b;  // linear fallback
  }
  auto [r1, r2] = quad_roots(a, b, c);
  if (hint) return std::abs(r1 - *hint) <= std::abs(r2 - *hint) ? r1 : r2;
  return std::abs(r1) <= std::abs(r2) ? r1 : r2;
}

}  // namespace

cplx root_X0(const KernelPoly& kp, cplx y) {
  return small_root(kp.a_at(y), kp.b_at(y), kp.c_at(y), nullptr);
}
cplx root_X0(const KernelPoly& kp, cplx y, cplx hint) {
  return small_root(kp.a_at(y), kp.b_at(y), kp.c_at(y), &hint);
}
cplx root_Y0(const KernelPoly& kp, cplx x) {
  return small_root(kp.ahat_at(x), kp.bhat_at(x), kp.chat_at(x), nullptr);
}
cplx root_Y0(const KernelPoly& kp, cplx x, cplx hint) {
  return small_root(kp.ahat_at(x), kp.bhat_at(x), kp.chat_at(x), &hint);
}

// --- cut-image contours -------------------------------------------------------

CutContour::Sample CutContour::eval(double par) const {
  cplx A, B, C;
  if (which_ == Which::M) {
    A = kp_.a_at(par);
    B = kp_.b_at(par);
    C = kp_.c_at(par);
  } else {
    A = kp_.ahat_at(par);
    B = kp_.bhat_at(par);
    C = kp_.chat_at(par);
  }
  double a = A.real(), b = B.real(), c = C.real();
  if (std::abs(a) < 1e-14)
    throw solve_error("contour: vanishing quadratic coefficient on the cut");
  Sample s;
  s.par = par;
  s.re = -b / (2 * a);      // conjugate pair midpoint
  s.mod2 = c / a;           // product of the conjugate roots
  double im2 = s.mod2 - s.re * s.re;
  s.theta = std::atan2(std::sqrt(std::max(im2, 0.0)), s.re);
  return s;
}

CutContour::CutContour(const KernelPoly& kp, const BranchPoints& bp, Which which)
    : kp_(kp), which_(which) {
  const BranchPair& pair = which == Which::M ? bp.y : bp.x;
  lo_ = pair.r1;
  hi_ = pair.r2;
  if (which == Which::M) {
    beta_right_ = std::sqrt((kp_.c_at(hi_) / kp_.a_at(hi_)).real());
    beta_left_ = -std::sqrt((kp_.c_at(lo_) / kp_.a_at(lo_)).real());
  } else {
    beta_right_ = std::sqrt((kp_.chat_at(hi_) / kp_.ahat_at(hi_)).real());
    beta_left_ = -std::sqrt((kp_.chat_at(lo_) / kp_.ahat_at(lo_)).real());
  }

  // dense monotone table of the polar angle along the upper edge of the cut
  const int K = 6000;
  table_.reserve(K + 1);
  for (int k = 0; k <= K; ++k) {
    // cluster points near the endpoints where theta varies like a sqrt
    double u = static_cast<double>(k) / K;
    double t = 0.5 * (1 - std::cos(pi * u));  // Chebyshev-style clustering
    table_.push_back(eval(lo_ + (hi_ - lo_) * t));
  }
  if (table_.front().mod2 <= 0 || table_.back().mod2 <= 0)
    throw solve_error("contour: nonpositive squared radius at a cut endpoint");
  table_.front().theta = pi;  // endpoints are exactly real
  table_.back().theta = 0;
  for (size_t k = 0; k + 1 < table_.size(); ++k) {
    if (table_[k + 1].theta >= table_[k].theta + 1e-12)
      throw solve_error("contour is not star-shaped about 0 (angle not monotone along the cut)");
    if (table_[k].mod2 <= 0) throw solve_error("contour: 0 is not strictly inside");
  }
}

double CutContour::cut_parameter(double phi) const {
  phi = std::fmod(phi, 2 * pi);
  if (phi < 0) phi += 2 * pi;
  if (phi > pi) phi = 2 * pi - phi;  // conjugate symmetry
  // bracket in the monotone table, then bisect
  size_t lo = 0, hi = table_.size() - 1;
  while (hi - lo > 1) {
    size_t mid = (lo + hi) / 2;
    (table_[mid].theta >= phi ? lo : hi) = mid;
  }
  double a = table_[lo].par, b = table_[hi].par;
  for (int it = 0; it < 80; ++it) {
    double m = 0.5 * (a + b);
    double th = eval(m).theta;
    (th >= phi ? a : b) = m;
    if (b - a < 1e-16 * (std::abs(a) + 1)) break;
  }
  return 0.5 * (a + b);
}

double CutContour::radius(double phi) const {
  double wrapped = std::fmod(std::abs(phi), 2 * pi);
  if (wrapped > pi) wrapped = 2 * pi - wrapped;
  if (wrapped < 1e-13) return beta_right_;
  if (pi - wrapped < 1e-13) return -beta_left_;
  return std::sqrt(eval(cut_parameter(phi)).mod2);
}

ContourPair build_contours(const KernelPoly& kp, const BranchPoints& bp) {
  ContourPair pair;
  pair.M = std::make_shared<CutContour>(kp, bp, CutContour::Which::M);
  pair.L = std::make_shared<CutContour>(kp, bp, CutContour::Which::L);
  return pair;
}

PolarContour sample_contour(const CutContour& c, int num_points) {
  for (int n = std::max(num_points, 8);; n *= 2) {
    PolarContour pc;
    pc.phi.resize(n);
    pc.rho.resize(n);
    double max_r = 0, min_signed = 0;
    for (int k = 0; k < n; ++k) {
      pc.phi[k] = 2 * pi * k / n;
      pc.rho[k] = c.radius(pc.phi[k]);
      max_r = std::max(max_r, pc.rho[k] * std::cos(pc.phi[k]));
      min_signed = std::min(min_signed, pc.rho[k] * std::cos(pc.phi[k]));
    }
    pc.extreme_right = c.extreme_right();
    pc.extreme_left = c.extreme_left();
    pc.extreme_residual = std::max(std::abs(max_r - pc.extreme_right),
                                   std::abs(min_signed - pc.extreme_left));
    if (pc.extreme_residual < 1e-8 || n >= 65536) {
      if (pc.extreme_residual >= 1e-8)
        throw solve_error("contour sampling failed to resolve the extreme points");
      return pc;
    }
  }
}

// --- symmetric zero pairs ------------------------------------------------------

namespace {

// coefficients of R(gs, g/s) = sum_m A_m(s) g^m, m = 0..4
std::array<cplx, 5> symmetric_poly(const KernelPoly& kp, cplx s) {
  std::array<cplx, 5> A{};
  A[2] = 1.0;
  const JumpDistribution& p = kp.sd;
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j) {
      double v = p.at(i, j);
      if (v != 0.0) A[i + j + 2] -= v * std::pow(s, i - j);
    }
  return A;
}

}  // namespace

namespace {

// Newton on the (possibly deflated) polynomial, seeded by continuity. When
// Psi(0,0) = 0 the trivial zero g = 0 is divided out first, otherwise the
// tracked branch would collide with it and stall.
cplx track_zero(const std::vector<cplx>& poly, cplx seed, bool& used_newton) {
  cplx g = seed;
  int n = static_cast<int>(poly.size()) - 1;
  used_newton = true;
  for (int it = 0; it < 60; ++it) {
    cplx p = 0, dp = 0;
    for (int k = n; k >= 0; --k) {
      dp = dp * g + p;
      p = p * g + poly[k];
    }
    if (std::abs(dp) < 1e-300) break;
    cplx step = p / dp;
    g -= step;
    if (std::abs(step) < 1e-15 * (1 + std::abs(g))) break;
  }
  cplx check = 0;
  for (int k = n; k >= 0; --k) check = check * g + poly[k];
  if (std::abs(check) < 1e-11 && std::abs(g) <= 1 + 1e-9 && std::abs(g - seed) < 0.5) return g;
  used_newton = false;
  std::vector<cplx> roots = poly_roots(poly);
  cplx best = seed;
  double score = 1e300;
  for (cplx r : roots) {
    if (std::abs(r) > 1 + 1e-9) continue;
    double d = std::abs(r - seed);
    if (d < score) {
      score = d;
      best = r;
    }
  }
  return best;
}

}  // namespace

cplx symmetric_zero_at(const KernelPoly& kp, cplx s, cplx seed) {
  std::array<cplx, 5> A = symmetric_poly(kp, s);
  bool flag;
  if (kp.sd.at(-1, -1) == 0.0) return track_zero({A[1], A[2], A[3], A[4]}, seed, flag);
  return track_zero({A[0], A[1], A[2], A[3], A[4]}, seed, flag);
}

SymmetricZeros symmetric_zeros(const KernelPoly& kp, int num_points) {
  SymmetricZeros out;
  out.phi.resize(num_points);
  out.g.resize(num_points);
  out.other.resize(num_points);
  bool trivial_zero = kp.sd.at(-1, -1) == 0.0;
  cplx prev = 1.0;
  for (int k = 0; k < num_points; ++k) {
    double phi = 2 * pi * k / num_points;
    cplx s = std::polar(1.0, phi);
    out.phi[k] = phi;
    std::array<cplx, 5> A = symmetric_poly(kp, s);
    bool newton_ok;
    if (trivial_zero) {
      out.g[k] = track_zero({A[1], A[2], A[3], A[4]}, prev, newton_ok);
      out.other[k] = 0.0;
    } else {
      out.g[k] = track_zero({A[0], A[1], A[2], A[3], A[4]}, prev, newton_ok);
      // companion zero: the other in-disc root of the quartic
      std::vector<cplx> roots = poly_roots({A[0], A[1], A[2], A[3], A[4]});
      cplx comp = 0;
      double best = 1e300;
      for (cplx r : roots) {
        if (std::abs(r) > 1 + 1e-8) continue;
        double d = std::abs(r - out.g[k]);
        if (d > 1e-7 && std::abs(r) < best) {
          best = std::abs(r);
          comp = r;
        }
      }
      out.other[k] = comp;
    }
    out.fixed_point_used = out.fixed_point_used && newton_ok;
    prev = out.g[k];
  }
  return out;
}

PointCloud contours_S1_S2(const KernelPoly& kp, int num_points) {
  SymmetricZeros z = symmetric_zeros(kp, num_points);
  PointCloud pc;
  pc.s1.resize(num_points);
  pc.s2.resize(num_points);
  for (int k = 0; k < num_points; ++k) {
    cplx s = std::polar(1.0, z.phi[k]);
    pc.s1[k] = z.g[k] * s;
    pc.s2[k] = z.g[k] / s;
  }
  return pc;
}

}  // namespace qp
