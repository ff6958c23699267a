#include "qp/assembly.hpp"

#include <cmath>

#include "qp/bvp.hpp"
#include "qp/conformal.hpp"
#include "qp/stability.hpp"

namespace qp {

namespace {

const JumpDistribution& row_cell(const ModelSpec& spec, int n2) {
  return spec.cell(spec.n1, std::min(n2, spec.n2));
}
const JumpDistribution& col_cell(const ModelSpec& spec, int n1) {
  return spec.cell(std::min(n1, spec.n1), spec.n2);
}

}  // namespace

cplx band_f1(const ModelSpec& spec, int n2, cplx x) {
  const JumpDistribution& p = row_cell(spec, n2);
  if (spec.mode == SupportMode::nearest)
    return (x * p.at(1, 1) + p.at(0, 1)) * x + p.at(-1, 1);
  return ((x * p.at(1, 1) + p.at(0, 1)) * x + p.at(-1, 1)) * x + p.at(-2, 1);
}

cplx band_f2(const ModelSpec& spec, int n2, cplx x) {
  const JumpDistribution& p = row_cell(spec, n2);
  if (spec.mode == SupportMode::nearest)
    return x * (1 - p.at(0, 0)) - x * x * p.at(1, 0) - p.at(-1, 0);
  return x * x * (1 - p.at(0, 0)) - x * x * x * p.at(1, 0) - x * p.at(-1, 0) - p.at(-2, 0);
}

cplx band_f3(const ModelSpec& spec, int n2, cplx x) {
  const JumpDistribution& p = row_cell(spec, n2);
  if (spec.mode == SupportMode::nearest)
    return (x * p.at(1, -1) + p.at(0, -1)) * x + p.at(-1, -1);
  return ((x * p.at(1, -1) + p.at(0, -1)) * x + p.at(-1, -1)) * x + p.at(-2, -1);
}

cplx band_f4(const ModelSpec& spec, int n2, cplx x) {
  const JumpDistribution& p = row_cell(spec, n2);
  return ((x * p.at(1, -2) + p.at(0, -2)) * x + p.at(-1, -2)) * x + p.at(-2, -2);
}

cplx band_g1(const ModelSpec& spec, int n1, cplx y) {
  const JumpDistribution& p = col_cell(spec, n1);
  if (spec.mode == SupportMode::nearest)
    return (y * p.at(1, 1) + p.at(1, 0)) * y + p.at(1, -1);
  return ((y * p.at(1, 1) + p.at(1, 0)) * y + p.at(1, -1)) * y + p.at(1, -2);
}

cplx band_g2(const ModelSpec& spec, int n1, cplx y) {
  const JumpDistribution& p = col_cell(spec, n1);
  if (spec.mode == SupportMode::nearest)
    return y * (1 - p.at(0, 0)) - y * y * p.at(0, 1) - p.at(0, -1);
  return y * y * (1 - p.at(0, 0)) - y * y * y * p.at(0, 1) - y * p.at(0, -1) - p.at(0, -2);
}

cplx band_g3(const ModelSpec& spec, int n1, cplx y) {
  const JumpDistribution& p = col_cell(spec, n1);
  if (spec.mode == SupportMode::nearest)
    return (y * p.at(-1, 1) + p.at(-1, 0)) * y + p.at(-1, -1);
  return ((y * p.at(-1, 1) + p.at(-1, 0)) * y + p.at(-1, -1)) * y + p.at(-1, -2);
}

cplx band_g4(const ModelSpec& spec, int n1, cplx y) {
  const JumpDistribution& p = col_cell(spec, n1);
  return ((y * p.at(-2, 1) + p.at(-2, 0)) * y + p.at(-2, -1)) * y + p.at(-2, -2);
}

Eigen::MatrixXcd build_K_matrix(const ModelSpec& spec, cplx x) {
  int n = spec.n2;
  Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 1; i <= n; ++i) {
    K(i - 1, i - 1) = -band_f3(spec, i, x);
    if (i >= 2) K(i - 1, i - 2) = band_f2(spec, i - 1, x);
    if (i >= 3) K(i - 1, i - 3) = -band_f1(spec, i - 2, x);
    if (spec.mode == SupportMode::extended && i < n) K(i - 1, i) = -band_f4(spec, i + 1, x);
  }
  return K;
}

Eigen::MatrixXcd build_M_matrix(const ModelSpec& spec, cplx y) {
  int n = spec.n1;
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 1; i <= n; ++i) {
    M(i - 1, i - 1) = -band_g3(spec, i, y);
    if (i >= 2) M(i - 1, i - 2) = band_g2(spec, i - 1, y);
    if (i >= 3) M(i - 1, i - 3) = -band_g1(spec, i - 2, y);
    if (spec.mode == SupportMode::extended && i < n) M(i - 1, i) = -band_g4(spec, i + 1, y);
  }
  return M;
}

namespace {

// b_{n2}(x): the free terms of the saturated-row system, affine in pi
AffineC bvec_x(const ModelSpec& spec, int n2, cplx x, int m) {
  AffineC b(m);
  int N1 = spec.n1, N2 = spec.n2;
  auto idx = [&](int a, int c) { return unknown_index(spec, a, c); };
  if (n2 >= 1) {
    b.coef(idx(N1 - 1, n2 - 1)) += x * spec.cell(N1 - 1, n2 - 1).at(1, 1);
    b.coef(idx(N1, n2 - 1)) -= spec.cell(N1, n2 - 1).at(-1, 1);
  }
  b.coef(idx(N1 - 1, n2)) += x * spec.cell(N1 - 1, n2).at(1, 0);
  b.coef(idx(N1, n2)) -= spec.cell(N1, n2).at(-1, 0);
  if (n2 + 1 <= N2) {
    b.coef(idx(N1 - 1, n2 + 1)) += x * spec.cell(N1 - 1, n2 + 1).at(1, -1);
    b.coef(idx(N1, n2 + 1)) -= spec.cell(N1, n2 + 1).at(-1, -1);
  }
  return b;
}

// u_{n1}(y): free terms of the saturated-column system
AffineC bvec_y(const ModelSpec& spec, int n1, cplx y, int m) {
  AffineC b(m);
  int N1 = spec.n1, N2 = spec.n2;
  auto idx = [&](int a, int c) { return unknown_index(spec, a, c); };
  if (n1 >= 1) {
    b.coef(idx(n1 - 1, N2 - 1)) += y * spec.cell(n1 - 1, N2 - 1).at(1, 1);
    b.coef(idx(n1 - 1, N2)) -= spec.cell(n1 - 1, N2).at(1, -1);
  }
  b.coef(idx(n1, N2 - 1)) += y * spec.cell(n1, N2 - 1).at(0, 1);
  b.coef(idx(n1, N2)) -= spec.cell(n1, N2).at(0, -1);
  if (n1 + 1 <= N1) {
    b.coef(idx(n1 + 1, N2 - 1)) += y * spec.cell(n1 + 1, N2 - 1).at(-1, 1);
    b.coef(idx(n1 + 1, N2)) -= spec.cell(n1 + 1, N2).at(-1, -1);
  }
  return b;
}

void pole_guard(cplx f3v, cplx x, int n2) {
  if (std::abs(f3v) < 1e-12)
    throw solve_error("evaluation at a pole of g_" + std::to_string(n2) +
                      " (root of the band polynomial f3) near x = (" +
                      std::to_string(x.real()) + "," + std::to_string(x.imag()) + ")");
}

}  // namespace

CramerEval cramer_x(const ModelSpec& spec, cplx x) {
  if (spec.mode != SupportMode::nearest)
    throw solve_error("Cramer components need nearest-neighbour support");
  int m = unknown_count(spec);
  CramerEval out;
  out.e.assign(spec.n2 + 1, cplx(0));
  out.t.assign(spec.n2 + 1, AffineC(m));
  out.e[0] = 1.0;
  // first equation: f2(0) g0 - f3(1) g1 = b_0
  cplx f3v = band_f3(spec, 1, x);
  pole_guard(f3v, x, 1);
  out.e[1] = band_f2(spec, 0, x) / f3v;
  out.t[1] = bvec_x(spec, 0, x, m) * (-1.0 / f3v);
  for (int n2 = 1; n2 < spec.n2; ++n2) {
    cplx f3n = band_f3(spec, n2 + 1, x);
    pole_guard(f3n, x, n2 + 1);
    cplx f1p = band_f1(spec, n2 - 1, x), f2c = band_f2(spec, n2, x);
    out.e[n2 + 1] = (-f1p * out.e[n2 - 1] + f2c * out.e[n2]) / f3n;
    out.t[n2 + 1] =
        (out.t[n2 - 1] * (-f1p) + out.t[n2] * f2c - bvec_x(spec, n2, x, m)) * (1.0 / f3n);
  }
  return out;
}

CramerEval cramer_y(const ModelSpec& spec, cplx y) {
  if (spec.mode != SupportMode::nearest)
    throw solve_error("Cramer components need nearest-neighbour support");
  int m = unknown_count(spec);
  CramerEval out;
  out.e.assign(spec.n1 + 1, cplx(0));
  out.t.assign(spec.n1 + 1, AffineC(m));
  out.e[0] = 1.0;
  cplx g3v = band_g3(spec, 1, y);
  pole_guard(g3v, y, 1);
  out.e[1] = band_g2(spec, 0, y) / g3v;
  out.t[1] = bvec_y(spec, 0, y, m) * (-1.0 / g3v);
  for (int n1 = 1; n1 < spec.n1; ++n1) {
    cplx g3n = band_g3(spec, n1 + 1, y);
    pole_guard(g3n, y, n1 + 1);
    cplx g1p = band_g1(spec, n1 - 1, y), g2c = band_g2(spec, n1, y);
    out.e[n1 + 1] = (-g1p * out.e[n1 - 1] + g2c * out.e[n1]) / g3n;
    out.t[n1 + 1] =
        (out.t[n1 - 1] * (-g1p) + out.t[n1] * g2c - bvec_y(spec, n1, y, m)) * (1.0 / g3n);
  }
  return out;
}

CoeffsABC functional_coeffs(const ModelSpec& spec, cplx x, cplx y, const CramerEval& cx,
                            const CramerEval& cy) {
  int N1 = spec.n1, N2 = spec.n2;
  int m = unknown_count(spec);
  cplx f1m = band_f1(spec, N2 - 1, x), f3c = band_f3(spec, N2, x);
  cplx g1m = band_g1(spec, N1 - 1, y), g3c = band_g3(spec, N1, y);
  CoeffsABC out;
  out.A = y * f1m * cx.e[N2 - 1] - f3c * cx.e[N2];
  out.B = x * g1m * cy.e[N1 - 1] - g3c * cy.e[N1];
  out.C = cx.t[N2 - 1] * (y * f1m) - cx.t[N2] * f3c + cy.t[N1 - 1] * (x * g1m) - cy.t[N1] * g3c;
  // corner term collected when the four region sums meet
  auto idx = [&](int a, int c) { return unknown_index(spec, a, c); };
  out.C.coef(idx(N1 - 1, N2 - 1)) += x * y * spec.cell(N1 - 1, N2 - 1).at(1, 1);
  out.C.coef(idx(N1 - 1, N2)) -= x * spec.cell(N1 - 1, N2).at(1, -1);
  out.C.coef(idx(N1, N2 - 1)) -= y * spec.cell(N1, N2 - 1).at(-1, 1);
  out.C.coef(idx(N1, N2)) += spec.cell(N1, N2).at(-1, -1);
  (void)m;
  return out;
}

namespace {

template <typename F>
std::vector<std::vector<cplx>> cauchy_jet(F&& eval, cplx center, double radius, int orders,
                                          int nodes, int rows) {
  // Taylor coefficients c_j = (1/2 pi r^j) int f e^{-i j t} dt for each row
  std::vector<std::vector<cplx>> out(rows, std::vector<cplx>(orders, cplx(0)));
  for (int k = 0; k < nodes; ++k) {
    double t = 2 * pi * k / nodes;
    cplx z = center + std::polar(radius, t);
    std::vector<cplx> vals = eval(z);
    for (int rw = 0; rw < rows; ++rw)
      for (int j = 0; j < orders; ++j)
        out[rw][j] += vals[rw] * std::polar(1.0, -j * t);
  }
  for (int rw = 0; rw < rows; ++rw)
    for (int j = 0; j < orders; ++j) out[rw][j] /= nodes * std::pow(radius, j);
  return out;
}

double min_f3_root_distance(const ModelSpec& spec, cplx center, bool xside) {
  double best = 1e300;
  int count = xside ? spec.n2 : spec.n1;
  for (int k = 1; k <= count; ++k) {
    const JumpDistribution& p =
        xside ? spec.cell(spec.n1, std::min(k, spec.n2)) : spec.cell(std::min(k, spec.n1), spec.n2);
    double c2 = xside ? p.at(1, -1) : p.at(-1, 1);
    double c1 = xside ? p.at(0, -1) : p.at(-1, 0);
    double c0 = xside ? p.at(-1, -1) : p.at(-1, -1);
    std::vector<cplx> coeffs{c0, c1, c2};
    double scale = std::abs(c0) + std::abs(c1) + std::abs(c2);
    if (scale == 0) continue;  // f3 identically zero handled by the pole guard
    try {
      for (cplx r : poly_roots(coeffs)) best = std::min(best, std::abs(r - center));
    } catch (const solve_error&) {
    }
  }
  return best;
}

}  // namespace

CramerJet cramer_x_jet(const ModelSpec& spec, cplx x0, int orders, double radius, int nodes) {
  double r = std::min(radius, 0.45 * min_f3_root_distance(spec, x0, true));
  if (!(r > 1e-8)) throw solve_error("Cauchy circle collapsed onto a pole of the components");
  int m = unknown_count(spec);
  int rows = (spec.n2 + 1) * (1 + m);
  auto eval = [&](cplx z) {
    CramerEval ce = cramer_x(spec, z);
    std::vector<cplx> vals(rows);
    for (int n2 = 0; n2 <= spec.n2; ++n2) {
      vals[n2 * (1 + m)] = ce.e[n2];
      for (int q = 0; q < m; ++q) vals[n2 * (1 + m) + 1 + q] = ce.t[n2].coef(q);
    }
    return vals;
  };
  auto jets = cauchy_jet(eval, x0, r, orders, nodes, rows);
  CramerJet out;
  out.e.assign(spec.n2 + 1, {});
  out.t.assign(spec.n2 + 1, {});
  for (int n2 = 0; n2 <= spec.n2; ++n2) {
    out.e[n2].resize(orders);
    out.t[n2].assign(orders, AffineC(m));
    for (int j = 0; j < orders; ++j) {
      out.e[n2][j] = jets[n2 * (1 + m)][j];
      for (int q = 0; q < m; ++q) out.t[n2][j].coef(q) = jets[n2 * (1 + m) + 1 + q][j];
    }
  }
  return out;
}

CramerJet cramer_y_jet(const ModelSpec& spec, cplx y0, int orders, double radius, int nodes) {
  double r = std::min(radius, 0.45 * min_f3_root_distance(spec, y0, false));
  if (!(r > 1e-8)) throw solve_error("Cauchy circle collapsed onto a pole of the components");
  int m = unknown_count(spec);
  int rows = (spec.n1 + 1) * (1 + m);
  auto eval = [&](cplx z) {
    CramerEval ce = cramer_y(spec, z);
    std::vector<cplx> vals(rows);
    for (int n1 = 0; n1 <= spec.n1; ++n1) {
      vals[n1 * (1 + m)] = ce.e[n1];
      for (int q = 0; q < m; ++q) vals[n1 * (1 + m) + 1 + q] = ce.t[n1].coef(q);
    }
    return vals;
  };
  auto jets = cauchy_jet(eval, y0, r, orders, nodes, rows);
  CramerJet out;
  out.e.assign(spec.n1 + 1, {});
  out.t.assign(spec.n1 + 1, {});
  for (int n1 = 0; n1 <= spec.n1; ++n1) {
    out.e[n1].resize(orders);
    out.t[n1].assign(orders, AffineC(m));
    for (int j = 0; j < orders; ++j) {
      out.e[n1][j] = jets[n1 * (1 + m)][j];
      for (int q = 0; q < m; ++q) out.t[n1][j].coef(q) = jets[n1 * (1 + m) + 1 + q][j];
    }
  }
  return out;
}

Eigen::MatrixXd reconstruct_window(const StationarySolution& sol, int w1, int w2) {
  const ModelSpec& spec = *sol.spec;
  int N1 = spec.n1, N2 = spec.n2;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(w1, w2);
  for (int n1 = 0; n1 < std::min(w1, N1 + 1); ++n1)
    for (int n2 = 0; n2 < std::min(w2, N2 + 1); ++n2) out(n1, n2) = sol.corner(n1, n2);

  const double r = 0.45;
  int nq = 8;
  while (nq < 4 * std::max(w1, w2)) nq *= 2;
  // saturated-row strips via series coefficients of g_{n2} and h_{n1}
  for (int n2 = 0; n2 < std::min(w2, N2); ++n2) {
    for (int n1 = N1 + 1; n1 < w1; ++n1) {
      cplx acc = 0;
      for (int k = 0; k < nq; ++k) {
        cplx x = std::polar(r, 2 * pi * k / nq);
        acc += sol.g_n2(n2, x) * std::polar(1.0, -2 * pi * k * (n1 - N1) / nq);
      }
      out(n1, n2) = (acc / (static_cast<double>(nq) * std::pow(r, n1 - N1))).real();
    }
  }
  for (int n1 = 0; n1 < std::min(w1, N1); ++n1) {
    for (int n2 = N2 + 1; n2 < w2; ++n2) {
      cplx acc = 0;
      for (int k = 0; k < nq; ++k) {
        cplx y = std::polar(r, 2 * pi * k / nq);
        acc += sol.h_n1(n1, y) * std::polar(1.0, -2 * pi * k * (n2 - N2) / nq);
      }
      out(n1, n2) = (acc / (static_cast<double>(nq) * std::pow(r, n2 - N2))).real();
    }
  }
  // homogeneous block via the joint pgf
  if (w1 > N1 && w2 > N2) {
    std::vector<std::vector<cplx>> ring(nq, std::vector<cplx>(nq));
    for (int kx = 0; kx < nq; ++kx)
      for (int ky = 0; ky < nq; ++ky)
        ring[kx][ky] = evaluate_joint_pgf(sol, std::polar(r, 2 * pi * kx / nq),
                                          std::polar(r, 2 * pi * ky / nq));
    for (int n1 = N1; n1 < w1; ++n1)
      for (int n2 = N2; n2 < w2; ++n2) {
        if (n1 <= N1 && n2 <= N2) continue;
        cplx acc = 0;
        for (int kx = 0; kx < nq; ++kx)
          for (int ky = 0; ky < nq; ++ky)
            acc += ring[kx][ky] *
                   std::polar(1.0, -2 * pi * ((n1 - N1) * kx + (n2 - N2) * ky) /
                                       static_cast<double>(nq));
        out(n1, n2) = (acc / (static_cast<double>(nq) * nq * std::pow(r, n1 - N1 + n2 - N2))).real();
      }
  }
  return out;
}

}  // namespace qp

// --- full corner solve ---------------------------------------------------------

namespace qp {

namespace {

// truncated Taylor arithmetic around a fixed point, affine in the unknowns
using TaylorC = std::vector<cplx>;
using TaylorA = std::vector<AffineC>;

TaylorC poly_taylor_at(const std::array<cplx, 3>& c, cplx x0) {
  // quadratic c0 + c1 x + c2 x^2 re-expanded at x0
  return {c[0] + c[1] * x0 + c[2] * x0 * x0, c[1] + 2.0 * c[2] * x0, c[2]};
}

TaylorC mul(const TaylorC& a, const TaylorC& b, int orders) {
  TaylorC out(orders, cplx(0));
  for (int i = 0; i < static_cast<int>(a.size()) && i < orders; ++i)
    for (int j = 0; j < static_cast<int>(b.size()) && i + j < orders; ++j)
      out[i + j] += a[i] * b[j];
  return out;
}

TaylorA mul(const TaylorC& a, const TaylorA& b, int orders) {
  if (b.empty()) return {};
  TaylorA out(orders, AffineC(b[0].dim()));
  for (int i = 0; i < static_cast<int>(a.size()) && i < orders; ++i)
    for (int j = 0; j < static_cast<int>(b.size()) && i + j < orders; ++j)
      out[i + j] += b[j] * a[i];
  return out;
}

void add_into(TaylorA& a, const TaylorA& b) {
  for (size_t k = 0; k < a.size() && k < b.size(); ++k) a[k] += b[k];
}

std::array<cplx, 3> band_poly_coeffs_x(const ModelSpec& spec, int n2, int which) {
  const JumpDistribution& p = spec.cell(spec.n1, std::min(n2, spec.n2));
  if (which == 1) return {p.at(-1, 1), p.at(0, 1), p.at(1, 1)};
  if (which == 2) return {-p.at(-1, 0), 1 - p.at(0, 0), -p.at(1, 0)};
  return {p.at(-1, -1), p.at(0, -1), p.at(1, -1)};
}

// poles of the continued boundary function: zeros of coeff(x, partner(x))
// in the sliver between the contour and the unit circle
struct PoleSearch {
  std::vector<cplx> poles;
  std::vector<int> mult;
};

PoleSearch find_poles(const CutContour& contour, const std::function<cplx(cplx, cplx)>& coeff,
                      const KernelPoly& kp, bool xside) {
  PoleSearch out;
  double beta0 = contour.extreme_right();
  if (beta0 <= 1 + 1e-10) return out;

  // crossing angle of the contour with the unit circle
  double lo = 0, hi = pi;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (contour.radius(mid) > 1 ? lo : hi) = mid;
  }
  double psi_star = 0.5 * (lo + hi);

  auto partner_root = [&](cplx z, cplx hint) {
    return xside ? root_Y0(kp, z, hint) : root_X0(kp, z, hint);
  };

  // positively oriented boundary of the sliver: contour arc outside the
  // disc, then the unit-circle arc back. The point x = 1 carries a
  // structural simple zero of the coefficient (the kernel factors (1-x)
  // there), so the count uses the deflated function; odd sampling keeps the
  // node off x = 1 exactly.
  std::vector<cplx> loop;
  const int narc = 601;
  for (int k = 0; k <= narc; ++k) {
    double a = -psi_star + 2 * psi_star * k / narc;
    loop.push_back(std::polar(contour.radius(a), a));
  }
  for (int k = 1; k < narc; ++k) {
    double a = psi_star - 2 * psi_star * k / narc;
    loop.push_back(std::polar(1.0, a));
  }

  std::vector<cplx> vals(loop.size());
  cplx hint = partner_root(loop[0], 0.5);
  for (size_t k = 0; k < loop.size(); ++k) {
    cplx y = partner_root(loop[k], hint);
    hint = y;
    vals[k] = coeff(loop[k], y) / (loop[k] - 1.0);
    if (std::abs(vals[k]) < 1e-12)
      throw solve_error("pole search: coefficient vanishes on the search boundary");
  }
  double total = 0;
  for (size_t k = 0; k < vals.size(); ++k)
    total += std::arg(vals[(k + 1) % vals.size()] / vals[k]);
  int count = static_cast<int>(std::lround(total / (2 * pi)));
  if (count == 0) return out;
  if (count < 0) throw solve_error("pole search: negative winding, geometry unsupported");

  // locate zeros by Newton from a grid of seeds inside the sliver
  auto F = [&](cplx x) {
    cplx y = partner_root(x, 0.5);
    return coeff(x, y) / (x - 1.0);
  };
  std::vector<cplx> found;
  for (int a = 0; a < 40 && static_cast<int>(found.size()) < count; ++a) {
    for (int rstep = 1; rstep <= 8 && static_cast<int>(found.size()) < count; ++rstep) {
      double ang = -psi_star + 2 * psi_star * (a + 0.5) / 40;
      double rr = 1 + (contour.radius(ang) - 1) * rstep / 9.0;
      cplx x = std::polar(rr, ang);
      for (int it = 0; it < 60; ++it) {
        cplx h(1e-7, 0);
        cplx d = (F(x + h) - F(x - h)) / (2.0 * h);
        if (std::abs(d) < 1e-300) break;
        cplx step = F(x) / d;
        x -= step;
        if (std::abs(step) < 1e-13) break;
      }
      if (std::abs(F(x)) > 1e-10) continue;
      if (std::abs(x) <= 1 || contour.radius(std::arg(x)) <= std::abs(x)) continue;
      bool dup = false;
      for (cplx p : found) dup = dup || std::abs(p - x) < 1e-7;
      if (!dup) {
        found.push_back(x);
        if (std::abs(x.imag()) > 1e-9) found.push_back(std::conj(x));
      }
    }
  }
  if (static_cast<int>(found.size()) != count)
    throw solve_error("pole search: located " + std::to_string(found.size()) + " of " +
                      std::to_string(count) + " zeros");
  out.poles = found;
  out.mult.assign(found.size(), 1);
  if (count > 3) throw solve_error("pole of multiplicity/count > 3 unsupported");
  return out;
}

struct SideData {
  std::shared_ptr<ConformalMap> map;
  RHProblem problem;
  std::shared_ptr<RHSolution> sol;
  double eta = 0;
  cplx dgamma1 = 0;  // (d gamma0/dz at eta)^{-1}
};

}  // namespace

StationarySolution corner_linear_system(const ModelSpec& spec_in, const SolveOptions& opt) {
  auto spec_ptr = std::make_shared<ModelSpec>(spec_in);
  const ModelSpec& spec = *spec_ptr;
  ValidationReport vr = validate_model(spec);
  if (!vr.ok) throw invalid_model("corner solve: model failed validation");
  if (spec.mode != SupportMode::nearest)
    throw solve_error("analytic solve supports nearest-neighbour models only");
  StabilityReport stab = classify_stability(spec);
  if (stab.cls == Classification::transient)
    throw solve_error("corner solve: model is transient");

  int m = unknown_count(spec);
  int N1 = spec.n1, N2 = spec.n2;
  KernelPoly kp = kernel_coeffs(spec);
  BranchPoints bp = branch_points(kp);
  ContourPair contours = build_contours(kp, bp);

  TheodorsenOptions topt;
  topt.j = opt.j;
  topt.tol = opt.theo_tol;

  StationarySolution out;
  out.spec = spec_ptr;
  SolveDiagnostics& diag = out.diag;

  // --- both boundary problems ------------------------------------------------
  auto make_side = [&](bool xside) {
    SideData side;
    std::shared_ptr<CutContour> cont_ptr = xside ? contours.M : contours.L;
    const CutContour& cont = *cont_ptr;
    side.map = std::make_shared<ConformalMap>(
        [cont_ptr](double a) { return cont_ptr->radius(a); }, topt);

    PoleSearch ps;
    if (xside) {
      // poles of the continued g0: zeros of A(x, Y0(x)) beyond the disc
      auto acoeff = [&](cplx x, cplx y) {
        CramerEval cx = cramer_x(spec, x);
        cplx f1m = band_f1(spec, N2 - 1, x), f3c = band_f3(spec, N2, x);
        return y * f1m * cx.e[N2 - 1] - f3c * cx.e[N2];
      };
      ps = find_poles(cont, acoeff, kp, true);
    } else {
      auto bcoeff = [&](cplx y, cplx x) {
        CramerEval cy = cramer_y(spec, y);
        cplx g1m = band_g1(spec, N1 - 1, y), g3c = band_g3(spec, N1, y);
        return x * g1m * cy.e[N1 - 1] - g3c * cy.e[N1];
      };
      ps = find_poles(cont, bcoeff, kp, false);
    }

    RHProblem& pr = side.problem;
    pr.m = m;
    pr.map = side.map;
    pr.poles = ps.poles;
    pr.pole_mult = ps.mult;
    int j = side.map->nodes();
    pr.phi.resize(j);
    pr.x.resize(j);
    pr.partner.resize(j);
    pr.U.resize(j);
    pr.w.assign(j, AffineR(m));
    for (int k = 0; k < j; ++k) {
      pr.phi[k] = side.map->phi_grid()[k];
      double psi = side.map->psi()[k];
      cplx z = std::polar(cont.radius(psi), psi);
      pr.x[k] = z;
      pr.partner[k] = cont.cut_parameter(psi);
      cplx partner = pr.partner[k];
      CramerEval cx = cramer_x(spec, xside ? z : partner);
      CramerEval cy = cramer_y(spec, xside ? partner : z);
      CoeffsABC abc = functional_coeffs(spec, xside ? z : partner, xside ? partner : z, cx, cy);
      cplx numer = xside ? abc.A : abc.B;
      cplx denom = xside ? abc.B : abc.A;
      if (std::abs(denom) < 1e-11)
        throw solve_error("boundary assumption violated: divisor coefficient vanishes on the cut");
      cplx prod = 1.0;
      for (size_t i = 0; i < ps.poles.size(); ++i)
        for (int q = 0; q < ps.mult[i]; ++q) prod *= (z - ps.poles[i]);
      pr.U[k] = numer / (denom * prod);
      AffineC ratio = abc.C * (1.0 / denom);
      pr.w[k].base = ratio.base.imag();
      pr.w[k].coef = ratio.imag_row();
    }
    pr.chi = compute_index(pr.U);
    if (pr.chi == 0) {
      // value of f at z = 0 (x = 0): f(0) = prod(-xi) * pi(N1,0) or pi(0,N2)
      cplx prod = 1.0;
      for (size_t i = 0; i < ps.poles.size(); ++i)
        for (int q = 0; q < ps.mult[i]; ++q) prod *= (cplx(0) - ps.poles[i]);
      pr.f_at_zero = AffineC(m);
      pr.f_at_zero.coef(xside ? unknown_index(spec, N1, 0) : unknown_index(spec, 0, N2)) = prod;
      pr.has_f0 = true;
    }
    side.sol = std::make_shared<RHSolution>(pr);
    auto ed = side.map->eta_and_derivative();
    side.eta = ed.eta;
    side.dgamma1 = ed.dgamma_at_1;
    return side;
  };

  SideData sideM = make_side(true);
  SideData sideL = make_side(false);
  diag.chi_g = sideM.problem.chi;
  diag.chi_h = sideL.problem.chi;
  diag.poles_g = static_cast<int>(sideM.problem.poles.size());
  diag.poles_h = static_cast<int>(sideL.problem.poles.size());
  diag.eta_m = sideM.eta;
  diag.eta_l = sideL.eta;
  diag.theodorsen_change_m = sideM.map->final_sweep_change();
  diag.theodorsen_change_l = sideL.map->final_sweep_change();

  // --- affine building blocks --------------------------------------------------
  auto g0_aff_x = [&](cplx x) { return sideM.sol->g0_at_x(x); };
  auto h0_aff_y = [&](cplx y) { return sideL.sol->g0_at_x(y); };

  AffineC g0_at_1 = sideM.sol->g0_at_z(cplx(sideM.eta, 0));
  AffineC h0_at_1 = sideL.sol->g0_at_z(cplx(sideL.eta, 0));

  // jets of g0 and h0 at the point 1 through the maps
  auto jet_at_1 = [&](const SideData& side, int orders) {
    double rz = 0.4 * std::min(1.0 - side.eta, side.eta);
    if (!(rz > 1e-6)) throw solve_error("eta too close to the boundary for derivative jets");
    std::vector<AffineC> zjet = cauchy_taylor(
        [&](cplx z) { return side.sol->g0_at_z(z); }, cplx(side.eta, 0), rz, orders,
        opt.cauchy_nodes);
    // chain rule through x = gamma0(z): first two derivatives suffice
    cplx d1 = side.map->deriv(cplx(side.eta, 0));
    double hz = 1e-5;
    cplx d2 = (side.map->deriv(cplx(side.eta + hz, 0)) - side.map->deriv(cplx(side.eta - hz, 0))) /
              (2 * hz);
    std::vector<AffineC> xjet(orders, AffineC(m));
    xjet[0] = zjet[0];
    if (orders > 1) xjet[1] = zjet[1] * (1.0 / d1);
    if (orders > 2) {
      // g'' = (G'' - g' * gamma'')/gamma'^2 with Taylor factors restored
      AffineC gpp = (zjet[2] * cplx(2.0) - xjet[1] * d2) * (1.0 / (d1 * d1));
      xjet[2] = gpp * cplx(0.5);
    }
    return xjet;  // Taylor coefficients in x at x = 1
  };
  std::vector<AffineC> g0_jet1 = jet_at_1(sideM, 3);
  std::vector<AffineC> h0_jet1 = jet_at_1(sideL, 3);

  // --- rows of the closure system ---------------------------------------------
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  std::vector<std::string> row_names;
  auto push_row = [&](const Eigen::VectorXd& r, double b, const std::string& name) {
    rows.push_back(r);
    rhs.push_back(b);
    row_names.push_back(name);
  };
  auto push_affine_zero = [&](const AffineC& a, const std::string& name, bool both_parts) {
    Eigen::VectorXd re = a.real_row();
    push_row(re, -a.base.real(), name + ":re");
    if (both_parts) push_row(a.imag_row(), -a.base.imag(), name + ":im");
  };

  // equilibrium equations on S_a
  for (int n1 = 0; n1 < N1; ++n1) {
    for (int n2 = 0; n2 < N2; ++n2) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(m);
      for (int i = JumpDistribution::jmin; i <= JumpDistribution::jmax; ++i)
        for (int jj = JumpDistribution::jmin; jj <= JumpDistribution::jmax; ++jj) {
          int s1 = n1 - i, s2 = n2 - jj;
          if (s1 < 0 || s2 < 0 || s1 > N1 || s2 > N2) continue;
          double p = spec.cell(s1, s2).at(i, jj);
          if (p != 0.0) row(unknown_index(spec, s1, s2)) += p;
        }
      row(unknown_index(spec, n1, n2)) -= 1.0;
      push_row(row, 0.0, "balance(" + std::to_string(n1) + "," + std::to_string(n2) + ")");
    }
  }

  // closure from the boundary functions: pi(N1,0) = g0(0), pi(0,N2) = h0(0)
  {
    AffineC g00 = sideM.sol->g0_at_z(cplx(0, 0));
    g00.coef(unknown_index(spec, N1, 0)) -= 1.0;
    push_affine_zero(g00, "g0(0)", false);
    AffineC h00 = sideL.sol->g0_at_z(cplx(0, 0));
    h00.coef(unknown_index(spec, 0, N2)) -= 1.0;
    push_affine_zero(h00, "h0(0)", false);
  }

  // pi(N1,n2) = constant Laurent coefficient of e_{n2} g0 + t_{n2} on a small
  // circle (the polar parts at 0 integrate away)
  {
    double rho_min = 1e300;
    for (int k = 0; k < 64; ++k) rho_min = std::min(rho_min, contours.M->radius(2 * pi * k / 64));
    double r0 = 0.5 * std::min(rho_min, 1.0);
    double other = min_f3_root_distance(spec, cplx(0, 0), true);
    (void)other;
    std::vector<std::vector<AffineC>> acc(N2 + 1,
                                          std::vector<AffineC>(1, AffineC(m)));
    for (int k = 0; k < opt.cauchy_nodes; ++k) {
      double th = 2 * pi * k / opt.cauchy_nodes;
      cplx x = std::polar(r0, th);
      CramerEval ce = cramer_x(spec, x);
      AffineC g0x = g0_aff_x(x);
      for (int n2 = 1; n2 <= N2; ++n2) {
        AffineC val = g0x * ce.e[n2] + ce.t[n2];
        acc[n2][0] += val;
      }
    }
    for (int n2 = 1; n2 <= N2; ++n2) {
      AffineC c0 = acc[n2][0] * (1.0 / static_cast<double>(opt.cauchy_nodes));
      c0.coef(unknown_index(spec, N1, n2)) -= 1.0;
      push_affine_zero(c0, "series(N1," + std::to_string(n2) + ")", false);
    }

    double rho_min_l = 1e300;
    for (int k = 0; k < 64; ++k)
      rho_min_l = std::min(rho_min_l, contours.L->radius(2 * pi * k / 64));
    double r0l = 0.5 * std::min(rho_min_l, 1.0);
    std::vector<AffineC> accl(N1 + 1, AffineC(m));
    for (int k = 0; k < opt.cauchy_nodes; ++k) {
      double th = 2 * pi * k / opt.cauchy_nodes;
      cplx y = std::polar(r0l, th);
      CramerEval ce = cramer_y(spec, y);
      AffineC h0y = h0_aff_y(y);
      for (int n1 = 1; n1 <= N1; ++n1) accl[n1] += h0y * ce.e[n1] + ce.t[n1];
    }
    for (int n1 = 1; n1 <= N1; ++n1) {
      AffineC c0 = accl[n1] * (1.0 / static_cast<double>(opt.cauchy_nodes));
      c0.coef(unknown_index(spec, n1, N2)) -= 1.0;
      push_affine_zero(c0, "series(" + std::to_string(n1) + ",N2)", false);
    }
  }

  // normalization: S_a mass + boundary generating functions at 1 + g(1,1)
  DriftVector drifts = mean_drifts(spec);
  CramerEval cx1 = cramer_x(spec, cplx(1, 0));
  CramerEval cy1 = cramer_y(spec, cplx(1, 0));
  CramerJet cxj = cramer_x_jet(spec, cplx(1, 0), 3, 0.08, opt.cauchy_nodes);
  CramerJet cyj = cramer_y_jet(spec, cplx(1, 0), 3, 0.08, opt.cauchy_nodes);

  // N(x) = A(x,1) g0(x) + B(x,1) h0(1) + C(x,1) as a Taylor jet at 1
  const int orders = 3;
  TaylorC f1m = poly_taylor_at(band_poly_coeffs_x(spec, N2 - 1, 1), 1.0);
  TaylorC f3c = poly_taylor_at(band_poly_coeffs_x(spec, N2, 3), 1.0);
  TaylorC Ajet(orders, cplx(0));
  {
    TaylorC eN2m(cxj.e[N2 - 1].begin(), cxj.e[N2 - 1].end());
    TaylorC eN2(cxj.e[N2].begin(), cxj.e[N2].end());
    TaylorC t1 = mul(f1m, eN2m, orders);
    TaylorC t2 = mul(f3c, eN2, orders);
    for (int k = 0; k < orders; ++k) Ajet[k] = t1[k] - t2[k];
  }
  cplx B_at_x1_coef = band_g1(spec, N1 - 1, cplx(1, 0)) * cy1.e[N1 - 1];
  cplx B_const = -band_g3(spec, N1, cplx(1, 0)) * cy1.e[N1];
  TaylorC Bjet{B_at_x1_coef + B_const, B_at_x1_coef, 0.0};

  TaylorA Cjet(orders, AffineC(m));
  {
    add_into(Cjet, mul(f1m, cxj.t[N2 - 1], orders));
    TaylorA sub = mul(f3c, cxj.t[N2], orders);
    for (int k = 0; k < orders; ++k) Cjet[k] -= sub[k];
    // y = 1 parts, linear in x
    AffineC ylin = cy1.t[N1 - 1] * band_g1(spec, N1 - 1, cplx(1, 0));
    AffineC ycon = cy1.t[N1] * (-band_g3(spec, N1, cplx(1, 0)));
    Cjet[0] += ylin + ycon;
    Cjet[1] += ylin;
    // corner term at y = 1
    AffineC corner(m);
    corner.coef(unknown_index(spec, N1 - 1, N2 - 1)) += spec.cell(N1 - 1, N2 - 1).at(1, 1);
    corner.coef(unknown_index(spec, N1 - 1, N2)) -= spec.cell(N1 - 1, N2).at(1, -1);
    corner.coef(unknown_index(spec, N1, N2 - 1)) -= spec.cell(N1, N2 - 1).at(-1, 1);
    corner.coef(unknown_index(spec, N1, N2)) += spec.cell(N1, N2).at(-1, -1);
    AffineC corner_x(m);  // x-linear part of the corner term
    corner_x.coef(unknown_index(spec, N1 - 1, N2 - 1)) += spec.cell(N1 - 1, N2 - 1).at(1, 1);
    corner_x.coef(unknown_index(spec, N1 - 1, N2)) -= spec.cell(N1 - 1, N2).at(1, -1);
    AffineC corner_0(m);
    corner_0.coef(unknown_index(spec, N1, N2 - 1)) -= spec.cell(N1, N2 - 1).at(-1, 1);
    corner_0.coef(unknown_index(spec, N1, N2)) += spec.cell(N1, N2).at(-1, -1);
    Cjet[0] += corner_x + corner_0;
    Cjet[1] += corner_x;
  }

  TaylorA Njet(orders, AffineC(m));
  {
    TaylorA g0jet = {g0_jet1[0], g0_jet1[1], g0_jet1[2]};
    add_into(Njet, mul(Ajet, g0jet, orders));
    for (int k = 0; k < orders; ++k) Njet[k] += h0_at_1 * Bjet[k];
    add_into(Njet, Cjet);
  }
  double p1row = spec.cell(N1, N2).at(1, -1) + spec.cell(N1, N2).at(1, 0) +
                 spec.cell(N1, N2).at(1, 1);
  AffineC g11 = Njet[1] * (1.0 / (-drifts.ex));
  AffineC dxg11 = (Njet[2] + g11 * p1row) * (1.0 / (-drifts.ex));

  {
    AffineC norm(m);
    for (int n1 = 0; n1 < N1; ++n1)
      for (int n2 = 0; n2 < N2; ++n2) norm.coef(unknown_index(spec, n1, n2)) += 1.0;
    for (int n2 = 0; n2 < N2; ++n2) norm += g0_at_1 * cx1.e[n2] + cx1.t[n2];
    for (int n1 = 0; n1 < N1; ++n1) norm += h0_at_1 * cy1.e[n1] + cy1.t[n1];
    norm += g11;
    norm.base -= 1.0;
    push_affine_zero(norm, "normalization", false);
  }

  // solvability conditions of both boundary problems
  for (size_t k = 0; k < sideM.sol->fourier_conditions().size(); ++k)
    push_affine_zero(sideM.sol->fourier_conditions()[k], "fourierM" + std::to_string(k), true);
  for (size_t k = 0; k < sideL.sol->fourier_conditions().size(); ++k)
    push_affine_zero(sideL.sol->fourier_conditions()[k], "fourierL" + std::to_string(k), true);

  // --- least squares -------------------------------------------------------------
  // rows that are numerically zero (identically satisfied conditions, e.g.
  // the mean of an odd data column) carry no information and must not be
  // inflated by the normalization
  {
    size_t keep = 0;
    for (size_t k = 0; k < rows.size(); ++k) {
      if (rows[k].norm() < 1e-9 && std::abs(rhs[k]) < 1e-9) continue;
      rows[keep] = rows[k];
      rhs[keep] = rhs[k];
      row_names[keep] = row_names[k];
      ++keep;
    }
    rows.resize(keep);
    rhs.resize(keep);
    row_names.resize(keep);
  }
  int nrows = static_cast<int>(rows.size());
  Eigen::MatrixXd Amat(nrows, m);
  Eigen::VectorXd bvec(nrows);
  for (int k = 0; k < nrows; ++k) {
    double scale = std::max(rows[k].norm(), 1e-300);
    Amat.row(k) = rows[k] / scale;
    bvec(k) = rhs[k] / scale;
  }
  Eigen::VectorXd u = Amat.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(bvec);
  double lsres = (Amat * u - bvec).cwiseAbs().maxCoeff();
  diag.ls_residual = lsres;
  if (lsres > opt.ls_tol)
    throw solve_error("corner system inconsistent: residual " + std::to_string(lsres));
  double most_negative = u.minCoeff();
  if (most_negative < -1e-8)
    throw solve_error("corner solve produced a negative probability: " +
                      std::to_string(most_negative));
  for (int k = 0; k < m; ++k) u(k) = std::max(u(k), 0.0);

  // equilibrium defect at the solution (unnormalized rows)
  double eqres = 0;
  for (int k = 0; k < nrows; ++k)
    if (row_names[k].rfind("balance", 0) == 0) eqres = std::max(eqres, std::abs(rows[k].dot(u) - rhs[k]));
  diag.equilibrium_residual = eqres;

  // held-out boundary residual on both contours
  if (opt.check_heldout) {
    auto heldout = [&](const SideData& side, bool xside) {
      const CutContour& cont = xside ? *contours.M : *contours.L;
      std::vector<double> angles;
      std::vector<cplx> U2;
      std::vector<AffineR> w2;
      int probes = 64;
      for (int k = 0; k < probes; ++k) {
        double phi = 2 * pi * (k + 0.5) / probes;
        double psi = side.map->boundary_angle(phi);
        cplx z = std::polar(cont.radius(psi), psi);
        double partner = cont.cut_parameter(psi);
        CramerEval cx = cramer_x(spec, xside ? z : cplx(partner, 0));
        CramerEval cy = cramer_y(spec, xside ? cplx(partner, 0) : z);
        CoeffsABC abc =
            functional_coeffs(spec, xside ? z : partner, xside ? cplx(partner, 0) : z, cx, cy);
        cplx numer = xside ? abc.A : abc.B;
        cplx denom = xside ? abc.B : abc.A;
        cplx prod = 1.0;
        for (size_t i = 0; i < side.problem.poles.size(); ++i)
          for (int q = 0; q < side.problem.pole_mult[i]; ++q) prod *= (z - side.problem.poles[i]);
        AffineR w(m);
        AffineC ratio = abc.C * (1.0 / denom);
        w.base = ratio.base.imag();
        w.coef = ratio.imag_row();
        angles.push_back(phi);
        U2.push_back(numer / (denom * prod));
        w2.push_back(w);
      }
      return side.sol->heldout_residual(side.problem, u, angles, U2, w2);
    };
    diag.boundary_residual_g = heldout(sideM, true);
    diag.boundary_residual_h = heldout(sideL, false);
  }

  double condres = 0;
  for (const AffineC& c : sideM.sol->conditions()) {
    diag.condition_residuals_g.push_back(std::abs(c.eval(u)));
    condres = std::max(condres, diag.condition_residuals_g.back());
  }
  for (const AffineC& c : sideL.sol->conditions()) {
    diag.condition_residuals_h.push_back(std::abs(c.eval(u)));
    condres = std::max(condres, diag.condition_residuals_h.back());
  }
  diag.condition_residual = condres;
  diag.pole_values_g = sideM.problem.poles;
  diag.pole_values_h = sideL.problem.poles;
  if (opt.keep_boundary) {
    auto keep = [&](const RHProblem& pr, std::vector<SolveDiagnostics::BoundarySample>& dst) {
      for (size_t k = 0; k < pr.phi.size(); ++k)
        dst.push_back({pr.phi[k], pr.x[k], std::abs(pr.U[k]), pr.w[k].eval(u)});
    };
    keep(sideM.problem, diag.boundary_g);
    keep(sideL.problem, diag.boundary_h);
  }

  // --- package the solution -------------------------------------------------------
  out.pi = u;
  out.g0_1 = g0_at_1.eval(u).real();
  out.h0_1 = h0_at_1.eval(u).real();
  out.dg0_1 = g0_jet1[1].eval(u).real();
  out.dh0_1 = h0_jet1[1].eval(u).real();
  out.d2g0_1 = 2.0 * g0_jet1[2].eval(u).real();
  out.d2h0_1 = 2.0 * h0_jet1[2].eval(u).real();

  auto solM = sideM.sol;
  auto solL = sideL.sol;
  Eigen::VectorXd ufinal = u;
  out.g0 = [solM, ufinal](cplx x) { return solM->g0_at_x(x).eval(ufinal); };
  out.h0 = [solL, ufinal](cplx y) { return solL->g0_at_x(y).eval(ufinal); };
  out.g_n2 = [spec_ptr, solM, ufinal](int n2, cplx x) {
    CramerEval ce = cramer_x(*spec_ptr, x);
    return ce.e[n2] * solM->g0_at_x(x).eval(ufinal) + ce.t[n2].eval(ufinal);
  };
  out.h_n1 = [spec_ptr, solL, ufinal](int n1, cplx y) {
    CramerEval ce = cramer_y(*spec_ptr, y);
    return ce.e[n1] * solL->g0_at_x(y).eval(ufinal) + ce.t[n1].eval(ufinal);
  };

  double normdef = 0;
  {
    double total = 0;
    for (int n1 = 0; n1 < N1; ++n1)
      for (int n2 = 0; n2 < N2; ++n2) total += u(unknown_index(spec, n1, n2));
    for (int n2 = 0; n2 < N2; ++n2)
      total += (g0_at_1 * cx1.e[n2] + cx1.t[n2]).eval(u).real();
    for (int n1 = 0; n1 < N1; ++n1)
      total += (h0_at_1 * cy1.e[n1] + cy1.t[n1]).eval(u).real();
    total += g11.eval(u).real();
    normdef = std::abs(total - 1.0);
  }
  diag.normalization_defect = normdef;
  (void)dxg11;
  return out;
}

cplx evaluate_joint_pgf(const StationarySolution& sol, cplx x, cplx y) {
  const ModelSpec& spec = *sol.spec;
  KernelPoly kp = kernel_coeffs(spec);
  auto value = [&](cplx xx, cplx yy) {
    CramerEval cx = cramer_x(spec, xx);
    CramerEval cy = cramer_y(spec, yy);
    CoeffsABC abc = functional_coeffs(spec, xx, yy, cx, cy);
    Eigen::VectorXd u = sol.pi;
    cplx numer = abc.A * sol.g0(xx) + abc.B * sol.h0(yy) + abc.C.eval(u);
    return numer / kp.R(xx, yy);
  };
  // the pgf is analytic even where the formula degenerates (component poles
  // at the origin, kernel zeros); the mean over a small ring recovers it
  if (std::abs(x) < 0.03) {
    cplx acc = 0;
    for (int k = 0; k < 8; ++k)
      acc += evaluate_joint_pgf(sol, x + std::polar(0.06, 2 * pi * (k + 0.3) / 8), y);
    return acc / 8.0;
  }
  if (std::abs(y) < 0.03) {
    cplx acc = 0;
    for (int k = 0; k < 8; ++k)
      acc += evaluate_joint_pgf(sol, x, y + std::polar(0.06, 2 * pi * (k + 0.3) / 8));
    return acc / 8.0;
  }
  if (std::abs(kp.R(x, y)) > 1e-7) return value(x, y);
  cplx acc = 0;
  for (int k = 0; k < 8; ++k) {
    cplx dx = std::polar(1e-5, 2 * pi * k / 8);
    acc += value(x + dx, y);
  }
  return acc / 8.0;
}

}  // namespace qp
