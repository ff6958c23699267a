#include "qp/bvp.hpp"

#include <cmath>

namespace qp {

int compute_index(const std::vector<cplx>& U) {
  size_t n = U.size();
  double total = 0;
  for (size_t k = 0; k < n; ++k) {
    cplx ratio = U[(k + 1) % n] / U[k];
    double step = std::arg(ratio);
    if (std::abs(step) > pi / 2)
      throw solve_error("index sampling too coarse: phase step exceeds pi/2");
    total += step;
  }
  return -static_cast<int>(std::lround(total / pi));
}

RHSolution::RHSolution(const RHProblem& problem) {
  m_ = problem.m;
  jgrid_ = static_cast<int>(problem.phi.size());
  poles_ = problem.poles;
  pole_mult_ = problem.pole_mult;
  map_ = problem.map;
  int j = jgrid_;

  // periodic phase of Lambda = i U after removing the integer winding
  std::vector<double> alpha_raw(j);
  for (int k = 0; k < j; ++k) alpha_raw[k] = std::arg(cplx(0, 1) * problem.U[k]);
  std::vector<double> alpha = unwrap_phase(alpha_raw);
  double closure = alpha[j - 1] + std::arg(problem.U[0] / problem.U[j - 1]) - alpha[0];
  n_ = static_cast<int>(std::lround(closure / (2 * pi)));
  if (-2 * n_ != problem.chi)
    throw solve_error("index mismatch between the winding and the sampled chi");
  if (n_ < 0) throw solve_error("positive index chi > 0 is not supported");

  std::vector<double> theta(j);
  for (int k = 0; k < j; ++k) theta[k] = alpha[k] - n_ * problem.phi[k];
  stheta_ = SchwarzSeries(theta);
  std::vector<double> theta_conj = conjugate_function(theta);

  std::vector<double> r(j);
  for (int k = 0; k < j; ++k) r[k] = std::abs(problem.U[k]) * std::exp(theta_conj[k]);

  int half = j / 2;
  int cols = m_ + 1;
  phi_coefs_.assign(cols, {});
  kconst_.assign(cols, 0.0);
  double s0 = stheta_.mean();

  // Fourier data of d = w/r per affine column
  std::vector<std::vector<cplx>> chat(cols, std::vector<cplx>(half + 1, cplx(0)));
  std::vector<std::vector<double>> d(cols, std::vector<double>(j));
  for (int k = 0; k < j; ++k) {
    d[0][k] = problem.w[k].base / r[k];
    for (int q = 0; q < m_; ++q) d[q + 1][k] = problem.w[k].coef(q) / r[k];
  }
  for (int c = 0; c < cols; ++c) {
    for (int mm = 0; mm <= half; ++mm) {
      cplx acc = 0;
      for (int k = 0; k < j; ++k) acc += d[c][k] * std::polar(1.0, -mm * problem.phi[k]);
      chat[c][mm] = acc / static_cast<double>(j);
    }
  }

  // strict solvability: the data may carry no harmonics below the winding
  fourier_conditions_.clear();
  for (int mm = 0; mm < n_; ++mm) {
    AffineC cond(m_);
    cond.base = chat[0][mm];
    for (int q = 0; q < m_; ++q) cond.coef(q) = chat[q + 1][mm];
    fourier_conditions_.push_back(cond);
  }

  // shifted solution series Phi(z) = sum_{mm >= n} mult*chat_mm z^{mm-n}
  for (int c = 0; c < cols; ++c) {
    std::vector<cplx>& pc = phi_coefs_[c];
    pc.assign(half + 1 - n_, cplx(0));
    for (int mm = n_; mm <= half; ++mm) {
      double mult = (mm == 0 || mm == half) ? 1.0 : 2.0;
      pc[mm - n_] = mult * chat[c][mm];
    }
    if (n_ == 0) {
      // the winding-zero problem leaves one real constant free; the value
      // of f at the origin supplies the missing closure
      if (!problem.has_f0)
        throw solve_error("chi = 0 problem needs the value at the origin to fix K");
      cplx p0 = pc.empty() ? cplx(0) : pc[0];
      cplx f0 = c == 0 ? problem.f_at_zero.base : problem.f_at_zero.coef(c - 1);
      cplx kc = (f0 * std::exp(cplx(0, 1) * s0) - p0) / cplx(0, 1);
      if (std::abs(kc.imag()) > 1e-7)
        throw solve_error("chi = 0 closure is inconsistent with the boundary data");
      kconst_[c] = kc.real();
    }
  }
  (void)s0;

  // The displayed solvability integrals of the solution formula are the
  // low-order Taylor coefficients of z^n S[d](z) (1-z)^{-2n}: the first n
  // vanish identically and the rest are a triangular combination of the
  // strict Fourier conditions, so everything reduces to finite convolutions.
  conditions_.clear();
  if (n_ > 0) {
    std::vector<double> binom(n_, 1.0);  // C(2n-1+l, l), l = 0..n-1
    for (int l = 1; l < n_; ++l) binom[l] = binom[l - 1] * (2.0 * n_ - 1 + l) / l;
    for (int k = 0; k < 2 * n_; ++k) {
      AffineC cond(m_);
      if (k >= n_) {
        for (int jj = 0; jj <= k - n_; ++jj) {
          double mult = (jj == 0) ? 1.0 : 2.0;
          double wgt = mult * binom[k - n_ - jj];
          cond.base += wgt * chat[0][jj];
          for (int q = 0; q < m_; ++q) cond.coef(q) += wgt * chat[q + 1][jj];
        }
      }
      conditions_.push_back(cond);
    }
  }
}

AffineC RHSolution::f_at(cplx z) const {
  cplx E = std::exp(cplx(0, -1) * stheta_.eval(z));
  AffineC out(m_);
  for (int c = 0; c <= m_; ++c) {
    cplx phi = 0;
    for (int mm = static_cast<int>(phi_coefs_[c].size()) - 1; mm >= 0; --mm)
      phi = phi * z + phi_coefs_[c][mm];
    cplx val = E * (phi + cplx(0, kconst_[c]));
    if (c == 0)
      out.base = val;
    else
      out.coef(c - 1) = val;
  }
  return out;
}

AffineC RHSolution::g0_at_z(cplx z) const {
  AffineC f = f_at(z);
  if (poles_.empty()) return f;
  cplx prod = 1.0;
  cplx x = map_->eval(z);
  for (size_t i = 0; i < poles_.size(); ++i)
    for (int q = 0; q < pole_mult_[i]; ++q) prod *= (x - poles_[i]);
  return f * (1.0 / prod);
}

AffineC RHSolution::g0_at_x(cplx x) const { return g0_at_z(map_->inverse(x)); }

double RHSolution::heldout_residual(const RHProblem& problem, const Eigen::VectorXd& u,
                                    const std::vector<double>& angles,
                                    const std::vector<cplx>& U,
                                    const std::vector<AffineR>& w) const {
  (void)problem;
  double worst = 0;
  for (size_t k = 0; k < angles.size(); ++k) {
    cplx z = std::polar(1.0, angles[k]);
    cplx f = f_at(z).eval(u);
    double lhs = (cplx(0, 1) * U[k] * f).real();
    worst = std::max(worst, std::abs(lhs - w[k].eval(u)));
  }
  return worst;
}

std::vector<AffineC> cauchy_taylor(const std::function<AffineC(cplx)>& f, cplx center,
                                   double radius, int orders, int nodes) {
  std::vector<AffineC> out;
  int m = 0;
  for (int k = 0; k < nodes; ++k) {
    double t = 2 * pi * k / nodes;
    AffineC v = f(center + std::polar(radius, t));
    if (k == 0) {
      m = v.dim();
      out.assign(orders, AffineC(m));
    }
    for (int j = 0; j < orders; ++j) {
      cplx ph = std::polar(1.0, -j * t);
      out[j].base += v.base * ph;
      out[j].coef += v.coef * ph;
    }
  }
  for (int j = 0; j < orders; ++j) out[j] *= cplx(1.0 / (nodes * std::pow(radius, j)), 0);
  return out;
}

}  // namespace qp
