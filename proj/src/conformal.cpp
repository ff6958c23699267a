#include "qp/conformal.hpp"

#include <algorithm>
#include <cmath>

namespace qp {

std::vector<double> conjugate_function(const std::vector<double>& f) {
  int n = static_cast<int>(f.size());
  if (n % 2 != 0) throw solve_error("conjugate_function needs an even grid");
  // cot(pi*m/n) is pi-periodic in m, so offsets reduce mod n; only odd
  // offsets enter (alternate-point trapezoid of the cotangent kernel)
  std::vector<double> cot_odd(n, 0.0);
  for (int m = 1; m < n; m += 2) cot_odd[m] = 1.0 / std::tan(pi * m / n);
  std::vector<double> out(n, 0.0);
  for (int k = 0; k < n; ++k) {
    double s = 0;
    for (int j = (k + 1) % 2; j < n; j += 2) {
      int m = ((k - j) % n + n) % n;
      s += f[j] * cot_odd[m];
    }
    out[k] = 2.0 * s / n;
  }
  return out;
}

double trig_interp(const std::vector<double>& values, double phi) {
  int n = static_cast<int>(values.size());
  double h = 2 * pi / n;
  double s = 0;
  for (int j = 0; j < n; ++j) {
    double t = phi - j * h;
    double m = std::remainder(t, 2 * pi);
    if (std::abs(m) < 1e-14) return values[j];
    s += values[j] * std::sin(0.5 * n * t) / std::tan(0.5 * t);
  }
  return s / n;
}

SchwarzSeries::SchwarzSeries(const std::vector<double>& samples) {
  int n = static_cast<int>(samples.size());
  if (n % 2 != 0) throw solve_error("SchwarzSeries needs an even grid");
  int half = n / 2;
  coef_.assign(half + 1, 0.0);
  for (int m = 0; m <= half; ++m) {
    cplx c = 0;
    for (int k = 0; k < n; ++k) c += samples[k] * std::polar(1.0, -2 * pi * m * k / n);
    c /= static_cast<double>(n);
    coef_[m] = (m == 0 || m == half) ? c : 2.0 * c;
  }
}

cplx SchwarzSeries::eval(cplx z) const {
  cplx s = 0;
  for (int m = static_cast<int>(coef_.size()) - 1; m >= 0; --m) s = s * z + coef_[m];
  return s;
}

cplx SchwarzSeries::deriv(cplx z) const {
  cplx s = 0;
  for (int m = static_cast<int>(coef_.size()) - 1; m >= 1; --m)
    s = s * z + static_cast<double>(m) * coef_[m];
  return s;
}

ConformalMap::ConformalMap(RadialCurve curve, const TheodorsenOptions& opt)
    : curve_(std::move(curve)), j_(opt.j % 2 == 0 ? opt.j : opt.j + 1) {
  phi_.resize(j_);
  psi_.resize(j_);
  logrho_.resize(j_);
  rho_.resize(j_);
  tnodes_.resize(j_);
  for (int k = 0; k < j_; ++k) {
    phi_[k] = 2 * pi * k / j_;
    psi_[k] = phi_[k];
    tnodes_[k] = std::polar(1.0, phi_[k]);
  }
  double change = 0;
  int sweep = 0;
  for (; sweep < opt.max_sweeps; ++sweep) {
    for (int k = 0; k < j_; ++k) {
      double r = curve_(psi_[k]);
      if (!(r > 0)) throw solve_error("Theodorsen: nonpositive radius");
      logrho_[k] = std::log(r);
    }
    std::vector<double> conj = conjugate_function(logrho_);
    change = 0;
    double relax = sweep < opt.relax_sweeps ? opt.relax : 1.0;
    for (int k = 0; k < j_; ++k) {
      double target = phi_[k] + conj[k];
      change = std::max(change, std::abs(target - psi_[k]));
      psi_[k] += relax * (target - psi_[k]);
    }
    if (change < opt.tol) break;
  }
  final_change_ = change;
  sweeps_ = sweep + 1;
  if (change >= opt.tol)
    throw solve_error("Theodorsen iteration did not converge; last sweep changed by " +
                      std::to_string(change));
  for (int k = 0; k < j_; ++k) {
    rho_[k] = curve_(psi_[k]);
    logrho_[k] = std::log(rho_[k]);
  }
  for (int k = 1; k < j_; ++k)
    if (psi_[k] <= psi_[k - 1])
      throw solve_error("Theodorsen: boundary correspondence is not monotone");
  series_ = SchwarzSeries(logrho_);
}

cplx ConformalMap::schwarz(cplx z) const { return series_.eval(z); }

cplx ConformalMap::schwarz_deriv(cplx z) const { return series_.deriv(z); }

cplx ConformalMap::eval(cplx z) const {
  double r = std::abs(z);
  if (r > 1 + 1e-12) throw invalid_model("gamma0 evaluated outside the closed disc");
  if (r == 0.0) return 0.0;
  if (r > 1 - 1e-9) return boundary(std::arg(z));
  return z * std::exp(schwarz(z));
}

cplx ConformalMap::deriv(cplx z) const {
  if (std::abs(z) >= 1) throw invalid_model("gamma0 derivative needs |z| < 1");
  cplx e = std::exp(schwarz(z));
  if (std::abs(z) < 1e-14) return e;
  return e + z * e * schwarz_deriv(z);
}

double ConformalMap::boundary_angle(double phi) const {
  // psi~ - phi is periodic and smooth: interpolate that
  std::vector<double> diff(j_);
  for (int k = 0; k < j_; ++k) diff[k] = psi_[k] - phi_[k];
  double wrapped = std::remainder(phi, 2 * pi);
  return phi + trig_interp(diff, wrapped);
}

double ConformalMap::boundary_radius(double phi) const { return curve_(boundary_angle(phi)); }

cplx ConformalMap::boundary(double phi) const {
  double psi = boundary_angle(phi);
  return std::polar(curve_(psi), psi);
}

cplx ConformalMap::inverse(cplx x) const {
  if (std::abs(x) < 1e-300) return 0.0;
  // seed from the boundary correspondence: match the polar angle, scale the
  // radius relative to the contour
  double alpha = std::arg(x);
  if (alpha < 0) alpha += 2 * pi;
  double rt = std::abs(x) / curve_(alpha);
  // invert the monotone psi~ table for the angle seed
  auto it = std::lower_bound(psi_.begin(), psi_.end(), alpha);
  double phi0 = phi_[std::min<size_t>(it - psi_.begin(), j_ - 1)];
  std::vector<cplx> seeds{std::polar(std::clamp(rt, 0.05, 0.99), phi0),
                          std::polar(0.5, phi0), x / deriv(0.0)};
  for (cplx z : seeds) {
    if (std::abs(z) > 0.999) z *= 0.999 / std::abs(z);
    bool ok = false;
    for (int it2 = 0; it2 < 80; ++it2) {
      cplx f = eval(z) - x;
      if (std::abs(f) < 1e-12) {
        ok = true;
        break;
      }
      cplx dz = f / deriv(z);
      double lim = 0.2 * (1 + std::abs(z));
      if (std::abs(dz) > lim) dz *= lim / std::abs(dz);
      cplx znew = z - dz;
      if (std::abs(znew) > 0.9999) znew *= 0.9999 / std::abs(znew);
      z = znew;
    }
    if (ok && std::abs(eval(z) - x) < 1e-10) return z;
  }
  // boundary fallback: invert the monotone correspondence when the target
  // sits on the contour itself
  {
    auto it2 = std::lower_bound(psi_.begin(), psi_.end(), alpha);
    size_t hi2 = std::min<size_t>(it2 - psi_.begin(), j_ - 1);
    double lo2 = hi2 > 0 ? phi_[hi2 - 1] : phi_[0] - 2 * pi / j_;
    double a = lo2, b = phi_[hi2];
    for (int it3 = 0; it3 < 80; ++it3) {
      double mid = 0.5 * (a + b);
      (boundary_angle(mid) < alpha ? a : b) = mid;
    }
    double phi = 0.5 * (a + b);
    if (std::abs(boundary(phi) - x) < 1e-8) return std::polar(1.0, phi);
  }
  throw solve_error("conformal inverse: Newton did not converge");
}

ConformalMap::EtaData ConformalMap::eta_and_derivative() const {
  double beta0 = curve_(0.0);
  if (beta0 < 1 - 1e-9)
    throw solve_error("gamma0(eta) = 1 has no solution in [0,1]: contour ends at " +
                      std::to_string(beta0));
  EtaData out;
  if (beta0 < 1 + 1e-9) {
    out.eta = 1.0;
    // tangency: one-sided radial Richardson for the derivative
    double h = 1e-4;
    cplx d1 = deriv(cplx(1 - h, 0)), d2 = deriv(cplx(1 - h / 2, 0));
    out.dgamma_at_1 = 1.0 / (2.0 * d2 - d1);
    return out;
  }
  double lo = 0, hi = 1 - 1e-12;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double v = eval(cplx(mid, 0)).real();
    (v < 1 ? lo : hi) = mid;
    if (hi - lo < 1e-15) break;
  }
  double eta = 0.5 * (lo + hi);
  for (int it = 0; it < 30; ++it) {  // Newton polish on the real segment
    double f = eval(cplx(eta, 0)).real() - 1;
    double df = deriv(cplx(eta, 0)).real();
    if (df <= 0) break;
    double step = f / df;
    eta -= step;
    eta = std::clamp(eta, 0.0, 1 - 1e-14);
    if (std::abs(step) < 1e-16) break;
  }
  out.eta = eta;
  out.dgamma_at_1 = 1.0 / deriv(cplx(eta, 0));
  return out;
}

}  // namespace qp
