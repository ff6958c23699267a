#include "qp/model.hpp"

#include <algorithm>
#include <cmath>

namespace qp {

ModelSpec make_model(int n1, int n2, SupportMode mode) {
  if (n1 < 1 || n2 < 1) throw invalid_model("levels N1, N2 must be >= 1");
  ModelSpec s;
  s.n1 = n1;
  s.n2 = n2;
  s.mode = mode;
  s.grid.assign(static_cast<size_t>(n1 + 1) * (n2 + 1), JumpDistribution{});
  return s;
}

const JumpDistribution& kernel_at(const ModelSpec& spec, long q1, long q2) {
  return spec.at_state(q1, q2);
}

ValidationReport validate_model(const ModelSpec& spec) {
  ValidationReport rep;
  auto flag = [&](int c1, int c2, const std::string& what) {
    rep.ok = false;
    rep.issues.push_back({c1, c2, what});
  };
  for (int c1 = 0; c1 <= spec.n1; ++c1) {
    for (int c2 = 0; c2 <= spec.n2; ++c2) {
      const JumpDistribution& d = spec.cell(c1, c2);
      double res = std::abs(d.row_sum() - 1.0);
      rep.max_row_residual = std::max(rep.max_row_residual, res);
      if (res > 1e-12) flag(c1, c2, "row sum deviates from 1 by " + std::to_string(res));
      if (d.min_entry() < 0) flag(c1, c2, "negative probability");
      if (spec.mode == SupportMode::nearest && !d.nearest_support())
        flag(c1, c2, "mass outside nearest-neighbour support");
      for (int i = JumpDistribution::jmin; i <= JumpDistribution::jmax; ++i) {
        for (int j = JumpDistribution::jmin; j <= JumpDistribution::jmax; ++j) {
          if (d.at(i, j) == 0.0) continue;
          // cells with c < N represent exactly the states n = c, so a jump
          // below -c would need the [.]^+ fold the builders already applied
          int floor1 = (c1 < spec.n1) ? c1 : spec.n1;
          int floor2 = (c2 < spec.n2) ? c2 : spec.n2;
          if (i < -floor1 || j < -floor2)
            flag(c1, c2, "unfolded boundary mass at jump (" + std::to_string(i) + "," +
                             std::to_string(j) + ")");
        }
      }
    }
  }
  return rep;
}

// --- RA network --------------------------------------------------------------

RaParams ra_params_power(double l1, double l2, double r1, double r2, int n1, int n2) {
  if (!(l1 > 0 && l1 < 1 && l2 > 0 && l2 < 1 && r1 > 0 && r1 < 1 && r2 > 0 && r2 < 1))
    throw invalid_model("RA parameters must lie in (0,1)");
  RaParams p;
  p.n1 = n1;
  p.n2 = n2;
  size_t cells = static_cast<size_t>(n1 + 1) * (n2 + 1);
  p.a1.resize(cells);
  p.a2.resize(cells);
  p.l1.resize(cells);
  p.l2.resize(cells);
  for (int c1 = 0; c1 <= n1; ++c1)
    for (int c2 = 0; c2 <= n2; ++c2) {
      p.at(p.a1, c1, c2) = 1.0 - std::pow(r1, c1);
      p.at(p.a2, c1, c2) = 1.0 - std::pow(r2, c2);
      p.at(p.l1, c1, c2) = std::pow(l1, c1);
      p.at(p.l2, c1, c2) = std::pow(l2, c2);
    }
  return p;
}

RaParams ra_params_scaled(double l, double a, int n1, int n2) {
  if (!(l > 0 && l < 1 && a > 0 && a < 1)) throw invalid_model("RA parameters must lie in (0,1)");
  RaParams p;
  p.n1 = n1;
  p.n2 = n2;
  size_t cells = static_cast<size_t>(n1 + 1) * (n2 + 1);
  p.a1.resize(cells);
  p.a2.resize(cells);
  p.l1.resize(cells);
  p.l2.resize(cells);
  for (int c1 = 0; c1 <= n1; ++c1)
    for (int c2 = 0; c2 <= n2; ++c2) {
      int norm = c1 + c2;
      p.at(p.a1, c1, c2) = norm == 0 ? 0.0 : a * c1 / norm;
      p.at(p.a2, c1, c2) = norm == 0 ? 0.0 : a * c2 / norm;
      double lam = l * std::pow(2.0, -norm);
      p.at(p.l1, c1, c2) = lam;
      p.at(p.l2, c1, c2) = lam;
    }
  return p;
}

ModelSpec build_ra_model(const RaParams& p) {
  ModelSpec spec = make_model(p.n1, p.n2, SupportMode::nearest);
  for (int c1 = 0; c1 <= p.n1; ++c1) {
    for (int c2 = 0; c2 <= p.n2; ++c2) {
      double a1 = p.get(p.a1, c1, c2), a2 = p.get(p.a2, c1, c2);
      double l1 = p.get(p.l1, c1, c2), l2 = p.get(p.l2, c1, c2);
      if (a1 < 0 || a1 > 1 || a2 < 0 || a2 > 1 || l1 < 0 || l1 > 1 || l2 < 0 || l2 > 1)
        throw invalid_model("RA cell probability outside [0,1]");
      if (c1 == 0 && a1 != 0.0) throw invalid_model("a1 must vanish on an empty queue");
      if (c2 == 0 && a2 != 0.0) throw invalid_model("a2 must vanish on an empty queue");
      double b1 = 1 - a1, b2 = 1 - a2;
      double d10 = l1 * (1 - l2), d01 = l2 * (1 - l1), d11 = l1 * l2, d00 = (1 - l1) * (1 - l2);
      double none = b1 * b2 + a1 * a2;  // silent slot or collision
      JumpDistribution& d = spec.cell(c1, c2);
      d.set(1, 0, none * d10 + b1 * a2 * d11);
      d.set(0, 1, none * d01 + b2 * a1 * d11);
      d.set(1, 1, none * d11);
      d.set(-1, 1, a1 * b2 * d01);
      d.set(1, -1, a2 * b1 * d10);
      d.set(-1, 0, a1 * b2 * d00);
      d.set(0, -1, a2 * b1 * d00);
      d.set(0, 0, none * d00 + b1 * a2 * d01 + b2 * a1 * d10);
    }
  }
  return spec;
}

// --- LDGPS -------------------------------------------------------------------

namespace {

struct LdgpsCell {
  // shorthand for one grid cell; scheduler arguments are clamped into the
  // grid because beta inherits the same partial homogeneity as the walk
  const LdgpsParams& p;
  int c1, c2;

  double th1() const { return p.th1[c1]; }
  double th2() const { return p.th2[c2]; }
  double mu1(int k) const { return p.mu1[std::max(k, 0)]; }
  double mu2(int k) const { return p.mu2[std::max(k, 0)]; }
  double beta1(int m1, int m2) const {
    if (m1 <= 0 && m2 <= 0) return 0.0;
    if (m1 <= 0) return 0.0;
    if (m2 <= 0) return 1.0;
    return p.b1(std::min(m1, p.n1), std::min(m2, p.n2));
  }
  double beta2(int m1, int m2) const {
    if (m1 <= 0 && m2 <= 0) return 0.0;
    if (m2 <= 0) return 0.0;
    if (m1 <= 0) return 1.0;
    return 1.0 - p.b1(std::min(m1, p.n1), std::min(m2, p.n2));
  }
};

}  // namespace

ModelSpec build_ldgps_model(const LdgpsParams& p) {
  auto in01 = [](const std::vector<double>& v) {
    for (double x : v)
      if (x < 0 || x > 1) return false;
    return true;
  };
  size_t cells = static_cast<size_t>(p.n1 + 1) * (p.n2 + 1);
  if (p.l1.size() != cells || p.l2.size() != cells || p.beta1.size() != cells ||
      p.mu1.size() != static_cast<size_t>(p.n1 + 1) || p.mu2.size() != static_cast<size_t>(p.n2 + 1) ||
      p.th1.size() != static_cast<size_t>(p.n1 + 1) || p.th2.size() != static_cast<size_t>(p.n2 + 1))
    throw invalid_model("LDGPS parameter table size mismatch");
  if (!in01(p.l1) || !in01(p.l2) || !in01(p.mu1) || !in01(p.mu2) || !in01(p.th1) || !in01(p.th2) ||
      !in01(p.beta1))
    throw invalid_model("LDGPS rate outside [0,1]");
  if (p.mu1[0] != 0 || p.mu2[0] != 0) throw invalid_model("mu_k(0) must be 0");
  if (p.th1[0] != 0 || p.th2[0] != 0) throw invalid_model("theta_k(0) must be 0");
  for (int c1 = 1; c1 <= p.n1; ++c1)
    if (p.b1(c1, 0) != 1.0) throw invalid_model("beta1(n1,0) must be 1 for n1>0");
  for (int c2 = 1; c2 <= p.n2; ++c2)
    if (p.b1(0, c2) != 0.0) throw invalid_model("beta2(0,n2) must be 1 for n2>0");

  ModelSpec spec = make_model(p.n1, p.n2, SupportMode::extended);
  for (int c1 = 0; c1 <= p.n1; ++c1) {
    for (int c2 = 0; c2 <= p.n2; ++c2) {
      LdgpsCell s{p, c1, c2};
      double t1 = s.th1(), t2 = s.th2(), T1 = 1 - t1, T2 = 1 - t2;
      double lam1 = p.lam1(c1, c2), lam2 = p.lam2(c1, c2);
      double d10 = lam1 * (1 - lam2), d01 = lam2 * (1 - lam1);
      double d11 = lam1 * lam2, d00 = (1 - lam1) * (1 - lam2);

      // service split after mobility removed (M1,M2) customers
      auto S1 = [&](int M1, int M2) { return s.beta1(c1 - M1, c2 - M2) * s.mu1(c1 - M1); };
      auto S2 = [&](int M1, int M2) { return s.beta2(c1 - M1, c2 - M2) * s.mu2(c2 - M2); };
      auto S0 = [&](int M1, int M2) { return 1.0 - S1(M1, M2) - S2(M1, M2); };

      JumpDistribution& d = spec.cell(c1, c2);
      // class-1 coordinate loses 2 only via mobility + completed service
      d.set(-2, 0, t1 * T2 * S1(1, 0) * d00 + t1 * t2 * S1(1, 1) * d01);
      d.set(0, -2, t2 * T1 * S2(0, 1) * d00 + t1 * t2 * S2(1, 1) * d10);
      d.set(-2, 1, t1 * T2 * S1(1, 0) * d01);
      d.set(1, -2, t2 * T1 * S2(0, 1) * d10);
      d.set(-2, -1, t1 * t2 * S1(1, 1) * d00);
      d.set(-1, -2, t1 * t2 * S2(1, 1) * d00);

      d.set(1, 1, T1 * T2 * S0(0, 0) * d11);
      d.set(1, 0, T1 * T2 * (S0(0, 0) * d10 + S2(0, 0) * d11) + t2 * T1 * S0(0, 1) * d11);
      d.set(0, 1, T1 * T2 * (S0(0, 0) * d01 + S1(0, 0) * d11) + t1 * T2 * S0(1, 0) * d11);
      d.set(1, -1, t2 * T1 * (S2(0, 1) * d11 + S0(0, 1) * d10) + T1 * T2 * S2(0, 0) * d10);
      d.set(-1, 1, t1 * T2 * (S1(1, 0) * d11 + S0(1, 0) * d01) + T1 * T2 * S1(0, 0) * d01);
      d.set(-1, 0, t1 * T2 * (S1(1, 0) * d10 + S2(1, 0) * d01 + S0(1, 0) * d00) +
                       T1 * T2 * S1(0, 0) * d00 + t2 * T1 * S1(0, 1) * d01 +
                       t1 * t2 * (S1(1, 1) * d11 + S0(1, 1) * d01));
      d.set(0, -1, t2 * T1 * (S1(0, 1) * d10 + S2(0, 1) * d01 + S0(0, 1) * d00) +
                       T1 * T2 * S2(0, 0) * d00 + t1 * T2 * S2(1, 0) * d10 +
                       t1 * t2 * (S2(1, 1) * d11 + S0(1, 1) * d10));
      d.set(-1, -1, t1 * t2 * (S1(1, 1) * d10 + S2(1, 1) * d01 + S0(1, 1) * d00) +
                        t1 * T2 * S2(1, 0) * d00 + t2 * T1 * S1(0, 1) * d00);
      d.set(0, 0, T1 * T2 * (S0(0, 0) * d00 + S1(0, 0) * d10 + S2(0, 0) * d01) +
                      t1 * T2 * (S0(1, 0) * d10 + S2(1, 0) * d11) +
                      t2 * T1 * (S0(0, 1) * d01 + S1(0, 1) * d11) + t1 * t2 * S0(1, 1) * d11);
    }
  }
  // the theta == 0 model has no batch departures; report it as such
  bool nn = true;
  for (const auto& d : spec.grid) nn = nn && d.nearest_support();
  if (nn) spec.mode = SupportMode::nearest;
  return spec;
}

// --- policies ----------------------------------------------------------------

std::vector<double> policy_beta1(const PolicyParams& pol, int n1, int n2) {
  size_t cells = static_cast<size_t>(n1 + 1) * (n2 + 1);
  if (pol.kind == PolicyKind::table) {
    if (pol.beta1_table.size() != cells) throw invalid_model("beta1 table size mismatch");
    return pol.beta1_table;
  }
  if (pol.beta < 0 || pol.beta > 1 || pol.p < 0 || pol.p > 1 || pol.L < 0)
    throw invalid_model("policy scalar out of range");
  int L = std::min(pol.L, n1);  // keep the threshold inside the homogeneous split
  std::vector<double> b(cells, 0.0);
  for (int c1 = 0; c1 <= n1; ++c1) {
    for (int c2 = 0; c2 <= n2; ++c2) {
      double v;
      if (c1 == 0)
        v = 0.0;
      else if (c2 == 0)
        v = 1.0;
      else {
        switch (pol.kind) {
          case PolicyKind::hol: v = 1.0; break;
          case PolicyKind::sqf: v = (c1 <= c2) ? 1.0 : 0.0; break;
          case PolicyKind::lqf: v = (c1 >= c2) ? 1.0 : 0.0; break;
          case PolicyKind::bernoulli: v = pol.p; break;
          case PolicyKind::qlt: v = (c1 > L) ? 1.0 : 0.0; break;
          case PolicyKind::qlt_bernoulli: v = (c1 > L) ? 1.0 : pol.p; break;
          case PolicyKind::dgps: v = pol.beta; break;
          case PolicyKind::mdgps: v = std::pow(pol.beta, c2); break;
          default: throw invalid_model("unknown policy");
        }
      }
      b[static_cast<size_t>(c1) * (n2 + 1) + c2] = v;
    }
  }
  return b;
}

ModelSpec build_policy_model(const PolicyParams& pol, double lam1, double lam2, double mu1,
                             double mu2, int n1, int n2) {
  if (lam1 < 0 || lam1 > 1 || lam2 < 0 || lam2 > 1 || mu1 < 0 || mu1 > 1 || mu2 < 0 || mu2 > 1)
    throw invalid_model("arrival/service rate outside [0,1]");
  LdgpsParams p;
  p.n1 = n1;
  p.n2 = n2;
  size_t cells = static_cast<size_t>(n1 + 1) * (n2 + 1);
  p.l1.assign(cells, lam1);
  p.l2.assign(cells, lam2);
  p.mu1.assign(n1 + 1, mu1);
  p.mu2.assign(n2 + 1, mu2);
  p.mu1[0] = p.mu2[0] = 0.0;
  p.th1.assign(n1 + 1, 0.0);
  p.th2.assign(n2 + 1, 0.0);
  p.beta1 = policy_beta1(pol, n1, n2);
  return build_ldgps_model(p);
}

ModelSpec transpose_model(const ModelSpec& spec) {
  ModelSpec t = make_model(spec.n2, spec.n1, spec.mode);
  for (int c1 = 0; c1 <= spec.n1; ++c1)
    for (int c2 = 0; c2 <= spec.n2; ++c2)
      for (int i = JumpDistribution::jmin; i <= JumpDistribution::jmax; ++i)
        for (int j = JumpDistribution::jmin; j <= JumpDistribution::jmax; ++j)
          t.cell(c2, c1).set(j, i, spec.cell(c1, c2).at(i, j));
  return t;
}

}  // namespace qp
