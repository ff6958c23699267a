#include "qp/stability.hpp"

#include <cmath>

namespace qp {

namespace {

double coord_drift(const JumpDistribution& d, int axis) {
  double e = 0;
  for (int i = JumpDistribution::jmin; i <= JumpDistribution::jmax; ++i)
    for (int j = JumpDistribution::jmin; j <= JumpDistribution::jmax; ++j)
      e += (axis == 1 ? i : j) * d.at(i, j);
  return e;
}

// one-step law of the induced walk: axis=2 sums over i at cells (N1, n2)
void induced_steps(const ModelSpec& spec, int axis, int k, double& up, double& down) {
  up = down = 0;
  const JumpDistribution& d = axis == 2 ? spec.at_state(spec.n1, k) : spec.at_state(k, spec.n2);
  for (int i = JumpDistribution::jmin; i <= JumpDistribution::jmax; ++i)
    for (int j = JumpDistribution::jmin; j <= JumpDistribution::jmax; ++j) {
      int move = axis == 2 ? j : i;
      double p = d.at(i, j);
      if (move == 1) up += p;
      if (move == -1) down += p;
    }
}

}  // namespace

DriftVector mean_drifts(const ModelSpec& spec) {
  DriftVector v;
  v.ex = coord_drift(spec.cell(spec.n1, spec.n2), 1);
  v.ey = coord_drift(spec.cell(spec.n1, spec.n2), 2);
  v.ex_row.resize(spec.n2 + 1);
  for (int k = 0; k <= spec.n2; ++k) v.ex_row[k] = coord_drift(spec.cell(spec.n1, k), 1);
  v.ey_col.resize(spec.n1 + 1);
  for (int k = 0; k <= spec.n1; ++k) v.ey_col[k] = coord_drift(spec.cell(k, spec.n2), 2);
  return v;
}

double InducedDistribution::total() const {
  double s = 0;
  for (size_t k = 0; k + 1 < head.size(); ++k) s += head[k];
  return s + head.back() / (1 - tail_ratio);
}

InducedDistribution induced_chain_stationary(const ModelSpec& spec, int axis) {
  if (axis != 1 && axis != 2) throw invalid_model("axis must be 1 or 2");
  if (spec.mode == SupportMode::extended)
    throw solve_error("induced-chain closed form needs nearest-neighbour support");
  int level = axis == 2 ? spec.n2 : spec.n1;

  std::vector<double> w1(level + 1), wm1(level + 1);
  for (int k = 0; k <= level; ++k) induced_steps(spec, axis, k, w1[k], wm1[k]);
  if (!(w1[level] < wm1[level]))
    throw solve_error("induced chain is not ergodic: diverging normalizer");
  for (int k = 1; k <= level; ++k)
    if (wm1[k] <= 0)
      throw solve_error("induced chain cannot move down at level " + std::to_string(k));

  // birth-death balance: psi_k = psi_0 * prod w1(j)/w-1(j+1), geometric tail
  InducedDistribution out;
  out.level = level;
  out.tail_ratio = w1[level] / wm1[level];
  std::vector<double> rel(level + 1);
  rel[0] = 1;
  for (int k = 1; k <= level; ++k) rel[k] = rel[k - 1] * w1[k - 1] / wm1[k];
  double norm = 0;
  for (int k = 0; k < level; ++k) norm += rel[k];
  norm += rel[level] / (1 - out.tail_ratio);
  out.head.resize(level + 1);
  for (int k = 0; k <= level; ++k) out.head[k] = rel[k] / norm;
  return out;
}

namespace {

// rho = sum_k psi_k * row_drift(k): finite head plus the closed-form
// geometric tail (the tail rows all carry the homogeneous drift)
double weighted_drift(const InducedDistribution& dist, const std::vector<double>& row,
                      double tail_value) {
  double s = 0;
  int level = dist.level;
  for (int k = 0; k < level; ++k) s += dist.head[k] * row[k];
  s += tail_value * dist.head[level] / (1 - dist.tail_ratio);
  return s;
}

}  // namespace

std::string to_string(Classification c) {
  switch (c) {
    case Classification::ergodic: return "ergodic";
    case Classification::transient: return "transient";
    default: return "inconclusive";
  }
}

StabilityReport classify_stability(const ModelSpec& spec) {
  StabilityReport rep;
  rep.drifts = mean_drifts(spec);
  double ex = rep.drifts.ex, ey = rep.drifts.ey;
  const double zero = 1e-14;

  if (ey < 0) {
    rep.psi = induced_chain_stationary(spec, 2);
    rep.rho1 = weighted_drift(*rep.psi, rep.drifts.ex_row, ex);
    rep.rho1_valid = true;
  }
  if (ex < 0) {
    rep.phi = induced_chain_stationary(spec, 1);
    rep.rho2 = weighted_drift(*rep.phi, rep.drifts.ey_col, ey);
    rep.rho2_valid = true;
  }

  if (ex >= 0 && ey >= 0) {
    rep.cls = Classification::transient;
    rep.detail = "both mean drifts nonnegative";
    return rep;
  }
  if (ex < 0 && ey < 0) {
    if (rep.rho1 < -zero && rep.rho2 < -zero)
      rep.cls = Classification::ergodic;
    else if (rep.rho1 > zero || rep.rho2 > zero)
      rep.cls = Classification::transient;
    else {
      rep.cls = Classification::inconclusive;
      rep.detail = "rho on the boundary";
    }
    return rep;
  }
  if (ex >= 0) {  // ey < 0
    if (rep.rho1 < -zero)
      rep.cls = Classification::ergodic;
    else if (rep.rho1 > zero || (ex > zero && std::abs(rep.rho1) <= zero))
      rep.cls = Classification::transient;
    else {
      rep.cls = Classification::inconclusive;
      rep.detail = "rho1 on the boundary with Ex = 0";
    }
    return rep;
  }
  // ex < 0, ey >= 0
  if (rep.rho2 < -zero)
    rep.cls = Classification::ergodic;
  else if (rep.rho2 > zero || (ey > zero && std::abs(rep.rho2) <= zero))
    rep.cls = Classification::transient;
  else {
    rep.cls = Classification::inconclusive;
    rep.detail = "rho2 on the boundary with Ey = 0";
  }
  return rep;
}

std::vector<RegionSample> ra_stability_region(const RaParams& tmpl,
                                              const std::vector<double>& l1_caps,
                                              const std::vector<double>& l2_caps) {
  std::vector<RegionSample> out;
  out.reserve(l1_caps.size() * l2_caps.size());
  for (double c1 : l1_caps) {
    for (double c2 : l2_caps) {
      RaParams p = tmpl;
      p.at(p.l1, p.n1, p.n2) = c1;
      p.at(p.l2, p.n1, p.n2) = c2;
      ModelSpec spec = build_ra_model(p);
      RegionSample s;
      s.l1_cap = c1;
      s.l2_cap = c2;
      StabilityReport rep = classify_stability(spec);
      s.cls = rep.cls;
      // margins: rho when defined, otherwise the raw drift already decides
      s.h1 = rep.rho1_valid ? rep.rho1 : rep.drifts.ex;
      s.h2 = rep.rho2_valid ? rep.rho2 : rep.drifts.ey;
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace qp
