#pragma once

#include <optional>

#include "qp/model.hpp"

namespace qp {

struct DriftVector {
  double ex = 0, ey = 0;            // drifts at the homogeneous cell
  std::vector<double> ex_row;       // E_x on row n2 = 0..N2 (constant beyond N2)
  std::vector<double> ey_col;       // E_y on column n1 = 0..N1
};

DriftVector mean_drifts(const ModelSpec& spec);

// Stationary law of the one-dimensional walk a coordinate follows when the
// other coordinate is saturated. axis=2 gives psi (second coordinate, first
// large), axis=1 gives phi.
struct InducedDistribution {
  std::vector<double> head;  // probabilities 0..N-1 plus the level value at N
  double tail_ratio = 0;     // geometric ratio beyond the level
  int level = 0;             // N of the saturated description

  double prob(int k) const {
    if (k < static_cast<int>(head.size())) return head[k];
    double p = head.back();
    for (int j = static_cast<int>(head.size()) - 1; j < k; ++j) p *= tail_ratio;
    return p;
  }
  double total() const;
};

InducedDistribution induced_chain_stationary(const ModelSpec& spec, int axis);

enum class Classification { ergodic, transient, inconclusive };

struct StabilityReport {
  Classification cls = Classification::inconclusive;
  DriftVector drifts;
  double rho1 = 0, rho2 = 0;
  bool rho1_valid = false, rho2_valid = false;
  std::optional<InducedDistribution> psi, phi;
  std::string detail;
};

StabilityReport classify_stability(const ModelSpec& spec);

std::string to_string(Classification c);

// RA stability-region sweep: the arrival caps at the homogeneous cell vary
// over a grid, everything else comes from the template parameters.
struct RegionSample {
  double l1_cap = 0, l2_cap = 0;
  double h1 = 0, h2 = 0;  // Loynes-type margins; negative-negative = ergodic
  Classification cls = Classification::inconclusive;
};

std::vector<RegionSample> ra_stability_region(const RaParams& tmpl,
                                              const std::vector<double>& l1_caps,
                                              const std::vector<double>& l2_caps);

}  // namespace qp
