#pragma once

#include <cstdint>

#include "qp/model.hpp"

namespace qp {

struct TruncatedSolution {
  int t1 = 0, t2 = 0;           // truncation levels (inclusive box corner)
  std::vector<double> pi;       // (t1+1)*(t2+1), row-major by n1
  double balance_residual = 0;  // max interior balance defect
  double tail_estimate = 0;     // estimated mass beyond the box

  double at(int q1, int q2) const { return pi[static_cast<size_t>(q1) * (t2 + 1) + q2]; }
  double marginal1(int q1) const;
  double marginal2(int q2) const;
};

struct TruncateOptions {
  int t1 = 0, t2 = 0;       // 0 means automatic
  double tail_tol = 1e-10;  // auto mode doubles levels until below this
  int max_level = 4096;
};

// Stationary law of the chain truncated to [0,T1]x[0,T2] with outward jumps
// at the edge folded back, solved by GTH elimination on the banded matrix.
TruncatedSolution truncated_stationary(const ModelSpec& spec, const TruncateOptions& opt = {});

// Same chain solved by power iteration; cross-check for the GTH path.
TruncatedSolution truncated_power_iteration(const ModelSpec& spec, int t1, int t2,
                                            int max_iters = 200000, double tol = 1e-13);

struct SimulationResult {
  long long horizon = 0;
  uint64_t seed = 0;
  int window = 0;              // occupancy window [0,window)^2
  std::vector<double> freq;    // window*window occupation frequencies
  double outside_mass = 0;     // time spent outside the window
  double mean_q1 = 0, mean_q2 = 0;
  double drift_slope = 0;      // per-step growth of n1+n2 after burn-in
  double drift_slope_se = 0;
  bool positive_drift = false;

  double at(int q1, int q2) const { return freq[static_cast<size_t>(q1) * window + q2]; }
};

struct SimulateOptions {
  long long horizon = 1000000;
  uint64_t seed = 1;
  uint64_t stream = 0;
  int window = 64;
  double burn_in = 0.1;
};

SimulationResult simulate(const ModelSpec& spec, const SimulateOptions& opt);

struct DiffEntry {
  int q1 = 0, q2 = 0;
  double a = 0, b = 0;
};

struct DiffReport {
  double sup_norm = 0;
  double total_variation = 0;
  std::vector<DiffEntry> worst;  // up to 5 offenders, largest first
};

// window-restricted distance between two probability grids
DiffReport compare_grids(const std::vector<double>& a, int a_t2, const std::vector<double>& b,
                         int b_t2, int w1, int w2);

}  // namespace qp
