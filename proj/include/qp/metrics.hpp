#pragma once

#include <map>
#include <string>

#include "qp/assembly.hpp"
#include "qp/oracle.hpp"

namespace qp {

struct MetricsReport {
  double eq1 = 0, eq2 = 0;   // expected queue lengths
  double eq_total = 0;
  double p_empty = 0;        // pi(0,0)
  double share_sa = 0, share_sb = 0, share_sc = 0, share_sd = 0;
  bool from_oracle = false;  // computed from the truncation engine
};

// metrics from the analytic solution (needs Ex < 0: the closed forms divide
// by the drift)
MetricsReport metrics_from_solution(const StationarySolution& sol);

std::pair<double, double> expected_queue_lengths(const StationarySolution& sol);
inline double empty_probability(const StationarySolution& sol) { return sol.corner(0, 0); }

// ground-truth metrics from a truncated stationary grid
MetricsReport metrics_from_truncation(const ModelSpec& spec, const TruncatedSolution& t);

// --- parameter sweeps -------------------------------------------------------

struct SweepCase {
  std::map<std::string, double> params;  // label -> value, fixed column order
  ModelSpec spec;
};

enum class SweepEngine { bvp, oracle, auto_fallback };

struct SweepOptions {
  SweepEngine engine = SweepEngine::auto_fallback;
  SolveOptions solve;
  TruncateOptions truncate{0, 0, 1e-10, 4096};
  int jobs = 1;
};

struct SweepRow {
  std::map<std::string, double> params;
  MetricsReport metrics;
  int chi_g = 0, chi_h = 0;
  double ls_residual = 0;
  bool oracle_fallback = false;
  std::string error;  // nonempty when the point failed entirely
};

std::vector<SweepRow> sweep(const std::vector<SweepCase>& cases, const SweepOptions& opt = {});

// header + one line per row; deterministic column order
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

}  // namespace qp
