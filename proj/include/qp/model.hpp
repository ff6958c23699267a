#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "qp/common.hpp"

namespace qp {

enum class SupportMode { nearest, extended };

// One-step jump law of a single grid cell. Jumps (i,j) range over
// {-2,-1,0,1}^2; nearest-neighbour models only populate {-1,0,1}^2.
class JumpDistribution {
 public:
  JumpDistribution() { p_.fill(0.0); }

  static constexpr int jmin = -2;
  static constexpr int jmax = 1;

  double at(int i, int j) const { return p_[idx(i, j)]; }
  void set(int i, int j, double v) { p_[idx(i, j)] = v; }
  void add(int i, int j, double v) { p_[idx(i, j)] += v; }

  double row_sum() const {
    double s = 0;
    for (double v : p_) s += v;
    return s;
  }
  double min_entry() const {
    double m = p_[0];
    for (double v : p_) m = std::min(m, v);
    return m;
  }
  bool nearest_support(double tol = 0.0) const {
    for (int i = jmin; i <= jmax; ++i)
      for (int j = jmin; j <= jmax; ++j)
        if ((i == -2 || j == -2) && at(i, j) > tol) return false;
    return true;
  }

 private:
  static int idx(int i, int j) { return (i - jmin) * 4 + (j - jmin); }
  std::array<double, 16> p_;
};

// Partially homogeneous walk on Z_+^2: the (N1+1)x(N2+1) grid of jump laws
// is the single source of truth; the law at state (n1,n2) is the cell
// (min(n1,N1), min(n2,N2)). Immutable after construction.
struct ModelSpec {
  int n1 = 1;  // level N1
  int n2 = 1;  // level N2
  SupportMode mode = SupportMode::nearest;
  std::vector<JumpDistribution> grid;  // row-major, (n1+1)*(n2+1)

  const JumpDistribution& cell(int c1, int c2) const {
    return grid[static_cast<size_t>(c1) * (n2 + 1) + c2];
  }
  JumpDistribution& cell(int c1, int c2) {
    return grid[static_cast<size_t>(c1) * (n2 + 1) + c2];
  }
  const JumpDistribution& at_state(long q1, long q2) const {
    return cell(static_cast<int>(std::min<long>(q1, n1)),
                static_cast<int>(std::min<long>(q2, n2)));
  }
  int jump_span() const { return mode == SupportMode::extended ? 2 : 1; }
};

ModelSpec make_model(int n1, int n2, SupportMode mode);

// law at (q1,q2) after the partial-homogeneity fold
const JumpDistribution& kernel_at(const ModelSpec& spec, long q1, long q2);

struct CellIssue {
  int c1 = 0, c2 = 0;
  std::string what;
};

struct ValidationReport {
  bool ok = true;
  double max_row_residual = 0.0;
  std::vector<CellIssue> issues;
};

// Checks row sums, nonnegativity, support vs mode, and that axis cells do
// not carry mass that the [.]^+ reflection would have to fold.
ValidationReport validate_model(const ModelSpec& spec);

// --- queue-based random access (RA) network -------------------------------

// Per-cell transmission and packet-generation probabilities. Tables are
// (N1+1)x(N2+1), indexed like the model grid.
struct RaParams {
  int n1 = 2, n2 = 2;
  std::vector<double> a1, a2;  // transmit probabilities per cell
  std::vector<double> l1, l2;  // arrival probabilities per cell

  double& at(std::vector<double>& t, int c1, int c2) {
    return t[static_cast<size_t>(c1) * (n2 + 1) + c2];
  }
  double get(const std::vector<double>& t, int c1, int c2) const {
    return t[static_cast<size_t>(c1) * (n2 + 1) + c2];
  }
};

// a_k(n_k) = 1 - r_k^{n_k}, lambda_k(n_k) = l_k^{n_k}, capped at N_k.
RaParams ra_params_power(double l1, double l2, double r1, double r2, int n1, int n2);
// a_k(n) = a*n_k/(n1+n2), lambda_k(n) = l*2^{-(n1+n2)}, capped per cell.
RaParams ra_params_scaled(double l, double a, int n1, int n2);

ModelSpec build_ra_model(const RaParams& p);

// --- limited DGPS with impatience (LDGPS) ----------------------------------

struct LdgpsParams {
  int n1 = 2, n2 = 2;
  std::vector<double> l1, l2;      // arrival prob per cell, (N1+1)x(N2+1)
  std::vector<double> mu1, mu2;    // service completion prob by own count, size N_k+1, mu_k[0]=0
  std::vector<double> th1, th2;    // impatience prob by own count, size N_k+1, th_k[0]=0
  std::vector<double> beta1;       // scheduler pick prob of class 1 per cell

  double lam1(int c1, int c2) const { return l1[static_cast<size_t>(c1) * (n2 + 1) + c2]; }
  double lam2(int c1, int c2) const { return l2[static_cast<size_t>(c1) * (n2 + 1) + c2]; }
  double b1(int c1, int c2) const { return beta1[static_cast<size_t>(c1) * (n2 + 1) + c2]; }
};

// All 16 one-step probabilities of the impatience model; mode is detected
// from the resulting support (theta == 0 collapses to nearest-neighbour).
ModelSpec build_ldgps_model(const LdgpsParams& p);

// --- scheduling policies ---------------------------------------------------

enum class PolicyKind { hol, sqf, lqf, bernoulli, qlt, qlt_bernoulli, dgps, mdgps, table };

struct PolicyParams {
  PolicyKind kind = PolicyKind::dgps;
  double beta = 0.5;  // dgps / mdgps base probability
  double p = 0.5;     // bernoulli / qlt-bernoulli class-1 probability
  int L = 0;          // qlt threshold, clamped to N1
  std::vector<double> beta1_table;  // PolicyKind::table
};

// beta1 grid for a policy; ties at n1==n2 serve class 1.
std::vector<double> policy_beta1(const PolicyParams& pol, int n1, int n2);

// Bernoulli arrivals (rate lam_k), geometric services (rate mu_k), no
// impatience, scheduler from the policy table.
ModelSpec build_policy_model(const PolicyParams& pol, double lam1, double lam2,
                             double mu1, double mu2, int n1, int n2);

// Transposed walk: coordinates swapped. Handy for mirror-symmetry checks.
ModelSpec transpose_model(const ModelSpec& spec);

}  // namespace qp
