// Acceptance suite: every criterion prints one PASS/FAIL line with its
// measured quantity, and the binary fails if any criterion fails.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>

#include "enum_oracle.hpp"
#include "qp/assembly.hpp"
#include "qp/conformal.hpp"
#include "qp/kernel.hpp"
#include "qp/metrics.hpp"
#include "qp/model.hpp"
#include "qp/oracle.hpp"
#include "qp/rng.hpp"
#include "qp/stability.hpp"

using namespace qp;

namespace {

void report(int criterion, bool pass, const std::string& what) {
  std::printf("ACCEPTANCE %d: %s  (%s)\n", criterion, pass ? "PASS" : "FAIL", what.c_str());
  std::fflush(stdout);
}

ModelSpec reference_model() { return build_ra_model(ra_params_scaled(0.1, 0.6, 2, 2)); }

ModelSpec random_nn_model(Philox& rng) {
  for (;;) {
    double w[3][3];
    double total = 0;
    for (auto& row : w)
      for (double& v : row) v = rng.next_double();
    w[0][0] = 0.0;  // no south-west jump
    for (auto& row : w)
      for (double v : row) total += v;
    ModelSpec spec = make_model(1, 1, SupportMode::nearest);
    JumpDistribution d;
    for (int i = -1; i <= 1; ++i)
      for (int j = -1; j <= 1; ++j) d.set(i, j, w[i + 1][j + 1] / total);
    double ex = 0, ey = 0;
    for (int i = -1; i <= 1; ++i)
      for (int j = -1; j <= 1; ++j) {
        ex += i * d.at(i, j);
        ey += j * d.at(i, j);
      }
    if (ex >= -0.02 || ey >= -0.02) continue;
    for (int c1 = 0; c1 <= 1; ++c1)
      for (int c2 = 0; c2 <= 1; ++c2) {
        JumpDistribution cell = d;
        if (c1 == 0)
          for (int j = -1; j <= 1; ++j) {
            cell.add(0, j, cell.at(-1, j));
            cell.set(-1, j, 0);
          }
        if (c2 == 0)
          for (int i = -1; i <= 1; ++i) {
            cell.add(i, 0, cell.at(i, -1));
            cell.set(i, -1, 0);
          }
        spec.cell(c1, c2) = cell;
      }
    return spec;
  }
}

}  // namespace

TEST_CASE("criterion 1: index of the reference configuration") {
  auto start = std::chrono::steady_clock::now();
  SolveOptions opt;
  opt.j = 1000;
  StationarySolution sol = corner_linear_system(reference_model(), opt);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  bool pass = sol.diag.chi_g == -2 && sol.diag.chi_h == -2 && secs < 60.0;
  report(1, pass,
         "chi = " + std::to_string(sol.diag.chi_g) + ", runtime " + std::to_string(secs) + " s");
  CHECK(sol.diag.chi_g == -2);
  CHECK(sol.diag.chi_h == -2);
  CHECK(secs < 60.0);
}

TEST_CASE("criteria 2+3: oracle equivalence and solvability consistency") {
  struct Case {
    std::string name;
    ModelSpec spec;
  };
  std::vector<Case> cases;
  cases.push_back({"scaled(0.1,0.6)", reference_model()});
  cases.push_back({"power(0.15,0.1,0.5,0.55)", build_ra_model(ra_params_power(0.15, 0.1, 0.5, 0.55, 2, 2))});
  cases.push_back({"scaled(0.16,0.5)", build_ra_model(ra_params_scaled(0.16, 0.5, 2, 2))});
  cases.push_back({"power(0.1,0.2,0.6,0.35) N=(2,3)",
                   build_ra_model(ra_params_power(0.1, 0.2, 0.6, 0.35, 2, 3))});

  double worst_sup = 0, worst_rel = 0, worst_cond = 0;
  bool all_ok = true;
  for (const Case& c : cases) {
    REQUIRE(kernel_coeffs(c.spec).sd.at(-1, -1) == 0.0);
    SolveOptions opt;
    opt.j = 1000;
    StationarySolution sol = corner_linear_system(c.spec, opt);
    TruncatedSolution t = truncated_stationary(c.spec, {0, 0, 1e-12, 4096});
    double sup = 0;
    for (int n1 = 0; n1 <= c.spec.n1; ++n1)
      for (int n2 = 0; n2 <= c.spec.n2; ++n2)
        sup = std::max(sup, std::abs(sol.corner(n1, n2) - t.at(n1, n2)));
    MetricsReport truth = metrics_from_truncation(c.spec, t);
    auto [e1, e2] = expected_queue_lengths(sol);
    double rel = std::max(std::abs(e1 - truth.eq1) / truth.eq1,
                          std::abs(e2 - truth.eq2) / truth.eq2);
    worst_sup = std::max(worst_sup, sup);
    worst_rel = std::max(worst_rel, rel);
    worst_cond = std::max(worst_cond, sol.diag.condition_residual);
    all_ok = all_ok && sup <= 1e-6 && rel <= 1e-4;
    CHECK(sup <= 1e-6);
    CHECK(rel <= 1e-4);
    CHECK(sol.diag.condition_residual <= 1e-8);
  }
  report(2, all_ok,
         "models: " + std::to_string(cases.size()) + ", sup-norm " + std::to_string(worst_sup) +
             ", E(Q) rel " + std::to_string(worst_rel));
  report(3, worst_cond <= 1e-8, "max condition residual " + std::to_string(worst_cond));
}

TEST_CASE("criterion 4: structural identities") {
  bool ok = true;
  std::string note;

  // det K identity at 20 random points
  {
    ModelSpec spec = build_ra_model(ra_params_power(0.2, 0.25, 0.5, 0.45, 2, 3));
    Philox rng(71u);
    double worst = 0;
    for (int k = 0; k < 20; ++k) {
      cplx x = std::polar(0.2 + 0.75 * rng.next_double(), 2 * pi * rng.next_double());
      cplx want = std::pow(-1.0, spec.n2);
      for (int n2 = 1; n2 <= spec.n2; ++n2) want *= band_f3(spec, n2, x);
      worst = std::max(worst, std::abs(build_K_matrix(spec, x).determinant() - want));
    }
    ok = ok && worst < 1e-11;
    note += "detK " + std::to_string(worst);
  }

  // X0(1) = 1 and branch interleaving on 50 random ergodic models
  {
    Philox rng(73u);
    double worst_root = 0;
    bool branch_ok = true;
    for (int k = 0; k < 50; ++k) {
      ModelSpec spec = random_nn_model(rng);
      KernelPoly kp = kernel_coeffs(spec);
      worst_root = std::max(worst_root, std::abs(root_X0(kp, 1.0) - 1.0));
      BranchPoints bp = branch_points(kp);
      branch_ok = branch_ok && bp.x.r1 > 0 && bp.x.r2 < 1 && bp.x.r1 <= bp.x.r2 &&
                  bp.y.r1 > 0 && bp.y.r2 < 1;
      branch_ok = branch_ok && kp.disc_y(0.5 * (bp.x.r1 + bp.x.r2)).real() < 0;
    }
    ok = ok && worst_root < 1e-10 && branch_ok;
    note += ", X0(1) " + std::to_string(worst_root) + (branch_ok ? ", branch ok" : ", branch BAD");
  }

  // Theodorsen odd symmetry and gamma0(0) = 0
  {
    ModelSpec spec = reference_model();
    KernelPoly kp = kernel_coeffs(spec);
    ContourPair cp = build_contours(kp, branch_points(kp));
    TheodorsenOptions topt;
    topt.j = 1000;
    ConformalMap map([c = cp.M](double a) { return c->radius(a); }, topt);
    double worst = 0;
    int j = map.nodes();
    for (int k = 1; k < j; ++k)
      worst = std::max(worst, std::abs(map.psi()[j - k] - (2 * pi - map.psi()[k])));
    bool zero = map.eval(cplx(0, 0)) == cplx(0, 0);
    ok = ok && worst < 1e-9 && zero;
    note += ", psi-symmetry " + std::to_string(worst) + (zero ? ", gamma0(0)=0" : ", gamma0(0) BAD");
  }

  report(4, ok, note);
  CHECK(ok);
}

TEST_CASE("criterion 5: stability classification vs simulated drift") {
  // arrival caps sweep on the scaled RA template; transmission caps differ
  // per class so the region is asymmetric
  RaParams tmpl;
  tmpl.n1 = tmpl.n2 = 2;
  tmpl.a1.assign(9, 0.0);
  tmpl.a2.assign(9, 0.0);
  tmpl.l1.assign(9, 0.0);
  tmpl.l2.assign(9, 0.0);
  for (int c1 = 0; c1 <= 2; ++c1)
    for (int c2 = 0; c2 <= 2; ++c2) {
      int norm = c1 + c2;
      tmpl.at(tmpl.a1, c1, c2) = norm == 0 ? 0 : 0.8 * c1 / norm;
      tmpl.at(tmpl.a2, c1, c2) = norm == 0 ? 0 : 0.6 * c2 / norm;
      tmpl.at(tmpl.l1, c1, c2) = std::pow(0.2, c1);
      tmpl.at(tmpl.l2, c1, c2) = std::pow(0.5, c2);
    }

  const int grid = 20;
  const double cap_lo = 0.02, cap_hi = 0.55;
  auto cap = [&](int k) { return cap_lo + (cap_hi - cap_lo) * k / (grid - 1.0); };

  auto classify_caps = [&](double c1, double c2) {
    RaParams p = tmpl;
    p.at(p.l1, 2, 2) = c1;
    p.at(p.l2, 2, 2) = c2;
    return classify_stability(build_ra_model(p)).cls;
  };

  int agree = 0, total = 0, excluded = 0;
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      double c1 = cap(i), c2 = cap(j);
      Classification cls = classify_caps(c1, c2);
      if (cls == Classification::inconclusive) {
        ++excluded;
        continue;
      }
      // exclude points within 0.02 of the analytic boundary
      bool near_boundary = false;
      for (double d1 : {-0.02, 0.0, 0.02})
        for (double d2 : {-0.02, 0.0, 0.02}) {
          double p1 = std::clamp(c1 + d1, 1e-4, 0.999);
          double p2 = std::clamp(c2 + d2, 1e-4, 0.999);
          if (classify_caps(p1, p2) != cls) near_boundary = true;
        }
      if (near_boundary) {
        ++excluded;
        continue;
      }
      RaParams p = tmpl;
      p.at(p.l1, 2, 2) = c1;
      p.at(p.l2, 2, 2) = c2;
      SimulateOptions sopt;
      sopt.horizon = 10000000;
      sopt.seed = 1000 + i * grid + j;
      SimulationResult sim = simulate(build_ra_model(p), sopt);
      bool sim_transient = sim.positive_drift;
      bool analytic_transient = cls == Classification::transient;
      ++total;
      if (sim_transient == analytic_transient) ++agree;
    }
  }
  double frac = total > 0 ? static_cast<double>(agree) / total : 0.0;
  bool pass = frac >= 0.95;
  report(5, pass,
         "agreement " + std::to_string(agree) + "/" + std::to_string(total) + " (" +
             std::to_string(frac) + "), excluded " + std::to_string(excluded));
  CHECK(pass);
}

TEST_CASE("criterion 6: qualitative trends of the sweeps") {
  // total backlog nondecreasing in the arrival scale at fixed a
  std::vector<SweepCase> lam_cases;
  for (double l : {0.04, 0.08, 0.12, 0.16, 0.2}) {
    SweepCase c;
    c.params = {{"lambda", l}};
    c.spec = build_ra_model(ra_params_scaled(l, 0.6, 2, 2));
    lam_cases.push_back(c);
  }
  SweepOptions opt;
  opt.solve.j = 1000;
  auto rows = sweep(lam_cases, opt);
  bool monotone_lambda = true;
  for (size_t k = 0; k + 1 < rows.size(); ++k)
    monotone_lambda = monotone_lambda && rows[k].error.empty() &&
                      rows[k].metrics.eq_total <= rows[k + 1].metrics.eq_total + 1e-12;

  // empty-system probability nondecreasing in the level N at a = 0.6
  std::vector<SweepCase> n_cases;
  for (int n : {1, 2, 3}) {
    SweepCase c;
    c.params = {{"n", static_cast<double>(n)}};
    c.spec = build_ra_model(ra_params_scaled(0.1, 0.6, n, n));
    n_cases.push_back(c);
  }
  auto nrows = sweep(n_cases, opt);
  bool monotone_n = true;
  for (size_t k = 0; k + 1 < nrows.size(); ++k)
    monotone_n = monotone_n && nrows[k].error.empty() &&
                 nrows[k].metrics.p_empty <= nrows[k + 1].metrics.p_empty + 1e-12;

  std::string note = "eq_total(lambda):";
  for (auto& r : rows) note += " " + std::to_string(r.metrics.eq_total);
  note += "; p_empty(N):";
  for (auto& r : nrows)
    note += " " + std::to_string(r.metrics.p_empty) + (r.oracle_fallback ? "(oracle)" : "");
  report(6, monotone_lambda && monotone_n, note);
  CHECK(monotone_lambda);
  CHECK(monotone_n);
}

TEST_CASE("criterion 7: impatience model against the event-tree oracle") {
  Philox rng(20260810u);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    int n1 = 1 + static_cast<int>(rng.next_double() * 3);
    int n2 = 1 + static_cast<int>(rng.next_double() * 3);
    LdgpsParams p;
    p.n1 = n1;
    p.n2 = n2;
    size_t cells = static_cast<size_t>(n1 + 1) * (n2 + 1);
    p.l1.resize(cells);
    p.l2.resize(cells);
    p.beta1.resize(cells);
    for (int c1 = 0; c1 <= n1; ++c1)
      for (int c2 = 0; c2 <= n2; ++c2) {
        size_t k = static_cast<size_t>(c1) * (n2 + 1) + c2;
        p.l1[k] = 0.05 + 0.9 * rng.next_double();
        p.l2[k] = 0.05 + 0.9 * rng.next_double();
        p.beta1[k] = c1 == 0 ? 0.0 : (c2 == 0 ? 1.0 : rng.next_double());
      }
    auto lv = [&](int n) {
      std::vector<double> v(n + 1, 0.0);
      for (int k = 1; k <= n; ++k) v[k] = rng.next_double();
      return v;
    };
    p.mu1 = lv(n1);
    p.mu2 = lv(n2);
    p.th1 = lv(n1);
    p.th2 = lv(n2);
    ModelSpec spec = build_ldgps_model(p);
    for (int c1 = 0; c1 <= n1; ++c1)
      for (int c2 = 0; c2 <= n2; ++c2) {
        auto truth = testing::ldgps_enumerate_cell(p, c1, c2);
        for (int i = -2; i <= 1; ++i)
          for (int j = -2; j <= 1; ++j) {
            double want = 0;
            if (auto it = truth.find({i, j}); it != truth.end()) want = it->second;
            worst = std::max(worst, std::abs(spec.cell(c1, c2).at(i, j) - want));
          }
      }
  }
  bool cells_ok = worst < 1e-14;

  // theta = 0 reduction to nearest-neighbour support
  ModelSpec dgps = build_policy_model(PolicyParams{PolicyKind::dgps}, 0.12, 0.1, 0.55, 0.5, 2, 2);
  bool reduction_ok = dgps.mode == SupportMode::nearest;

  // one impatience instance solved by the truncation oracle
  LdgpsParams p;
  p.n1 = p.n2 = 2;
  p.l1.assign(9, 0.2);
  p.l2.assign(9, 0.2);
  p.mu1 = {0, 0.5, 0.55};
  p.mu2 = {0, 0.45, 0.5};
  p.th1 = {0, 0.08, 0.1};
  p.th2 = {0, 0.05, 0.07};
  p.beta1 = {0, 0, 0, 1, 0.5, 0.4, 1, 0.6, 0.5};
  ModelSpec spec = build_ldgps_model(p);
  TruncatedSolution t = truncated_stationary(spec, {40, 40, 0, 128});
  bool balance_ok = t.balance_residual < 1e-12;

  report(7, cells_ok && reduction_ok && balance_ok,
         "cell sup " + std::to_string(worst) + ", reduction " +
             (reduction_ok ? "nearest" : "BAD") + ", balance " +
             std::to_string(t.balance_residual));
  CHECK(cells_ok);
  CHECK(reduction_ok);
  CHECK(balance_ok);
}

TEST_CASE("criterion 8: induced-chain closed forms vs direct balance solves") {
  Philox rng(88u);
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    int level = 1 + static_cast<int>(rng.next_double() * 4);
    ModelSpec spec = make_model(1, level, SupportMode::nearest);
    std::vector<double> up(level + 1), dn(level + 1);
    for (int k = 0; k <= level; ++k) {
      up[k] = 0.05 + 0.3 * rng.next_double();
      dn[k] = 0.45 + 0.4 * rng.next_double();
    }
    for (int c1 = 0; c1 <= 1; ++c1)
      for (int c2 = 0; c2 <= level; ++c2) {
        JumpDistribution& d = spec.cell(c1, c2);
        double u = up[c2], w = c2 == 0 ? 0.0 : dn[c2];
        d.set(0, 1, u);
        d.set(0, -1, w);
        d.set(0, 0, 1 - u - w);
      }
    InducedDistribution psi = induced_chain_stationary(spec, 2);
    // direct truncated balance solve of the one-dimensional chain
    int T = level + 5;
    while (psi.prob(T) > 1e-16) ++T;
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(T + 1, T + 1);
    for (int k = 0; k <= T; ++k) {
      double u = up[std::min(k, level)], w = k == 0 ? 0.0 : dn[std::min(k, level)];
      P(k, std::min(k + 1, T)) += u;
      P(k, std::max(k - 1, 0)) += w;
      P(k, k) += 1 - u - w;
    }
    Eigen::MatrixXd A = P.transpose() - Eigen::MatrixXd::Identity(T + 1, T + 1);
    A.row(0).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(T + 1);
    b(0) = 1;
    Eigen::VectorXd truth = A.fullPivLu().solve(b);
    for (int k = 0; k <= level + 8; ++k)
      worst = std::max(worst, std::abs(psi.prob(k) - truth(k)));
  }
  report(8, worst < 1e-10, "closed form vs balance solve, sup " + std::to_string(worst));
  CHECK(worst < 1e-10);
}
