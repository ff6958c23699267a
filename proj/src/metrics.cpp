#include "qp/metrics.hpp"

#include <cmath>
#include <future>
#include <sstream>

#include "qp/stability.hpp"

namespace qp {

namespace {

struct Taylor2 {
  cplx c0{0}, c1{0}, c2{0};  // value, first and second Taylor coefficients
  Taylor2 operator*(const Taylor2& o) const {
    return {c0 * o.c0, c0 * o.c1 + c1 * o.c0, c0 * o.c2 + c1 * o.c1 + c2 * o.c0};
  }
  Taylor2 operator+(const Taylor2& o) const { return {c0 + o.c0, c1 + o.c1, c2 + o.c2}; }
  Taylor2 operator*(cplx s) const { return {c0 * s, c1 * s, c2 * s}; }
};

Taylor2 quad_at_1(double a0, double a1, double a2) {
  // a0 + a1 x + a2 x^2 expanded at x = 1
  return {a0 + a1 + a2, a1 + 2 * a2, a2};
}

}  // namespace

std::pair<double, double> expected_queue_lengths(const StationarySolution& sol) {
  const ModelSpec& spec = *sol.spec;
  int N1 = spec.n1, N2 = spec.n2;
  DriftVector drifts = mean_drifts(spec);
  if (drifts.ex >= 0 || drifts.ey >= 0)
    throw solve_error("queue-length closed forms need negative drifts");
  Eigen::VectorXd u = sol.pi;

  CramerJet cxj = cramer_x_jet(spec, cplx(1, 0), 3);
  CramerJet cyj = cramer_y_jet(spec, cplx(1, 0), 3);
  const JumpDistribution& sd = spec.cell(N1, N2);

  // jets of the band polynomials at the evaluation corner
  auto fpoly = [&](int n2, int which) {
    const JumpDistribution& p = spec.cell(N1, std::min(n2, N2));
    if (which == 1) return quad_at_1(p.at(-1, 1), p.at(0, 1), p.at(1, 1));
    return quad_at_1(p.at(-1, -1), p.at(0, -1), p.at(1, -1));
  };
  auto gpoly = [&](int n1, int which) {
    const JumpDistribution& p = spec.cell(std::min(n1, N1), N2);
    if (which == 1) return quad_at_1(p.at(1, -1), p.at(1, 0), p.at(1, 1));
    return quad_at_1(p.at(-1, -1), p.at(-1, 0), p.at(-1, 1));
  };

  auto jet_of = [&](const std::vector<cplx>& j) { return Taylor2{j[0], j[1], j[2]}; };
  auto jet_of_t = [&](const std::vector<AffineC>& j) {
    return Taylor2{j[0].eval(u), j[1].eval(u), j[2].eval(u)};
  };

  Taylor2 g0jet{sol.g0_1, sol.dg0_1, 0.5 * sol.d2g0_1};
  Taylor2 h0jet{sol.h0_1, sol.dh0_1, 0.5 * sol.d2h0_1};

  // N(x) = A(x,1) g0(x) + B(x,1) h0(1) + C(x,1)
  Taylor2 Ajet = fpoly(N2 - 1, 1) * jet_of(cxj.e[N2 - 1]) + fpoly(N2, 3) * jet_of(cxj.e[N2]) * cplx(-1);
  cplx b_lin = (band_g1(spec, N1 - 1, cplx(1, 0)) * cramer_y(spec, cplx(1, 0)).e[N1 - 1]);
  cplx b_con = -(band_g3(spec, N1, cplx(1, 0)) * cramer_y(spec, cplx(1, 0)).e[N1]);
  Taylor2 Bjet{b_lin + b_con, b_lin, 0};
  CramerEval cy1 = cramer_y(spec, cplx(1, 0));
  CramerEval cx1 = cramer_x(spec, cplx(1, 0));
  Taylor2 Cjet = fpoly(N2 - 1, 1) * jet_of_t(cxj.t[N2 - 1]) + fpoly(N2, 3) * jet_of_t(cxj.t[N2]) * cplx(-1);
  {
    cplx ylin = band_g1(spec, N1 - 1, cplx(1, 0)) * cy1.t[N1 - 1].eval(u);
    cplx ycon = -band_g3(spec, N1, cplx(1, 0)) * cy1.t[N1].eval(u);
    Cjet = Cjet + Taylor2{ylin + ycon, ylin, 0};
    double cx_lin = spec.cell(N1 - 1, N2 - 1).at(1, 1) * sol.corner(N1 - 1, N2 - 1) -
                    spec.cell(N1 - 1, N2).at(1, -1) * sol.corner(N1 - 1, N2);
    double cx_con = -spec.cell(N1, N2 - 1).at(-1, 1) * sol.corner(N1, N2 - 1) +
                    spec.cell(N1, N2).at(-1, -1) * sol.corner(N1, N2);
    Cjet = Cjet + Taylor2{cx_lin + cx_con, cx_lin, 0};
  }
  Taylor2 Njet = Ajet * g0jet + Bjet * cplx(sol.h0_1) + Cjet;
  double p1 = sd.at(1, -1) + sd.at(1, 0) + sd.at(1, 1);
  double g11 = (Njet.c1 / (-drifts.ex)).real();
  double dxg11 = ((Njet.c2 + p1 * g11) / (-drifts.ex)).real();

  // M(y) = A(1,y) g0(1) + B(1,y) h0(y) + C(1,y) for the mirror derivative
  cplx a_lin = band_f1(spec, N2 - 1, cplx(1, 0)) * cx1.e[N2 - 1];
  cplx a_con = -band_f3(spec, N2, cplx(1, 0)) * cx1.e[N2];
  Taylor2 Ajet_y{a_lin + a_con, a_lin, 0};
  Taylor2 Bjet_y = gpoly(N1 - 1, 1) * jet_of(cyj.e[N1 - 1]) + gpoly(N1, 3) * jet_of(cyj.e[N1]) * cplx(-1);
  Taylor2 Cjet_y = gpoly(N1 - 1, 1) * jet_of_t(cyj.t[N1 - 1]) + gpoly(N1, 3) * jet_of_t(cyj.t[N1]) * cplx(-1);
  {
    cplx xlin = band_f1(spec, N2 - 1, cplx(1, 0)) * cx1.t[N2 - 1].eval(u);
    cplx xcon = -band_f3(spec, N2, cplx(1, 0)) * cx1.t[N2].eval(u);
    Cjet_y = Cjet_y + Taylor2{xlin + xcon, xlin, 0};
    double cy_lin = spec.cell(N1 - 1, N2 - 1).at(1, 1) * sol.corner(N1 - 1, N2 - 1) -
                    spec.cell(N1, N2 - 1).at(-1, 1) * sol.corner(N1, N2 - 1);
    double cy_con = -spec.cell(N1 - 1, N2).at(1, -1) * sol.corner(N1 - 1, N2) +
                    spec.cell(N1, N2).at(-1, -1) * sol.corner(N1, N2);
    Cjet_y = Cjet_y + Taylor2{cy_lin + cy_con, cy_lin, 0};
  }
  Taylor2 Mjet = Ajet_y * cplx(sol.g0_1) + Bjet_y * h0jet + Cjet_y;
  double p1y = sd.at(-1, 1) + sd.at(0, 1) + sd.at(1, 1);
  double g11_y = (Mjet.c1 / (-drifts.ey)).real();
  double dyg11 = ((Mjet.c2 + p1y * g11_y) / (-drifts.ey)).real();

  // assemble the expectations region by region
  double eq1 = 0, eq2 = 0;
  for (int n1 = 0; n1 < N1; ++n1)
    for (int n2 = 0; n2 < N2; ++n2) {
      eq1 += n1 * sol.corner(n1, n2);
      eq2 += n2 * sol.corner(n1, n2);
    }
  for (int n2 = 0; n2 < N2; ++n2) {
    double gval = (cx1.e[n2] * sol.g0_1 + cx1.t[n2].eval(u)).real();
    double gder = (cxj.e[n2][1] * sol.g0_1 + cx1.e[n2] * sol.dg0_1 + cxj.t[n2][1].eval(u)).real();
    eq1 += gder + N1 * gval;
    eq2 += n2 * gval;
  }
  for (int n1 = 0; n1 < N1; ++n1) {
    double hval = (cy1.e[n1] * sol.h0_1 + cy1.t[n1].eval(u)).real();
    double hder = (cyj.e[n1][1] * sol.h0_1 + cy1.e[n1] * sol.dh0_1 + cyj.t[n1][1].eval(u)).real();
    eq2 += hder + N2 * hval;
    eq1 += n1 * hval;
  }
  eq1 += dxg11 + N1 * g11;
  eq2 += dyg11 + N2 * g11_y;
  return {eq1, eq2};
}

MetricsReport metrics_from_solution(const StationarySolution& sol) {
  const ModelSpec& spec = *sol.spec;
  int N1 = spec.n1, N2 = spec.n2;
  Eigen::VectorXd u = sol.pi;
  MetricsReport rep;
  auto [e1, e2] = expected_queue_lengths(sol);
  rep.eq1 = e1;
  rep.eq2 = e2;
  rep.eq_total = e1 + e2;
  rep.p_empty = sol.corner(0, 0);
  CramerEval cx1 = cramer_x(spec, cplx(1, 0));
  CramerEval cy1 = cramer_y(spec, cplx(1, 0));
  for (int n1 = 0; n1 < N1; ++n1)
    for (int n2 = 0; n2 < N2; ++n2) rep.share_sa += sol.corner(n1, n2);
  for (int n2 = 0; n2 < N2; ++n2)
    rep.share_sb += (cx1.e[n2] * sol.g0_1 + cx1.t[n2].eval(u)).real();
  for (int n1 = 0; n1 < N1; ++n1)
    rep.share_sc += (cy1.e[n1] * sol.h0_1 + cy1.t[n1].eval(u)).real();
  rep.share_sd = 1.0 - rep.share_sa - rep.share_sb - rep.share_sc;
  return rep;
}

MetricsReport metrics_from_truncation(const ModelSpec& spec, const TruncatedSolution& t) {
  MetricsReport rep;
  rep.from_oracle = true;
  for (int q1 = 0; q1 <= t.t1; ++q1)
    for (int q2 = 0; q2 <= t.t2; ++q2) {
      double p = t.at(q1, q2);
      rep.eq1 += q1 * p;
      rep.eq2 += q2 * p;
      bool sb = q1 >= spec.n1, sc = q2 >= spec.n2;
      if (!sb && !sc)
        rep.share_sa += p;
      else if (sb && !sc)
        rep.share_sb += p;
      else if (!sb && sc)
        rep.share_sc += p;
      else
        rep.share_sd += p;
    }
  rep.eq_total = rep.eq1 + rep.eq2;
  rep.p_empty = t.at(0, 0);
  return rep;
}

std::vector<SweepRow> sweep(const std::vector<SweepCase>& cases, const SweepOptions& opt) {
  auto run_one = [&](const SweepCase& c) {
    SweepRow row;
    row.params = c.params;
    bool want_bvp = opt.engine != SweepEngine::oracle;
    if (want_bvp) {
      try {
        StationarySolution sol = corner_linear_system(c.spec, opt.solve);
        row.metrics = metrics_from_solution(sol);
        row.chi_g = sol.diag.chi_g;
        row.chi_h = sol.diag.chi_h;
        row.ls_residual = sol.diag.ls_residual;
        return row;
      } catch (const std::exception& e) {
        if (opt.engine == SweepEngine::bvp) {
          row.error = e.what();
          return row;
        }
        row.oracle_fallback = true;
      }
    } else {
      row.oracle_fallback = true;
    }
    try {
      TruncatedSolution t = truncated_stationary(c.spec, opt.truncate);
      row.metrics = metrics_from_truncation(c.spec, t);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    return row;
  };

  std::vector<SweepRow> rows(cases.size());
  if (opt.jobs <= 1) {
    for (size_t k = 0; k < cases.size(); ++k) rows[k] = run_one(cases[k]);
    return rows;
  }
  std::vector<std::future<void>> workers;
  std::atomic<size_t> next{0};
  for (int w = 0; w < opt.jobs; ++w)
    workers.push_back(std::async(std::launch::async, [&] {
      for (;;) {
        size_t k = next.fetch_add(1);
        if (k >= cases.size()) return;
        rows[k] = run_one(cases[k]);
      }
    }));
  for (auto& w : workers) w.get();
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out.precision(12);
  std::vector<std::string> keys;
  if (!rows.empty())
    for (const auto& kv : rows[0].params) keys.push_back(kv.first);
  for (const std::string& k : keys) out << k << ",";
  out << "eq1,eq2,eq_total,p_empty,share_sa,share_sb,share_sc,share_sd,"
         "chi_g,chi_h,ls_residual,oracle_fallback,error\n";
  for (const SweepRow& r : rows) {
    for (const std::string& k : keys) out << r.params.at(k) << ",";
    out << r.metrics.eq1 << "," << r.metrics.eq2 << "," << r.metrics.eq_total << ","
        << r.metrics.p_empty << "," << r.metrics.share_sa << "," << r.metrics.share_sb << ","
        << r.metrics.share_sc << "," << r.metrics.share_sd << "," << r.chi_g << "," << r.chi_h
        << "," << r.ls_residual << "," << (r.oracle_fallback ? 1 : 0) << "," << r.error << "\n";
  }
  return out.str();
}

}  // namespace qp
