// Command-line front end: stationary analysis of partially homogeneous
// walks in the quarter plane. JSON for structured results, CSV for grids.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "qp/assembly.hpp"
#include "qp/conformal.hpp"
#include "qp/kernel.hpp"
#include "qp/metrics.hpp"
#include "qp/model_io.hpp"
#include "qp/oracle.hpp"
#include "qp/stability.hpp"

using namespace qp;
namespace fs = std::filesystem;

namespace {

int log_level() {
  const char* env = std::getenv("QP_LOG");
  if (!env) return 0;
  std::string v = env;
  if (v == "debug") return 2;
  if (v == "info") return 1;
  return 0;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "qpsolve: " << msg << "\n";
}

struct CommonArgs {
  std::string model_path;
  int j = 1000;
  double tol = 1e-6;
  std::string trunc = "auto";
  long long horizon = 1000000;
  uint64_t seed = 1;
  int jobs = 1;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool needs_model = true) {
  auto* m = cmd->add_option("--model", a.model_path, "model config JSON");
  if (needs_model) m->required();
  cmd->add_option("--j", a.j, "boundary quadrature nodes")->default_val(1000);
  cmd->add_option("--tol", a.tol, "iteration tolerance")->default_val(1e-6);
  cmd->add_option("--trunc", a.trunc, "truncation levels T1,T2 or auto")->default_val("auto");
  cmd->add_option("--horizon", a.horizon, "simulation steps")->default_val(1000000);
  cmd->add_option("--seed", a.seed, "random seed")->default_val(1);
  cmd->add_option("--jobs", a.jobs, "parallel sweep workers")->default_val(1);
  cmd->add_option("--out", a.out_dir, "output directory (default: stdout only)");
}

TruncateOptions parse_trunc(const std::string& s) {
  TruncateOptions t;
  t.tail_tol = 1e-10;
  if (s == "auto" || s.empty()) return t;
  if (std::sscanf(s.c_str(), "%d,%d", &t.t1, &t.t2) != 2)
    throw invalid_model("--trunc expects T1,T2 or auto");
  return t;
}

void write_file(const std::string& dir, const std::string& name, const std::string& content) {
  if (dir.empty()) return;
  fs::create_directories(dir);
  std::ofstream out(fs::path(dir) / name);
  out << content;
}

void emit(const json& doc, const CommonArgs& a, const std::string& name) {
  std::cout << doc.dump(2) << "\n";
  write_file(a.out_dir, name, doc.dump(2) + "\n");
}

std::string grid_csv(const std::function<double(int, int)>& p, int w1, int w2) {
  std::ostringstream out;
  out.precision(15);
  out << "n1,n2,p\n";
  for (int n1 = 0; n1 < w1; ++n1)
    for (int n2 = 0; n2 < w2; ++n2) out << n1 << "," << n2 << "," << p(n1, n2) << "\n";
  return out.str();
}

std::vector<std::vector<double>> read_grid_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_model("cannot open grid CSV: " + path);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> grid;
  int n1, n2;
  double p;
  while (std::getline(in, line)) {
    if (std::sscanf(line.c_str(), "%d,%d,%lf", &n1, &n2, &p) != 3) continue;
    if (n1 >= static_cast<int>(grid.size())) grid.resize(n1 + 1);
    if (n2 >= static_cast<int>(grid[n1].size())) grid[n1].resize(n2 + 1, 0.0);
    grid[n1][n2] = p;
  }
  return grid;
}

json metrics_json(const MetricsReport& rep) {
  return json{{"eq1", rep.eq1},          {"eq2", rep.eq2},
              {"eq_total", rep.eq_total}, {"p_empty", rep.p_empty},
              {"share_sa", rep.share_sa}, {"share_sb", rep.share_sb},
              {"share_sc", rep.share_sc}, {"share_sd", rep.share_sd},
              {"engine", rep.from_oracle ? "oracle" : "bvp"}};
}

int cmd_validate(const CommonArgs& a) {
  ModelSpec spec = load_model_file(a.model_path);
  ValidationReport rep = validate_model(spec);
  json doc;
  doc["ok"] = rep.ok;
  doc["max_row_residual"] = rep.max_row_residual;
  json issues = json::array();
  for (const CellIssue& c : rep.issues)
    issues.push_back({{"cell", {c.c1, c.c2}}, {"what", c.what}});
  doc["issues"] = issues;
  emit(doc, a, "validate.json");
  return rep.ok ? 0 : 2;
}

int cmd_stability(const CommonArgs& a) {
  ModelSpec spec = load_model_file(a.model_path);
  StabilityReport rep = classify_stability(spec);
  json doc;
  doc["classification"] = to_string(rep.cls);
  doc["ex"] = rep.drifts.ex;
  doc["ey"] = rep.drifts.ey;
  if (rep.rho1_valid) doc["rho1"] = rep.rho1;
  if (rep.rho2_valid) doc["rho2"] = rep.rho2;
  if (!rep.detail.empty()) doc["detail"] = rep.detail;
  if (rep.psi) doc["psi_tail_ratio"] = rep.psi->tail_ratio;
  if (rep.phi) doc["phi_tail_ratio"] = rep.phi->tail_ratio;
  doc["ex_rows"] = rep.drifts.ex_row;
  doc["ey_cols"] = rep.drifts.ey_col;
  emit(doc, a, "stability.json");
  return 0;
}

int cmd_region(const CommonArgs& a, double cap_min, double cap_max, int steps) {
  std::ifstream in(a.model_path);
  if (!in) throw invalid_model("cannot open model file: " + a.model_path);
  json doc = json::parse(in);
  const json& b = doc.at("builder");
  if (b.at("kind") != "ra") throw invalid_model("region sweep needs an RA builder model");
  RaParams tmpl = parse_ra_params(b, doc.at("n1"), doc.at("n2"));
  std::vector<double> caps;
  for (int k = 0; k < steps; ++k)
    caps.push_back(cap_min + (cap_max - cap_min) * k / std::max(1, steps - 1));
  auto region = ra_stability_region(tmpl, caps, caps);

  std::ostringstream csv;
  csv.precision(12);
  csv << "l1_cap,l2_cap,h1,h2,class\n";
  for (const RegionSample& s : region)
    csv << s.l1_cap << "," << s.l2_cap << "," << s.h1 << "," << s.h2 << "," << to_string(s.cls)
        << "\n";

  // convexity of the sampled stability boundary, reported only
  std::vector<std::pair<double, double>> boundary;
  for (size_t i = 0; i < caps.size(); ++i) {
    double best = -1;
    for (size_t jx = 0; jx < caps.size(); ++jx)
      if (region[i * caps.size() + jx].cls == Classification::ergodic)
        best = std::max(best, caps[jx]);
    if (best >= 0) boundary.push_back({caps[i], best});
  }
  int convex_ok = 0, convex_total = 0;
  for (size_t k = 1; k + 1 < boundary.size(); ++k) {
    double mid = 0.5 * (boundary[k - 1].second + boundary[k + 1].second);
    ++convex_total;
    if (boundary[k].second >= mid - 1e-9) ++convex_ok;
  }
  csv << "# convexity_report: " << convex_ok << "/" << convex_total
      << " boundary midpoints inside the hull\n";
  std::cout << csv.str();
  write_file(a.out_dir, "region.csv", csv.str());
  return 0;
}

int cmd_contours(const CommonArgs& a, bool with_map) {
  ModelSpec spec = load_model_file(a.model_path);
  KernelPoly kp = kernel_coeffs(spec);
  std::ostringstream csv;
  csv.precision(12);
  csv << "curve,phi,re,im\n";
  int n = 512;
  PointCloud pc = contours_S1_S2(kp, n);
  for (int k = 0; k < n; ++k) {
    csv << "S1," << 2 * pi * k / n << "," << pc.s1[k].real() << "," << pc.s1[k].imag() << "\n";
    csv << "S2," << 2 * pi * k / n << "," << pc.s2[k].real() << "," << pc.s2[k].imag() << "\n";
  }
  for (int k = 0; k < n; ++k) {
    double phi = 2 * pi * k / n;
    csv << "unit," << phi << "," << std::cos(phi) << "," << std::sin(phi) << "\n";
  }
  try {
    BranchPoints bp = branch_points(kp);
    ContourPair cp = build_contours(kp, bp);
    PolarContour m = sample_contour(*cp.M, 512);
    PolarContour l = sample_contour(*cp.L, 512);
    for (size_t k = 0; k < m.phi.size(); ++k) {
      cplx x = std::polar(m.rho[k], m.phi[k]);
      csv << "M," << m.phi[k] << "," << x.real() << "," << x.imag() << "\n";
    }
    for (size_t k = 0; k < l.phi.size(); ++k) {
      cplx y = std::polar(l.rho[k], l.phi[k]);
      csv << "L," << l.phi[k] << "," << y.real() << "," << y.imag() << "\n";
    }
    if (with_map) {
      TheodorsenOptions topt;
      topt.j = a.j;
      topt.tol = a.tol;
      ConformalMap map([c = cp.M](double phi) { return c->radius(phi); }, topt);
      std::ostringstream mcsv;
      mcsv.precision(12);
      mcsv << "phi,psi,rho\n";
      for (int k = 0; k < map.nodes(); ++k)
        mcsv << map.phi_grid()[k] << "," << map.psi()[k] << "," << cp.M->radius(map.psi()[k])
             << "\n";
      std::cout << mcsv.str();
      write_file(a.out_dir, "map.csv", mcsv.str());
    }
  } catch (const solve_error& e) {
    csv << "# branch/contour diagnostics unavailable: " << e.what() << "\n";
  }
  if (!with_map) std::cout << csv.str();
  write_file(a.out_dir, "contours.csv", csv.str());
  return 0;
}

json solution_json(const StationarySolution& sol, const MetricsReport& rep) {
  const ModelSpec& spec = *sol.spec;
  json corner = json::array();
  for (int n1 = 0; n1 <= spec.n1; ++n1) {
    json row = json::array();
    for (int n2 = 0; n2 <= spec.n2; ++n2) row.push_back(sol.corner(n1, n2));
    corner.push_back(row);
  }
  json doc;
  doc["chi"] = sol.diag.chi_g;
  doc["chi_mirror"] = sol.diag.chi_h;
  doc["corner"] = corner;
  doc["metrics"] = metrics_json(rep);
  doc["diagnostics"] = {{"ls_residual", sol.diag.ls_residual},
                        {"normalization_defect", sol.diag.normalization_defect},
                        {"boundary_residual_g", sol.diag.boundary_residual_g},
                        {"boundary_residual_h", sol.diag.boundary_residual_h},
                        {"condition_residual", sol.diag.condition_residual},
                        {"poles_g", sol.diag.poles_g},
                        {"poles_h", sol.diag.poles_h},
                        {"eta_m", sol.diag.eta_m},
                        {"eta_l", sol.diag.eta_l}};
  return doc;
}

int cmd_solve(const CommonArgs& a, int window, bool dump_bvp) {
  ModelSpec spec = load_model_file(a.model_path);
  SolveOptions opt;
  opt.j = a.j;
  opt.theo_tol = a.tol;
  StationarySolution sol = corner_linear_system(spec, opt);
  MetricsReport rep = metrics_from_solution(sol);
  json doc = solution_json(sol, rep);
  if (dump_bvp) log_info("bvp diagnostics embedded in the solution document");
  emit(doc, a, "solution.json");
  if (window > 0) {
    Eigen::MatrixXd grid = reconstruct_window(sol, window, window);
    std::string csv = grid_csv([&](int i, int j2) { return grid(i, j2); }, window, window);
    std::cout << csv;
    write_file(a.out_dir, "solution_grid.csv", csv);
  }
  return 0;
}

int cmd_truncate(const CommonArgs& a) {
  ModelSpec spec = load_model_file(a.model_path);
  TruncatedSolution t = truncated_stationary(spec, parse_trunc(a.trunc));
  json doc;
  doc["t1"] = t.t1;
  doc["t2"] = t.t2;
  doc["balance_residual"] = t.balance_residual;
  doc["tail_estimate"] = t.tail_estimate;
  doc["metrics"] = metrics_json(metrics_from_truncation(spec, t));
  emit(doc, a, "truncate.json");
  std::string csv = grid_csv([&](int i, int j2) { return t.at(i, j2); }, t.t1 + 1, t.t2 + 1);
  write_file(a.out_dir, "truncate_grid.csv", csv);
  if (a.out_dir.empty()) std::cout << csv;
  return 0;
}

int cmd_simulate(const CommonArgs& a) {
  ModelSpec spec = load_model_file(a.model_path);
  SimulateOptions opt;
  opt.horizon = a.horizon;
  opt.seed = a.seed;
  SimulationResult r = simulate(spec, opt);
  json doc;
  doc["horizon"] = r.horizon;
  doc["seed"] = r.seed;
  doc["mean_q1"] = r.mean_q1;
  doc["mean_q2"] = r.mean_q2;
  doc["drift_slope"] = r.drift_slope;
  doc["drift_slope_se"] = r.drift_slope_se;
  doc["positive_drift"] = r.positive_drift;
  doc["outside_window_mass"] = r.outside_mass;
  emit(doc, a, "simulate.json");
  std::string csv = grid_csv([&](int i, int j2) { return r.at(i, j2); }, r.window, r.window);
  write_file(a.out_dir, "simulate_grid.csv", csv);
  if (a.out_dir.empty()) std::cout << csv;
  return 0;
}

int cmd_metrics(const CommonArgs& a) {
  ModelSpec spec = load_model_file(a.model_path);
  json doc;
  try {
    SolveOptions opt;
    opt.j = a.j;
    opt.theo_tol = a.tol;
    StationarySolution sol = corner_linear_system(spec, opt);
    doc["metrics"] = metrics_json(metrics_from_solution(sol));
    doc["chi"] = sol.diag.chi_g;
  } catch (const solve_error& e) {
    log_info(std::string("analytic gate failed, falling back to truncation: ") + e.what());
    TruncatedSolution t = truncated_stationary(spec, parse_trunc(a.trunc));
    doc["metrics"] = metrics_json(metrics_from_truncation(spec, t));
    doc["fallback_reason"] = e.what();
  }
  emit(doc, a, "metrics.json");
  return 0;
}

int cmd_sweep(const CommonArgs& a) {
  std::ifstream in(a.model_path);
  if (!in) throw invalid_model("cannot open sweep config: " + a.model_path);
  json cfg = json::parse(in);
  std::string family = cfg.at("family");
  std::vector<SweepCase> cases;
  if (family == "ra_scaled") {
    int n1 = cfg.at("n1"), n2 = cfg.at("n2");
    for (double l : cfg.at("lambda").get<std::vector<double>>())
      for (double av : cfg.at("a").get<std::vector<double>>()) {
        SweepCase c;
        c.params = {{"lambda", l}, {"a", av}, {"n", static_cast<double>(n1)}};
        c.spec = build_ra_model(ra_params_scaled(l, av, n1, n2));
        cases.push_back(c);
      }
  } else if (family == "ra_scaled_n") {
    double l = cfg.at("lambda"), av = cfg.at("a");
    for (int n : cfg.at("n").get<std::vector<int>>()) {
      SweepCase c;
      c.params = {{"lambda", l}, {"a", av}, {"n", static_cast<double>(n)}};
      c.spec = build_ra_model(ra_params_scaled(l, av, n, n));
      cases.push_back(c);
    }
  } else {
    throw invalid_model("unknown sweep family: " + family);
  }
  SweepOptions opt;
  opt.solve.j = a.j;
  opt.solve.theo_tol = a.tol;
  opt.jobs = a.jobs;
  opt.truncate = parse_trunc(a.trunc);
  auto rows = sweep(cases, opt);
  std::string csv = sweep_to_csv(rows);
  std::cout << csv;
  write_file(a.out_dir, "sweep.csv", csv);
  return 0;
}

int cmd_compare(const CommonArgs& a, const std::string& pa, const std::string& pb, int window,
                bool assert_flag, double atol) {
  auto ga = read_grid_csv(pa);
  auto gb = read_grid_csv(pb);
  int w1 = window, w2 = window;
  if (window <= 0) {
    w1 = static_cast<int>(std::min(ga.size(), gb.size()));
    w2 = 1 << 30;
    for (int i = 0; i < w1; ++i)
      w2 = std::min<int>(w2, static_cast<int>(std::min(ga[i].size(), gb[i].size())));
  }
  std::vector<double> fa, fb;
  for (int i = 0; i < w1; ++i)
    for (int j2 = 0; j2 < w2; ++j2) {
      fa.push_back(ga.at(i).at(j2));
      fb.push_back(gb.at(i).at(j2));
    }
  DiffReport rep = compare_grids(fa, w2 - 1, fb, w2 - 1, w1, w2);
  json doc;
  doc["window"] = {w1, w2};
  doc["sup_norm"] = rep.sup_norm;
  doc["total_variation"] = rep.total_variation;
  json worst = json::array();
  for (const DiffEntry& d : rep.worst)
    worst.push_back({{"n1", d.q1}, {"n2", d.q2}, {"a", d.a}, {"b", d.b}});
  doc["worst"] = worst;
  bool ok = rep.sup_norm <= atol;
  if (assert_flag) doc["assert"] = {{"tol", atol}, {"pass", ok}};
  emit(doc, a, "compare.json");
  return (assert_flag && !ok) ? 4 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stationary analysis of partially homogeneous quarter-plane walks"};
  app.name("qpsolve");
  app.require_subcommand(1);

  CommonArgs a;
  int window = 0, region_steps = 10;
  double cap_min = 0.01, cap_max = 0.3, cmp_tol = 1e-6;
  bool with_map = false, dump_bvp = false, assert_flag = false;
  std::string cmp_a, cmp_b;

  add_common(app.add_subcommand("validate", "check model invariants"), a);
  add_common(app.add_subcommand("stability", "drift/induced-chain classification"), a);
  auto* region = app.add_subcommand("region", "stability region over arrival caps");
  add_common(region, a);
  region->add_option("--cap-min", cap_min, "smallest arrival cap")->default_val(0.01);
  region->add_option("--cap-max", cap_max, "largest arrival cap")->default_val(0.3);
  region->add_option("--cap-steps", region_steps, "grid points per axis")->default_val(10);
  auto* contours = app.add_subcommand("contours", "kernel contour point clouds");
  add_common(contours, a);
  contours->add_flag("--map", with_map, "emit the Theodorsen correspondence instead");
  auto* solve = app.add_subcommand("solve", "analytic stationary solve");
  add_common(solve, a);
  solve->add_option("--window", window, "also reconstruct probabilities on [0,w)^2");
  solve->add_flag("--dump-bvp", dump_bvp, "include boundary-problem diagnostics");
  add_common(app.add_subcommand("truncate", "truncated-chain stationary solve"), a);
  add_common(app.add_subcommand("simulate", "slotted-time Monte Carlo"), a);
  add_common(app.add_subcommand("metrics", "performance metrics (bvp with oracle fallback)"), a);
  add_common(app.add_subcommand("sweep", "metrics over a parameter family"), a);
  auto* cmp = app.add_subcommand("compare", "distance between two probability grids");
  add_common(cmp, a, false);
  cmp->add_option("--a", cmp_a, "first grid CSV")->required();
  cmp->add_option("--b", cmp_b, "second grid CSV")->required();
  cmp->add_option("--window", window, "compare on [0,w)^2 (default: common box)");
  cmp->add_flag("--assert", assert_flag, "exit 4 when sup-norm exceeds --cmp-tol");
  cmp->add_option("--cmp-tol", cmp_tol, "assertion tolerance")->default_val(1e-6);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (app.got_subcommand("validate")) return cmd_validate(a);
    if (app.got_subcommand("stability")) return cmd_stability(a);
    if (app.got_subcommand("region")) return cmd_region(a, cap_min, cap_max, region_steps);
    if (app.got_subcommand("contours")) return cmd_contours(a, with_map);
    if (app.got_subcommand("solve")) return cmd_solve(a, window, dump_bvp);
    if (app.got_subcommand("truncate")) return cmd_truncate(a);
    if (app.got_subcommand("simulate")) return cmd_simulate(a);
    if (app.got_subcommand("metrics")) return cmd_metrics(a);
    if (app.got_subcommand("sweep")) return cmd_sweep(a);
    if (app.got_subcommand("compare"))
      return cmd_compare(a, cmp_a, cmp_b, window, assert_flag, cmp_tol);
  } catch (const invalid_model& e) {
    std::cout << json{{"error", e.what()}, {"code", 2}}.dump(2) << "\n";
    return 2;
  } catch (const solve_error& e) {
    std::cout << json{{"error", e.what()}, {"code", 3}}.dump(2) << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cout << json{{"error", e.what()}, {"code", 3}}.dump(2) << "\n";
    return 3;
  }
  return 0;
}
