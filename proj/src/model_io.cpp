#include "qp/model_io.hpp"

#include <fstream>

namespace qp {

namespace {

std::vector<double> cell_table(const json& v, int n1, int n2, const char* name) {
  size_t cells = static_cast<size_t>(n1 + 1) * (n2 + 1);
  std::vector<double> t(cells);
  if (v.is_number()) {
    std::fill(t.begin(), t.end(), v.get<double>());
    return t;
  }
  if (!v.is_array() || v.size() != static_cast<size_t>(n1 + 1))
    throw invalid_model(std::string(name) + ": expected scalar or (N1+1)x(N2+1) array");
  for (int c1 = 0; c1 <= n1; ++c1) {
    const json& row = v[c1];
    if (!row.is_array() || row.size() != static_cast<size_t>(n2 + 1))
      throw invalid_model(std::string(name) + ": bad row length");
    for (int c2 = 0; c2 <= n2; ++c2) t[static_cast<size_t>(c1) * (n2 + 1) + c2] = row[c2];
  }
  return t;
}

std::vector<double> level_vector(const json& v, int n, const char* name) {
  std::vector<double> t(n + 1, 0.0);
  if (v.is_number()) {
    for (int k = 1; k <= n; ++k) t[k] = v.get<double>();
    return t;  // index 0 stays 0 (empty queue)
  }
  if (!v.is_array() || v.size() != static_cast<size_t>(n + 1))
    throw invalid_model(std::string(name) + ": expected scalar or length N+1 array");
  for (int k = 0; k <= n; ++k) t[k] = v[k];
  return t;
}

PolicyKind policy_kind(const std::string& s) {
  if (s == "hol") return PolicyKind::hol;
  if (s == "sqf") return PolicyKind::sqf;
  if (s == "lqf") return PolicyKind::lqf;
  if (s == "bernoulli") return PolicyKind::bernoulli;
  if (s == "qlt") return PolicyKind::qlt;
  if (s == "qlt_bernoulli") return PolicyKind::qlt_bernoulli;
  if (s == "dgps") return PolicyKind::dgps;
  if (s == "mdgps") return PolicyKind::mdgps;
  if (s == "table") return PolicyKind::table;
  throw invalid_model("unknown policy tag: " + s);
}

PolicyParams parse_policy(const json& b, int n1, int n2) {
  PolicyParams pol;
  pol.kind = policy_kind(b.at("policy").get<std::string>());
  if (b.contains("beta")) pol.beta = b["beta"];
  if (b.contains("p")) pol.p = b["p"];
  if (b.contains("L")) pol.L = b["L"];
  if (pol.kind == PolicyKind::table) pol.beta1_table = cell_table(b.at("beta1"), n1, n2, "beta1");
  return pol;
}

ModelSpec parse_grid(const json& doc, int n1, int n2) {
  SupportMode mode = SupportMode::nearest;
  if (doc.contains("mode")) {
    std::string m = doc["mode"];
    if (m == "extended")
      mode = SupportMode::extended;
    else if (m != "nearest")
      throw invalid_model("mode must be \"nearest\" or \"extended\"");
  }
  ModelSpec spec = make_model(n1, n2, mode);
  const json& cells = doc.at("grid");
  for (auto it = cells.begin(); it != cells.end(); ++it) {
    int c1, c2;
    if (std::sscanf(it.key().c_str(), "%d,%d", &c1, &c2) != 2 || c1 < 0 || c1 > n1 || c2 < 0 ||
        c2 > n2)
      throw invalid_model("bad grid cell key: " + it.key());
    for (auto jt = it->begin(); jt != it->end(); ++jt) {
      int i, j;
      if (std::sscanf(jt.key().c_str(), "%d,%d", &i, &j) != 2 || i < -2 || i > 1 || j < -2 || j > 1)
        throw invalid_model("bad jump key: " + jt.key());
      spec.cell(c1, c2).set(i, j, jt->get<double>());
    }
  }
  return spec;
}

}  // namespace

ModelSpec load_model(const json& doc) {
  int n1 = doc.at("n1"), n2 = doc.at("n2");
  if (!doc.contains("builder")) return parse_grid(doc, n1, n2);
  const json& b = doc["builder"];
  std::string kind = b.at("kind");
  if (kind == "table") return parse_grid(doc, n1, n2);
  if (kind == "ra") return build_ra_model(parse_ra_params(b, n1, n2));
  if (kind == "ldgps") {
    LdgpsParams p;
    p.n1 = n1;
    p.n2 = n2;
    p.l1 = cell_table(b.at("l1"), n1, n2, "l1");
    p.l2 = cell_table(b.at("l2"), n1, n2, "l2");
    p.mu1 = level_vector(b.at("mu1"), n1, "mu1");
    p.mu2 = level_vector(b.at("mu2"), n2, "mu2");
    p.th1 = level_vector(b.value("theta1", json(0.0)), n1, "theta1");
    p.th2 = level_vector(b.value("theta2", json(0.0)), n2, "theta2");
    if (b.contains("policy"))
      p.beta1 = policy_beta1(parse_policy(b, n1, n2), n1, n2);
    else
      p.beta1 = cell_table(b.at("beta1"), n1, n2, "beta1");
    return build_ldgps_model(p);
  }
  if (kind == "policy")
    return build_policy_model(parse_policy(b, n1, n2), b.at("lambda1"), b.at("lambda2"),
                              b.at("mu1"), b.at("mu2"), n1, n2);
  throw invalid_model("unknown builder kind: " + kind);
}

RaParams parse_ra_params(const json& b, int n1, int n2) {
  std::string rule = b.value("rule", "table");
  if (rule == "power")
    return ra_params_power(b.at("lambda1"), b.at("lambda2"), b.at("r1"), b.at("r2"), n1, n2);
  if (rule == "scaled") return ra_params_scaled(b.at("lambda"), b.at("a"), n1, n2);
  RaParams p;
  p.n1 = n1;
  p.n2 = n2;
  p.a1 = cell_table(b.at("a1"), n1, n2, "a1");
  p.a2 = cell_table(b.at("a2"), n1, n2, "a2");
  p.l1 = cell_table(b.at("l1"), n1, n2, "l1");
  p.l2 = cell_table(b.at("l2"), n1, n2, "l2");
  return p;
}

ModelSpec load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_model("cannot open model file: " + path);
  json doc = json::parse(in);
  return load_model(doc);
}

json model_to_json(const ModelSpec& spec) {
  json doc;
  doc["n1"] = spec.n1;
  doc["n2"] = spec.n2;
  doc["mode"] = spec.mode == SupportMode::extended ? "extended" : "nearest";
  doc["builder"] = {{"kind", "table"}};
  json cells = json::object();
  for (int c1 = 0; c1 <= spec.n1; ++c1)
    for (int c2 = 0; c2 <= spec.n2; ++c2) {
      json entries = json::object();
      for (int i = JumpDistribution::jmin; i <= JumpDistribution::jmax; ++i)
        for (int j = JumpDistribution::jmin; j <= JumpDistribution::jmax; ++j) {
          double v = spec.cell(c1, c2).at(i, j);
          if (v != 0.0) entries[std::to_string(i) + "," + std::to_string(j)] = v;
        }
      cells[std::to_string(c1) + "," + std::to_string(c2)] = entries;
    }
  doc["grid"] = cells;
  return doc;
}

}  // namespace qp
