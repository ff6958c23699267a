#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "enum_oracle.hpp"
#include "qp/model.hpp"
#include "qp/model_io.hpp"
#include "qp/rng.hpp"

using namespace qp;

namespace {

LdgpsParams random_ldgps(Philox& rng, int n1, int n2, bool with_impatience) {
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
      p.l1[k] = 0.05 + 0.85 * rng.next_double();
      p.l2[k] = 0.05 + 0.85 * rng.next_double();
      if (c1 == 0)
        p.beta1[k] = 0.0;
      else if (c2 == 0)
        p.beta1[k] = 1.0;
      else
        p.beta1[k] = rng.next_double();
    }
  auto levels = [&](int n) {
    std::vector<double> v(n + 1, 0.0);
    for (int k = 1; k <= n; ++k) v[k] = rng.next_double();
    return v;
  };
  p.mu1 = levels(n1);
  p.mu2 = levels(n2);
  p.th1 = with_impatience ? levels(n1) : std::vector<double>(n1 + 1, 0.0);
  p.th2 = with_impatience ? levels(n2) : std::vector<double>(n2 + 1, 0.0);
  return p;
}

}  // namespace

TEST_CASE("RA builder produces stochastic cells and passes validation") {
  ModelSpec spec = build_ra_model(ra_params_power(0.2, 0.2, 0.5, 0.5, 2, 2));
  ValidationReport rep = validate_model(spec);
  CHECK(rep.ok);
  CHECK(rep.max_row_residual < 1e-12);
}

TEST_CASE("validation flags a broken cell") {
  ModelSpec spec = make_model(2, 2, SupportMode::nearest);
  for (int c1 = 0; c1 <= 2; ++c1)
    for (int c2 = 0; c2 <= 2; ++c2) spec.cell(c1, c2).set(0, 0, 1.0);
  spec.cell(1, 2).set(0, 0, 0.9);
  ValidationReport rep = validate_model(spec);
  CHECK(!rep.ok);
  REQUIRE(rep.issues.size() == 1);
  CHECK(rep.issues[0].c1 == 1);
  CHECK(rep.issues[0].c2 == 2);
}

TEST_CASE("validation flags unfolded mass on the axes") {
  ModelSpec spec = make_model(1, 1, SupportMode::nearest);
  for (int c1 = 0; c1 <= 1; ++c1)
    for (int c2 = 0; c2 <= 1; ++c2) spec.cell(c1, c2).set(0, 0, 1.0);
  spec.cell(0, 1).set(0, 0, 0.8);
  spec.cell(0, 1).set(-1, 0, 0.2);  // would need the [.]^+ fold
  CHECK(!validate_model(spec).ok);
}

TEST_CASE("RA: empty queue never transmits") {
  ModelSpec spec = build_ra_model(ra_params_power(0.2, 0.3, 0.5, 0.6, 2, 2));
  for (int c2 = 0; c2 <= 2; ++c2) {
    for (int j = -2; j <= 1; ++j) CHECK(spec.cell(0, c2).at(-1, j) == 0.0);
  }
}

TEST_CASE("RA drift at the homogeneous cell matches lambda1 - a1*(1-a2)") {
  // a caps chosen directly through a table
  RaParams p;
  p.n1 = p.n2 = 2;
  size_t cells = 9;
  p.a1.assign(cells, 0.0);
  p.a2.assign(cells, 0.0);
  p.l1.assign(cells, 0.0);
  p.l2.assign(cells, 0.0);
  for (int c1 = 0; c1 <= 2; ++c1)
    for (int c2 = 0; c2 <= 2; ++c2) {
      p.at(p.a1, c1, c2) = c1 == 0 ? 0.0 : 0.6;
      p.at(p.a2, c1, c2) = c2 == 0 ? 0.0 : 0.5;
      p.at(p.l1, c1, c2) = 0.1;
      p.at(p.l2, c1, c2) = 0.1;
    }
  ModelSpec spec = build_ra_model(p);
  const JumpDistribution& d = spec.cell(2, 2);
  double ex = 0;
  for (int i = -2; i <= 1; ++i)
    for (int j = -2; j <= 1; ++j) ex += i * d.at(i, j);
  CHECK(ex == doctest::Approx(0.1 - 0.6 * 0.5).epsilon(1e-14));
}

TEST_CASE("kernel_at folds indices per the homogeneity rule") {
  ModelSpec spec = build_ra_model(ra_params_power(0.2, 0.2, 0.5, 0.4, 2, 3));
  CHECK(&kernel_at(spec, 9, 1) == &spec.cell(2, 1));
  CHECK(&kernel_at(spec, 0, 0) == &spec.cell(0, 0));
  CHECK(&kernel_at(spec, 7, 12) == &spec.cell(2, 3));
}

TEST_CASE("LDGPS matches the event-tree enumeration oracle") {
  Philox rng(20240811u);
  for (int trial = 0; trial < 100; ++trial) {
    int n1 = 1 + static_cast<int>(rng.next_double() * 3);
    int n2 = 1 + static_cast<int>(rng.next_double() * 3);
    LdgpsParams p = random_ldgps(rng, n1, n2, true);
    ModelSpec spec = build_ldgps_model(p);
    CHECK(validate_model(spec).ok);
    for (int c1 = 0; c1 <= n1; ++c1)
      for (int c2 = 0; c2 <= n2; ++c2) {
        auto truth = testing::ldgps_enumerate_cell(p, c1, c2);
        for (int i = -2; i <= 1; ++i)
          for (int j = -2; j <= 1; ++j) {
            double want = 0;
            if (auto it = truth.find({i, j}); it != truth.end()) want = it->second;
            CHECK(std::abs(spec.cell(c1, c2).at(i, j) - want) < 1e-14);
          }
      }
  }
}

TEST_CASE("LDGPS with theta=0 collapses to nearest-neighbour support") {
  Philox rng(7u);
  LdgpsParams p = random_ldgps(rng, 2, 2, false);
  ModelSpec spec = build_ldgps_model(p);
  CHECK(spec.mode == SupportMode::nearest);
  for (const auto& d : spec.grid) CHECK(d.nearest_support());
}

TEST_CASE("LDGPS with certain impatience empties the class-1 coordinate") {
  // theta1 = 1 for n1 >= 1: every slot with n1 >= 2 removes at least one
  // class-1 job before arrivals can compensate by at most one
  Philox rng(11u);
  LdgpsParams p = random_ldgps(rng, 3, 2, true);
  for (int k = 1; k <= 3; ++k) p.th1[k] = 1.0;
  ModelSpec spec = build_ldgps_model(p);
  for (int c1 = 2; c1 <= 3; ++c1)
    for (int c2 = 0; c2 <= 2; ++c2) {
      auto& d = spec.cell(c1, c2);
      for (int j = -2; j <= 1; ++j) CHECK(d.at(1, j) == 0.0);
      double stay_or_up = 0;
      for (int j = -2; j <= 1; ++j) stay_or_up += d.at(0, j) + d.at(1, j);
      // only an arrival can offset the certain mobility departure
      CHECK(stay_or_up <= p.lam1(c1, c2) + 1e-14);
    }
}

TEST_CASE("HOL never serves class 2 while class 1 is backlogged") {
  ModelSpec spec = build_policy_model(PolicyParams{PolicyKind::hol}, 0.1, 0.1, 0.6, 0.6, 2, 2);
  // a (0,-1) move out of cell (1,1) would need a class-2 completion
  CHECK(spec.cell(1, 1).at(0, -1) == 0.0);
  CHECK(spec.cell(1, 1).at(1, -1) == 0.0);
}

TEST_CASE("Bernoulli with p=1 equals HOL on interior cells") {
  PolicyParams bern{PolicyKind::bernoulli};
  bern.p = 1.0;
  ModelSpec a = build_policy_model(bern, 0.15, 0.1, 0.5, 0.6, 2, 2);
  ModelSpec b = build_policy_model(PolicyParams{PolicyKind::hol}, 0.15, 0.1, 0.5, 0.6, 2, 2);
  for (int c1 = 1; c1 <= 2; ++c1)
    for (int c2 = 1; c2 <= 2; ++c2)
      for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j)
          CHECK(a.cell(c1, c2).at(i, j) == doctest::Approx(b.cell(c1, c2).at(i, j)).epsilon(1e-15));
}

TEST_CASE("SQF serves class 1 on the diagonal (documented tie rule)") {
  auto b = policy_beta1(PolicyParams{PolicyKind::sqf}, 3, 3);
  for (int k = 1; k <= 3; ++k) CHECK(b[static_cast<size_t>(k) * 4 + k] == 1.0);
}

TEST_CASE("model JSON round trip") {
  ModelSpec spec = build_ra_model(ra_params_scaled(0.1, 0.6, 2, 2));
  json doc = model_to_json(spec);
  ModelSpec back = load_model(doc);
  REQUIRE(back.n1 == spec.n1);
  REQUIRE(back.n2 == spec.n2);
  for (size_t k = 0; k < spec.grid.size(); ++k)
    for (int i = -2; i <= 1; ++i)
      for (int j = -2; j <= 1; ++j) CHECK(back.grid[k].at(i, j) == spec.grid[k].at(i, j));
}

TEST_CASE("builder JSON configs") {
  json doc = {{"n1", 2},
              {"n2", 2},
              {"builder",
               {{"kind", "ra"}, {"rule", "power"}, {"lambda1", 0.2}, {"lambda2", 0.2}, {"r1", 0.5},
                {"r2", 0.5}}}};
  ModelSpec spec = load_model(doc);
  CHECK(validate_model(spec).ok);

  json pol = {{"n1", 2},
              {"n2", 2},
              {"builder",
               {{"kind", "policy"}, {"policy", "dgps"}, {"beta", 0.4}, {"lambda1", 0.1},
                {"lambda2", 0.1}, {"mu1", 0.5}, {"mu2", 0.5}}}};
  CHECK(validate_model(load_model(pol)).ok);
  CHECK_THROWS_AS(load_model(json{{"n1", 2}, {"n2", 2}, {"builder", {{"kind", "bogus"}}}}),
                  invalid_model);
}

TEST_CASE("transpose_model mirrors the grid") {
  ModelSpec spec = build_ra_model(ra_params_power(0.2, 0.1, 0.5, 0.7, 2, 3));
  ModelSpec t = transpose_model(spec);
  CHECK(t.n1 == 3);
  CHECK(t.n2 == 2);
  CHECK(t.cell(1, 2).at(0, -1) == spec.cell(2, 1).at(-1, 0));
  CHECK(validate_model(t).ok);
}
