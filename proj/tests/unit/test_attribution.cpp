#include <doctest.h>

#include <random>

#include "cfattrib/attribution.hpp"
#include "cfattrib/error.hpp"
#include "cfattrib/simulation.hpp"
#include "support/known_scm.hpp"
#include "support/oracles.hpp"

using namespace cfattrib;
using testing_support::KnownSystem;

namespace {

KnownSystem crash_system() {
  KnownSystem sys;
  sys.inputs = {"x1", "x2", "x3"};
  sys.nodes = {{"crash", {"x1", "x2", "x3"}, [](std::span<const double> p) {
                  return 0.5 * p[0] + 0.4 * p[1] + 0.9 * p[2] >= 0.9 ? 1.0 : 0.0;
                }}};
  return sys;
}

// Game over "set to reference" coalitions, built by direct evaluation.
std::function<double(const std::vector<bool>&)> direct_game(const KnownSystem& sys,
                                                            const std::vector<double>& reference,
                                                            const std::vector<double>& observed,
                                                            const std::map<std::string, double>& noise) {
  const double y = sys.output(observed, noise);
  return [=](const std::vector<bool>& at_reference) {
    std::vector<double> x = observed;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (at_reference[i]) x[i] = reference[i];
    }
    return y - sys.output(x, noise);
  };
}

std::vector<double> uniform_vector(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("crash example") {
  const auto sys = crash_system();
  const auto scm = sys.scm();
  const auto table = sys.table({0, 0, 0}, {1, 1, 1});
  CounterfactualSession session(scm, table, 1, 0);
  const auto result = cf_shapley_exact(session);
  const auto oracle =
      testing_support::permutation_oracle(3, direct_game(sys, {0, 0, 0}, {1, 1, 1}, {}));
  CHECK(oracle[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(oracle[2] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(result.scores[i] - oracle[i]) < 1e-12);
  CHECK(result.total() == doctest::Approx(1.0));
  CHECK(result.target == 1.0);
}

TEST_CASE("exact scores agree with the permutation oracle on random systems") {
  std::mt19937_64 rng(123);
  for (int round = 0; round < 30; ++round) {
    const auto sys = testing_support::random_system(rng, 5, 3);
    const auto reference = uniform_vector(rng, 5);
    const auto observed = uniform_vector(rng, 5);
    std::map<std::string, double> noise;
    for (const auto& node : sys.nodes) noise[node.name] = uniform_vector(rng, 1)[0];
    const auto scm = sys.scm();
    const auto table = sys.table(reference, observed, noise);
    CounterfactualSession session(scm, table, 1, 0);
    const auto result = cf_shapley_exact(session);
    const auto oracle =
        testing_support::permutation_oracle(5, direct_game(sys, reference, observed, noise));
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(result.scores[i] == doctest::Approx(oracle[i]).epsilon(1e-9).scale(1.0));
    }
    const double target = sys.output(observed, noise) - sys.output(reference, noise);
    CHECK(std::abs(result.total() - target) < 1e-9);
  }
}

TEST_CASE("Monte Carlo estimate is seeded and converges") {
  std::mt19937_64 rng(77);
  const auto sys = testing_support::random_system(rng, 6, 2);
  const auto scm = sys.scm();
  const auto table = sys.table(uniform_vector(rng, 6), uniform_vector(rng, 6));
  CounterfactualSession session(scm, table, 1, 0);
  const auto a = cf_shapley_mc(session, 500, 9);
  const auto b = cf_shapley_mc(session, 500, 9);
  CHECK(a.scores == b.scores);
  CHECK(a.std_errors == b.std_errors);
  const auto c = cf_shapley_mc(session, 500, 10);
  CHECK(c.scores != a.scores);
  // Each sampled permutation telescopes to the full change.
  CHECK(std::abs(a.total() - a.target) < 1e-9);
  const auto exact = cf_shapley_exact(session);
  const auto big = cf_shapley_mc(session, 20000, 1);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(std::abs(big.scores[i] - exact.scores[i]) <= 5.0 * big.std_errors[i] + 1e-12);
  }
}

TEST_CASE("Monte Carlo estimate does not depend on evaluation order") {
  std::mt19937_64 rng(78);
  const auto sys = testing_support::random_system(rng, 5, 2);
  const auto scm = sys.scm();
  const auto table = sys.table(uniform_vector(rng, 5), uniform_vector(rng, 5));
  CounterfactualSession warm(scm, table, 1, 0);
  cf_shapley_exact(warm);
  CounterfactualSession cold(scm, table, 1, 0);
  CHECK(cf_shapley_mc(warm, 300, 4).scores == cf_shapley_mc(cold, 300, 4).scores);
}

TEST_CASE("irrelevant and duplicated inputs") {
  KnownSystem sys;
  sys.inputs = {"a", "b", "dummy", "twin"};
  sys.nodes = {
      {"h", {"a", "dummy"}, [](std::span<const double> p) { return std::sin(p[0]) + 0.0 * p[1]; }},
      {"y", {"h", "b", "twin"},
       [](std::span<const double> p) { return p[0] * (p[1] + p[2]) + p[1] * p[2]; }},
  };
  const auto scm = sys.scm();
  const auto table = sys.table({0.1, 0.2, 5.0, 0.2}, {0.9, -0.7, -3.0, -0.7});
  CounterfactualSession session(scm, table, 1, 0);
  const auto r = cf_shapley_exact(session);
  CHECK(std::abs(r.score("dummy")) < 1e-12);
  CHECK(std::abs(r.score("b") - r.score("twin")) < 1e-12);
}

TEST_CASE("kernel weights") {
  CHECK(shapley_kernel_weight(4, 1) == doctest::Approx(3.0 / (4.0 * 1.0 * 3.0)));
  CHECK(shapley_kernel_weight(4, 2) == doctest::Approx(3.0 / (6.0 * 2.0 * 2.0)));
  CHECK(std::isinf(shapley_kernel_weight(4, 0)));
  CHECK(std::isinf(shapley_kernel_weight(4, 4)));
}

TEST_CASE("exact scores solve the constrained weighted least squares problem") {
  std::mt19937_64 rng(31);
  for (int round = 0; round < 10; ++round) {
    const auto sys = testing_support::random_system(rng, 4, 2);
    const auto reference = uniform_vector(rng, 4);
    const auto observed = uniform_vector(rng, 4);
    const auto scm = sys.scm();
    const auto table = sys.table(reference, observed);
    CounterfactualSession session(scm, table, 1, 0);
    const auto r = cf_shapley_exact(session);
    const auto game_fn = direct_game(sys, reference, observed, {});
    std::vector<double> game(16);
    for (std::size_t m = 0; m < 16; ++m) {
      std::vector<bool> in(4);
      for (std::size_t i = 0; i < 4; ++i) in[i] = (m >> i) & 1U;
      game[m] = game_fn(in);
    }
    const auto oracle = testing_support::constrained_wls_oracle(4, game);
    const auto report = check_axioms(session, r.scores);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(std::abs(r.scores[i] - oracle[i]) < 1e-9);
      CHECK(std::abs(report.optimum[i] - oracle[i]) < 1e-9);
    }
    CHECK(std::abs(report.efficiency_residual) < 1e-12);
    CHECK(report.approximation_loss < 1e-12);
    // Any other efficient vector does worse.
    std::vector<double> moved = r.scores;
    moved[0] += 0.1;
    moved[1] -= 0.1;
    CHECK(check_axioms(session, moved).approximation_loss > 0.0);
  }
}

TEST_CASE("exact enumeration is capped") {
  KnownSystem sys;
  for (int i = 0; i < 21; ++i) sys.inputs.push_back("x" + std::to_string(i));
  sys.nodes = {{"y", sys.inputs, [](std::span<const double> p) {
                  double s = 0.0;
                  for (double v : p) s += v;
                  return s;
                }}};
  const auto scm = sys.scm();
  const auto table = sys.table(std::vector<double>(21, 0.0), std::vector<double>(21, 1.0));
  CounterfactualSession session(scm, table, 1, 0);
  try {
    cf_shapley_exact(session);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTooManyInputs);
  }
  // Additive game: every input gets exactly its own change.
  const auto mc = cf_shapley_mc(session, 50, 0);
  for (double s : mc.scores) CHECK(s == doctest::Approx(1.0));
}

TEST_CASE("direct Shapley of a linear model") {
  const LinearRegressor model({2.0, -1.0, 0.5}, 3.0);
  const std::vector<double> observed = {1.0, 1.0, 1.0};
  const std::vector<double> reference = {0.0, 3.0, -2.0};
  const auto r = shapley_direct(model, observed, reference, {"a", "b", "c"}, 200, 1);
  CHECK(r.scores[0] == doctest::Approx(2.0));
  CHECK(r.scores[1] == doctest::Approx(2.0));
  CHECK(r.scores[2] == doctest::Approx(1.5));
}

TEST_CASE("interventional Shapley with independent inputs") {
  const LinearRegressor model({2.0, -1.0}, 0.0);
  Eigen::MatrixXd history(40, 2);
  for (Eigen::Index i = 0; i < 40; ++i) {
    history(i, 0) = static_cast<double>(i % 4);
    history(i, 1) = static_cast<double>(i % 5);
  }
  const std::vector<double> observed = {5.0, 0.0};
  const auto r = do_shapley(model, history, observed, {"a", "b"}, 100, 3, 400);
  // For a linear model: w_i (x_i - E[X_i]) up to background sampling error.
  CHECK(r.scores[0] == doctest::Approx(2.0 * (5.0 - 1.5)).epsilon(0.05));
  CHECK(r.scores[1] == doctest::Approx(-1.0 * (0.0 - 2.0)).epsilon(0.1));
  CHECK_THROWS_AS(do_shapley(model, history.topRows(10), observed, {"a", "b"}, 10, 3, 10), Error);
}

TEST_CASE("delta baselines and ties") {
  PanelDataset panel;
  panel.categories = {"p", "q"};
  panel.qv = {{10.0, 20.0}, {10.0, 10.0}};
  panel.ad = {{5.0, 5.0}, {5.0, 9.0}};
  panel.den = {{1.0, 1.0}, {2.0, 4.0}};
  panel.recompute_daily_density();
  const auto d = delta_baselines(panel, 1, 0);
  CHECK(d[0].method == AttributionMethod::kAdDemandDelta);
  CHECK(d[0].scores == std::vector<double>{0.0, 4.0});
  CHECK(d[1].scores == std::vector<double>{10.0, 0.0});
  CHECK(d[2].scores == std::vector<double>{10.0, 20.0});
  CHECK(top_input(d[2]) == 1);
  const auto rel = delta_baselines(panel, 1, 0, true);
  CHECK(rel[1].scores[0] == doctest::Approx(1.0));
  AttributionResult tie;
  tie.scores = {1.0, 3.0, 3.0};
  CHECK(top_input(tie) == 1);
}

TEST_CASE("category rollup") {
  AttributionResult r;
  r.inputs = {"ad:a", "qv:a", "ad:b", "qv:b"};
  r.scores = {1.0, -0.5, 0.25, 0.25};
  const auto rollup = rollup_by_category(r, ad_matching_category_map({"a", "b"}));
  REQUIRE(rollup.rows.size() == 2);
  CHECK(rollup.rows[0].category == "a");
  CHECK(rollup.rows[0].ad_demand_attrib == 1.0);
  CHECK(rollup.rows[0].query_volume_attrib == -0.5);
  CHECK(rollup.rows[0].total == 0.5);
  CHECK(rollup.rows[1].total == 0.5);
  CHECK(rollup.top_index() == 0);
  CHECK(rollup.grand_total == 1.0);
  r.inputs[3] = "other";
  CHECK_THROWS_AS(rollup_by_category(r, ad_matching_category_map({"a", "b"})), Error);
}

TEST_CASE("method names round trip") {
  for (auto m : {AttributionMethod::kCfShapleyExact, AttributionMethod::kCfShapleyMc,
                 AttributionMethod::kShapleyDirect, AttributionMethod::kDoShapley,
                 AttributionMethod::kAdDemandDelta, AttributionMethod::kQvDelta,
                 AttributionMethod::kProductDelta}) {
    CHECK(attribution_method_from_string(to_string(m)) == m);
  }
}
