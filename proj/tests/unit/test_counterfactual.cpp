#include <doctest.h>

#include <random>

#include "cfattrib/counterfactual.hpp"
#include "cfattrib/error.hpp"
#include "cfattrib/simulation.hpp"
#include "support/known_scm.hpp"

using namespace cfattrib;
using testing_support::KnownSystem;

namespace {

KnownSystem chain() {
  KnownSystem sys;
  sys.inputs = {"a", "b", "c"};
  sys.nodes = {
      {"m", {"a", "b"}, [](std::span<const double> p) { return p[0] * p[1]; }},
      {"y", {"m", "c"}, [](std::span<const double> p) { return std::exp(0.1 * p[0]) - p[1]; }},
  };
  return sys;
}

}  // namespace

TEST_CASE("counterfactuals match direct evaluation with the abduced noise") {
  const auto sys = chain();
  const std::map<std::string, double> noise = {{"m", 0.3}, {"y", -1.7}};
  const std::vector<double> reference = {1.0, 2.0, 3.0};
  const std::vector<double> observed = {2.5, -1.0, 0.5};
  const auto scm = sys.scm();
  const auto table = sys.table(reference, observed, noise);
  CounterfactualSession session(scm, table, 1, 0);
  CHECK(session.abduction().residuals.at("m") == doctest::Approx(0.3));
  CHECK(session.abduction().residuals.at("y") == doctest::Approx(-1.7));
  for (InputMask mask = 0; mask < 8; ++mask) {
    std::vector<double> x = observed;
    for (std::size_t i = 0; i < 3; ++i) {
      if ((mask >> i) & 1U) x[i] = reference[i];
    }
    CHECK(session.evaluate(mask) == doctest::Approx(sys.output(x, noise)).epsilon(1e-12));
  }
  CHECK(session.observed_output() == table.value("y", 1));
  CHECK(session.all_reference_output() == doctest::Approx(sys.output(reference, noise)));
}

TEST_CASE("assignment form") {
  const auto sys = chain();
  const auto scm = sys.scm();
  const auto table = sys.table({1.0, 2.0, 3.0}, {2.0, 2.0, 2.0});
  CounterfactualQuery q{1, 0, {{"a", InputSetting::kReference},
                               {"b", InputSetting::kObserved},
                               {"c", InputSetting::kObserved}}};
  CHECK(counterfactual(scm, table, q) == doctest::Approx(sys.output({1.0, 2.0, 2.0})));
  q.assignment.erase("c");
  CHECK_THROWS_AS(counterfactual(scm, table, q), Error);
  q.assignment["c"] = InputSetting::kObserved;
  q.assignment["m"] = InputSetting::kObserved;
  CHECK_THROWS_AS(counterfactual(scm, table, q), Error);
}

TEST_CASE("nonnegative nodes are clamped") {
  KnownSystem sys;
  sys.inputs = {"x"};
  sys.nodes = {{"den", {"x"}, [](std::span<const double> p) { return p[0]; }, true},
               {"y", {"den"}, [](std::span<const double> p) { return 2.0 * p[0]; }}};
  const auto scm = sys.scm();
  const auto table = sys.table({-5.0}, {1.0});
  CounterfactualSession session(scm, table, 1, 0);
  CHECK(session.evaluate(1) == 0.0);
  CHECK(session.clamp_events() == 1);
}

TEST_CASE("empty reference set returns the observation bit for bit") {
  SimulationConfig config;
  config.categories = 4;
  config.days = 150;
  std::mt19937_64 rng(9);
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    config.seed = seed;
    config.sigma = seed % 2 ? 1.0 : 10.0;
    const auto data = generate_dataset(config);
    const auto table = data.panel.to_table();
    const auto graph = make_ad_matching_graph(data.panel.categories);
    ScmFitConfig fit;
    fit.train_range = {28, 150};
    const auto scm = fit_scm(graph, table, fit);
    std::uniform_int_distribution<std::size_t> day(14, 149);
    for (int i = 0; i < 25; ++i) {
      const std::size_t t = day(rng);
      CounterfactualSession session(scm, table, t, day(rng));
      CHECK(session.evaluate(0) == data.panel.y[t]);
      // Reference equal to the observed day: every node is recomputed and
      // still lands on the observation.
      CounterfactualSession same(scm, table, t, t);
      CHECK(same.evaluate((InputMask{1} << same.player_count()) - 1) == data.panel.y[t]);
    }
  }
}

TEST_CASE("reference day needs lag history") {
  SimulationConfig config;
  config.categories = 2;
  config.days = 100;
  const auto data = generate_dataset(config);
  const auto table = data.panel.to_table();
  ScmFitConfig fit;
  fit.train_range = {28, 100};
  const auto scm = fit_scm(make_ad_matching_graph(data.panel.categories), table, fit);
  try {
    CounterfactualSession session(scm, table, 50, 10);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInsufficientHistory);
  }
}

TEST_CASE("memoization counts distinct masks") {
  const auto sys = chain();
  const auto scm = sys.scm();
  const auto table = sys.table({1.0, 2.0, 3.0}, {2.0, 2.0, 2.0});
  CounterfactualSession session(scm, table, 1, 0);
  session.evaluate(3);
  session.evaluate(3);
  session.evaluate(5);
  CHECK(session.evaluations() == 2);
  CHECK(session.cache_size() == 2);
}
