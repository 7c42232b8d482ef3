#include <doctest.h>

#include <cmath>
#include <random>

#include "cfattrib/error.hpp"
#include "cfattrib/simulation.hpp"
#include "cfattrib/structural.hpp"

using namespace cfattrib;

TEST_CASE("residual reproduces the observation exactly") {
  // Exact when the residual is at most half the observation; beyond that the
  // spacing of predicted + r can skip the observation entirely.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> e(-20.0, 20.0);
  for (int i = 0; i < 100000; ++i) {
    const double observed = u(rng) * std::pow(10.0, e(rng));
    const double predicted = observed + 0.5 * observed * u(rng);
    const double r = exact_residual(observed, predicted);
    REQUIRE(predicted + r == observed);
  }
  const double r = exact_residual(200.837, 5123.4);
  CHECK(r == doctest::Approx(200.837 - 5123.4));
}

TEST_CASE("lag features read the observed history") {
  SimulationConfig config;
  config.categories = 2;
  config.days = 60;
  const auto data = generate_dataset(config);
  const auto table = data.panel.to_table();
  const auto graph = make_ad_matching_graph(data.panel.categories);
  const auto f = make_lag_features(table, graph, "den:c00", 20);
  const auto& den = table.at("den:c00");
  REQUIRE(f.size() == 5);
  CHECK(f[0] == table.value("ad:c00", 20));
  CHECK(f[1] == table.value("qv:c00", 20));
  CHECK(f[2] == den[19]);
  CHECK(f[3] == den[13]);
  CHECK(f[4] == den[6]);
  try {
    make_lag_features(table, graph, "den:c00", 13);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInsufficientHistory);
  }
}

TEST_CASE("well-specified linear features recover the generator") {
  SimulationConfig config;
  config.categories = 3;
  config.days = 300;
  config.sigma = 0.0;
  const auto data = generate_dataset(config);
  const auto table = data.panel.to_table();
  const auto graph = make_ad_matching_graph(data.panel.categories);
  RegressorConfig rc;
  rc.ridge = 0.0;
  FeatureOptions features;
  features.ratio = true;
  features.alternating_half_period = 7;
  for (const auto& c : data.panel.categories) {
    const auto model = fit_node_model(table, graph, den_node(c), rc, {28, 300}, features);
    CHECK(model.residual_scale < 1e-8);
    for (double r : model.residuals) CHECK(std::abs(r) < 1e-8);
  }
}

TEST_CASE("fitting guards") {
  SimulationConfig config;
  config.categories = 2;
  config.days = 100;
  const auto data = generate_dataset(config);
  const auto table = data.panel.to_table();
  const auto graph = make_ad_matching_graph(data.panel.categories);
  auto code = [&](DayRange range) {
    try {
      fit_node_model(table, graph, "den:c00", {}, range);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIo;
  };
  CHECK(code({28, 40}) == ErrorCode::kInsufficientData);
  CHECK(code({5, 100}) == ErrorCode::kInsufficientHistory);
  SeriesTable partial;
  partial.set("ad:c00", table.at("ad:c00"));
  CHECK_THROWS_AS(fit_node_model(partial, graph, "den:c00", {}, {28, 100}), Error);
}

TEST_CASE("node fitting is independent of the worker count") {
  SimulationConfig config;
  config.categories = 3;
  config.days = 200;
  const auto data = generate_dataset(config);
  const auto table = data.panel.to_table();
  const auto graph = make_ad_matching_graph(data.panel.categories);
  ScmFitConfig fit;
  fit.regressor.kind = RegressorKind::kMlp;
  fit.regressor.mlp.epochs = 5;
  fit.train_range = {28, 199};
  fit.threads = 1;
  const auto one = fit_scm(graph, table, fit);
  fit.threads = 3;
  const auto three = fit_scm(graph, table, fit);
  for (const auto& [name, model] : one.models()) {
    CHECK(model.residuals == three.model(name).residuals);
  }
}

TEST_CASE("error metrics") {
  const std::vector<double> predicted = {1.0, 3.0, 0.0, 5.0};
  const std::vector<double> actual = {2.0, 2.0, 0.0, 0.0};
  const auto m = compute_metrics(predicted, actual);
  CHECK(m.rows == 4);
  CHECK(m.excluded_zero_actuals == 2);
  CHECK(m.mean_ape == doctest::Approx(50.0));
  CHECK(m.median_ape == doctest::Approx(50.0));
  // 2|p-a|/(|a|+|p|): 2/3, 2/5, 0 (both zero), 2
  CHECK(m.smape == doctest::Approx((2.0 / 3.0 + 0.4 + 0.0 + 2.0) / 4.0));
}

TEST_CASE("naive predictors") {
  std::vector<double> s(40);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<double>(i * i);
  CHECK(last_week(s, 10) == 9.0);
  CHECK(avg_4_weeks(s, 30) == doctest::Approx((529.0 + 256.0 + 81.0 + 4.0) / 4.0));
  CHECK_THROWS_AS(last_week(s, 6), Error);
  CHECK_THROWS_AS(avg_4_weeks(s, 27), Error);
}

TEST_CASE("holdout may not overlap training") {
  SimulationConfig config;
  config.categories = 2;
  config.days = 120;
  const auto data = generate_dataset(config);
  const auto table = data.panel.to_table();
  const auto graph = make_ad_matching_graph(data.panel.categories);
  const auto model = fit_node_model(table, graph, "den:c01", {}, {28, 100});
  CHECK_THROWS_AS(evaluate_model(model, table, {90, 120}), Error);
  const auto m = evaluate_model(model, table, {100, 120});
  CHECK(m.rows == 20);
}
