#include <doctest.h>

#include <cmath>

#include "cfattrib/analytic.hpp"
#include "cfattrib/error.hpp"
#include "cfattrib/simulation.hpp"

using namespace cfattrib;

TEST_CASE("alternating sign") {
  const char* expected = "+++++++-------+";
  for (std::size_t t = 0; t < 15; ++t) {
    CHECK(alternating_sign(t) == (expected[t] == '+' ? 1.0 : -1.0));
  }
}

TEST_CASE("closed form without noise or memory") {
  SimulationConfig config;
  config.sigma = 0.0;
  config.beta = 0.0;
  config.days = 100;
  const auto data = generate_dataset(config);
  for (std::size_t c = 0; c < config.categories; ++c) {
    for (std::size_t t = 0; t < config.days; ++t) {
      CHECK(data.panel.den[c][t] == 0.85 * data.panel.ad[c][t] / data.panel.qv[c][t]);
    }
  }
}

TEST_CASE("recursion and aggregation hold on every day") {
  SimulationConfig config;
  config.seed = 4;
  config.sigma = 1.0;
  const auto data = generate_dataset(config);
  const auto& p = data.panel;
  for (std::size_t t = 0; t < p.days(); ++t) {
    const auto den = p.column_at(p.den, t);
    const auto qv = p.column_at(p.qv, t);
    CHECK(std::abs(p.y[t] - aggregate_daily_density(den, qv)) < 1e-9);
    for (std::size_t c = 0; c < p.category_count(); ++c) {
      const double prev = t == 0 ? 0.0 : p.den[c][t - 1];
      const double a = (t / 7) % 2 == 0 ? 1.0 : -1.0;
      CHECK(p.den[c][t] == doctest::Approx(0.85 * p.ad[c][t] / p.qv[c][t] + 0.15 * a * prev +
                                           data.noise[c][t]));
      CHECK(p.qv[c][t] >= 1.0);
    }
  }
  for (double g : data.gamma) {
    CHECK(g > 0.0);
    CHECK(g < 1.0);
  }
}

TEST_CASE("ad demand sampler mean") {
  SimulationConfig config;
  config.categories = 2;
  config.days = 5000;
  const auto data = generate_dataset(config);
  double sum = 0.0;
  for (const auto& row : data.panel.ad) {
    for (double v : row) sum += v;
  }
  const double mean = sum / 10000.0;
  CHECK(std::abs(mean - 10000.0) < 4.0 * 100.0 / 100.0);
}

TEST_CASE("generation is deterministic and noise scales with sigma") {
  SimulationConfig config;
  config.seed = 12;
  config.days = 200;
  const auto a = generate_dataset(config);
  const auto b = generate_dataset(config);
  CHECK(a.panel.den == b.panel.den);
  CHECK(a.panel.y == b.panel.y);
  config.sigma = 10.0;
  const auto c = generate_dataset(config);
  CHECK(c.panel.qv == a.panel.qv);
  CHECK(c.noise[3][17] == doctest::Approx(10.0 * a.noise[3][17]));
}

TEST_CASE("invalid configurations") {
  SimulationConfig config;
  config.categories = 1;
  CHECK_THROWS_AS(generate_dataset(config), Error);
  config.categories = 3;
  config.days = 28;
  CHECK_THROWS_AS(generate_dataset(config), Error);
  config.days = 100;
  config.sigma = -1.0;
  CHECK_THROWS_AS(generate_dataset(config), Error);
}

TEST_CASE("interventions change only the target day") {
  SimulationConfig config;
  config.seed = 2;
  config.days = 300;
  const auto data = generate_dataset(config);
  for (auto kind : {InterventionConfig::kAdDemand, InterventionConfig::kQueryVolume}) {
    InterventionSpec spec;
    spec.config = kind;
    const auto out = apply_intervention(data, spec);
    CHECK(out.target_day == 299);
    CHECK(out.reference_day == 285);
    CHECK(out.ground_truth == out.first);
    CHECK(out.first != out.second);
    const auto& before = data.panel;
    const auto& after = out.data.panel;
    for (std::size_t c = 0; c < before.category_count(); ++c) {
      for (std::size_t t = 0; t < 299; ++t) {
        CHECK(after.den[c][t] == before.den[c][t]);
        CHECK(after.qv[c][t] == before.qv[c][t]);
        CHECK(after.ad[c][t] == before.ad[c][t]);
      }
      const bool touched = c == out.first || c == out.second;
      const double factor = c == out.first ? 2.0 : 2.1;
      if (kind == InterventionConfig::kAdDemand) {
        CHECK(after.qv[c][299] == before.qv[c][299]);
        CHECK(after.ad[c][299] == (touched ? factor * before.ad[c][299] : before.ad[c][299]));
      } else {
        CHECK(after.ad[c][299] == before.ad[c][299]);
        CHECK(after.qv[c][299] == (touched ? factor * before.qv[c][299] : before.qv[c][299]));
      }
      CHECK(after.den[c][299] ==
            doctest::Approx(simulated_density(config, after.ad[c][299], after.qv[c][299],
                                              after.den[c][298], 299, out.data.noise[c][299])));
      CHECK(out.data.noise[c][299] != data.noise[c][299]);
    }
  }
}

TEST_CASE("selection rules") {
  SimulationConfig config;
  config.seed = 3;
  config.days = 200;
  const auto data = generate_dataset(config);
  const auto& p = data.panel;
  InterventionSpec spec;
  const auto one = apply_intervention(data, spec);
  std::vector<double> mean(p.category_count(), 0.0);
  for (std::size_t c = 0; c < p.category_count(); ++c) {
    for (std::size_t t = 0; t < 199; ++t) mean[c] += p.qv[c][t];
  }
  for (std::size_t c = 0; c < p.category_count(); ++c) {
    CHECK(mean[one.first] >= mean[c]);
    CHECK(mean[one.second] <= mean[c]);
  }
  spec.config = InterventionConfig::kQueryVolume;
  const auto two = apply_intervention(data, spec);
  const std::size_t r = two.reference_day;
  for (std::size_t c = 0; c < p.category_count(); ++c) {
    CHECK(std::abs(p.den[two.first][r] - p.y[r]) >= std::abs(p.den[c][r] - p.y[r]));
    CHECK(std::abs(p.den[two.second][r] - p.y[r]) <= std::abs(p.den[c][r] - p.y[r]));
  }
  spec.chosen = {{1, 1}};
  try {
    apply_intervention(data, spec);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDegenerateSelection);
  }
}

TEST_CASE("identity factors leave the panel unchanged") {
  SimulationConfig config;
  config.days = 100;
  const auto data = generate_dataset(config);
  InterventionSpec spec;
  spec.first_factor = 1.0;
  spec.second_factor = 1.0;
  spec.fresh_noise = false;
  const auto out = apply_intervention(data, spec);
  CHECK(out.data.panel.den == data.panel.den);
  CHECK(out.data.panel.y == data.panel.y);
}

TEST_CASE("Wilson interval") {
  const auto [lo, hi] = wilson_interval(18, 20);
  CHECK(lo == doctest::Approx(0.698953).epsilon(1e-5));
  CHECK(hi == doctest::Approx(0.972136).epsilon(1e-5));
  const auto [l0, h0] = wilson_interval(0, 20);
  CHECK(l0 == 0.0);
  CHECK(h0 == doctest::Approx(0.161125).epsilon(1e-5));
}

TEST_CASE("accuracy experiment is reproducible and independent of workers") {
  BenchOptions options;
  options.trials = 2;
  options.sigmas = {1.0};
  options.simulation.days = 150;
  options.simulation.categories = 4;
  options.cf_permutations = 50;
  options.baseline_permutations = 50;
  options.do_samples = 20;
  const auto a = run_accuracy_experiment(options);
  options.threads = 3;
  const auto b = run_accuracy_experiment(options);
  REQUIRE(a.rows.size() == options.methods.size() * 2);
  REQUIRE(a.trials.size() == b.trials.size());
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    CHECK(a.trials[i].predicted == b.trials[i].predicted);
    CHECK(a.trials[i].seed == b.trials[i].seed);
  }
  for (const auto& row : a.rows) {
    CHECK(row.trials == 2);
    CHECK(row.ci_low <= row.accuracy);
    CHECK(row.accuracy <= row.ci_high);
  }
}
