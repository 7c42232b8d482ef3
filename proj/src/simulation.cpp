#include "cfattrib/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "cfattrib/counterfactual.hpp"
#include "cfattrib/error.hpp"
#include "cfattrib/parallel.hpp"
#include "cfattrib/random.hpp"

namespace cfattrib {

double alternating_sign(std::size_t t, int half_period) {
  return (t / static_cast<std::size_t>(half_period)) % 2 == 0 ? 1.0 : -1.0;
}

std::vector<std::string> simulation_categories(std::size_t k) {
  const std::size_t width = std::max<std::size_t>(2, std::to_string(k > 0 ? k - 1 : 0).size());
  std::vector<std::string> out;
  for (std::size_t c = 0; c < k; ++c) {
    const std::string digits = std::to_string(c);
    out.push_back("c" + std::string(width - std::min<std::size_t>(width, digits.size()), '0') +
                  digits);
  }
  return out;
}

double simulated_density(const SimulationConfig& config, double ad, double qv,
                         double previous_den, std::size_t t, double noise) {
  return config.kappa * ad / qv +
         config.beta * alternating_sign(t, config.half_period) * previous_den + noise;
}

SimulatedPanel generate_dataset(const SimulationConfig& config) {
  if (config.categories < 2) {
    throw Error(ErrorCode::kInvalidArgument, "simulation needs at least 2 categories");
  }
  if (config.days <= 28) {
    throw Error(ErrorCode::kInvalidArgument, "simulation needs more than 28 days");
  }
  if (config.kappa < 0.0 || config.beta < 0.0 || config.sigma < 0.0 ||
      config.half_period <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "kappa, beta and sigma must be non-negative");
  }
  const std::size_t k = config.categories;
  const std::size_t days = config.days;
  SimulatedPanel out;
  out.config = config;
  PanelDataset& panel = out.panel;
  panel.categories = simulation_categories(k);
  panel.qv.assign(k, std::vector<double>(days));
  panel.ad.assign(k, std::vector<double>(days));
  panel.den.assign(k, std::vector<double>(days));
  out.noise.assign(k, std::vector<double>(days));
  out.gamma.resize(k);

  Rng gamma_rng = make_rng(config.seed, "sim.gamma");
  std::gamma_distribution<double> half_gamma(0.5, 1.0);
  for (std::size_t c = 0; c < k; ++c) {
    const double a = half_gamma(gamma_rng);
    const double b = half_gamma(gamma_rng);
    out.gamma[c] = a / (a + b);
  }

  for (std::size_t c = 0; c < k; ++c) {
    Rng qv_rng = make_rng(config.seed, "sim.qv", c);
    Rng ad_rng = make_rng(config.seed, "sim.ad", c);
    Rng noise_rng = make_rng(config.seed, "sim.noise", c);
    // One distribution per stream: libstdc++ caches the second draw of each pair.
    std::normal_distribution<double> qv_normal, ad_normal, noise_normal;
    double previous = 0.0;
    for (std::size_t t = 0; t < days; ++t) {
      double qv = config.qv_scale * out.gamma[c] + config.qv_sd * qv_normal(qv_rng);
      double ad = config.ad_mean + config.ad_sd * ad_normal(ad_rng);
      if (qv < config.floor) {
        qv = config.floor;
        ++out.truncations;
      }
      if (ad < config.floor) {
        ad = config.floor;
        ++out.truncations;
      }
      const double noise = config.sigma * noise_normal(noise_rng);
      panel.qv[c][t] = qv;
      panel.ad[c][t] = ad;
      out.noise[c][t] = noise;
      panel.den[c][t] = simulated_density(config, ad, qv, previous, t, noise);
      previous = panel.den[c][t];
    }
  }
  panel.recompute_daily_density();
  return out;
}

std::string to_string(InterventionConfig config) {
  return config == InterventionConfig::kAdDemand ? "config1_ad_demand" : "config2_query_volume";
}

InterventionConfig intervention_config_from_string(const std::string& text) {
  if (text == "config1_ad_demand" || text == "config1" || text == "1") {
    return InterventionConfig::kAdDemand;
  }
  if (text == "config2_query_volume" || text == "config2" || text == "2") {
    return InterventionConfig::kQueryVolume;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown intervention config '" + text + "'");
}

InterventionOutcome apply_intervention(const SimulatedPanel& data, const InterventionSpec& spec) {
  const PanelDataset& panel = data.panel;
  const std::size_t days = panel.days();
  const std::size_t k = panel.category_count();
  InterventionOutcome out;
  out.target_day = spec.target_day.value_or(days - 1);
  if (out.target_day >= days || out.target_day < spec.reference_offset) {
    throw Error(ErrorCode::kInvalidArgument, "target day has no reference day in the panel");
  }
  out.reference_day = out.target_day - spec.reference_offset;

  if (spec.chosen) {
    out.first = spec.chosen->first;
    out.second = spec.chosen->second;
    if (out.first >= k || out.second >= k) {
      throw Error(ErrorCode::kInvalidArgument, "chosen category out of range");
    }
  } else if (spec.config == InterventionConfig::kAdDemand) {
    // Mean query volume over the days before the target.
    std::vector<double> mean(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t t = 0; t < out.target_day; ++t) mean[c] += panel.qv[c][t];
    }
    out.first = static_cast<std::size_t>(std::max_element(mean.begin(), mean.end()) - mean.begin());
    out.second = static_cast<std::size_t>(std::min_element(mean.begin(), mean.end()) - mean.begin());
  } else {
    std::vector<double> distance(k);
    const double reference_daily = panel.y[out.reference_day];
    for (std::size_t c = 0; c < k; ++c) {
      distance[c] = std::abs(panel.den[c][out.reference_day] - reference_daily);
    }
    out.first = static_cast<std::size_t>(std::max_element(distance.begin(), distance.end()) -
                                         distance.begin());
    out.second = static_cast<std::size_t>(std::min_element(distance.begin(), distance.end()) -
                                          distance.begin());
  }
  if (out.first == out.second) {
    throw Error(ErrorCode::kDegenerateSelection,
                "intervention selected category " + std::to_string(out.first) + " twice");
  }
  out.ground_truth = out.first;

  out.data = data;
  PanelDataset& changed = out.data.panel;
  const std::size_t t = out.target_day;
  auto& field = spec.config == InterventionConfig::kAdDemand ? changed.ad : changed.qv;
  field[out.first][t] *= spec.first_factor;
  field[out.second][t] *= spec.second_factor;
  for (std::size_t c = 0; c < k; ++c) {
    if (spec.fresh_noise) {
      Rng rng = make_rng(data.config.seed, "sim.intervention", c);
      out.data.noise[c][t] = data.config.sigma * std::normal_distribution<double>()(rng);
    }
    const double previous = t == 0 ? 0.0 : changed.den[c][t - 1];
    changed.den[c][t] = simulated_density(data.config, changed.ad[c][t], changed.qv[c][t],
                                          previous, t, out.data.noise[c][t]);
  }
  changed.recompute_daily_density(t);
  return out;
}

std::pair<double, double> wilson_interval(std::size_t hits, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  const double nn = static_cast<double>(n);
  const double denom = 1.0 + z * z / nn;
  const double centre = (p + z * z / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

const AccuracyRow& AccuracyTable::row(AttributionMethod method, InterventionConfig config,
                                      double sigma) const {
  for (const auto& r : rows) {
    if (r.method == method && r.config == config && r.sigma == sigma) return r;
  }
  throw Error(ErrorCode::kInvalidArgument, "no accuracy row for " + to_string(method));
}

namespace {

struct Pick {
  std::size_t index = 0;
  bool tie = false;
};

Pick pick_top(const std::vector<double>& totals) {
  Pick pick;
  for (std::size_t i = 1; i < totals.size(); ++i) {
    if (totals[i] > totals[pick.index]) pick.index = i;
  }
  for (std::size_t i = 0; i < totals.size(); ++i) {
    if (i != pick.index && totals[i] == totals[pick.index]) pick.tie = true;
  }
  return pick;
}

Pick pick_top_category(const AttributionResult& result, const PanelDataset& panel) {
  const auto rollup = rollup_by_category(result, ad_matching_category_map(panel.categories));
  std::vector<double> totals(panel.category_count(), 0.0);
  for (const auto& row : rollup.rows) {
    auto it = std::find(panel.categories.begin(), panel.categories.end(), row.category);
    totals[static_cast<std::size_t>(it - panel.categories.begin())] = row.total;
  }
  return pick_top(totals);
}

bool uses(const BenchOptions& options, AttributionMethod m) {
  return std::find(options.methods.begin(), options.methods.end(), m) != options.methods.end();
}

struct TrialTask {
  InterventionConfig config;
  double sigma;
  std::size_t trial;
};

std::vector<TrialRecord> run_trial(const BenchOptions& options, const TrialTask& task) {
  SimulationConfig sim = options.simulation;
  sim.sigma = task.sigma;
  sim.seed = options.seed + task.trial;
  const SimulatedPanel generated = generate_dataset(sim);
  InterventionSpec spec;
  spec.config = task.config;
  spec.reference_offset = options.reference_offset;
  const InterventionOutcome outcome = apply_intervention(generated, spec);
  const PanelDataset& panel = outcome.data.panel;
  const std::size_t t = outcome.target_day;
  const std::size_t t_ref = outcome.reference_day;

  const int max_lag = *std::max_element(options.lags.begin(), options.lags.end());
  const DayRange train{std::max<std::size_t>(options.burn_in, static_cast<std::size_t>(max_lag)),
                       t};
  const CausalGraph graph = make_ad_matching_graph(panel.categories, options.lags);
  const SeriesTable table = panel.to_table();
  const std::uint64_t trial_seed = stream_seed(sim.seed, "bench.trial");

  std::vector<TrialRecord> records;
  auto record = [&](AttributionMethod method, Pick pick) {
    TrialRecord r{method, task.config, task.sigma, task.trial, sim.seed,
                  outcome.first, outcome.second, pick.index,
                  pick.index == outcome.ground_truth, pick.tie};
    records.push_back(r);
  };

  const bool want_exact = uses(options, AttributionMethod::kCfShapleyExact);
  const bool want_mc = uses(options, AttributionMethod::kCfShapleyMc);
  if (want_exact || want_mc) {
    ScmFitConfig fit;
    fit.regressor = options.density_regressor;
    fit.regressor.mlp.seed = stream_seed(trial_seed, "density_models");
    fit.train_range = train;
    fit.features = options.features;
    const FittedSCM scm = fit_scm(graph, table, fit);
    CounterfactualSession session(scm, table, t, t_ref);
    if (want_exact) {
      record(AttributionMethod::kCfShapleyExact, pick_top_category(cf_shapley_exact(session), panel));
    }
    if (want_mc) {
      record(AttributionMethod::kCfShapleyMc,
             pick_top_category(cf_shapley_mc(session, options.cf_permutations,
                                             stream_seed(trial_seed, "cf_mc")),
                               panel));
    }
  }

  const bool want_direct = uses(options, AttributionMethod::kShapleyDirect);
  const bool want_do = uses(options, AttributionMethod::kDoShapley);
  if (want_direct || want_do) {
    const auto inputs = graph.inputs();
    Eigen::MatrixXd x(static_cast<Eigen::Index>(train.size()),
                      static_cast<Eigen::Index>(inputs.size()));
    Eigen::VectorXd y(static_cast<Eigen::Index>(train.size()));
    for (std::size_t i = 0; i < train.size(); ++i) {
      for (std::size_t j = 0; j < inputs.size(); ++j) {
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            table.value(inputs[j], train.begin + i);
      }
      y(static_cast<Eigen::Index>(i)) = panel.y[train.begin + i];
    }
    RegressorConfig direct = options.direct_regressor;
    direct.mlp.seed = stream_seed(trial_seed, "direct_model");
    const auto model = fit_regressor(direct, x, y);
    std::vector<double> observed, reference;
    for (const auto& name : inputs) {
      observed.push_back(table.value(name, t));
      reference.push_back(table.value(name, t_ref));
    }
    if (want_direct) {
      record(AttributionMethod::kShapleyDirect,
             pick_top_category(shapley_direct(*model, observed, reference, inputs,
                                              options.baseline_permutations,
                                              stream_seed(trial_seed, "shapley_direct")),
                               panel));
    }
    if (want_do) {
      record(AttributionMethod::kDoShapley,
             pick_top_category(do_shapley(*model, x, observed, inputs,
                                          options.baseline_permutations,
                                          stream_seed(trial_seed, "do_shapley"),
                                          options.do_samples),
                               panel));
    }
  }

  const bool want_delta = uses(options, AttributionMethod::kAdDemandDelta) ||
                          uses(options, AttributionMethod::kQvDelta) ||
                          uses(options, AttributionMethod::kProductDelta);
  if (want_delta) {
    for (const auto& result : delta_baselines(panel, t, t_ref, options.relative_deltas)) {
      if (uses(options, result.method)) record(result.method, pick_top(result.scores));
    }
  }
  return records;
}

}  // namespace

AccuracyTable run_accuracy_experiment(const BenchOptions& options) {
  if (options.trials == 0) throw Error(ErrorCode::kInvalidArgument, "trials must be >= 1");
  if (options.lags.empty()) throw Error(ErrorCode::kInvalidArgument, "need at least one lag");
  std::vector<TrialTask> tasks;
  for (auto config : options.configs) {
    for (double sigma : options.sigmas) {
      for (std::size_t trial = 0; trial < options.trials; ++trial) {
        tasks.push_back({config, sigma, trial});
      }
    }
  }
  std::vector<std::vector<TrialRecord>> per_task(tasks.size());
  parallel_for(tasks.size(), options.threads,
               [&](std::size_t i) { per_task[i] = run_trial(options, tasks[i]); });

  AccuracyTable table;
  for (const auto& records : per_task) {
    table.trials.insert(table.trials.end(), records.begin(), records.end());
  }
  for (auto method : options.methods) {
    for (auto config : options.configs) {
      for (double sigma : options.sigmas) {
        AccuracyRow row{method, config, sigma};
        for (const auto& r : table.trials) {
          if (r.method != method || r.config != config || r.sigma != sigma) continue;
          ++row.trials;
          row.hits += r.correct ? 1 : 0;
          row.ties += r.tie ? 1 : 0;
        }
        row.accuracy = row.trials ? static_cast<double>(row.hits) / static_cast<double>(row.trials) : 0.0;
        std::tie(row.ci_low, row.ci_high) = wilson_interval(row.hits, row.trials);
        table.rows.push_back(row);
      }
    }
  }
  return table;
}

}  // namespace cfattrib
