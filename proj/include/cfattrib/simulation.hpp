#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cfattrib/attribution.hpp"
#include "cfattrib/panel.hpp"
#include "cfattrib/regressor.hpp"
#include "cfattrib/structural.hpp"

namespace cfattrib {

// Synthetic ad-matching generator:
//   gamma_c ~ Beta(0.5, 0.5), drawn once per category
//   qv_t ~ N(qv_scale * gamma_c, qv_sd), ad_t ~ N(ad_mean, ad_sd)   (floored)
//   den_t = kappa * ad_t / qv_t + beta * a_t * den_{t-1} + N(0, sigma^2)
//   a_t = +1 if floor(t / half_period) is even else -1, den_{-1} = 0
struct SimulationConfig {
  std::size_t categories = 10;
  std::size_t days = 1000;
  double kappa = 0.85;
  double beta = 0.15;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  double qv_scale = 1000.0;
  double qv_sd = 100.0;
  double ad_mean = 10000.0;
  double ad_sd = 100.0;
  // Lower truncation of qv and ad draws.
  double floor = 1.0;
  int half_period = 7;
};

struct SimulatedPanel {
  PanelDataset panel;
  SimulationConfig config;
  std::vector<double> gamma;
  // Density noise realization, [category][day].
  std::vector<std::vector<double>> noise;
  // Draws of qv or ad raised to the floor.
  std::size_t truncations = 0;
};

// +1 when floor(t / half_period) is even, else -1.
double alternating_sign(std::size_t t, int half_period = 7);

// Category labels c00, c01, ... (zero padded so names sort by index).
std::vector<std::string> simulation_categories(std::size_t k);

// Throws kInvalidArgument for k < 2, days <= 28 or negative kappa/beta/sigma.
SimulatedPanel generate_dataset(const SimulationConfig& config);

// True structural equation of the generator.
double simulated_density(const SimulationConfig& config, double ad, double qv,
                         double previous_den, std::size_t t, double noise);

enum class InterventionConfig { kAdDemand, kQueryVolume };

std::string to_string(InterventionConfig config);
InterventionConfig intervention_config_from_string(const std::string& text);

struct InterventionSpec {
  InterventionConfig config = InterventionConfig::kAdDemand;
  // Defaults to the last day.
  std::optional<std::size_t> target_day;
  std::size_t reference_offset = 14;
  double first_factor = 2.0;
  double second_factor = 2.1;
  // Explicit (first, second) category indices; chosen by the config rule when unset.
  std::optional<std::pair<std::size_t, std::size_t>> chosen;
  // Redraw the target-day noise; false reuses the stored draw.
  bool fresh_noise = true;
};

struct InterventionOutcome {
  SimulatedPanel data;
  std::size_t target_day = 0;
  std::size_t reference_day = 0;
  std::size_t first = 0;
  std::size_t second = 0;
  std::size_t ground_truth = 0;
};

// Config 1 scales ad demand of the highest-qv (x first_factor) and lowest-qv
// (x second_factor) categories; Config 2 scales query volume of the category
// whose reference-day density is farthest from / closest to the reference
// daily density. Only target_day changes; its densities are regenerated
// through the true equations with a fresh noise draw (stored in the outcome). Throws kDegenerateSelection when first == second.
InterventionOutcome apply_intervention(const SimulatedPanel& data, const InterventionSpec& spec);

struct BenchOptions {
  std::vector<AttributionMethod> methods = {
      AttributionMethod::kCfShapleyMc, AttributionMethod::kShapleyDirect,
      AttributionMethod::kDoShapley,   AttributionMethod::kAdDemandDelta,
      AttributionMethod::kQvDelta,     AttributionMethod::kProductDelta};
  std::vector<InterventionConfig> configs = {InterventionConfig::kAdDemand,
                                             InterventionConfig::kQueryVolume};
  std::vector<double> sigmas = {0.1, 1.0, 10.0};
  std::size_t trials = 20;
  // Trial i simulates with seed + i.
  std::uint64_t seed = 0;
  SimulationConfig simulation;
  std::vector<int> lags = {1, 7, 14};
  std::size_t burn_in = 28;
  RegressorConfig density_regressor;
  RegressorConfig direct_regressor;
  FeatureOptions features;
  std::size_t cf_permutations = 1000;
  std::size_t baseline_permutations = 1000;
  std::size_t do_samples = 100;
  bool relative_deltas = false;
  std::size_t reference_offset = 14;
  std::size_t threads = 1;
};

struct TrialRecord {
  AttributionMethod method;
  InterventionConfig config;
  double sigma = 0.0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::size_t first = 0;
  std::size_t second = 0;
  std::size_t predicted = 0;
  bool correct = false;
  // The winning score was shared by another category (resolved to lowest index).
  bool tie = false;
};

struct AccuracyRow {
  AttributionMethod method;
  InterventionConfig config;
  double sigma = 0.0;
  std::size_t trials = 0;
  std::size_t hits = 0;
  std::size_t ties = 0;
  double accuracy = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct AccuracyTable {
  std::vector<AccuracyRow> rows;
  std::vector<TrialRecord> trials;

  const AccuracyRow& row(AttributionMethod method, InterventionConfig config,
                         double sigma) const;
};

// Wilson score interval for hits/n at normal quantile z.
std::pair<double, double> wilson_interval(std::size_t hits, std::size_t n, double z = 1.959964);

// Per trial: generate, intervene at the last day, fit on [burn-in, T-2], and
// attribute the last day against reference_offset days earlier. A method is
// correct when its top category is the ground-truth (first) category.
AccuracyTable run_accuracy_experiment(const BenchOptions& options);

}  // namespace cfattrib
