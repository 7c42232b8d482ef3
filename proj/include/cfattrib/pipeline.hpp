#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfattrib/attribution.hpp"
#include "cfattrib/outlier.hpp"
#include "cfattrib/regressor.hpp"
#include "cfattrib/simulation.hpp"
#include "cfattrib/structural.hpp"

namespace cfattrib {

inline constexpr const char* kVersion = "0.1.0";

enum class ReferenceRule { kLag7, kLag14, kExplicit };

std::string to_string(ReferenceRule rule);

struct RunConfig {
  // Empty graph_path means the default ad-matching graph over the panel's
  // categories with `lags`.
  std::string graph_path;
  std::string data_path;
  // Day label to attribute; defaults to the last day of the panel.
  std::optional<std::size_t> day;
  ReferenceRule reference = ReferenceRule::kLag7;
  // Day label used with ReferenceRule::kExplicit; must precede `day`.
  std::optional<std::size_t> reference_day;
  std::vector<int> lags = {1, 7, 14};
  RegressorConfig regressor;
  FeatureOptions features;
  std::vector<AttributionMethod> methods = {AttributionMethod::kCfShapleyMc};
  std::size_t permutations = 1000;
  std::size_t do_samples = 100;
  std::uint64_t seed = 0;
  bool detect = true;
  double level = 0.95;
  DailyPredictorKind daily_predictor = DailyPredictorKind::kLinear;
  std::string out_dir = "out";
  // Worker cap; 0 reads CFATTRIB_THREADS. Never affects results.
  std::size_t threads = 0;
};

nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& doc);

// Parses "lag7", "lag14" or a day label.
void parse_reference(const std::string& text, RunConfig& config);

struct PipelineResult {
  std::size_t day = 0;
  std::size_t reference_day = 0;
  std::vector<AttributionResult> attributions;
  std::optional<OutlierReport> outliers;
  nlohmann::json manifest;
};

// load -> validate -> fit -> detect -> attribute -> write. Errors keep their
// code and gain the stage name. Writes into config.out_dir:
//   model_summary.json, outliers.{csv,json}, attribution_<method>.{csv,json},
//   rollup_<method>.csv and manifest.json.
PipelineResult run_pipeline(const RunConfig& config);

struct SimulateRequest {
  SimulationConfig simulation;
  std::optional<InterventionConfig> intervention;
  std::size_t reference_offset = 14;
  std::vector<int> lags = {1, 7, 14};
  std::string out_dir = "out";
};

// Writes panel.csv, graph.json and simulation.json (generator draws and the
// intervention's ground truth).
nlohmann::json run_simulate(const SimulateRequest& request);

// Fits the structural models and writes model_summary.json with per-node
// holdout metrics over the last `holdout_days` before the end of the panel.
nlohmann::json run_fit(const RunConfig& config, std::size_t holdout_days = 60);

}  // namespace cfattrib
