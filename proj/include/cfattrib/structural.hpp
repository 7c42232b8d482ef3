#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cfattrib/analytic.hpp"
#include "cfattrib/graph.hpp"
#include "cfattrib/panel.hpp"
#include "cfattrib/regressor.hpp"

namespace cfattrib {

struct FeatureOptions {
  // Append parent[0] / parent[1] (ad/qv for density nodes).
  bool ratio = false;
  // When > 0, append s_t * v_{t-1} with s_t = +1 if floor(t / h) is even,
  // else -1. Represents an alternating-sign autoregressive term.
  int alternating_half_period = 0;
};

// Feature vector layout of a learned node:
//   [parents at t] ++ [v_{t-lag} for each lag] ++ [optional engineered terms]
class FeatureLayout {
 public:
  FeatureLayout() = default;
  FeatureLayout(const NodeSpec& spec, const FeatureOptions& options);

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  // Earliest day with complete history.
  std::size_t min_day() const { return min_day_; }
  const std::vector<std::string>& parents() const { return parents_; }

  // parent_values are in parent order; own_history is the node's observed
  // series (lags are always read from it).
  std::vector<double> assemble(std::span<const double> parent_values,
                               const std::vector<double>& own_history,
                               std::size_t t) const;

 private:
  std::string node_;
  std::vector<std::string> parents_;
  std::vector<int> lags_;
  FeatureOptions options_;
  std::vector<std::string> names_;
  std::size_t min_day_ = 0;
};

// Observed-parent feature vector of `node` at day t. Throws
// kInsufficientHistory when t precedes the largest lag.
std::vector<double> make_lag_features(const SeriesTable& table, const CausalGraph& graph,
                                      const std::string& node, std::size_t t,
                                      const FeatureOptions& options = {});

// Residual r = observed - predicted, nudged so that predicted + r == observed
// whenever such a double exists (always when |r| <= |observed| / 2).
double exact_residual(double observed, double predicted);

struct FittedNodeModel {
  std::string node;
  FeatureLayout layout;
  std::shared_ptr<const Regressor> regressor;
  double residual_scale = 0.0;
  DayRange train_range;
  // One residual per training day, aligned with train_range.
  std::vector<double> residuals;

  const std::vector<std::string>& feature_names() const { return layout.names(); }
};

FittedNodeModel fit_node_model(const SeriesTable& table, const CausalGraph& graph,
                               const std::string& node, const RegressorConfig& regressor,
                               DayRange train_range, const FeatureOptions& options = {});

// Throws kDimensionMismatch on a wrong-sized feature vector.
double predict(const FittedNodeModel& model, std::span<const double> features);

struct ScmFitConfig {
  RegressorConfig regressor;
  DayRange train_range;
  FeatureOptions features;
  // Worker count for fitting nodes; results do not depend on it.
  std::size_t threads = 1;
};

// Fitted structural equations: one model per learned node plus the bound
// analytic functions. Immutable; safe for concurrent read-only use.
class FittedSCM {
 public:
  FittedSCM(CausalGraph graph, std::map<std::string, FittedNodeModel> models,
            const FunctionRegistry& registry = FunctionRegistry::builtin());

  const CausalGraph& graph() const { return graph_; }
  const FittedNodeModel& model(const std::string& node) const;
  const std::map<std::string, FittedNodeModel>& models() const { return models_; }
  const AnalyticFn& function(const std::string& node) const;
  std::size_t learned_count() const { return models_.size(); }
  // Earliest day at which every learned node has full lag history.
  std::size_t min_day() const;

 private:
  CausalGraph graph_;
  std::map<std::string, FittedNodeModel> models_;
  std::map<std::string, AnalyticFn> functions_;
};

// Fits every learned node over config.train_range. Errors name the node.
FittedSCM fit_scm(const CausalGraph& graph, const SeriesTable& table,
                  const ScmFitConfig& config,
                  const FunctionRegistry& registry = FunctionRegistry::builtin());

struct PredictionMetrics {
  double mean_ape = 0.0;    // percent
  double median_ape = 0.0;  // percent
  double smape = 0.0;       // ratio in [0, 2]
  std::size_t rows = 0;
  // Rows with a zero actual, left out of the APE statistics.
  std::size_t excluded_zero_actuals = 0;
};

PredictionMetrics compute_metrics(std::span<const double> predicted,
                                  std::span<const double> actual);

PredictionMetrics evaluate_model(const FittedNodeModel& model, const SeriesTable& table,
                                 DayRange holdout);

// Metrics of an arbitrary day -> prediction function against `actual`.
PredictionMetrics evaluate_predictor(const std::function<double(std::size_t)>& predictor,
                                     std::span<const double> actual, DayRange holdout);

// Value seven days earlier. Throws kInsufficientHistory for t < 7.
double last_week(std::span<const double> series, std::size_t t);
// Mean of the values 7, 14, 21 and 28 days earlier. Needs t >= 28.
double avg_4_weeks(std::span<const double> series, std::size_t t);

}  // namespace cfattrib
