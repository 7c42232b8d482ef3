#include "cfattrib/structural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cfattrib/error.hpp"
#include "cfattrib/parallel.hpp"
#include "cfattrib/random.hpp"

namespace cfattrib {

FeatureLayout::FeatureLayout(const NodeSpec& spec, const FeatureOptions& options)
    : node_(spec.name), parents_(spec.parents), lags_(spec.lags), options_(options) {
  for (const auto& p : parents_) names_.push_back(p);
  for (int lag : lags_) {
    names_.push_back(node_ + "@t-" + std::to_string(lag));
    min_day_ = std::max(min_day_, static_cast<std::size_t>(lag));
  }
  if (options_.ratio && parents_.size() >= 2) {
    names_.push_back(parents_[0] + "/" + parents_[1]);
  }
  if (options_.alternating_half_period > 0) {
    names_.push_back("alt" + std::to_string(options_.alternating_half_period) + "*" + node_ +
                     "@t-1");
    min_day_ = std::max<std::size_t>(min_day_, 1);
  }
}

std::vector<double> FeatureLayout::assemble(std::span<const double> parent_values,
                                            const std::vector<double>& own_history,
                                            std::size_t t) const {
  if (parent_values.size() != parents_.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "node '" + node_ + "' expects " + std::to_string(parents_.size()) +
                    " parent values");
  }
  if (t < min_day_) {
    throw Error(ErrorCode::kInsufficientHistory,
                "node '" + node_ + "' needs " + std::to_string(min_day_) +
                    " days of history, day " + std::to_string(t) + " has fewer");
  }
  if (t >= own_history.size() && !lags_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "day outside the series of '" + node_ + "'");
  }
  std::vector<double> out;
  out.reserve(names_.size());
  out.insert(out.end(), parent_values.begin(), parent_values.end());
  for (int lag : lags_) out.push_back(own_history[t - static_cast<std::size_t>(lag)]);
  if (options_.ratio && parents_.size() >= 2) {
    out.push_back(parent_values[0] / parent_values[1]);
  }
  if (options_.alternating_half_period > 0) {
    const std::size_t half = static_cast<std::size_t>(options_.alternating_half_period);
    const double sign = (t / half) % 2 == 0 ? 1.0 : -1.0;
    out.push_back(sign * own_history[t - 1]);
  }
  return out;
}

namespace {

std::vector<double> observed_parents(const SeriesTable& table, const NodeSpec& spec,
                                     std::size_t t) {
  std::vector<double> values;
  values.reserve(spec.parents.size());
  for (const auto& p : spec.parents) values.push_back(table.value(p, t));
  return values;
}

void require_columns(const SeriesTable& table, const NodeSpec& spec) {
  if (!table.contains(spec.name)) {
    throw Error(ErrorCode::kMissingColumn, "no data column for learned node '" + spec.name + "'");
  }
  for (const auto& p : spec.parents) {
    if (!table.contains(p)) {
      throw Error(ErrorCode::kMissingColumn,
                  "no data column for '" + p + "', parent of '" + spec.name + "'");
    }
  }
}

}  // namespace

std::vector<double> make_lag_features(const SeriesTable& table, const CausalGraph& graph,
                                      const std::string& node, std::size_t t,
                                      const FeatureOptions& options) {
  const NodeSpec& spec = graph.node(node);
  FeatureLayout layout(spec, options);
  if (t < layout.min_day()) {
    throw Error(ErrorCode::kInsufficientHistory,
                "day " + std::to_string(t) + " precedes lag history of '" + node + "'");
  }
  require_columns(table, spec);
  return layout.assemble(observed_parents(table, spec, t), table.at(node), t);
}

double exact_residual(double observed, double predicted) {
  double r = observed - predicted;
  for (int i = 0; i < 16 && predicted + r != observed; ++i) {
    r = std::nextafter(r, predicted + r < observed ? std::numeric_limits<double>::infinity()
                                                   : -std::numeric_limits<double>::infinity());
  }
  return r;
}

FittedNodeModel fit_node_model(const SeriesTable& table, const CausalGraph& graph,
                               const std::string& node, const RegressorConfig& regressor,
                               DayRange train_range, const FeatureOptions& options) {
  const NodeSpec& spec = graph.node(node);
  if (spec.kind != NodeKind::kLearned) {
    throw Error(ErrorCode::kInvalidNode, "node '" + node + "' is not a learned node");
  }
  require_columns(table, spec);
  FittedNodeModel model;
  model.node = node;
  model.layout = FeatureLayout(spec, options);
  model.train_range = train_range;

  const std::size_t p = model.layout.size();
  const std::size_t n = train_range.size();
  if (train_range.end > table.days()) {
    throw Error(ErrorCode::kInvalidArgument,
                "training range of '" + node + "' extends past the data");
  }
  if (n == 0 || n < 10 * p) {
    throw Error(ErrorCode::kInsufficientData,
                "node '" + node + "' has " + std::to_string(n) + " training rows for " +
                    std::to_string(p) + " features (need at least " +
                    std::to_string(std::max<std::size_t>(1, 10 * p)) + ")");
  }
  if (train_range.begin < model.layout.min_day()) {
    throw Error(ErrorCode::kInsufficientHistory,
                "training range of '" + node + "' starts before its lag history");
  }

  const auto& target = table.at(node);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  std::vector<std::vector<double>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t t = train_range.begin + i;
    rows[i] = model.layout.assemble(observed_parents(table, spec, t), target, t);
    for (std::size_t j = 0; j < p; ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    y(static_cast<Eigen::Index>(i)) = target[t];
  }
  try {
    model.regressor = fit_regressor(regressor, x, y);
  } catch (const Error& e) {
    throw Error(e.code(), "node '" + node + "': " + e.what());
  }

  model.residuals.resize(n);
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double predicted = model.regressor->predict(rows[i]);
    model.residuals[i] = exact_residual(target[train_range.begin + i], predicted);
    sum_sq += model.residuals[i] * model.residuals[i];
  }
  model.residual_scale = std::sqrt(sum_sq / static_cast<double>(n));
  return model;
}

double predict(const FittedNodeModel& model, std::span<const double> features) {
  return model.regressor->predict(features);
}

FittedSCM::FittedSCM(CausalGraph graph, std::map<std::string, FittedNodeModel> models,
                     const FunctionRegistry& registry)
    : graph_(std::move(graph)), models_(std::move(models)) {
  for (const auto& name : graph_.order()) {
    const NodeSpec& spec = graph_.node(name);
    if (spec.kind == NodeKind::kLearned) {
      auto it = models_.find(name);
      if (it == models_.end() || !it->second.regressor) {
        throw Error(ErrorCode::kInvalidNode, "learned node '" + name + "' has no fitted model");
      }
      if (it->second.layout.size() != it->second.regressor->input_dim()) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "model of '" + name + "' disagrees with its feature layout");
      }
    } else if (spec.kind == NodeKind::kAnalytic) {
      functions_[name] = registry.at(spec.function);
    }
  }
  for (const auto& [name, model] : models_) {
    if (!graph_.contains(name) || graph_.node(name).kind != NodeKind::kLearned) {
      throw Error(ErrorCode::kInvalidNode, "model supplied for non-learned node '" + name + "'");
    }
  }
}

const FittedNodeModel& FittedSCM::model(const std::string& node) const {
  auto it = models_.find(node);
  if (it == models_.end()) {
    throw Error(ErrorCode::kInvalidNode, "no fitted model for '" + node + "'");
  }
  return it->second;
}

const AnalyticFn& FittedSCM::function(const std::string& node) const {
  auto it = functions_.find(node);
  if (it == functions_.end()) {
    throw Error(ErrorCode::kInvalidNode, "'" + node + "' is not an analytic node");
  }
  return it->second;
}

std::size_t FittedSCM::min_day() const {
  std::size_t day = 0;
  for (const auto& [name, model] : models_) day = std::max(day, model.layout.min_day());
  return day;
}

FittedSCM fit_scm(const CausalGraph& graph, const SeriesTable& table,
                  const ScmFitConfig& config, const FunctionRegistry& registry) {
  const auto learned = graph.nodes_of_kind(NodeKind::kLearned);
  for (const auto& name : learned) require_columns(table, graph.node(name));
  std::vector<FittedNodeModel> fitted(learned.size());
  parallel_for(learned.size(), config.threads, [&](std::size_t i) {
    RegressorConfig node_config = config.regressor;
    node_config.mlp.seed = stream_seed(config.regressor.mlp.seed, "node:" + learned[i]);
    fitted[i] = fit_node_model(table, graph, learned[i], node_config, config.train_range,
                               config.features);
  });
  std::map<std::string, FittedNodeModel> models;
  for (std::size_t i = 0; i < learned.size(); ++i) models.emplace(learned[i], std::move(fitted[i]));
  return FittedSCM(graph, std::move(models), registry);
}

PredictionMetrics compute_metrics(std::span<const double> predicted,
                                  std::span<const double> actual) {
  if (predicted.size() != actual.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "prediction and actual lengths differ");
  }
  PredictionMetrics m;
  m.rows = actual.size();
  std::vector<double> ape;
  double smape_sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double err = std::abs(predicted[i] - actual[i]);
    const double denom = std::abs(actual[i]) + std::abs(predicted[i]);
    smape_sum += denom > 0.0 ? 2.0 * err / denom : 0.0;
    if (actual[i] == 0.0) {
      ++m.excluded_zero_actuals;
      continue;
    }
    ape.push_back(100.0 * err / std::abs(actual[i]));
  }
  if (m.rows > 0) m.smape = smape_sum / static_cast<double>(m.rows);
  if (ape.empty()) {
    m.mean_ape = m.median_ape = m.rows > 0 ? std::numeric_limits<double>::quiet_NaN() : 0.0;
    return m;
  }
  double total = 0.0;
  for (double v : ape) total += v;
  m.mean_ape = total / static_cast<double>(ape.size());
  std::sort(ape.begin(), ape.end());
  const std::size_t mid = ape.size() / 2;
  m.median_ape = ape.size() % 2 == 1 ? ape[mid] : 0.5 * (ape[mid - 1] + ape[mid]);
  return m;
}

PredictionMetrics evaluate_predictor(const std::function<double(std::size_t)>& predictor,
                                     std::span<const double> actual, DayRange holdout) {
  if (holdout.end > actual.size()) {
    throw Error(ErrorCode::kInvalidArgument, "holdout range extends past the data");
  }
  std::vector<double> predicted;
  std::vector<double> observed;
  for (std::size_t t = holdout.begin; t < holdout.end; ++t) {
    predicted.push_back(predictor(t));
    observed.push_back(actual[t]);
  }
  return compute_metrics(predicted, observed);
}

PredictionMetrics evaluate_model(const FittedNodeModel& model, const SeriesTable& table,
                                 DayRange holdout) {
  if (holdout.begin < model.train_range.end && model.train_range.begin < holdout.end) {
    throw Error(ErrorCode::kInvalidArgument,
                "holdout range overlaps the training range of '" + model.node + "'");
  }
  const auto& target = table.at(model.node);
  return evaluate_predictor(
      [&](std::size_t t) {
        std::vector<double> parents;
        for (const auto& p : model.layout.parents()) parents.push_back(table.value(p, t));
        return predict(model, model.layout.assemble(parents, target, t));
      },
      target, holdout);
}

double last_week(std::span<const double> series, std::size_t t) {
  if (t < 7) throw Error(ErrorCode::kInsufficientHistory, "last_week needs t >= 7");
  if (t > series.size()) throw Error(ErrorCode::kInvalidArgument, "day outside series");
  return series[t - 7];
}

double avg_4_weeks(std::span<const double> series, std::size_t t) {
  if (t < 28) throw Error(ErrorCode::kInsufficientHistory, "avg_4_weeks needs t >= 28");
  if (t > series.size()) throw Error(ErrorCode::kInvalidArgument, "day outside series");
  return (series[t - 7] + series[t - 14] + series[t - 21] + series[t - 28]) / 4.0;
}

}  // namespace cfattrib
