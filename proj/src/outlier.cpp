#include "cfattrib/outlier.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "cfattrib/error.hpp"

namespace cfattrib {

std::string to_string(DailyPredictorKind kind) {
  switch (kind) {
    case DailyPredictorKind::kLastWeek: return "last_week";
    case DailyPredictorKind::kAvg4Weeks: return "avg_4_weeks";
    case DailyPredictorKind::kLinear: return "linear";
    case DailyPredictorKind::kMlp: return "mlp";
  }
  return "unknown";
}

DailyPredictorKind daily_predictor_from_string(const std::string& text) {
  for (auto kind : {DailyPredictorKind::kLastWeek, DailyPredictorKind::kAvg4Weeks,
                    DailyPredictorKind::kLinear, DailyPredictorKind::kMlp}) {
    if (to_string(kind) == text) return kind;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown daily predictor '" + text + "'");
}

std::size_t daily_history_needed(const DailyModelConfig& config) {
  switch (config.kind) {
    case DailyPredictorKind::kLastWeek: return 7;
    case DailyPredictorKind::kAvg4Weeks: return 28;
    default: break;
  }
  if (config.lags.empty()) throw Error(ErrorCode::kInvalidArgument, "no lags configured");
  for (int lag : config.lags) {
    if (lag <= 0) throw Error(ErrorCode::kInvalidArgument, "lags must be positive");
  }
  return static_cast<std::size_t>(*std::max_element(config.lags.begin(), config.lags.end()));
}

namespace {

bool learned(DailyPredictorKind kind) {
  return kind == DailyPredictorKind::kLinear || kind == DailyPredictorKind::kMlp;
}

std::vector<double> lag_row(std::span<const double> series, const std::vector<int>& lags,
                            std::size_t t) {
  std::vector<double> row;
  row.reserve(lags.size());
  for (int lag : lags) row.push_back(series[t - static_cast<std::size_t>(lag)]);
  return row;
}

}  // namespace

DailyModel::DailyModel(DailyModelConfig config, std::shared_ptr<const Regressor> regressor,
                       double residual_std, DayRange fit_range, DayRange validation_range)
    : config_(std::move(config)),
      regressor_(std::move(regressor)),
      residual_std_(residual_std),
      fit_range_(fit_range),
      validation_range_(validation_range) {
  if (learned(config_.kind) && !regressor_) {
    throw Error(ErrorCode::kInvalidArgument, "learned daily model without a regressor");
  }
}

std::size_t DailyModel::min_day() const { return daily_history_needed(config_); }

double DailyModel::predict(std::span<const double> series, std::size_t t) const {
  if (t < min_day() || t > series.size()) {
    throw Error(ErrorCode::kInsufficientHistory,
                "day " + std::to_string(t) + " lacks " + std::to_string(min_day()) +
                    " days of history");
  }
  switch (config_.kind) {
    case DailyPredictorKind::kLastWeek: return last_week(series, t);
    case DailyPredictorKind::kAvg4Weeks: return avg_4_weeks(series, t);
    default: break;
  }
  const auto row = lag_row(series, config_.lags, t);
  return regressor_->predict(row);
}

DailyModel fit_daily_model(std::span<const double> series, const DailyModelConfig& config) {
  const std::size_t history = daily_history_needed(config);
  DayRange usable{std::max(config.train_range.begin, history),
                  std::min(config.train_range.end, series.size())};
  if (usable.size() < kMinDailyTrainingDays) {
    throw Error(ErrorCode::kInsufficientData,
                "daily model needs " + std::to_string(kMinDailyTrainingDays) +
                    " training days after burn-in, got " + std::to_string(usable.size()));
  }
  if (!(config.validation_fraction > 0.0 && config.validation_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "validation_fraction must lie in (0, 1)");
  }
  const auto held = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::round(config.validation_fraction *
                                             static_cast<double>(usable.size()))));
  const DayRange fit_range{usable.begin, usable.end - held};
  const DayRange validation{usable.end - held, usable.end};

  std::shared_ptr<const Regressor> regressor;
  if (learned(config.kind)) {
    const auto rows = static_cast<Eigen::Index>(fit_range.size());
    const auto cols = static_cast<Eigen::Index>(config.lags.size());
    Eigen::MatrixXd x(rows, cols);
    Eigen::VectorXd y(rows);
    for (std::size_t i = 0; i < fit_range.size(); ++i) {
      const std::size_t t = fit_range.begin + i;
      const auto row = lag_row(series, config.lags, t);
      for (Eigen::Index j = 0; j < cols; ++j) x(static_cast<Eigen::Index>(i), j) = row[j];
      y(static_cast<Eigen::Index>(i)) = series[t];
    }
    const bool constant = (y.array() == y(0)).all();
    if (constant) {
      // A flat history has no usable design; predict the constant.
      const double level = y(0);
      regressor = std::make_shared<FunctionRegressor>(
          config.lags.size(), [level](std::span<const double>) { return level; }, "constant");
    } else {
      RegressorConfig regressor_config = config.regressor;
      regressor_config.kind =
          config.kind == DailyPredictorKind::kMlp ? RegressorKind::kMlp : RegressorKind::kLinear;
      regressor = fit_regressor(regressor_config, x, y);
    }
  }

  DailyModel model(config, regressor, 0.0, fit_range, validation);
  double sum_sq = 0.0;
  for (std::size_t t = validation.begin; t < validation.end; ++t) {
    const double r = series[t] - model.predict(series, t);
    sum_sq += r * r;
  }
  const double residual_std = std::sqrt(sum_sq / static_cast<double>(validation.size()));
  return DailyModel(config, regressor, residual_std, fit_range, validation);
}

std::vector<std::size_t> OutlierReport::flagged_days() const {
  std::vector<std::size_t> out;
  for (const auto& d : days) {
    if (d.flagged) out.push_back(d.day);
  }
  return out;
}

double OutlierReport::flag_rate() const {
  if (days.empty()) return 0.0;
  return static_cast<double>(flagged_days().size()) / static_cast<double>(days.size());
}

double interval_z(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "level must lie in (0, 1)");
  }
  return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + level / 2.0);
}

OutlierReport detect_outliers(const DailyModel& model, std::span<const double> series,
                              DayRange eval_range, double level) {
  if (eval_range.end > series.size()) {
    throw Error(ErrorCode::kInvalidArgument, "evaluation range extends past the series");
  }
  OutlierReport report;
  report.level = level;
  report.z = interval_z(level);
  report.residual_std = model.residual_std();
  const double half = report.z * model.residual_std();
  for (std::size_t t = eval_range.begin; t < eval_range.end; ++t) {
    OutlierDay day;
    day.day = t;
    day.prediction = model.predict(series, t);
    day.low = day.prediction - half;
    day.high = day.prediction + half;
    day.observed = series[t];
    day.flagged = day.observed < day.low || day.observed > day.high;
    report.days.push_back(day);
  }
  return report;
}

std::vector<ModelComparisonRow> compare_daily_models(std::span<const double> series,
                                                     DayRange train_range, DayRange holdout,
                                                     const std::vector<DailyPredictorKind>& kinds,
                                                     const RegressorConfig& regressor) {
  if (holdout.begin < train_range.end && train_range.begin < holdout.end) {
    throw Error(ErrorCode::kInvalidArgument, "holdout overlaps the training days");
  }
  std::vector<ModelComparisonRow> rows;
  for (auto kind : kinds) {
    DailyModelConfig config;
    config.kind = kind;
    config.train_range = train_range;
    config.regressor = regressor;
    const DailyModel model = fit_daily_model(series, config);
    auto predictor = [&](std::size_t t) { return model.predict(series, t); };
    rows.push_back({to_string(kind), evaluate_predictor(predictor, series, holdout)});
  }
  return rows;
}

}  // namespace cfattrib
