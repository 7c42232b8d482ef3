#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cfattrib/panel.hpp"
#include "cfattrib/regressor.hpp"
#include "cfattrib/structural.hpp"

namespace cfattrib {

enum class DailyPredictorKind { kLastWeek, kAvg4Weeks, kLinear, kMlp };

std::string to_string(DailyPredictorKind kind);
DailyPredictorKind daily_predictor_from_string(const std::string& text);

struct DailyModelConfig {
  DailyPredictorKind kind = DailyPredictorKind::kLinear;
  std::vector<int> lags = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14};
  // Days usable for fitting; the start is moved forward to the first day
  // with full lag history.
  DayRange train_range;
  // Share of the training days held out to estimate the residual spread.
  double validation_fraction = 0.2;
  RegressorConfig regressor;
};

inline constexpr std::size_t kMinDailyTrainingDays = 60;

// One-step-ahead predictor of the daily density with a Gaussian residual.
class DailyModel {
 public:
  DailyModel(DailyModelConfig config, std::shared_ptr<const Regressor> regressor,
             double residual_std, DayRange fit_range, DayRange validation_range);

  // Prediction for day t from the observed values before t.
  double predict(std::span<const double> series, std::size_t t) const;
  std::size_t min_day() const;
  double residual_std() const { return residual_std_; }
  const DailyModelConfig& config() const { return config_; }
  DayRange fit_range() const { return fit_range_; }
  DayRange validation_range() const { return validation_range_; }

 private:
  DailyModelConfig config_;
  std::shared_ptr<const Regressor> regressor_;
  double residual_std_ = 0.0;
  DayRange fit_range_;
  DayRange validation_range_;
};

std::size_t daily_history_needed(const DailyModelConfig& config);

// Fits on the leading part of the training days and takes the residual std
// from the validation tail. Throws kInsufficientData below
// kMinDailyTrainingDays usable days.
DailyModel fit_daily_model(std::span<const double> series, const DailyModelConfig& config);

struct OutlierDay {
  std::size_t day = 0;
  double prediction = 0.0;
  double low = 0.0;
  double high = 0.0;
  double observed = 0.0;
  bool flagged = false;
};

struct OutlierReport {
  double level = 0.95;
  double z = 0.0;
  double residual_std = 0.0;
  std::vector<OutlierDay> days;

  std::vector<std::size_t> flagged_days() const;
  double flag_rate() const;
};

// Normal quantile for a two-sided interval at `level`.
double interval_z(double level);

// Interval = prediction +- z(level) * residual_std; a day is flagged when the
// observation lies strictly outside it.
OutlierReport detect_outliers(const DailyModel& model, std::span<const double> series,
                              DayRange eval_range, double level = 0.95);

struct ModelComparisonRow {
  std::string model;
  PredictionMetrics metrics;
};

// Fits each predictor kind on train_range and scores it on holdout.
std::vector<ModelComparisonRow> compare_daily_models(
    std::span<const double> series, DayRange train_range, DayRange holdout,
    const std::vector<DailyPredictorKind>& kinds, const RegressorConfig& regressor = {});

}  // namespace cfattrib
