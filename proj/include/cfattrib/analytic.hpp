#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>

namespace cfattrib {

// Closed-form structural equation: receives parent values in the order the
// node lists its parents.
using AnalyticFn = std::function<double(std::span<const double>)>;

// Registry key of the query-volume-weighted mean used for the daily density.
// Parents are interpreted as (density, volume) pairs.
inline constexpr const char* kWeightedDensityFn = "qv_weighted_mean";

class FunctionRegistry {
 public:
  // Registry pre-populated with the built-in functions:
  //   qv_weighted_mean  pairs (den_c, qv_c) -> sum(den*qv)/sum(qv)
  //   sum               sum of parents
  //   mean              arithmetic mean of parents
  static const FunctionRegistry& builtin();

  void add(std::string key, AnalyticFn fn);
  bool contains(const std::string& key) const;
  const AnalyticFn& at(const std::string& key) const;

 private:
  std::map<std::string, AnalyticFn> functions_;
};

// sum_c den_c * qv_c / sum_c qv_c.
// Throws kEmptyInput, kDimensionMismatch or kNonPositiveVolume.
double aggregate_daily_density(std::span<const double> den,
                               std::span<const double> qv);

}  // namespace cfattrib
