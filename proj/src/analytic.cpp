#include "cfattrib/analytic.hpp"

#include <vector>

#include "cfattrib/error.hpp"

namespace cfattrib {

double aggregate_daily_density(std::span<const double> den,
                               std::span<const double> qv) {
  if (den.empty() || qv.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no categories to aggregate");
  }
  if (den.size() != qv.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "density and volume vectors differ in length");
  }
  double weighted = 0.0;
  double total = 0.0;
  for (std::size_t c = 0; c < den.size(); ++c) {
    if (!(qv[c] > 0.0)) {
      throw Error(ErrorCode::kNonPositiveVolume,
                  "query volume must be positive (index " + std::to_string(c) +
                      ")");
    }
    weighted += den[c] * qv[c];
    total += qv[c];
  }
  return weighted / total;
}

namespace {

double weighted_pairs(std::span<const double> args) {
  if (args.size() % 2 != 0) {
    throw Error(ErrorCode::kDimensionMismatch,
                "qv_weighted_mean expects (density, volume) parent pairs");
  }
  std::vector<double> den;
  std::vector<double> qv;
  den.reserve(args.size() / 2);
  qv.reserve(args.size() / 2);
  for (std::size_t i = 0; i < args.size(); i += 2) {
    den.push_back(args[i]);
    qv.push_back(args[i + 1]);
  }
  return aggregate_daily_density(den, qv);
}

FunctionRegistry make_builtin() {
  FunctionRegistry registry;
  registry.add(kWeightedDensityFn, weighted_pairs);
  registry.add("sum", [](std::span<const double> args) {
    double s = 0.0;
    for (double v : args) s += v;
    return s;
  });
  registry.add("mean", [](std::span<const double> args) {
    if (args.empty()) throw Error(ErrorCode::kEmptyInput, "mean of nothing");
    double s = 0.0;
    for (double v : args) s += v;
    return s / static_cast<double>(args.size());
  });
  return registry;
}

}  // namespace

const FunctionRegistry& FunctionRegistry::builtin() {
  static const FunctionRegistry registry = make_builtin();
  return registry;
}

void FunctionRegistry::add(std::string key, AnalyticFn fn) {
  functions_[std::move(key)] = std::move(fn);
}

bool FunctionRegistry::contains(const std::string& key) const {
  return functions_.count(key) != 0;
}

const AnalyticFn& FunctionRegistry::at(const std::string& key) const {
  auto it = functions_.find(key);
  if (it == functions_.end()) {
    throw Error(ErrorCode::kUnknownFunction, "no analytic function '" + key + "'");
  }
  return it->second;
}

}  // namespace cfattrib
