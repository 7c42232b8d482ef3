#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace cfattrib {

// Point predictor over a fixed-width feature vector. Implementations must be
// immutable after construction so fitted models can be shared across threads.
class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual std::size_t input_dim() const = 0;
  // Throws kDimensionMismatch when features.size() != input_dim().
  double predict(std::span<const double> features) const;
  virtual std::string kind() const = 0;
  virtual nlohmann::json summary() const = 0;

 protected:
  virtual double predict_unchecked(std::span<const double> features) const = 0;
};

class LinearRegressor final : public Regressor {
 public:
  LinearRegressor(std::vector<double> coefficients, double intercept);

  std::size_t input_dim() const override { return coefficients_.size(); }
  std::string kind() const override { return "linear"; }
  nlohmann::json summary() const override;
  const std::vector<double>& coefficients() const { return coefficients_; }
  double intercept() const { return intercept_; }

 protected:
  double predict_unchecked(std::span<const double> features) const override;

 private:
  std::vector<double> coefficients_;
  double intercept_;
};

struct MlpOptions {
  std::size_t width = 32;
  std::size_t epochs = 60;
  std::size_t batch_size = 32;
  double learning_rate = 3e-3;
  std::uint64_t seed = 0;
};

// Feed-forward network with two hidden ReLU layers (three weight layers).
// Inputs and target are standardized with training statistics.
class MlpRegressor final : public Regressor {
 public:
  struct Parameters {
    std::size_t inputs = 0;
    std::size_t width = 0;
    std::vector<double> w1, b1, w2, b2, w3;
    double b3 = 0.0;
    std::vector<double> x_mean, x_scale;
    double y_mean = 0.0;
    double y_scale = 1.0;
  };

  explicit MlpRegressor(Parameters params);

  std::size_t input_dim() const override { return params_.inputs; }
  std::string kind() const override { return "mlp"; }
  nlohmann::json summary() const override;
  const Parameters& parameters() const { return params_; }

 protected:
  double predict_unchecked(std::span<const double> features) const override;

 private:
  Parameters params_;
};

// Wraps a caller-supplied function, e.g. a known structural equation or an
// externally trained forecaster.
class FunctionRegressor final : public Regressor {
 public:
  FunctionRegressor(std::size_t input_dim,
                    std::function<double(std::span<const double>)> fn,
                    std::string label = "external");

  std::size_t input_dim() const override { return dim_; }
  std::string kind() const override { return label_; }
  nlohmann::json summary() const override;

 protected:
  double predict_unchecked(std::span<const double> features) const override;

 private:
  std::size_t dim_;
  std::function<double(std::span<const double>)> fn_;
  std::string label_;
};

enum class RegressorKind { kLinear, kMlp };

std::string to_string(RegressorKind kind);
RegressorKind regressor_kind_from_string(const std::string& text);

struct RegressorConfig {
  RegressorKind kind = RegressorKind::kLinear;
  // Ridge penalty on standardized coefficients; 0 gives plain least squares.
  double ridge = 1e-6;
  MlpOptions mlp;
};

// Least squares with intercept. Throws kSingularDesign for constant or
// collinear feature columns, kInsufficientData for an empty design.
LinearRegressor fit_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           double ridge = 1e-6);

// Seeded mini-batch Adam on squared error. Deterministic for a given seed.
MlpRegressor fit_mlp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     const MlpOptions& options);

std::shared_ptr<const Regressor> fit_regressor(const RegressorConfig& config,
                                               const Eigen::MatrixXd& x,
                                               const Eigen::VectorXd& y);

}  // namespace cfattrib
