#include <doctest.h>

#include <random>

#include "cfattrib/error.hpp"
#include "cfattrib/regressor.hpp"

using namespace cfattrib;

namespace {

void make_data(std::size_t rows, Eigen::MatrixXd& x, Eigen::VectorXd& y, double noise,
               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  x.resize(static_cast<Eigen::Index>(rows), 3);
  y.resize(static_cast<Eigen::Index>(rows));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) x(i, j) = n(rng) * (j + 1.0) + 5.0;
    y(i) = 1.5 - 2.0 * x(i, 0) + 0.25 * x(i, 1) + 3.0 * x(i, 2) + noise * n(rng);
  }
}

}  // namespace

TEST_CASE("least squares recovers a noiseless linear map") {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  make_data(200, x, y, 0.0, 1);
  const auto model = fit_linear(x, y, 0.0);
  CHECK(model.intercept() == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(model.coefficients()[0] == doctest::Approx(-2.0).epsilon(1e-9));
  CHECK(model.coefficients()[1] == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(model.coefficients()[2] == doctest::Approx(3.0).epsilon(1e-9));
  const std::vector<double> probe = {1.0, 2.0, 3.0};
  CHECK(model.predict(probe) == doctest::Approx(1.5 - 2.0 + 0.5 + 9.0));
}

TEST_CASE("default ridge barely moves the solution") {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  make_data(200, x, y, 0.1, 2);
  const auto plain = fit_linear(x, y, 0.0);
  const auto ridge = fit_linear(x, y);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(ridge.coefficients()[j] == doctest::Approx(plain.coefficients()[j]).epsilon(1e-5));
  }
}

TEST_CASE("singular designs are rejected") {
  Eigen::MatrixXd x(20, 2);
  Eigen::VectorXd y(20);
  for (Eigen::Index i = 0; i < 20; ++i) {
    x(i, 0) = static_cast<double>(i);
    x(i, 1) = 2.0 * static_cast<double>(i);
    y(i) = static_cast<double>(i);
  }
  try {
    fit_linear(x, y, 0.0);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSingularDesign);
  }
  x.col(1).setConstant(4.0);
  CHECK_THROWS_AS(fit_linear(x, y, 0.0), Error);
}

TEST_CASE("feature dimension is checked") {
  const LinearRegressor model({1.0, 2.0}, 0.0);
  const std::vector<double> wrong = {1.0};
  try {
    model.predict(wrong);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDimensionMismatch);
  }
}

TEST_CASE("MLP training is reproducible and fits a smooth target") {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  make_data(400, x, y, 0.0, 3);
  MlpOptions options;
  options.seed = 42;
  options.epochs = 80;
  const auto a = fit_mlp(x, y, options);
  const auto b = fit_mlp(x, y, options);
  CHECK(a.parameters().w1 == b.parameters().w1);
  CHECK(a.parameters().b3 == b.parameters().b3);
  double sq = 0.0;
  double var = 0.0;
  const double mean = y.mean();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const std::vector<double> row = {x(i, 0), x(i, 1), x(i, 2)};
    const double pa = a.predict(row);
    CHECK(pa == b.predict(row));
    sq += (pa - y(i)) * (pa - y(i));
    var += (y(i) - mean) * (y(i) - mean);
  }
  CHECK(sq / var < 0.05);
  options.seed = 43;
  const auto c = fit_mlp(x, y, options);
  CHECK(c.parameters().w1 != a.parameters().w1);
}

TEST_CASE("regressor kind names") {
  CHECK(regressor_kind_from_string(to_string(RegressorKind::kMlp)) == RegressorKind::kMlp);
  CHECK(regressor_kind_from_string("linear") == RegressorKind::kLinear);
  CHECK_THROWS_AS(regressor_kind_from_string("forest"), Error);
}
