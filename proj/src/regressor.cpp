#include "cfattrib/regressor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cfattrib/error.hpp"
#include "cfattrib/random.hpp"

namespace cfattrib {

double Regressor::predict(std::span<const double> features) const {
  if (features.size() != input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "regressor expects " + std::to_string(input_dim()) + " features, got " +
                    std::to_string(features.size()));
  }
  return predict_unchecked(features);
}

LinearRegressor::LinearRegressor(std::vector<double> coefficients, double intercept)
    : coefficients_(std::move(coefficients)), intercept_(intercept) {}

double LinearRegressor::predict_unchecked(std::span<const double> features) const {
  double out = intercept_;
  for (std::size_t j = 0; j < coefficients_.size(); ++j) out += coefficients_[j] * features[j];
  return out;
}

nlohmann::json LinearRegressor::summary() const {
  return {{"kind", kind()}, {"intercept", intercept_}, {"coefficients", coefficients_}};
}

MlpRegressor::MlpRegressor(Parameters params) : params_(std::move(params)) {}

double MlpRegressor::predict_unchecked(std::span<const double> features) const {
  const auto& p = params_;
  const std::size_t d = p.inputs;
  const std::size_t h = p.width;
  std::vector<double> x(d);
  for (std::size_t j = 0; j < d; ++j) x[j] = (features[j] - p.x_mean[j]) / p.x_scale[j];
  std::vector<double> h1(h);
  for (std::size_t i = 0; i < h; ++i) {
    double a = p.b1[i];
    for (std::size_t j = 0; j < d; ++j) a += p.w1[i * d + j] * x[j];
    h1[i] = a > 0.0 ? a : 0.0;
  }
  double out = p.b3;
  for (std::size_t i = 0; i < h; ++i) {
    double a = p.b2[i];
    for (std::size_t j = 0; j < h; ++j) a += p.w2[i * h + j] * h1[j];
    if (a > 0.0) out += p.w3[i] * a;
  }
  return out * p.y_scale + p.y_mean;
}

nlohmann::json MlpRegressor::summary() const {
  return {{"kind", kind()},
          {"inputs", params_.inputs},
          {"width", params_.width},
          {"layers", 3},
          {"y_mean", params_.y_mean},
          {"y_scale", params_.y_scale}};
}

FunctionRegressor::FunctionRegressor(std::size_t input_dim,
                                     std::function<double(std::span<const double>)> fn,
                                     std::string label)
    : dim_(input_dim), fn_(std::move(fn)), label_(std::move(label)) {}

double FunctionRegressor::predict_unchecked(std::span<const double> features) const {
  return fn_(features);
}

nlohmann::json FunctionRegressor::summary() const {
  return {{"kind", label_}, {"inputs", dim_}};
}

std::string to_string(RegressorKind kind) {
  return kind == RegressorKind::kLinear ? "linear" : "mlp";
}

RegressorKind regressor_kind_from_string(const std::string& text) {
  if (text == "linear") return RegressorKind::kLinear;
  if (text == "mlp") return RegressorKind::kMlp;
  throw Error(ErrorCode::kInvalidArgument, "unknown regressor '" + text + "'");
}

LinearRegressor fit_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double ridge) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (n == 0 || y.size() != n) {
    throw Error(ErrorCode::kInsufficientData, "linear fit needs at least one row");
  }
  const double y_mean = y.mean();
  if (p == 0) return LinearRegressor({}, y_mean);

  Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::MatrixXd z = x.rowwise() - mean;
  Eigen::VectorXd scale(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    scale(j) = std::sqrt(z.col(j).squaredNorm() / static_cast<double>(n));
    if (!(scale(j) > 0.0) || scale(j) <= 1e-12 * std::max(1.0, std::abs(mean(j)))) {
      throw Error(ErrorCode::kSingularDesign,
                  "feature " + std::to_string(j) + " is constant over the training rows");
    }
    z.col(j) /= scale(j);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    throw Error(ErrorCode::kSingularDesign, "feature columns are collinear");
  }
  Eigen::VectorXd centered = y.array() - y_mean;
  Eigen::VectorXd beta;
  if (ridge > 0.0) {
    // Augmented least squares [Z; sqrt(l) I] b = [y; 0].
    Eigen::MatrixXd aug(n + p, p);
    aug.topRows(n) = z;
    aug.bottomRows(p) = std::sqrt(ridge) * Eigen::MatrixXd::Identity(p, p);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + p);
    rhs.head(n) = centered;
    beta = aug.colPivHouseholderQr().solve(rhs);
  } else {
    beta = qr.solve(centered);
  }
  std::vector<double> coefficients(static_cast<std::size_t>(p));
  double intercept = y_mean;
  for (Eigen::Index j = 0; j < p; ++j) {
    coefficients[static_cast<std::size_t>(j)] = beta(j) / scale(j);
    intercept -= coefficients[static_cast<std::size_t>(j)] * mean(j);
  }
  return LinearRegressor(std::move(coefficients), intercept);
}

namespace {

struct Adam {
  std::vector<double> m, v;
  explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
  void step(std::vector<double>& w, const std::vector<double>& g, double lr, double bc1,
            double bc2) {
    constexpr double kB1 = 0.9, kB2 = 0.999, kEps = 1e-8;
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = kB1 * m[i] + (1 - kB1) * g[i];
      v[i] = kB2 * v[i] + (1 - kB2) * g[i] * g[i];
      w[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + kEps);
    }
  }
};

}  // namespace

MlpRegressor fit_mlp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     const MlpOptions& options) {
  const std::size_t n = static_cast<std::size_t>(x.rows());
  const std::size_t d = static_cast<std::size_t>(x.cols());
  const std::size_t h = options.width;
  if (n == 0 || static_cast<std::size_t>(y.size()) != n) {
    throw Error(ErrorCode::kInsufficientData, "mlp fit needs at least one row");
  }
  if (h == 0 || options.batch_size == 0) {
    throw Error(ErrorCode::kInvalidArgument, "mlp width and batch size must be positive");
  }

  MlpRegressor::Parameters p;
  p.inputs = d;
  p.width = h;
  p.x_mean.assign(d, 0.0);
  p.x_scale.assign(d, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    const double mean = x.col(static_cast<Eigen::Index>(j)).mean();
    const double var =
        (x.col(static_cast<Eigen::Index>(j)).array() - mean).square().mean();
    p.x_mean[j] = mean;
    p.x_scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  p.y_mean = y.mean();
  const double y_var = (y.array() - p.y_mean).square().mean();
  p.y_scale = y_var > 0.0 ? std::sqrt(y_var) : 1.0;

  Rng rng = make_rng(options.seed, "mlp");
  auto init = [&](std::vector<double>& w, std::size_t count, std::size_t fan_in) {
    const double bound = std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(1, fan_in)));
    std::uniform_real_distribution<double> dist(-bound, bound);
    w.resize(count);
    for (auto& v : w) v = dist(rng);
  };
  init(p.w1, h * d, d);
  init(p.w2, h * h, h);
  init(p.w3, h, h);
  p.b1.assign(h, 0.0);
  p.b2.assign(h, 0.0);
  p.b3 = 0.0;

  // Standardized copies.
  std::vector<double> xs(n * d);
  std::vector<double> ys(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      xs[r * d + j] = (x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) -
                       p.x_mean[j]) / p.x_scale[j];
    }
    ys[r] = (y(static_cast<Eigen::Index>(r)) - p.y_mean) / p.y_scale;
  }

  Adam opt_w1(p.w1.size()), opt_b1(h), opt_w2(p.w2.size()), opt_b2(h), opt_w3(h);
  double m_b3 = 0.0, v_b3 = 0.0;
  std::vector<double> g_w1(p.w1.size()), g_b1(h), g_w2(p.w2.size()), g_b2(h), g_w3(h);
  std::vector<double> a1(h), h1(h), a2(h), h2(h), d2(h), d1(h);
  std::vector<std::size_t> index(n);
  std::iota(index.begin(), index.end(), 0);
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(index.begin(), index.end(), rng);
    for (std::size_t start = 0; start < n; start += options.batch_size) {
      const std::size_t stop = std::min(n, start + options.batch_size);
      std::fill(g_w1.begin(), g_w1.end(), 0.0);
      std::fill(g_b1.begin(), g_b1.end(), 0.0);
      std::fill(g_w2.begin(), g_w2.end(), 0.0);
      std::fill(g_b2.begin(), g_b2.end(), 0.0);
      std::fill(g_w3.begin(), g_w3.end(), 0.0);
      double g_b3 = 0.0;
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (std::size_t b = start; b < stop; ++b) {
        const double* row = &xs[index[b] * d];
        for (std::size_t i = 0; i < h; ++i) {
          double a = p.b1[i];
          for (std::size_t j = 0; j < d; ++j) a += p.w1[i * d + j] * row[j];
          a1[i] = a;
          h1[i] = a > 0.0 ? a : 0.0;
        }
        double out = p.b3;
        for (std::size_t i = 0; i < h; ++i) {
          double a = p.b2[i];
          for (std::size_t j = 0; j < h; ++j) a += p.w2[i * h + j] * h1[j];
          a2[i] = a;
          h2[i] = a > 0.0 ? a : 0.0;
          out += p.w3[i] * h2[i];
        }
        const double err = (out - ys[index[b]]) * inv;  // d(0.5*mse)/d(out)
        g_b3 += err;
        for (std::size_t i = 0; i < h; ++i) {
          g_w3[i] += err * h2[i];
          d2[i] = a2[i] > 0.0 ? err * p.w3[i] : 0.0;
          g_b2[i] += d2[i];
        }
        std::fill(d1.begin(), d1.end(), 0.0);
        for (std::size_t i = 0; i < h; ++i) {
          if (d2[i] == 0.0) continue;
          for (std::size_t j = 0; j < h; ++j) {
            g_w2[i * h + j] += d2[i] * h1[j];
            d1[j] += d2[i] * p.w2[i * h + j];
          }
        }
        for (std::size_t j = 0; j < h; ++j) {
          if (a1[j] <= 0.0) continue;
          g_b1[j] += d1[j];
          for (std::size_t k = 0; k < d; ++k) g_w1[j * d + k] += d1[j] * row[k];
        }
      }
      ++step;
      const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(step));
      const double lr = options.learning_rate;
      opt_w1.step(p.w1, g_w1, lr, bc1, bc2);
      opt_b1.step(p.b1, g_b1, lr, bc1, bc2);
      opt_w2.step(p.w2, g_w2, lr, bc1, bc2);
      opt_b2.step(p.b2, g_b2, lr, bc1, bc2);
      opt_w3.step(p.w3, g_w3, lr, bc1, bc2);
      m_b3 = 0.9 * m_b3 + 0.1 * g_b3;
      v_b3 = 0.999 * v_b3 + 0.001 * g_b3 * g_b3;
      p.b3 -= lr * (m_b3 / bc1) / (std::sqrt(v_b3 / bc2) + 1e-8);
    }
  }
  return MlpRegressor(std::move(p));
}

std::shared_ptr<const Regressor> fit_regressor(const RegressorConfig& config,
                                               const Eigen::MatrixXd& x,
                                               const Eigen::VectorXd& y) {
  switch (config.kind) {
    case RegressorKind::kLinear:
      return std::make_shared<LinearRegressor>(fit_linear(x, y, config.ridge));
    case RegressorKind::kMlp:
      return std::make_shared<MlpRegressor>(fit_mlp(x, y, config.mlp));
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown regressor kind");
}

}  // namespace cfattrib
