#include "cfattrib/attribution.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "cfattrib/error.hpp"
#include "cfattrib/random.hpp"

namespace cfattrib {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double out = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    out *= static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return out;
}

InputMask full_mask(std::size_t n) {
  return n >= 64 ? ~InputMask{0} : (InputMask{1} << n) - 1;
}

void finish_efficiency(AttributionResult& result) {
  result.efficiency_residual = result.total() - result.target;
}

std::vector<double> mix(std::span<const double> on, std::span<const double> off,
                        InputMask mask) {
  std::vector<double> out(on.size());
  for (std::size_t j = 0; j < on.size(); ++j) {
    out[j] = (mask >> j) & 1 ? on[j] : off[j];
  }
  return out;
}

}  // namespace

std::string to_string(AttributionMethod method) {
  switch (method) {
    case AttributionMethod::kCfShapleyExact: return "cf_shapley_exact";
    case AttributionMethod::kCfShapleyMc: return "cf_shapley_mc";
    case AttributionMethod::kShapleyDirect: return "shapley_direct";
    case AttributionMethod::kDoShapley: return "do_shapley";
    case AttributionMethod::kAdDemandDelta: return "ad_demand_delta";
    case AttributionMethod::kQvDelta: return "qv_delta";
    case AttributionMethod::kProductDelta: return "product_delta";
  }
  return "unknown";
}

AttributionMethod attribution_method_from_string(const std::string& text) {
  for (auto m : {AttributionMethod::kCfShapleyExact, AttributionMethod::kCfShapleyMc,
                 AttributionMethod::kShapleyDirect, AttributionMethod::kDoShapley,
                 AttributionMethod::kAdDemandDelta, AttributionMethod::kQvDelta,
                 AttributionMethod::kProductDelta}) {
    if (to_string(m) == text) return m;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown attribution method '" + text + "'");
}

double AttributionResult::score(const std::string& input) const {
  auto it = std::find(inputs.begin(), inputs.end(), input);
  if (it == inputs.end()) {
    throw Error(ErrorCode::kInvalidArgument, "no score for '" + input + "'");
  }
  return scores[static_cast<std::size_t>(it - inputs.begin())];
}

double AttributionResult::total() const {
  return std::accumulate(scores.begin(), scores.end(), 0.0);
}

double AttributionResult::combined_std_error() const {
  double var = 0.0;
  for (double se : std_errors) var += se * se;
  return std::sqrt(var);
}

std::vector<double> exact_shapley(std::size_t players, std::span<const double> game) {
  const std::size_t count = std::size_t{1} << players;
  if (game.size() != count) {
    throw Error(ErrorCode::kDimensionMismatch, "game table must hold 2^n values");
  }
  std::vector<double> weight(players, 0.0);
  for (std::size_t s = 0; s < players; ++s) {
    weight[s] = 1.0 / (static_cast<double>(players) * binomial(players - 1, s));
  }
  std::vector<double> phi(players, 0.0);
  for (std::size_t i = 0; i < players; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    double acc = 0.0;
    for (std::size_t mask = 0; mask < count; ++mask) {
      if (mask & bit) continue;
      acc += weight[static_cast<std::size_t>(std::popcount(mask))] * (game[mask | bit] - game[mask]);
    }
    phi[i] = acc;
  }
  return phi;
}

PermutationEstimate permutation_shapley(std::size_t players,
                                        const std::function<double(InputMask)>& game,
                                        std::size_t permutations, std::uint64_t seed) {
  if (permutations == 0) {
    throw Error(ErrorCode::kInvalidArgument, "need at least one permutation");
  }
  if (players > 64) throw Error(ErrorCode::kTooManyInputs, "at most 64 players");
  std::vector<double> sum(players, 0.0);
  std::vector<double> sum_sq(players, 0.0);
  std::vector<std::size_t> order(players);
  const double empty = game(0);
  for (std::size_t p = 0; p < permutations; ++p) {
    Rng rng = make_rng(seed, "permutation", p);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    InputMask mask = 0;
    double previous = empty;
    for (std::size_t i : order) {
      mask |= InputMask{1} << i;
      const double current = game(mask);
      const double contribution = current - previous;
      sum[i] += contribution;
      sum_sq[i] += contribution * contribution;
      previous = current;
    }
  }
  PermutationEstimate out;
  out.mean.resize(players);
  out.std_error.resize(players);
  const double m = static_cast<double>(permutations);
  for (std::size_t i = 0; i < players; ++i) {
    out.mean[i] = sum[i] / m;
    if (permutations > 1) {
      const double var = std::max(0.0, (sum_sq[i] - m * out.mean[i] * out.mean[i]) / (m - 1.0));
      out.std_error[i] = std::sqrt(var / m);
    } else {
      out.std_error[i] = 0.0;
    }
  }
  return out;
}

AttributionResult cf_shapley_exact(CounterfactualSession& session) {
  const std::size_t n = session.player_count();
  if (n > kExactMaxInputs) {
    throw Error(ErrorCode::kTooManyInputs,
                std::to_string(n) + " inputs exceed the exact-enumeration cap of " +
                    std::to_string(kExactMaxInputs));
  }
  AttributionResult result;
  result.method = AttributionMethod::kCfShapleyExact;
  result.inputs = session.players();
  if (n > kExactWarnInputs) {
    result.warnings.push_back("exact enumeration over " + std::to_string(n) +
                              " inputs evaluates 2^" + std::to_string(n) + " counterfactuals");
  }
  const auto y = session.evaluate_all_subsets();
  // Coalition value: Y(u) - Y_{s'}(u).
  std::vector<double> game(y.size());
  for (std::size_t m = 0; m < y.size(); ++m) game[m] = y[0] - y[m];
  result.scores = exact_shapley(n, game);
  result.target = game.back();
  result.clamp_events = session.clamp_events();
  finish_efficiency(result);
  return result;
}

AttributionResult cf_shapley_mc(CounterfactualSession& session, std::size_t permutations,
                                std::uint64_t seed) {
  const std::size_t n = session.player_count();
  const double observed = session.observed_output();
  auto estimate = permutation_shapley(
      n, [&](InputMask mask) { return observed - session.evaluate(mask); }, permutations, seed);
  AttributionResult result;
  result.method = AttributionMethod::kCfShapleyMc;
  result.inputs = session.players();
  result.scores = std::move(estimate.mean);
  result.std_errors = std::move(estimate.std_error);
  result.target = observed - session.evaluate(full_mask(n));
  result.seed = seed;
  result.samples = permutations;
  result.clamp_events = session.clamp_events();
  finish_efficiency(result);
  return result;
}

AttributionResult shapley_direct(const Regressor& model, std::span<const double> observed,
                                 std::span<const double> reference,
                                 std::vector<std::string> names, std::size_t permutations,
                                 std::uint64_t seed) {
  if (observed.size() != reference.size() || observed.size() != model.input_dim() ||
      names.size() != observed.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "direct model, rows and names must agree in width");
  }
  const std::size_t n = observed.size();
  const double base = model.predict(reference);
  auto estimate = permutation_shapley(
      n, [&](InputMask mask) { return model.predict(mix(observed, reference, mask)) - base; },
      permutations, seed);
  AttributionResult result;
  result.method = AttributionMethod::kShapleyDirect;
  result.inputs = std::move(names);
  result.scores = std::move(estimate.mean);
  result.std_errors = std::move(estimate.std_error);
  result.target = model.predict(observed) - base;
  result.seed = seed;
  result.samples = permutations;
  finish_efficiency(result);
  return result;
}

AttributionResult do_shapley(const Regressor& model, const Eigen::MatrixXd& history,
                             std::span<const double> observed, std::vector<std::string> names,
                             std::size_t permutations, std::uint64_t seed,
                             std::size_t n_samples) {
  const std::size_t n = observed.size();
  if (n != model.input_dim() || names.size() != n ||
      static_cast<std::size_t>(history.cols()) != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                "direct model, history, row and names must agree in width");
  }
  if (history.rows() < 30) {
    throw Error(ErrorCode::kInsufficientData,
                "empirical marginals need at least 30 rows, got " +
                    std::to_string(history.rows()));
  }
  if (n_samples == 0) throw Error(ErrorCode::kInvalidArgument, "n_samples must be positive");

  // Independent per-feature draws from the empirical marginals.
  Rng rng = make_rng(seed, "do_shapley_background");
  std::uniform_int_distribution<Eigen::Index> pick(0, history.rows() - 1);
  std::vector<std::vector<double>> background(n_samples, std::vector<double>(n));
  for (auto& row : background) {
    for (std::size_t j = 0; j < n; ++j) row[j] = history(pick(rng), static_cast<Eigen::Index>(j));
  }
  auto expectation = [&](InputMask mask) {
    double acc = 0.0;
    for (const auto& row : background) acc += model.predict(mix(observed, row, mask));
    return acc / static_cast<double>(n_samples);
  };
  const double base = expectation(0);
  auto estimate = permutation_shapley(
      n, [&](InputMask mask) { return mask == 0 ? 0.0 : expectation(mask) - base; },
      permutations, seed);
  AttributionResult result;
  result.method = AttributionMethod::kDoShapley;
  result.inputs = std::move(names);
  result.scores = std::move(estimate.mean);
  result.std_errors = std::move(estimate.std_error);
  result.target = expectation(full_mask(n)) - base;
  result.seed = seed;
  result.samples = permutations;
  finish_efficiency(result);
  return result;
}

std::array<AttributionResult, 3> delta_baselines(const PanelDataset& panel, std::size_t t,
                                                 std::size_t t_ref, bool relative) {
  if (t >= panel.days() || t_ref >= panel.days()) {
    throw Error(ErrorCode::kInvalidArgument, "delta baselines need both days in the panel");
  }
  std::array<AttributionResult, 3> out;
  const AttributionMethod methods[3] = {AttributionMethod::kAdDemandDelta,
                                        AttributionMethod::kQvDelta,
                                        AttributionMethod::kProductDelta};
  auto change = [relative](double now, double before) {
    const double delta = std::abs(now - before);
    if (!relative) return delta;
    return before != 0.0 ? delta / std::abs(before) : std::numeric_limits<double>::infinity();
  };
  for (int m = 0; m < 3; ++m) {
    out[m].method = methods[m];
    out[m].inputs = panel.categories;
    out[m].target = kNaN;
    out[m].efficiency_residual = kNaN;
  }
  for (std::size_t c = 0; c < panel.category_count(); ++c) {
    out[0].scores.push_back(change(panel.ad[c][t], panel.ad[c][t_ref]));
    out[1].scores.push_back(change(panel.qv[c][t], panel.qv[c][t_ref]));
    out[2].scores.push_back(change(panel.den[c][t] * panel.qv[c][t],
                                   panel.den[c][t_ref] * panel.qv[c][t_ref]));
  }
  return out;
}

double shapley_kernel_weight(std::size_t n, std::size_t s) {
  if (s == 0 || s >= n) return std::numeric_limits<double>::infinity();
  return static_cast<double>(n - 1) /
         (binomial(n, s) * static_cast<double>(s) * static_cast<double>(n - s));
}

AxiomReport check_axioms(CounterfactualSession& session, std::span<const double> scores) {
  const std::size_t n = session.player_count();
  if (n > kExactWarnInputs) {
    throw Error(ErrorCode::kTooManyInputs,
                "approximation check enumerates 2^n coalitions; n=" + std::to_string(n) +
                    " exceeds " + std::to_string(kExactWarnInputs));
  }
  if (scores.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "one score per player required");
  }
  const auto y = session.evaluate_all_subsets();
  const std::size_t count = y.size();
  const double grand = y[0] - y[count - 1];

  AxiomReport report;
  report.efficiency_residual = std::accumulate(scores.begin(), scores.end(), 0.0) - grand;

  // Normal equations of the kernel-weighted fit, with sum(phi) = grand as a
  // Lagrange constraint.
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + 1),
                                              static_cast<Eigen::Index>(n + 1));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n + 1));
  auto objective = [&](std::span<const double> phi) {
    double total = 0.0;
    for (std::size_t mask = 1; mask + 1 < count; ++mask) {
      double fitted = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if ((mask >> i) & 1) fitted += phi[i];
      }
      const double r = (y[0] - y[mask]) - fitted;
      total += shapley_kernel_weight(n, static_cast<std::size_t>(std::popcount(mask))) * r * r;
    }
    return total;
  };
  for (std::size_t mask = 1; mask + 1 < count; ++mask) {
    const double w = shapley_kernel_weight(n, static_cast<std::size_t>(std::popcount(mask)));
    const double value = y[0] - y[mask];
    for (std::size_t i = 0; i < n; ++i) {
      if (!((mask >> i) & 1)) continue;
      rhs(static_cast<Eigen::Index>(i)) += w * value;
      for (std::size_t j = 0; j < n; ++j) {
        if ((mask >> j) & 1) kkt(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += w;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    kkt(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n)) = 1.0;
    kkt(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)) = 1.0;
  }
  rhs(static_cast<Eigen::Index>(n)) = grand;
  Eigen::VectorXd solution = kkt.fullPivLu().solve(rhs);
  report.optimum.resize(n);
  for (std::size_t i = 0; i < n; ++i) report.optimum[i] = solution(static_cast<Eigen::Index>(i));

  report.objective_at_scores = objective(scores);
  report.objective_at_optimum = objective(report.optimum);
  report.approximation_loss = report.objective_at_scores - report.objective_at_optimum;
  return report;
}

std::size_t CategoryRollup::top_index() const {
  if (rows.empty()) throw Error(ErrorCode::kEmptyInput, "empty rollup");
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].total > rows[best].total) best = i;
  }
  return best;
}

CategoryRollup rollup_by_category(const AttributionResult& result,
                                  const std::map<std::string, InputTag>& category_map) {
  CategoryRollup rollup;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < result.inputs.size(); ++i) {
    auto tag = category_map.find(result.inputs[i]);
    if (tag == category_map.end()) {
      throw Error(ErrorCode::kUnmappedInput,
                  "input '" + result.inputs[i] + "' has no category mapping");
    }
    auto [it, inserted] = index.emplace(tag->second.category, rollup.rows.size());
    if (inserted) rollup.rows.push_back({tag->second.category, 0.0, 0.0, 0.0});
    CategoryRollupRow& row = rollup.rows[it->second];
    if (tag->second.type == InputType::kAdDemand) {
      row.ad_demand_attrib += result.scores[i];
    } else {
      row.query_volume_attrib += result.scores[i];
    }
  }
  for (auto& row : rollup.rows) {
    row.total = row.ad_demand_attrib + row.query_volume_attrib;
    rollup.grand_total += row.total;
  }
  return rollup;
}

std::size_t top_input(const AttributionResult& result) {
  if (result.scores.empty()) throw Error(ErrorCode::kEmptyInput, "no scores");
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.scores.size(); ++i) {
    if (result.scores[i] > result.scores[best]) best = i;
  }
  return best;
}

}  // namespace cfattrib
