#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cfattrib/counterfactual.hpp"
#include "cfattrib/panel.hpp"
#include "cfattrib/regressor.hpp"

namespace cfattrib {

enum class AttributionMethod {
  kCfShapleyExact,
  kCfShapleyMc,
  kShapleyDirect,
  kDoShapley,
  kAdDemandDelta,
  kQvDelta,
  kProductDelta,
};

std::string to_string(AttributionMethod method);
AttributionMethod attribution_method_from_string(const std::string& text);

// Cap on exact subset enumeration; above kExactWarnInputs a warning is attached.
inline constexpr std::size_t kExactMaxInputs = 20;
inline constexpr std::size_t kExactWarnInputs = 12;

struct AttributionResult {
  AttributionMethod method = AttributionMethod::kCfShapleyExact;
  std::vector<std::string> inputs;
  std::vector<double> scores;
  // Per-input standard error of the Monte Carlo mean; empty for other methods.
  std::vector<double> std_errors;
  // Value the scores should sum to (Y(u) - Y_{v'}(u) for CF-Shapley). NaN
  // for rank-only methods.
  double target = 0.0;
  double efficiency_residual = 0.0;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  std::size_t clamp_events = 0;
  std::vector<std::string> warnings;

  double score(const std::string& input) const;
  double total() const;
  // sqrt of the summed per-input variances of the mean.
  double combined_std_error() const;
};

// Shapley values of the game whose value for coalition `mask` is
// game[mask] (game[0] is the empty coalition). Exact enumeration.
std::vector<double> exact_shapley(std::size_t players, std::span<const double> game);

struct PermutationEstimate {
  std::vector<double> mean;
  std::vector<double> std_error;
};

// Monte Carlo Shapley over `permutations` sampled orderings. Permutation p is
// drawn from its own stream (seed, p), so the estimate is a pure function of
// (seed, permutations).
PermutationEstimate permutation_shapley(std::size_t players,
                                        const std::function<double(InputMask)>& game,
                                        std::size_t permutations, std::uint64_t seed);

// CF-Shapley over the session's players by full subset enumeration.
// Throws kTooManyInputs above kExactMaxInputs players.
AttributionResult cf_shapley_exact(CounterfactualSession& session);

// CF-Shapley from M sampled permutations (n+1 counterfactuals each).
AttributionResult cf_shapley_mc(CounterfactualSession& session, std::size_t permutations,
                                std::uint64_t seed);

// Standard (non-causal) Shapley values of a direct input -> output model with
// reference-replacement masking: v(S) = g(x_S observed, rest reference) - g(reference).
AttributionResult shapley_direct(const Regressor& model, std::span<const double> observed,
                                 std::span<const double> reference,
                                 std::vector<std::string> names, std::size_t permutations,
                                 std::uint64_t seed);

// Interventional Shapley for mutually independent inputs:
// v(S) = E[g | do(X_S = x_S)] - E[g], with the non-S inputs drawn independently
// from their empirical marginals (columns of `history`). The same n_samples
// background draws serve every coalition. Needs >= 30 history rows.
AttributionResult do_shapley(const Regressor& model, const Eigen::MatrixXd& history,
                             std::span<const double> observed, std::vector<std::string> names,
                             std::size_t permutations, std::uint64_t seed,
                             std::size_t n_samples);

// AdDemandDelta, QvDelta and ProductDelta (per-category |change| between t_ref
// and t, or |relative change| when `relative`). Scores are keyed by category.
std::array<AttributionResult, 3> delta_baselines(const PanelDataset& panel, std::size_t t,
                                                 std::size_t t_ref, bool relative = false);

struct AxiomReport {
  // sum(scores) - (Y(u) - Y_{v'}(u)).
  double efficiency_residual = 0.0;
  // Kernel-weighted squared error of the scores over proper non-empty
  // coalitions, and the same at the efficiency-constrained optimum.
  double objective_at_scores = 0.0;
  double objective_at_optimum = 0.0;
  // objective_at_scores - objective_at_optimum (>= 0 up to rounding).
  double approximation_loss = 0.0;
  std::vector<double> optimum;
};

// Shapley kernel weight (n-1) / (C(n,s) s (n-s)) for a coalition of size s.
double shapley_kernel_weight(std::size_t n, std::size_t s);

// Throws kTooManyInputs above kExactWarnInputs players.
AxiomReport check_axioms(CounterfactualSession& session, std::span<const double> scores);

struct CategoryRollupRow {
  std::string category;
  double ad_demand_attrib = 0.0;
  double query_volume_attrib = 0.0;
  double total = 0.0;
};

struct CategoryRollup {
  // Categories in order of first appearance among the result's inputs.
  std::vector<CategoryRollupRow> rows;
  double grand_total = 0.0;

  // Index of the largest total; ties resolve to the lowest index.
  std::size_t top_index() const;
};

// Throws kUnmappedInput for an input missing from category_map.
CategoryRollup rollup_by_category(const AttributionResult& result,
                                  const std::map<std::string, InputTag>& category_map);

// Category with the largest score for per-category methods; ties resolve to
// the earliest input.
std::size_t top_input(const AttributionResult& result);

}  // namespace cfattrib
