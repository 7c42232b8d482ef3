#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cfattrib/panel.hpp"
#include "cfattrib/structural.hpp"

namespace cfattrib {

// Residuals of every learned node at day t (observed - predicted).
struct AbductionRecord {
  std::size_t t = 0;
  std::map<std::string, double> residuals;
};

AbductionRecord abduce(const FittedSCM& scm, const SeriesTable& table, std::size_t t);

enum class InputSetting { kObserved, kReference };

struct CounterfactualQuery {
  std::size_t t = 0;
  std::size_t t_ref = 0;
  // Must name every input node of the graph exactly once.
  std::map<std::string, InputSetting> assignment;
};

// Output value had the reference-assigned inputs taken their day-t_ref values,
// holding the day-t residuals and lag history fixed.
double counterfactual(const FittedSCM& scm, const SeriesTable& table,
                      const CounterfactualQuery& query);

// Bit i set => player i takes its reference value.
using InputMask = std::uint64_t;

// Counterfactual oracle for one (t, t_ref) pair. Residuals are abduced once
// and reused for every assignment. Results are memoized by mask; a learned
// node's value is additionally cached by the mask restricted to the players
// upstream of it. All members are safe to call concurrently (the caches are
// guarded by one mutex, so concurrent callers serialize).
class CounterfactualSession {
 public:
  // players defaults to every input node in evaluation order. Inputs not
  // listed stay at their observed value.
  CounterfactualSession(const FittedSCM& scm, const SeriesTable& table, std::size_t t,
                        std::size_t t_ref, std::vector<std::string> players = {});

  const std::vector<std::string>& players() const { return players_; }
  std::size_t player_count() const { return players_.size(); }
  std::size_t t() const { return t_; }
  std::size_t t_ref() const { return t_ref_; }
  const AbductionRecord& abduction() const { return abduction_; }
  const FittedSCM& scm() const { return *scm_; }

  // Y(u): the observed output (mask 0), bit-exact.
  double observed_output() const { return observed_output_; }
  // Y_{v'}(u): every player at its reference value.
  double all_reference_output();

  double evaluate(InputMask reference_mask);
  std::vector<double> evaluate_batch(std::span<const InputMask> masks);
  // Values for all 2^n masks, indexed by mask. Bypasses the per-mask memo.
  std::vector<double> evaluate_all_subsets();

  InputMask mask_of(const std::map<std::string, InputSetting>& assignment) const;

  // Number of evaluations that missed the per-mask memo.
  std::size_t evaluations() const;
  std::size_t cache_size() const;
  // Counterfactual values of nonnegative nodes raised to min(0, observed).
  std::size_t clamp_events() const;

 private:
  struct NodeSlot {
    std::string name;
    NodeKind kind;
    std::vector<std::size_t> parents;  // slot indices
    InputMask upstream = 0;
    int player = -1;
    double observed = 0.0;
    double reference = 0.0;
    double residual = 0.0;
    // Model prediction at the observed features.
    double baseline = 0.0;
    bool nonnegative = false;
    const FittedNodeModel* model = nullptr;
    const AnalyticFn* function = nullptr;
    const std::vector<double>* history = nullptr;
    std::unordered_map<InputMask, double> cache;
  };

  double compute_locked(InputMask mask);

  const FittedSCM* scm_;
  std::size_t t_;
  std::size_t t_ref_;
  std::vector<std::string> players_;
  AbductionRecord abduction_;
  std::vector<NodeSlot> slots_;
  std::size_t output_slot_ = 0;
  double observed_output_ = 0.0;
  mutable std::mutex mutex_;
  std::unordered_map<InputMask, double> memo_;
  std::size_t evaluations_ = 0;
  std::size_t clamp_events_ = 0;
};

}  // namespace cfattrib
