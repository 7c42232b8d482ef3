#include "cfattrib/counterfactual.hpp"

#include <algorithm>

#include "cfattrib/error.hpp"

namespace cfattrib {

namespace {

void require_history(const FittedSCM& scm, std::size_t t, const char* what) {
  if (t < scm.min_day()) {
    throw Error(ErrorCode::kInsufficientHistory,
                std::string(what) + " day " + std::to_string(t) + " has less than " +
                    std::to_string(scm.min_day()) + " days of lag history");
  }
}

std::vector<double> parent_values(const SeriesTable& table, const NodeSpec& spec,
                                  std::size_t t) {
  std::vector<double> values;
  values.reserve(spec.parents.size());
  for (const auto& p : spec.parents) values.push_back(table.value(p, t));
  return values;
}

}  // namespace

AbductionRecord abduce(const FittedSCM& scm, const SeriesTable& table, std::size_t t) {
  require_history(scm, t, "abduction");
  if (t >= table.days()) {
    throw Error(ErrorCode::kInvalidArgument, "day " + std::to_string(t) + " outside the data");
  }
  AbductionRecord record;
  record.t = t;
  for (const auto& [name, model] : scm.models()) {
    const NodeSpec& spec = scm.graph().node(name);
    const auto& history = table.at(name);
    const auto features = model.layout.assemble(parent_values(table, spec, t), history, t);
    record.residuals[name] = exact_residual(history[t], predict(model, features));
  }
  return record;
}

CounterfactualSession::CounterfactualSession(const FittedSCM& scm, const SeriesTable& table,
                                             std::size_t t, std::size_t t_ref,
                                             std::vector<std::string> players)
    : scm_(&scm), t_(t), t_ref_(t_ref), players_(std::move(players)) {
  const CausalGraph& graph = scm.graph();
  if (players_.empty()) players_ = graph.inputs();
  if (players_.size() > 64) {
    throw Error(ErrorCode::kTooManyInputs, "a session supports at most 64 players");
  }
  for (const auto& p : players_) {
    if (!graph.contains(p) || graph.node(p).kind != NodeKind::kInput) {
      throw Error(ErrorCode::kInvalidArgument, "player '" + p + "' is not an input node");
    }
    if (std::count(players_.begin(), players_.end(), p) != 1) {
      throw Error(ErrorCode::kInvalidArgument, "player '" + p + "' listed twice");
    }
  }
  if (t_ref >= table.days()) {
    throw Error(ErrorCode::kInvalidArgument,
                "reference day " + std::to_string(t_ref) + " outside the data");
  }
  require_history(scm, t_ref, "reference");
  abduction_ = abduce(scm, table, t);

  std::map<std::string, std::size_t> index;
  for (const auto& name : graph.order()) {
    const NodeSpec& spec = graph.node(name);
    NodeSlot slot;
    slot.name = name;
    slot.kind = spec.kind;
    slot.nonnegative = spec.nonnegative;
    for (const auto& p : spec.parents) {
      slot.parents.push_back(index.at(p));
      slot.upstream |= slots_[index.at(p)].upstream;
    }
    auto player = std::find(players_.begin(), players_.end(), name);
    if (player != players_.end()) {
      slot.player = static_cast<int>(player - players_.begin());
      slot.upstream |= InputMask{1} << slot.player;
    }
    std::vector<double> parents_observed;
    for (std::size_t p : slot.parents) parents_observed.push_back(slots_[p].observed);
    switch (spec.kind) {
      case NodeKind::kInput:
        slot.observed = table.value(name, t);
        slot.reference = table.value(name, t_ref);
        break;
      case NodeKind::kLearned:
        slot.model = &scm.model(name);
        slot.history = &table.at(name);
        slot.observed = (*slot.history)[t];
        slot.residual = abduction_.residuals.at(name);
        slot.baseline = predict(
            *slot.model, slot.model->layout.assemble(parents_observed, *slot.history, t));
        break;
      case NodeKind::kAnalytic:
        slot.function = &scm.function(name);
        slot.observed = table.contains(name) ? table.value(name, t)
                                             : (*slot.function)(parents_observed);
        break;
    }
    index[name] = slots_.size();
    slots_.push_back(std::move(slot));
  }
  output_slot_ = index.at(graph.output());
  observed_output_ = slots_[output_slot_].observed;
}

double CounterfactualSession::compute_locked(InputMask mask) {
  ++evaluations_;
  std::vector<double> values(slots_.size());
  std::vector<double> args;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    NodeSlot& slot = slots_[i];
    const InputMask relevant = mask & slot.upstream;
    if (relevant == 0) {
      values[i] = slot.observed;
      continue;
    }
    args.clear();
    for (std::size_t p : slot.parents) args.push_back(values[p]);
    switch (slot.kind) {
      case NodeKind::kInput:
        values[i] = slot.reference;
        break;
      case NodeKind::kLearned: {
        auto hit = slot.cache.find(relevant);
        if (hit != slot.cache.end()) {
          values[i] = hit->second;
          break;
        }
        const auto features = slot.model->layout.assemble(args, *slot.history, t_);
        // observed + (f(x') - f(x)) equals f(x') + residual but stays exact
        // when x' = x, whatever the size of the residual.
        double value = slot.observed + (predict(*slot.model, features) - slot.baseline);
        // A negative observation is its own floor so the observed world stays reachable.
        const double floor = std::min(0.0, slot.observed);
        if (slot.nonnegative && value < floor) {
          value = floor;
          ++clamp_events_;
        }
        slot.cache.emplace(relevant, value);
        values[i] = value;
        break;
      }
      case NodeKind::kAnalytic:
        values[i] = (*slot.function)(args);
        break;
    }
  }
  return values[output_slot_];
}

double CounterfactualSession::evaluate(InputMask reference_mask) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto hit = memo_.find(reference_mask);
  if (hit != memo_.end()) return hit->second;
  const double value = compute_locked(reference_mask);
  memo_.emplace(reference_mask, value);
  return value;
}

double CounterfactualSession::all_reference_output() {
  const std::size_t n = players_.size();
  const InputMask full = n == 64 ? ~InputMask{0} : (InputMask{1} << n) - 1;
  return evaluate(full);
}

std::vector<double> CounterfactualSession::evaluate_batch(std::span<const InputMask> masks) {
  std::vector<double> out;
  out.reserve(masks.size());
  for (InputMask m : masks) out.push_back(evaluate(m));
  return out;
}

std::vector<double> CounterfactualSession::evaluate_all_subsets() {
  const std::size_t n = players_.size();
  if (n > 30) {
    throw Error(ErrorCode::kTooManyInputs, "cannot enumerate 2^" + std::to_string(n) + " subsets");
  }
  const std::size_t count = std::size_t{1} << n;
  std::vector<double> out(count);
  std::lock_guard<std::mutex> lock(mutex_);
  for (std::size_t m = 0; m < count; ++m) {
    auto hit = memo_.find(m);
    out[m] = hit != memo_.end() ? hit->second : compute_locked(m);
  }
  return out;
}

InputMask CounterfactualSession::mask_of(
    const std::map<std::string, InputSetting>& assignment) const {
  InputMask mask = 0;
  for (const auto& [name, setting] : assignment) {
    auto it = std::find(players_.begin(), players_.end(), name);
    if (it == players_.end()) {
      throw Error(ErrorCode::kInvalidArgument, "'" + name + "' is not a player of this session");
    }
    if (setting == InputSetting::kReference) mask |= InputMask{1} << (it - players_.begin());
  }
  return mask;
}

std::size_t CounterfactualSession::evaluations() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return evaluations_;
}

std::size_t CounterfactualSession::cache_size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return memo_.size();
}

std::size_t CounterfactualSession::clamp_events() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return clamp_events_;
}

double counterfactual(const FittedSCM& scm, const SeriesTable& table,
                      const CounterfactualQuery& query) {
  const auto inputs = scm.graph().inputs();
  for (const auto& name : inputs) {
    if (query.assignment.count(name) == 0) {
      throw Error(ErrorCode::kInvalidArgument, "assignment is missing input '" + name + "'");
    }
  }
  if (query.assignment.size() != inputs.size()) {
    throw Error(ErrorCode::kInvalidArgument, "assignment names a node that is not an input");
  }
  CounterfactualSession session(scm, table, query.t, query.t_ref);
  return session.evaluate(session.mask_of(query.assignment));
}

}  // namespace cfattrib
