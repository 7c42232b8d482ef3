#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfattrib/analytic.hpp"

namespace cfattrib {

enum class NodeKind { kInput, kLearned, kAnalytic };

std::string to_string(NodeKind kind);
NodeKind node_kind_from_string(const std::string& text);

struct NodeSpec {
  std::string name;
  NodeKind kind = NodeKind::kInput;
  std::vector<std::string> parents;
  // Day offsets of autoregressive features; learned nodes only.
  std::vector<int> lags;
  // Registry key; analytic nodes only.
  std::string function;
  // Counterfactual values of this node are clamped at zero.
  bool nonnegative = false;
};

// Validated, immutable DAG describing how the output metric is computed.
class CausalGraph {
 public:
  const std::string& output() const { return output_; }
  bool contains(const std::string& name) const;
  const NodeSpec& node(const std::string& name) const;

  // Nodes in evaluation order (see topological_order).
  const std::vector<std::string>& order() const { return order_; }
  std::vector<std::string> nodes_of_kind(NodeKind kind) const;
  std::vector<std::string> inputs() const { return nodes_of_kind(NodeKind::kInput); }
  std::vector<std::string> children(const std::string& name) const;
  std::size_t size() const { return nodes_.size(); }
  // Largest lag over all learned nodes (0 when none).
  int max_lag() const;

 private:
  friend CausalGraph build_graph(std::vector<NodeSpec> specs,
                                 const std::string& output,
                                 const FunctionRegistry& registry);
  std::map<std::string, NodeSpec> nodes_;
  std::vector<std::string> order_;
  std::string output_;
};

// Errors: kDuplicateName, kDanglingParent, kCycleDetected, kMultipleSinks,
// kInvalidNode, kUnknownFunction.
CausalGraph build_graph(std::vector<NodeSpec> specs, const std::string& output,
                        const FunctionRegistry& registry = FunctionRegistry::builtin());

// Nodes grouped by depth (longest path from a root), names ascending within a
// depth. Every node follows all of its parents.
std::vector<std::string> topological_order(const CausalGraph& graph);

nlohmann::json graph_to_json(const CausalGraph& graph);
CausalGraph graph_from_json(const nlohmann::json& doc,
                            const FunctionRegistry& registry = FunctionRegistry::builtin());

}  // namespace cfattrib
