#include "cfattrib/graph.hpp"

#include <algorithm>
#include <set>

#include "cfattrib/error.hpp"

namespace cfattrib {

std::string to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::kInput: return "input";
    case NodeKind::kLearned: return "learned";
    case NodeKind::kAnalytic: return "analytic";
  }
  return "input";
}

NodeKind node_kind_from_string(const std::string& text) {
  if (text == "input") return NodeKind::kInput;
  if (text == "learned") return NodeKind::kLearned;
  if (text == "analytic") return NodeKind::kAnalytic;
  throw Error(ErrorCode::kInvalidNode, "unknown node kind '" + text + "'");
}

bool CausalGraph::contains(const std::string& name) const {
  return nodes_.count(name) != 0;
}

const NodeSpec& CausalGraph::node(const std::string& name) const {
  auto it = nodes_.find(name);
  if (it == nodes_.end()) {
    throw Error(ErrorCode::kInvalidNode, "no node named '" + name + "'");
  }
  return it->second;
}

std::vector<std::string> CausalGraph::nodes_of_kind(NodeKind kind) const {
  std::vector<std::string> out;
  for (const auto& name : order_) {
    if (nodes_.at(name).kind == kind) out.push_back(name);
  }
  return out;
}

std::vector<std::string> CausalGraph::children(const std::string& name) const {
  std::vector<std::string> out;
  for (const auto& candidate : order_) {
    const auto& parents = nodes_.at(candidate).parents;
    if (std::find(parents.begin(), parents.end(), name) != parents.end()) {
      out.push_back(candidate);
    }
  }
  return out;
}

int CausalGraph::max_lag() const {
  int lag = 0;
  for (const auto& [name, spec] : nodes_) {
    for (int l : spec.lags) lag = std::max(lag, l);
  }
  return lag;
}

namespace {

void validate_node(const NodeSpec& spec, const FunctionRegistry& registry) {
  if (spec.name.empty()) {
    throw Error(ErrorCode::kInvalidNode, "node name must not be empty");
  }
  std::set<std::string> unique_parents(spec.parents.begin(), spec.parents.end());
  if (unique_parents.size() != spec.parents.size()) {
    throw Error(ErrorCode::kInvalidNode, "node '" + spec.name + "' repeats a parent");
  }
  switch (spec.kind) {
    case NodeKind::kInput:
      if (!spec.parents.empty() || !spec.lags.empty()) {
        throw Error(ErrorCode::kInvalidNode,
                    "input node '" + spec.name + "' cannot have parents or lags");
      }
      break;
    case NodeKind::kLearned: {
      std::set<int> seen;
      for (int lag : spec.lags) {
        if (lag <= 0) {
          throw Error(ErrorCode::kInvalidNode,
                      "lags of '" + spec.name + "' must be strictly positive");
        }
        if (!seen.insert(lag).second) {
          throw Error(ErrorCode::kInvalidNode,
                      "lags of '" + spec.name + "' must be distinct");
        }
      }
      break;
    }
    case NodeKind::kAnalytic:
      if (!spec.lags.empty()) {
        throw Error(ErrorCode::kInvalidNode,
                    "analytic node '" + spec.name + "' cannot have lags");
      }
      if (!registry.contains(spec.function)) {
        throw Error(ErrorCode::kUnknownFunction,
                    "analytic node '" + spec.name + "' references unregistered '" +
                        spec.function + "'");
      }
      break;
  }
}

}  // namespace

CausalGraph build_graph(std::vector<NodeSpec> specs, const std::string& output,
                        const FunctionRegistry& registry) {
  CausalGraph graph;
  for (auto& spec : specs) {
    validate_node(spec, registry);
    std::string name = spec.name;
    if (!graph.nodes_.emplace(name, std::move(spec)).second) {
      throw Error(ErrorCode::kDuplicateName, "node '" + name + "' defined twice");
    }
  }
  if (!graph.contains(output)) {
    throw Error(ErrorCode::kDanglingParent, "output node '" + output + "' is not defined");
  }
  for (const auto& [name, spec] : graph.nodes_) {
    for (const auto& parent : spec.parents) {
      if (parent == name) {
        throw Error(ErrorCode::kCycleDetected, "node '" + name + "' is its own parent");
      }
      if (!graph.contains(parent)) {
        throw Error(ErrorCode::kDanglingParent,
                    "node '" + name + "' references unknown parent '" + parent + "'");
      }
    }
  }

  // Kahn's algorithm over depth levels.
  std::map<std::string, std::size_t> pending;
  std::map<std::string, std::vector<std::string>> kids;
  for (const auto& [name, spec] : graph.nodes_) {
    pending[name] = spec.parents.size();
    for (const auto& parent : spec.parents) kids[parent].push_back(name);
  }
  std::map<std::string, int> depth;
  std::vector<std::string> frontier;
  for (const auto& [name, count] : pending) {
    if (count == 0) {
      frontier.push_back(name);
      depth[name] = 0;
    }
  }
  std::size_t visited = 0;
  while (!frontier.empty()) {
    std::vector<std::string> next;
    for (const auto& name : frontier) {
      ++visited;
      for (const auto& child : kids[name]) {
        depth[child] = std::max(depth[child], depth[name] + 1);
        if (--pending[child] == 0) next.push_back(child);
      }
    }
    frontier = std::move(next);
  }
  if (visited != graph.nodes_.size()) {
    throw Error(ErrorCode::kCycleDetected, "graph contains a directed cycle");
  }

  std::vector<std::string> sinks;
  for (const auto& [name, spec] : graph.nodes_) {
    if (kids[name].empty()) sinks.push_back(name);
  }
  if (sinks.size() != 1 || sinks.front() != output) {
    std::string listing;
    for (const auto& s : sinks) listing += (listing.empty() ? "" : ", ") + s;
    throw Error(ErrorCode::kMultipleSinks,
                "graph must have exactly one sink '" + output + "', found: " + listing);
  }
  // With a single sink in a finite DAG every node reaches it.

  graph.order_.reserve(graph.nodes_.size());
  for (const auto& [name, spec] : graph.nodes_) graph.order_.push_back(name);
  std::stable_sort(graph.order_.begin(), graph.order_.end(),
                   [&](const std::string& a, const std::string& b) {
                     if (depth[a] != depth[b]) return depth[a] < depth[b];
                     return a < b;
                   });
  graph.output_ = output;
  return graph;
}

std::vector<std::string> topological_order(const CausalGraph& graph) {
  return graph.order();
}

nlohmann::json graph_to_json(const CausalGraph& graph) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& name : graph.order()) {
    const NodeSpec& spec = graph.node(name);
    nlohmann::json entry = {{"name", spec.name},
                            {"kind", to_string(spec.kind)},
                            {"parents", spec.parents},
                            {"lags", spec.lags}};
    if (spec.kind == NodeKind::kAnalytic) entry["function"] = spec.function;
    if (spec.nonnegative) entry["nonnegative"] = true;
    nodes.push_back(std::move(entry));
  }
  return {{"nodes", std::move(nodes)}, {"output", graph.output()}};
}

CausalGraph graph_from_json(const nlohmann::json& doc, const FunctionRegistry& registry) {
  try {
    std::vector<NodeSpec> specs;
    for (const auto& entry : doc.at("nodes")) {
      NodeSpec spec;
      spec.name = entry.at("name").get<std::string>();
      spec.kind = node_kind_from_string(entry.at("kind").get<std::string>());
      spec.parents = entry.value("parents", std::vector<std::string>{});
      spec.lags = entry.value("lags", std::vector<int>{});
      spec.function = entry.value("function", std::string{});
      if (spec.kind == NodeKind::kAnalytic && spec.function.empty()) {
        spec.function = kWeightedDensityFn;
      }
      spec.nonnegative = entry.value("nonnegative", false);
      specs.push_back(std::move(spec));
    }
    return build_graph(std::move(specs), doc.at("output").get<std::string>(), registry);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, std::string("graph JSON: ") + e.what());
  }
}

}  // namespace cfattrib
