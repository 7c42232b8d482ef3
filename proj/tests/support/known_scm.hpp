#pragma once

// SCMs whose structural equations are known closed-form functions. Values of
// every node are generated here, independently of the counterfactual engine,
// so tests can compare the engine against direct evaluation.

#include <functional>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cfattrib/graph.hpp"
#include "cfattrib/panel.hpp"
#include "cfattrib/regressor.hpp"
#include "cfattrib/structural.hpp"

namespace testing_support {

using Fn = std::function<double(std::span<const double>)>;

struct KnownNode {
  std::string name;
  std::vector<std::string> parents;
  Fn fn;
  bool nonnegative = false;
};

struct KnownSystem {
  std::vector<std::string> inputs;
  // Non-input nodes in a valid evaluation order; the last one is the output.
  std::vector<KnownNode> nodes;

  // Direct evaluation: node values given input values and per-node noise.
  std::map<std::string, double> evaluate(const std::vector<double>& input_values,
                                         const std::map<std::string, double>& noise = {}) const {
    std::map<std::string, double> v;
    for (std::size_t i = 0; i < inputs.size(); ++i) v[inputs[i]] = input_values[i];
    for (const auto& node : nodes) {
      std::vector<double> args;
      for (const auto& p : node.parents) args.push_back(v.at(p));
      auto it = noise.find(node.name);
      v[node.name] = node.fn(args) + (it == noise.end() ? 0.0 : it->second);
    }
    return v;
  }

  double output(const std::vector<double>& input_values,
                const std::map<std::string, double>& noise = {}) const {
    return evaluate(input_values, noise).at(nodes.back().name);
  }

  cfattrib::CausalGraph graph() const {
    std::vector<cfattrib::NodeSpec> specs;
    for (const auto& name : inputs) specs.push_back({name, cfattrib::NodeKind::kInput});
    for (const auto& node : nodes) {
      cfattrib::NodeSpec spec{node.name, cfattrib::NodeKind::kLearned, node.parents};
      spec.nonnegative = node.nonnegative;
      specs.push_back(spec);
    }
    return cfattrib::build_graph(specs, nodes.back().name);
  }

  // Learned nodes carry the true functions as their fitted models.
  cfattrib::FittedSCM scm() const {
    const auto g = graph();
    std::map<std::string, cfattrib::FittedNodeModel> models;
    for (const auto& node : nodes) {
      cfattrib::FittedNodeModel m;
      m.node = node.name;
      m.layout = cfattrib::FeatureLayout(g.node(node.name), {});
      m.regressor = std::make_shared<cfattrib::FunctionRegressor>(node.parents.size(), node.fn,
                                                                  "true_equation");
      models.emplace(node.name, std::move(m));
    }
    return cfattrib::FittedSCM(g, std::move(models));
  }

  // Table with day 0 = reference inputs and day 1 = observed inputs, each
  // node generated with the given noise on day 1.
  cfattrib::SeriesTable table(const std::vector<double>& reference,
                              const std::vector<double>& observed,
                              const std::map<std::string, double>& noise = {}) const {
    const auto day0 = evaluate(reference);
    const auto day1 = evaluate(observed, noise);
    cfattrib::SeriesTable t;
    for (const auto& [name, value] : day0) t.set(name, {value, day1.at(name)});
    return t;
  }
};

// Random DAG: `n_inputs` inputs, `n_hidden` hidden nodes with random parents
// among earlier nodes, and an output node fed by every hidden node and by any
// input that would otherwise be a sink. Functions mix linear, saturating,
// multiplicative and thresholded forms.
inline KnownSystem random_system(std::mt19937_64& rng, std::size_t n_inputs, std::size_t n_hidden) {
  KnownSystem sys;
  for (std::size_t i = 0; i < n_inputs; ++i) sys.inputs.push_back("x" + std::to_string(i));
  std::uniform_real_distribution<double> weight(-2.0, 2.0);
  std::uniform_int_distribution<int> form(0, 3);
  std::vector<std::string> available = sys.inputs;
  std::map<std::string, bool> has_child;

  auto make_fn = [&](std::size_t arity) -> Fn {
    std::vector<double> w(arity);
    for (auto& x : w) x = weight(rng);
    const double b = weight(rng);
    switch (form(rng)) {
      case 0:
        return [w, b](std::span<const double> p) {
          double s = b;
          for (std::size_t i = 0; i < p.size(); ++i) s += w[i] * p[i];
          return s;
        };
      case 1:
        return [w, b](std::span<const double> p) {
          double s = b;
          for (std::size_t i = 0; i < p.size(); ++i) s += w[i] * p[i];
          return std::tanh(s);
        };
      case 2:
        return [w, b](std::span<const double> p) {
          double s = b;
          for (std::size_t i = 0; i < p.size(); ++i) s *= 1.0 + 0.5 * w[i] * p[i];
          return s;
        };
      default:
        return [w, b](std::span<const double> p) {
          double s = b;
          for (std::size_t i = 0; i < p.size(); ++i) s += w[i] * p[i];
          return s > 0.0 ? s : 0.1 * s;
        };
    }
  };

  for (std::size_t h = 0; h < n_hidden; ++h) {
    std::vector<std::string> parents;
    std::bernoulli_distribution pick(0.5);
    for (const auto& a : available) {
      if (pick(rng)) parents.push_back(a);
    }
    if (parents.empty()) {
      parents.push_back(available[std::uniform_int_distribution<std::size_t>(
          0, available.size() - 1)(rng)]);
    }
    for (const auto& p : parents) has_child[p] = true;
    const std::string name = "h" + std::to_string(h);
    sys.nodes.push_back({name, parents, make_fn(parents.size())});
    available.push_back(name);
  }
  std::vector<std::string> out_parents;
  for (const auto& a : available) {
    if (!has_child[a] || a[0] == 'h') out_parents.push_back(a);
  }
  sys.nodes.push_back({"y", out_parents, make_fn(out_parents.size())});
  return sys;
}

}  // namespace testing_support
