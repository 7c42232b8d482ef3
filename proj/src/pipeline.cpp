#include "cfattrib/pipeline.hpp"

#include <algorithm>
#include <functional>

#include "cfattrib/counterfactual.hpp"
#include "cfattrib/error.hpp"
#include "cfattrib/io.hpp"
#include "cfattrib/random.hpp"

namespace cfattrib {

std::string to_string(ReferenceRule rule) {
  switch (rule) {
    case ReferenceRule::kLag7: return "lag7";
    case ReferenceRule::kLag14: return "lag14";
    case ReferenceRule::kExplicit: return "explicit";
  }
  return "unknown";
}

void parse_reference(const std::string& text, RunConfig& config) {
  if (text == "lag7") {
    config.reference = ReferenceRule::kLag7;
    config.reference_day.reset();
  } else if (text == "lag14") {
    config.reference = ReferenceRule::kLag14;
    config.reference_day.reset();
  } else if (!text.empty() && text.find_first_not_of("0123456789") == std::string::npos) {
    config.reference = ReferenceRule::kExplicit;
    config.reference_day = std::stoull(text);
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "reference must be lag7, lag14 or a day number, got '" + text + "'");
  }
}

nlohmann::json run_config_to_json(const RunConfig& c) {
  std::vector<std::string> methods;
  for (auto m : c.methods) methods.push_back(to_string(m));
  return {
      {"graph_path", c.graph_path},
      {"data_path", c.data_path},
      {"day", c.day ? nlohmann::json(*c.day) : nlohmann::json(nullptr)},
      {"reference", to_string(c.reference)},
      {"reference_day", c.reference_day ? nlohmann::json(*c.reference_day) : nlohmann::json(nullptr)},
      {"lags", c.lags},
      {"regressor",
       {{"kind", to_string(c.regressor.kind)},
        {"ridge", c.regressor.ridge},
        {"mlp_width", c.regressor.mlp.width},
        {"mlp_epochs", c.regressor.mlp.epochs},
        {"mlp_batch_size", c.regressor.mlp.batch_size},
        {"mlp_learning_rate", c.regressor.mlp.learning_rate}}},
      {"features",
       {{"ratio", c.features.ratio},
        {"alternating_half_period", c.features.alternating_half_period}}},
      {"methods", methods},
      {"permutations", c.permutations},
      {"do_samples", c.do_samples},
      {"seed", c.seed},
      {"detect", c.detect},
      {"level", c.level},
      {"daily_predictor", to_string(c.daily_predictor)},
      {"out_dir", c.out_dir},
  };
}

RunConfig run_config_from_json(const nlohmann::json& doc) {
  RunConfig c;
  try {
    c.graph_path = doc.at("graph_path").get<std::string>();
    c.data_path = doc.at("data_path").get<std::string>();
    if (!doc.at("day").is_null()) c.day = doc.at("day").get<std::size_t>();
    const auto reference = doc.at("reference").get<std::string>();
    if (reference == "explicit") {
      c.reference = ReferenceRule::kExplicit;
      c.reference_day = doc.at("reference_day").get<std::size_t>();
    } else {
      parse_reference(reference, c);
    }
    c.lags = doc.at("lags").get<std::vector<int>>();
    const auto& r = doc.at("regressor");
    c.regressor.kind = regressor_kind_from_string(r.at("kind").get<std::string>());
    c.regressor.ridge = r.at("ridge").get<double>();
    c.regressor.mlp.width = r.at("mlp_width").get<std::size_t>();
    c.regressor.mlp.epochs = r.at("mlp_epochs").get<std::size_t>();
    c.regressor.mlp.batch_size = r.at("mlp_batch_size").get<std::size_t>();
    c.regressor.mlp.learning_rate = r.at("mlp_learning_rate").get<double>();
    const auto& f = doc.at("features");
    c.features.ratio = f.at("ratio").get<bool>();
    c.features.alternating_half_period = f.at("alternating_half_period").get<int>();
    c.methods.clear();
    for (const auto& m : doc.at("methods")) {
      c.methods.push_back(attribution_method_from_string(m.get<std::string>()));
    }
    c.permutations = doc.at("permutations").get<std::size_t>();
    c.do_samples = doc.at("do_samples").get<std::size_t>();
    c.seed = doc.at("seed").get<std::uint64_t>();
    c.detect = doc.at("detect").get<bool>();
    c.level = doc.at("level").get<double>();
    c.daily_predictor = daily_predictor_from_string(doc.at("daily_predictor").get<std::string>());
    c.out_dir = doc.at("out_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, std::string("run config: ") + e.what());
  }
  return c;
}

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), std::string("stage '") + name + "': " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("stage '") + name + "': " + e.what());
  }
}

CausalGraph pipeline_graph(const RunConfig& config, const PanelDataset& panel) {
  if (config.graph_path.empty()) return make_ad_matching_graph(panel.categories, config.lags);
  return load_graph_json(config.graph_path);
}

std::size_t graph_history(const CausalGraph& graph) {
  return static_cast<std::size_t>(graph.max_lag());
}

bool per_category(AttributionMethod m) {
  return m == AttributionMethod::kAdDemandDelta || m == AttributionMethod::kQvDelta ||
         m == AttributionMethod::kProductDelta;
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& config) {
  namespace fs = std::filesystem;
  const fs::path out(config.out_dir);
  PipelineResult result;
  std::map<std::string, std::string> written;
  auto emit = [&](const std::string& name, const std::string& content) {
    write_text_file(out / name, content);
    written[name] = content_digest(content);
  };

  const std::string data_bytes = stage("load", [&] { return read_text_file(config.data_path); });
  const PanelDataset panel = stage("load", [&] { return load_panel_csv(config.data_path); });
  const CausalGraph graph = stage("load", [&] { return pipeline_graph(config, panel); });
  const std::string graph_bytes = config.graph_path.empty()
                                      ? dump_json(graph_to_json(graph))
                                      : stage("load", [&] { return read_text_file(config.graph_path); });

  // All day checks happen before any model is fitted.
  stage("validate", [&] {
    const std::size_t last_label = panel.first_day + panel.days() - 1;
    const std::size_t label = config.day.value_or(last_label);
    if (label < panel.first_day || label > last_label) {
      throw Error(ErrorCode::kInvalidArgument,
                  "day " + std::to_string(label) + " outside the panel [" +
                      std::to_string(panel.first_day) + ", " + std::to_string(last_label) + "]");
    }
    result.day = label - panel.first_day;
    std::size_t offset = 0;
    switch (config.reference) {
      case ReferenceRule::kLag7: offset = 7; break;
      case ReferenceRule::kLag14: offset = 14; break;
      case ReferenceRule::kExplicit:
        if (!config.reference_day || *config.reference_day >= label) {
          throw Error(ErrorCode::kInvalidArgument,
                      "explicit reference day must precede the attributed day " +
                          std::to_string(label));
        }
        offset = label - *config.reference_day;
        break;
    }
    if (offset > result.day) {
      throw Error(ErrorCode::kInsufficientHistory,
                  "day " + std::to_string(label) + " has no " + to_string(config.reference) +
                      " reference in the panel");
    }
    result.reference_day = result.day - offset;
    const std::size_t history = graph_history(graph);
    if (result.reference_day < history) {
      throw Error(ErrorCode::kInsufficientHistory,
                  "reference day " + std::to_string(result.reference_day + panel.first_day) +
                      " has less than " + std::to_string(history) + " days of lag history");
    }
    if (result.day - history < 10) {
      throw Error(ErrorCode::kInsufficientData, "too few training days before the attributed day");
    }
    return 0;
  });

  const SeriesTable table = panel.to_table();
  const std::size_t threads = config.threads ? config.threads : configured_threads();
  const DayRange train{graph_history(graph), result.day};

  const FittedSCM scm = stage("fit", [&] {
    ScmFitConfig fit;
    fit.regressor = config.regressor;
    fit.regressor.mlp.seed = stream_seed(config.seed, "scm");
    fit.train_range = train;
    fit.features = config.features;
    fit.threads = threads;
    return fit_scm(graph, table, fit);
  });

  stage("write", [&] {
    nlohmann::json nodes = nlohmann::json::object();
    for (const auto& [name, model] : scm.models()) {
      nodes[name] = {{"features", model.feature_names()},
                     {"regressor", model.regressor->summary()},
                     {"residual_scale", round_significant(model.residual_scale)},
                     {"train_begin", model.train_range.begin + panel.first_day},
                     {"train_end", model.train_range.end + panel.first_day}};
    }
    emit("model_summary.json", dump_json({{"nodes", nodes}}));
    return 0;
  });

  if (config.detect) {
    result.outliers = stage("detect", [&] {
      DailyModelConfig daily;
      daily.kind = config.daily_predictor;
      daily.train_range = {0, result.day};
      daily.regressor = config.regressor;
      daily.regressor.mlp.seed = stream_seed(config.seed, "daily_model");
      const DailyModel model = fit_daily_model(panel.y, daily);
      return detect_outliers(model, panel.y, {result.day, result.day + 1}, config.level);
    });
    stage("write", [&] {
      emit("outliers.csv", outlier_report_to_csv(*result.outliers));
      emit("outliers.json", dump_json(outlier_report_to_json(*result.outliers)));
      return 0;
    });
  }

  stage("attribute", [&] {
    const auto inputs = graph.inputs();
    std::optional<CounterfactualSession> session;
    std::shared_ptr<const Regressor> direct;
    Eigen::MatrixXd history;
    std::vector<double> observed, reference;
    for (const auto& name : inputs) {
      observed.push_back(table.value(name, result.day));
      reference.push_back(table.value(name, result.reference_day));
    }
    for (auto method : config.methods) {
      const std::uint64_t seed = stream_seed(config.seed, to_string(method));
      switch (method) {
        case AttributionMethod::kCfShapleyExact:
        case AttributionMethod::kCfShapleyMc:
          if (!session) session.emplace(scm, table, result.day, result.reference_day);
          result.attributions.push_back(method == AttributionMethod::kCfShapleyExact
                                            ? cf_shapley_exact(*session)
                                            : cf_shapley_mc(*session, config.permutations, seed));
          break;
        case AttributionMethod::kShapleyDirect:
        case AttributionMethod::kDoShapley: {
          if (!direct) {
            history.resize(static_cast<Eigen::Index>(train.size()),
                           static_cast<Eigen::Index>(inputs.size()));
            Eigen::VectorXd y(static_cast<Eigen::Index>(train.size()));
            const auto& output = table.at(graph.output());
            for (std::size_t i = 0; i < train.size(); ++i) {
              for (std::size_t j = 0; j < inputs.size(); ++j) {
                history(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    table.value(inputs[j], train.begin + i);
              }
              y(static_cast<Eigen::Index>(i)) = output[train.begin + i];
            }
            RegressorConfig rc = config.regressor;
            rc.mlp.seed = stream_seed(config.seed, "direct_model");
            direct = fit_regressor(rc, history, y);
          }
          result.attributions.push_back(
              method == AttributionMethod::kShapleyDirect
                  ? shapley_direct(*direct, observed, reference, inputs, config.permutations, seed)
                  : do_shapley(*direct, history, observed, inputs, config.permutations, seed,
                               config.do_samples));
          break;
        }
        case AttributionMethod::kAdDemandDelta:
        case AttributionMethod::kQvDelta:
        case AttributionMethod::kProductDelta:
          for (auto& r : delta_baselines(panel, result.day, result.reference_day)) {
            if (r.method == method) result.attributions.push_back(r);
          }
          break;
      }
    }
    return 0;
  });

  stage("write", [&] {
    const auto category_map = ad_matching_category_map(panel.categories);
    for (const auto& r : result.attributions) {
      const std::string base = "attribution_" + to_string(r.method);
      emit(base + ".json", dump_json(attribution_to_json(r)));
      emit(base + ".csv", attribution_to_csv(r));
      if (per_category(r.method)) continue;
      const bool mapped = std::all_of(r.inputs.begin(), r.inputs.end(),
                                      [&](const std::string& n) { return category_map.count(n); });
      if (mapped) emit("rollup_" + to_string(r.method) + ".csv",
                       rollup_to_csv(rollup_by_category(r, category_map)));
    }

    nlohmann::json outputs = nlohmann::json::object();
    for (const auto& [name, digest] : written) outputs[name] = digest;
    result.manifest = {
        {"tool", "cfattrib"},
        {"version", kVersion},
        {"config", run_config_to_json(config)},
        {"inputs",
         {{"data", {{"path", config.data_path}, {"digest", content_digest(data_bytes)}}},
          {"graph", {{"path", config.graph_path}, {"digest", content_digest(graph_bytes)}}}}},
        {"day", result.day + panel.first_day},
        {"reference_day", result.reference_day + panel.first_day},
        {"outputs", outputs},
    };
    write_text_file(out / "manifest.json", dump_json(result.manifest));
    return 0;
  });
  return result;
}

nlohmann::json run_simulate(const SimulateRequest& request) {
  const SimulatedPanel generated = generate_dataset(request.simulation);
  const SimulatedPanel* data = &generated;
  std::optional<InterventionOutcome> outcome;
  nlohmann::json info = {{"seed", request.simulation.seed},
                         {"sigma", request.simulation.sigma},
                         {"categories", generated.panel.categories},
                         {"days", request.simulation.days},
                         {"truncations", generated.truncations}};
  std::vector<double> gamma;
  for (double g : generated.gamma) gamma.push_back(round_significant(g));
  info["gamma"] = gamma;
  if (request.intervention) {
    InterventionSpec spec;
    spec.config = *request.intervention;
    spec.reference_offset = request.reference_offset;
    outcome = apply_intervention(generated, spec);
    data = &outcome->data;
    info["intervention"] = {
        {"config", to_string(spec.config)},
        {"target_day", outcome->target_day},
        {"reference_day", outcome->reference_day},
        {"first", generated.panel.categories[outcome->first]},
        {"second", generated.panel.categories[outcome->second]},
        {"ground_truth", generated.panel.categories[outcome->ground_truth]},
    };
  } else {
    info["intervention"] = nullptr;
  }
  const std::filesystem::path out(request.out_dir);
  save_panel_csv(data->panel, out / "panel.csv");
  save_graph_json(make_ad_matching_graph(data->panel.categories, request.lags), out / "graph.json");
  write_text_file(out / "simulation.json", dump_json(info));
  return info;
}

nlohmann::json run_fit(const RunConfig& config, std::size_t holdout_days) {
  const PanelDataset panel = stage("load", [&] { return load_panel_csv(config.data_path); });
  const CausalGraph graph = stage("load", [&] { return pipeline_graph(config, panel); });
  const SeriesTable table = panel.to_table();
  const std::size_t history = graph_history(graph);
  if (panel.days() < history + holdout_days + 10) {
    throw Error(ErrorCode::kInsufficientData, "stage 'fit': panel too short for the holdout");
  }
  const DayRange train{history, panel.days() - holdout_days};
  const DayRange holdout{train.end, panel.days()};
  const FittedSCM scm = stage("fit", [&] {
    ScmFitConfig fit;
    fit.regressor = config.regressor;
    fit.regressor.mlp.seed = stream_seed(config.seed, "scm");
    fit.train_range = train;
    fit.features = config.features;
    fit.threads = config.threads ? config.threads : configured_threads();
    return fit_scm(graph, table, fit);
  });
  nlohmann::json nodes = nlohmann::json::object();
  for (const auto& [name, model] : scm.models()) {
    const auto metrics = evaluate_model(model, table, holdout);
    nodes[name] = {{"features", model.feature_names()},
                   {"regressor", model.regressor->summary()},
                   {"residual_scale", round_significant(model.residual_scale)},
                   {"holdout_mape", round_significant(metrics.mean_ape)},
                   {"holdout_medape", round_significant(metrics.median_ape)},
                   {"holdout_smape", round_significant(metrics.smape)}};
  }
  nlohmann::json doc = {{"train_begin", train.begin + panel.first_day},
                        {"train_end", train.end + panel.first_day},
                        {"holdout_end", holdout.end + panel.first_day},
                        {"nodes", nodes}};
  stage("write", [&] {
    write_text_file(std::filesystem::path(config.out_dir) / "model_summary.json", dump_json(doc));
    return 0;
  });
  return doc;
}

}  // namespace cfattrib
