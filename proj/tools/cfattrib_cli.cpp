// Command-line front end: simulate, fit, detect, attribute, bench, report.
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cfattrib/error.hpp"
#include "cfattrib/io.hpp"
#include "cfattrib/outlier.hpp"
#include "cfattrib/pipeline.hpp"
#include "cfattrib/random.hpp"
#include "cfattrib/simulation.hpp"

namespace fs = std::filesystem;
using namespace cfattrib;

namespace {

struct ModelFlags {
  std::string regressor = "linear";
  double ridge = 1e-6;
  std::size_t epochs = 60;
  std::size_t width = 32;
  bool ratio = false;
  int alternating = 0;
};

void add_model_flags(CLI::App* cmd, ModelFlags& flags) {
  cmd->add_option("--regressor", flags.regressor, "linear or mlp")
      ->check(CLI::IsMember({"linear", "mlp"}));
  cmd->add_option("--ridge", flags.ridge, "ridge penalty for linear models");
  cmd->add_option("--epochs", flags.epochs, "MLP training epochs");
  cmd->add_option("--width", flags.width, "MLP hidden width");
  cmd->add_flag("--ratio-feature", flags.ratio, "add the ad/qv ratio feature to density models");
  cmd->add_option("--alternating", flags.alternating,
                  "half period of the alternating-sign lag feature (0 = off)");
}

void apply_model_flags(const ModelFlags& flags, RunConfig& config) {
  config.regressor.kind = regressor_kind_from_string(flags.regressor);
  config.regressor.ridge = flags.ridge;
  config.regressor.mlp.epochs = flags.epochs;
  config.regressor.mlp.width = flags.width;
  config.features.ratio = flags.ratio;
  config.features.alternating_half_period = flags.alternating;
}

std::vector<AttributionMethod> parse_methods(const std::vector<std::string>& names) {
  std::vector<AttributionMethod> out;
  for (const auto& n : names) out.push_back(attribution_method_from_string(n));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual Shapley attribution for aggregate metrics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  // simulate
  SimulateRequest sim;
  std::string sim_config = "none";
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic ad-matching panel");
  simulate->add_option("--seed", sim.simulation.seed, "root seed");
  simulate->add_option("--sigma", sim.simulation.sigma, "density noise std");
  simulate->add_option("--days", sim.simulation.days, "number of days");
  simulate->add_option("--categories", sim.simulation.categories, "number of categories");
  simulate->add_option("--config", sim_config, "intervention on the last day: none, 1 or 2")
      ->check(CLI::IsMember({"none", "1", "2"}));
  simulate->add_option("--out", sim.out_dir, "output directory");

  // fit / detect / attribute share the run configuration.
  RunConfig run;
  ModelFlags model_flags;
  std::string reference = "lag7";
  std::vector<std::string> methods = {"cf_shapley_mc"};
  std::string manifest;
  std::size_t holdout = 60;

  auto* fit = app.add_subcommand("fit", "fit the structural models and report holdout error");
  fit->add_option("--graph", run.graph_path, "graph JSON (default: ad-matching graph)");
  fit->add_option("--data", run.data_path, "panel CSV")->required();
  fit->add_option("--seed", run.seed, "root seed");
  fit->add_option("--holdout", holdout, "days held out at the end of the panel");
  fit->add_option("--out", run.out_dir, "output directory");
  add_model_flags(fit, model_flags);

  std::string detect_model = "linear";
  double level = 0.95;
  std::size_t detect_from = 0;
  auto* detect = app.add_subcommand("detect", "flag days outside the prediction interval");
  detect->add_option("--data", run.data_path, "panel CSV")->required();
  detect->add_option("--model", detect_model, "last_week, avg_4_weeks, linear or mlp");
  detect->add_option("--level", level, "interval probability");
  detect->add_option("--from", detect_from,
                     "first evaluated day (default: after the training share)");
  detect->add_option("--seed", run.seed, "root seed");
  detect->add_option("--out", run.out_dir, "output directory");

  auto* attribute = app.add_subcommand("attribute", "attribute the change of one day");
  attribute->add_option("--graph", run.graph_path, "graph JSON (default: ad-matching graph)");
  attribute->add_option("--data", run.data_path, "panel CSV");
  attribute->add_option("--day", run.day, "day to attribute (default: last)");
  attribute->add_option("--reference", reference, "lag7, lag14 or a day number");
  attribute->add_option("--method", methods, "attribution method(s)");
  attribute->add_option("--M", run.permutations, "Monte Carlo permutations");
  attribute->add_option("--seed", run.seed, "root seed");
  attribute->add_option("--out", run.out_dir, "output directory");
  attribute->add_flag("!--no-detect", run.detect, "skip outlier detection");
  attribute->add_option("--manifest", manifest, "rerun the configuration stored in a manifest");
  add_model_flags(attribute, model_flags);

  BenchOptions bench;
  std::vector<double> sigmas;
  std::vector<std::string> bench_methods;
  std::string bench_out = "out";
  std::string bench_regressor = "linear";
  auto* bench_cmd = app.add_subcommand("bench", "category attribution accuracy on simulated data");
  bench_cmd->add_option("--trials", bench.trials, "trials per (config, sigma)");
  bench_cmd->add_option("--seed", bench.seed, "seed of trial 0");
  bench_cmd->add_option("--sigma", sigmas, "noise levels (default 0.1 1 10)");
  bench_cmd->add_option("--method", bench_methods, "methods to score");
  bench_cmd->add_option("--M", bench.cf_permutations, "CF-Shapley permutations");
  bench_cmd->add_option("--regressor", bench_regressor, "density model: linear or mlp")
      ->check(CLI::IsMember({"linear", "mlp"}));
  bench_cmd->add_flag("--ratio-feature", bench.features.ratio, "add the ad/qv ratio feature");
  bench_cmd->add_option("--alternating", bench.features.alternating_half_period,
                        "half period of the alternating-sign lag feature (0 = off)");
  bench_cmd->add_option("--out", bench_out, "output directory");

  std::string report_data;
  std::string report_attribution;
  std::string report_out = "out";
  auto* report = app.add_subcommand("report", "daily model comparison and rollup tables");
  report->add_option("--data", report_data, "panel CSV for the model comparison table");
  report->add_option("--attribution", report_attribution,
                     "attribution JSON to roll up by category");
  report->add_option("--out", report_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      if (sim_config != "none") sim.intervention = intervention_config_from_string(sim_config);
      const auto info = run_simulate(sim);
      std::cout << "wrote " << (fs::path(sim.out_dir) / "panel.csv").string() << '\n';
      if (!info["intervention"].is_null()) {
        std::cout << "ground truth category: " << info["intervention"]["ground_truth"].get<std::string>()
                  << '\n';
      }
    } else if (fit->parsed()) {
      apply_model_flags(model_flags, run);
      run_fit(run, holdout);
      std::cout << "wrote " << (fs::path(run.out_dir) / "model_summary.json").string() << '\n';
    } else if (detect->parsed()) {
      const PanelDataset panel = load_panel_csv(run.data_path);
      DailyModelConfig daily;
      daily.kind = daily_predictor_from_string(detect_model);
      daily.regressor.mlp.seed = stream_seed(run.seed, "daily_model");
      const std::size_t split = detect_from ? detect_from - panel.first_day : panel.days() * 4 / 5;
      daily.train_range = {0, split};
      const DailyModel model = fit_daily_model(panel.y, daily);
      OutlierReport out = detect_outliers(model, panel.y, {split, panel.days()}, level);
      for (auto& d : out.days) d.day += panel.first_day;
      write_text_file(fs::path(run.out_dir) / "outliers.csv", outlier_report_to_csv(out));
      write_text_file(fs::path(run.out_dir) / "outliers.json",
                      dump_json(outlier_report_to_json(out)));
      for (std::size_t day : out.flagged_days()) std::cout << "flagged day " << day << '\n';
    } else if (attribute->parsed()) {
      if (!manifest.empty()) {
        run = run_config_from_json(nlohmann::json::parse(read_text_file(manifest)).at("config"));
      } else {
        if (run.data_path.empty()) throw Error(ErrorCode::kInvalidArgument, "--data is required");
        apply_model_flags(model_flags, run);
        parse_reference(reference, run);
        run.methods = parse_methods(methods);
      }
      const auto result = run_pipeline(run);
      for (const auto& r : result.attributions) {
        std::cout << to_string(r.method) << ": total " << format_number(r.total()) << '\n';
      }
      std::cout << "wrote " << (fs::path(run.out_dir) / "manifest.json").string() << '\n';
    } else if (bench_cmd->parsed()) {
      if (!sigmas.empty()) bench.sigmas = sigmas;
      if (!bench_methods.empty()) bench.methods = parse_methods(bench_methods);
      bench.density_regressor.kind = regressor_kind_from_string(bench_regressor);
      bench.threads = configured_threads();
      const auto table = run_accuracy_experiment(bench);
      write_text_file(fs::path(bench_out) / "accuracy.csv", accuracy_table_to_csv(table));
      write_text_file(fs::path(bench_out) / "accuracy.json", dump_json(accuracy_table_to_json(table)));
      std::cout << accuracy_table_to_csv(table);
    } else if (report->parsed()) {
      if (report_data.empty() && report_attribution.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "report needs --data and/or --attribution");
      }
      if (!report_data.empty()) {
        const PanelDataset panel = load_panel_csv(report_data);
        const std::size_t split = panel.days() * 4 / 5;
        const auto rows = compare_daily_models(
            panel.y, {0, split}, {split, panel.days()},
            {DailyPredictorKind::kLastWeek, DailyPredictorKind::kAvg4Weeks,
             DailyPredictorKind::kLinear, DailyPredictorKind::kMlp});
        write_text_file(fs::path(report_out) / "model_comparison.csv", metrics_to_csv(rows));
        std::cout << metrics_to_csv(rows);
      }
      if (!report_attribution.empty()) {
        const auto doc = nlohmann::json::parse(read_text_file(report_attribution));
        AttributionResult r;
        r.method = attribution_method_from_string(doc.at("method").get<std::string>());
        std::vector<std::string> categories;
        for (const auto& s : doc.at("scores")) {
          r.inputs.push_back(s.at("input").get<std::string>());
          r.scores.push_back(s.at("score").is_null() ? 0.0 : s.at("score").get<double>());
          const auto& name = r.inputs.back();
          const auto colon = name.find(':');
          if (colon == std::string::npos) {
            throw Error(ErrorCode::kUnmappedInput, "input '" + name + "' has no category prefix");
          }
          const auto category = name.substr(colon + 1);
          if (std::find(categories.begin(), categories.end(), category) == categories.end()) {
            categories.push_back(category);
          }
        }
        const auto rollup = rollup_by_category(r, ad_matching_category_map(categories));
        write_text_file(fs::path(report_out) / "rollup.csv", rollup_to_csv(rollup));
        std::cout << rollup_to_csv(rollup);
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
