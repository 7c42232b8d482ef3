#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfattrib/attribution.hpp"
#include "cfattrib/graph.hpp"
#include "cfattrib/outlier.hpp"
#include "cfattrib/panel.hpp"
#include "cfattrib/simulation.hpp"
#include "cfattrib/structural.hpp"

namespace cfattrib {

// Panel CSV: one row per (day, category) with the header
//   day,category,query_volume,ad_demand,density
// Rows may come in any order. Categories keep their order of first
// appearance; every category must cover the same contiguous day range.
inline constexpr const char* kPanelHeader = "day,category,query_volume,ad_demand,density";

PanelDataset parse_panel_csv(std::istream& in, const std::string& source = "<stream>");
PanelDataset load_panel_csv(const std::filesystem::path& path);
void write_panel_csv(const PanelDataset& panel, std::ostream& out);
void save_panel_csv(const PanelDataset& panel, const std::filesystem::path& path);

CausalGraph load_graph_json(const std::filesystem::path& path,
                            const FunctionRegistry& registry = FunctionRegistry::builtin());
void save_graph_json(const CausalGraph& graph, const std::filesystem::path& path);

// %.12g rendering used by every report.
std::string format_number(double value);
// value rounded to 12 significant digits, for JSON output.
double round_significant(double value);

enum class ReportFormat { kJson, kCsv };
ReportFormat report_format_from_path(const std::filesystem::path& path);

nlohmann::json attribution_to_json(const AttributionResult& result);
std::string attribution_to_csv(const AttributionResult& result);

nlohmann::json rollup_to_json(const CategoryRollup& rollup);
// Columns: category,ad_attrib,qv_attrib,total
std::string rollup_to_csv(const CategoryRollup& rollup);

nlohmann::json outlier_report_to_json(const OutlierReport& report);
// Columns: day,observed,prediction,low,high,flagged
std::string outlier_report_to_csv(const OutlierReport& report);

nlohmann::json accuracy_table_to_json(const AccuracyTable& table);
// Columns: method,config,sigma,trials,hits,ties,accuracy,ci_low,ci_high
std::string accuracy_table_to_csv(const AccuracyTable& table);

nlohmann::json metrics_to_json(const std::vector<ModelComparisonRow>& rows);
// Columns: model,mape,medape,smape,rows
std::string metrics_to_csv(const std::vector<ModelComparisonRow>& rows);

void write_report(const AttributionResult& result, ReportFormat format,
                  const std::filesystem::path& path);

// Pretty-printed JSON with a trailing newline.
std::string dump_json(const nlohmann::json& doc);
// Throws kIo when the file cannot be written or read.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

// FNV-1a of the bytes, as 16 hex digits.
std::string content_digest(const std::string& bytes);

}  // namespace cfattrib
