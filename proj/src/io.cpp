#include "cfattrib/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cfattrib/error.hpp"

namespace cfattrib {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string where(const std::string& source, std::size_t line, const std::string& column) {
  return source + ":" + std::to_string(line) + " column '" + column + "'";
}

double parse_double(const std::string& text, const std::string& source, std::size_t line,
                    const std::string& column) {
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(value)) {
    throw Error(ErrorCode::kSchemaMismatch,
                where(source, line, column) + ": '" + text + "' is not a finite number");
  }
  return value;
}

std::size_t parse_day(const std::string& text, const std::string& source, std::size_t line) {
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) {
    throw Error(ErrorCode::kSchemaMismatch,
                where(source, line, "day") + ": '" + text + "' is not a day index");
  }
  return static_cast<std::size_t>(std::stoull(text));
}

struct Row {
  double qv, ad, den;
};

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

PanelDataset parse_panel_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw Error(ErrorCode::kEmptyInput, source + ": no header");
  const auto header = split(line);
  const auto expected = split(kPanelHeader);
  if (header != expected) {
    throw Error(ErrorCode::kSchemaMismatch, source + ":" + std::to_string(line_no) +
                                                ": header must be '" + kPanelHeader + "'");
  }

  std::vector<std::string> categories;
  std::map<std::string, std::map<std::size_t, Row>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != expected.size()) {
      throw Error(ErrorCode::kSchemaMismatch,
                  source + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(expected.size()) + " columns, found " +
                      std::to_string(cells.size()));
    }
    const std::size_t day = parse_day(cells[0], source, line_no);
    const std::string& category = cells[1];
    if (category.empty()) {
      throw Error(ErrorCode::kSchemaMismatch, where(source, line_no, "category") + ": empty");
    }
    Row row{parse_double(cells[2], source, line_no, "query_volume"),
            parse_double(cells[3], source, line_no, "ad_demand"),
            parse_double(cells[4], source, line_no, "density")};
    if (row.qv <= 0.0) {
      throw Error(ErrorCode::kNonPositiveVolume, where(source, line_no, "query_volume") +
                                                     ": category '" + category + "' day " +
                                                     std::to_string(day) + " has volume " +
                                                     cells[2]);
    }
    if (rows.count(category) == 0) categories.push_back(category);
    if (!rows[category].emplace(day, row).second) {
      throw Error(ErrorCode::kSchemaMismatch, source + ":" + std::to_string(line_no) +
                                                  ": duplicate row for category '" + category +
                                                  "' day " + std::to_string(day));
    }
  }
  if (categories.empty()) throw Error(ErrorCode::kEmptyInput, source + ": no data rows");

  std::size_t first = SIZE_MAX;
  std::size_t last = 0;
  for (const auto& [category, by_day] : rows) {
    first = std::min(first, by_day.begin()->first);
    last = std::max(last, by_day.rbegin()->first);
  }
  PanelDataset panel;
  panel.first_day = first;
  panel.categories = categories;
  const std::size_t days = last - first + 1;
  for (const auto& category : categories) {
    const auto& by_day = rows.at(category);
    std::vector<double> qv(days), ad(days), den(days);
    for (std::size_t i = 0; i < days; ++i) {
      auto it = by_day.find(first + i);
      if (it == by_day.end()) {
        throw Error(ErrorCode::kGapInDays, source + ": category '" + category +
                                               "' is missing day " + std::to_string(first + i));
      }
      qv[i] = it->second.qv;
      ad[i] = it->second.ad;
      den[i] = it->second.den;
    }
    panel.qv.push_back(std::move(qv));
    panel.ad.push_back(std::move(ad));
    panel.den.push_back(std::move(den));
  }
  panel.recompute_daily_density();
  return panel;
}

PanelDataset load_panel_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  return parse_panel_csv(in, path.string());
}

void write_panel_csv(const PanelDataset& panel, std::ostream& out) {
  out << kPanelHeader << '\n';
  for (std::size_t t = 0; t < panel.days(); ++t) {
    for (std::size_t c = 0; c < panel.category_count(); ++c) {
      // 17 digits so a reload reproduces the panel bit for bit.
      char buffer[128];
      std::snprintf(buffer, sizeof(buffer), "%.17g,%.17g,%.17g", panel.qv[c][t], panel.ad[c][t],
                    panel.den[c][t]);
      out << panel.first_day + t << ',' << csv_escape(panel.categories[c]) << ',' << buffer
          << '\n';
    }
  }
}

void save_panel_csv(const PanelDataset& panel, const std::filesystem::path& path) {
  std::ostringstream out;
  write_panel_csv(panel, out);
  write_text_file(path, out.str());
}

CausalGraph load_graph_json(const std::filesystem::path& path, const FunctionRegistry& registry) {
  const std::string text = read_text_file(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, path.string() + ": " + e.what());
  }
  return graph_from_json(doc, registry);
}

void save_graph_json(const CausalGraph& graph, const std::filesystem::path& path) {
  write_text_file(path, dump_json(graph_to_json(graph)));
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.12g", value);
  return buffer;
}

double round_significant(double value) {
  if (!std::isfinite(value)) return value;
  return std::strtod(format_number(value).c_str(), nullptr);
}

ReportFormat report_format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".json") return ReportFormat::kJson;
  if (ext == ".csv") return ReportFormat::kCsv;
  throw Error(ErrorCode::kInvalidArgument, "report path must end in .json or .csv: " + path.string());
}

namespace {

nlohmann::json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return round_significant(v);
}

}  // namespace

nlohmann::json attribution_to_json(const AttributionResult& result) {
  nlohmann::json scores = nlohmann::json::array();
  for (std::size_t i = 0; i < result.inputs.size(); ++i) {
    nlohmann::json entry = {{"input", result.inputs[i]}, {"score", number(result.scores[i])}};
    if (!result.std_errors.empty()) entry["std_error"] = number(result.std_errors[i]);
    scores.push_back(entry);
  }
  return {{"method", to_string(result.method)},
          {"target", number(result.target)},
          {"total", number(result.total())},
          {"efficiency_residual", number(result.efficiency_residual)},
          {"seed", result.seed},
          {"samples", result.samples},
          {"clamp_events", result.clamp_events},
          {"warnings", result.warnings},
          {"scores", scores}};
}

std::string attribution_to_csv(const AttributionResult& result) {
  std::string out = result.std_errors.empty() ? "input,score\n" : "input,score,std_error\n";
  for (std::size_t i = 0; i < result.inputs.size(); ++i) {
    out += csv_escape(result.inputs[i]) + "," + format_number(result.scores[i]);
    if (!result.std_errors.empty()) out += "," + format_number(result.std_errors[i]);
    out += "\n";
  }
  return out;
}

nlohmann::json rollup_to_json(const CategoryRollup& rollup) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rollup.rows) {
    rows.push_back({{"category", r.category},
                    {"ad_attrib", number(r.ad_demand_attrib)},
                    {"qv_attrib", number(r.query_volume_attrib)},
                    {"total", number(r.total)}});
  }
  return {{"rows", rows}, {"grand_total", number(rollup.grand_total)}};
}

std::string rollup_to_csv(const CategoryRollup& rollup) {
  std::string out = "category,ad_attrib,qv_attrib,total\n";
  for (const auto& r : rollup.rows) {
    out += csv_escape(r.category) + "," + format_number(r.ad_demand_attrib) + "," +
           format_number(r.query_volume_attrib) + "," + format_number(r.total) + "\n";
  }
  return out;
}

nlohmann::json outlier_report_to_json(const OutlierReport& report) {
  nlohmann::json days = nlohmann::json::array();
  for (const auto& d : report.days) {
    days.push_back({{"day", d.day},
                    {"observed", number(d.observed)},
                    {"prediction", number(d.prediction)},
                    {"low", number(d.low)},
                    {"high", number(d.high)},
                    {"flagged", d.flagged}});
  }
  return {{"level", number(report.level)},
          {"z", number(report.z)},
          {"residual_std", number(report.residual_std)},
          {"flagged_days", report.flagged_days()},
          {"days", days}};
}

std::string outlier_report_to_csv(const OutlierReport& report) {
  std::string out = "day,observed,prediction,low,high,flagged\n";
  for (const auto& d : report.days) {
    out += std::to_string(d.day) + "," + format_number(d.observed) + "," +
           format_number(d.prediction) + "," + format_number(d.low) + "," +
           format_number(d.high) + "," + (d.flagged ? "1" : "0") + "\n";
  }
  return out;
}

nlohmann::json accuracy_table_to_json(const AccuracyTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"method", to_string(r.method)},
                    {"config", to_string(r.config)},
                    {"sigma", number(r.sigma)},
                    {"trials", r.trials},
                    {"hits", r.hits},
                    {"ties", r.ties},
                    {"accuracy", number(r.accuracy)},
                    {"ci_low", number(r.ci_low)},
                    {"ci_high", number(r.ci_high)}});
  }
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : table.trials) {
    trials.push_back({{"method", to_string(t.method)},
                      {"config", to_string(t.config)},
                      {"sigma", number(t.sigma)},
                      {"trial", t.trial},
                      {"seed", t.seed},
                      {"first", t.first},
                      {"second", t.second},
                      {"predicted", t.predicted},
                      {"correct", t.correct},
                      {"tie", t.tie}});
  }
  return {{"rows", rows}, {"trials", trials}};
}

std::string accuracy_table_to_csv(const AccuracyTable& table) {
  std::string out = "method,config,sigma,trials,hits,ties,accuracy,ci_low,ci_high\n";
  for (const auto& r : table.rows) {
    out += to_string(r.method) + "," + to_string(r.config) + "," + format_number(r.sigma) + "," +
           std::to_string(r.trials) + "," + std::to_string(r.hits) + "," +
           std::to_string(r.ties) + "," + format_number(r.accuracy) + "," +
           format_number(r.ci_low) + "," + format_number(r.ci_high) + "\n";
  }
  return out;
}

nlohmann::json metrics_to_json(const std::vector<ModelComparisonRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"model", r.model},
                   {"mape", number(r.metrics.mean_ape)},
                   {"medape", number(r.metrics.median_ape)},
                   {"smape", number(r.metrics.smape)},
                   {"rows", r.metrics.rows},
                   {"excluded_zero_actuals", r.metrics.excluded_zero_actuals}});
  }
  return out;
}

std::string metrics_to_csv(const std::vector<ModelComparisonRow>& rows) {
  std::string out = "model,mape,medape,smape,rows\n";
  for (const auto& r : rows) {
    out += csv_escape(r.model) + "," + format_number(r.metrics.mean_ape) + "," +
           format_number(r.metrics.median_ape) + "," + format_number(r.metrics.smape) + "," +
           std::to_string(r.metrics.rows) + "\n";
  }
  return out;
}

void write_report(const AttributionResult& result, ReportFormat format,
                  const std::filesystem::path& path) {
  write_text_file(path, format == ReportFormat::kJson ? dump_json(attribution_to_json(result))
                                                      : attribution_to_csv(result));
}

std::string dump_json(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out << content;
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path.string() + "' failed");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string content_digest(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(h));
  return buffer;
}

}  // namespace cfattrib
