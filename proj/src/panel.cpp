#include "cfattrib/panel.hpp"

#include "cfattrib/analytic.hpp"
#include "cfattrib/error.hpp"

namespace cfattrib {

void SeriesTable::set(const std::string& name, std::vector<double> values) {
  if (!columns_.empty() && values.size() != days_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "series '" + name + "' has " + std::to_string(values.size()) +
                    " days, table has " + std::to_string(days_));
  }
  days_ = values.size();
  columns_[name] = std::move(values);
}

bool SeriesTable::contains(const std::string& name) const {
  return columns_.count(name) != 0;
}

const std::vector<double>& SeriesTable::at(const std::string& name) const {
  auto it = columns_.find(name);
  if (it == columns_.end()) {
    throw Error(ErrorCode::kMissingColumn, "no data column for node '" + name + "'");
  }
  return it->second;
}

double SeriesTable::value(const std::string& name, std::size_t t) const {
  const auto& column = at(name);
  if (t >= column.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "day " + std::to_string(t) + " outside series '" + name + "'");
  }
  return column[t];
}

std::vector<std::string> SeriesTable::names() const {
  std::vector<std::string> out;
  for (const auto& [name, column] : columns_) out.push_back(name);
  return out;
}

std::vector<double> PanelDataset::column_at(
    const std::vector<std::vector<double>>& field, std::size_t t) const {
  std::vector<double> out(field.size());
  for (std::size_t c = 0; c < field.size(); ++c) out[c] = field[c][t];
  return out;
}

void PanelDataset::recompute_daily_density(std::size_t t) {
  y[t] = aggregate_daily_density(column_at(den, t), column_at(qv, t));
}

void PanelDataset::recompute_daily_density() {
  const std::size_t k = categories.size();
  if (k == 0) throw Error(ErrorCode::kEmptyInput, "panel has no categories");
  if (qv.size() != k || ad.size() != k || den.size() != k) {
    throw Error(ErrorCode::kDimensionMismatch, "panel fields disagree on category count");
  }
  const std::size_t days = qv.front().size();
  for (std::size_t c = 0; c < k; ++c) {
    if (qv[c].size() != days || ad[c].size() != days || den[c].size() != days) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "category '" + categories[c] + "' has a ragged series");
    }
  }
  y.assign(days, 0.0);
  for (std::size_t t = 0; t < days; ++t) recompute_daily_density(t);
}

SeriesTable PanelDataset::to_table() const {
  SeriesTable table;
  for (std::size_t c = 0; c < categories.size(); ++c) {
    table.set(ad_node(categories[c]), ad[c]);
    table.set(qv_node(categories[c]), qv[c]);
    table.set(den_node(categories[c]), den[c]);
  }
  table.set(kDailyDensityNode, y);
  return table;
}

std::string ad_node(const std::string& category) { return "ad:" + category; }
std::string qv_node(const std::string& category) { return "qv:" + category; }
std::string den_node(const std::string& category) { return "den:" + category; }

CausalGraph make_ad_matching_graph(const std::vector<std::string>& categories,
                                   const std::vector<int>& lags) {
  std::vector<NodeSpec> specs;
  NodeSpec daily{kDailyDensityNode, NodeKind::kAnalytic, {}, {}, kWeightedDensityFn};
  for (const auto& c : categories) {
    specs.push_back({ad_node(c), NodeKind::kInput, {}, {}, {}});
    specs.push_back({qv_node(c), NodeKind::kInput, {}, {}, {}});
    NodeSpec density{den_node(c), NodeKind::kLearned, {ad_node(c), qv_node(c)}, lags, {}};
    density.nonnegative = true;
    specs.push_back(std::move(density));
    daily.parents.push_back(den_node(c));
    daily.parents.push_back(qv_node(c));
  }
  specs.push_back(std::move(daily));
  return build_graph(std::move(specs), kDailyDensityNode);
}

std::map<std::string, InputTag> ad_matching_category_map(
    const std::vector<std::string>& categories) {
  std::map<std::string, InputTag> out;
  for (const auto& c : categories) {
    out[ad_node(c)] = {c, InputType::kAdDemand};
    out[qv_node(c)] = {c, InputType::kQueryVolume};
  }
  return out;
}

}  // namespace cfattrib
