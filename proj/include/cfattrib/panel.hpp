#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "cfattrib/graph.hpp"

namespace cfattrib {

// Half-open day interval [begin, end).
struct DayRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end > begin ? end - begin : 0; }
  bool contains(std::size_t t) const { return t >= begin && t < end; }
};

// Named daily series of equal length. The counterfactual engine reads node
// values from here, keyed by graph node name.
class SeriesTable {
 public:
  void set(const std::string& name, std::vector<double> values);
  bool contains(const std::string& name) const;
  const std::vector<double>& at(const std::string& name) const;
  double value(const std::string& name, std::size_t t) const;
  std::size_t days() const { return days_; }
  std::vector<std::string> names() const;

 private:
  std::map<std::string, std::vector<double>> columns_;
  std::size_t days_ = 0;
};

// Per-category daily panel of the ad-matching system. Indexed [category][day].
struct PanelDataset {
  std::vector<std::string> categories;
  std::vector<std::vector<double>> qv;
  std::vector<std::vector<double>> ad;
  std::vector<std::vector<double>> den;
  // Daily density, always derived from den and qv.
  std::vector<double> y;
  // Day label of index 0 when loaded from a file.
  std::size_t first_day = 0;

  std::size_t days() const { return y.size(); }
  std::size_t category_count() const { return categories.size(); }
  // Validates shapes and positivity, then recomputes y for every day.
  void recompute_daily_density();
  void recompute_daily_density(std::size_t t);
  std::vector<double> column_at(const std::vector<std::vector<double>>& field,
                                std::size_t t) const;
  SeriesTable to_table() const;
};

// Node naming convention shared by the panel, the default graph and the CLI.
std::string ad_node(const std::string& category);
std::string qv_node(const std::string& category);
std::string den_node(const std::string& category);
inline constexpr const char* kDailyDensityNode = "daily_density";

// Ad-matching graph: ad/qv inputs -> per-category learned density -> daily
// density. Lags are attached to every density node.
CausalGraph make_ad_matching_graph(const std::vector<std::string>& categories,
                                   const std::vector<int>& lags = {1, 7, 14});

enum class InputType { kAdDemand, kQueryVolume };

struct InputTag {
  std::string category;
  InputType type;
};

// Maps "ad:<c>" / "qv:<c>" input names to their category and type.
std::map<std::string, InputTag> ad_matching_category_map(
    const std::vector<std::string>& categories);

}  // namespace cfattrib
