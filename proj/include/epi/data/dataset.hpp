#pragma once

#include <array>
#include <chrono>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "epi/data/csv.hpp"

namespace epi::data {

class DateParseError : public DataError {
 public:
  using DataError::DataError;
};

class DuplicateRowError : public DataError {
 public:
  using DataError::DataError;
};

using Date = std::chrono::sys_days;

/// Accepts YYYY-MM-DD and YYYYMMDD. Throws DateParseError.
Date parse_date(std::string_view text);
std::string format_date(Date d);

enum class Category { Closure = 0, Economic = 1, Health = 2, Vaccine = 3 };
inline constexpr int kNumCategories = 4;
std::string_view category_name(Category c);
Category category_from_name(std::string_view name);

/// One ordinal policy indicator and how it is normalized to [0, 1].
struct IndicatorSpec {
  std::string column;
  Category category = Category::Closure;
  double max = 1.0;     ///< ordinal maximum
  bool binary = false;  ///< monetary indicators: any positive value counts as 1
};

/// Column names of the three input tables and the indicator list.
struct Mapping {
  struct Policy {
    std::string country = "CountryCode";
    std::string date = "Date";
    std::string filter_column;  ///< optional row filter, e.g. Jurisdiction
    std::string filter_value;
  } policy;
  struct Outcomes {
    std::string country = "iso_code";
    std::string date = "date";
    std::string new_cases = "new_cases";
    std::string total_cases = "total_cases";
    std::string new_deaths = "new_deaths";
    std::string total_deaths = "total_deaths";
  } outcomes;
  struct Stats {
    std::string country = "iso_code";
    std::string land_area = "land_area";
    std::string population = "population";
  } stats;
  std::vector<IndicatorSpec> indicators;

  /// Default layout for the OxCGRT national file, OWID outcomes and a
  /// country table, with the 24 indicators grouped by their letter prefix.
  static Mapping oxcgrt_owid();
  static Mapping from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct CategoryStrengths {
  std::array<double, kNumCategories> value{};
  std::array<bool, kNumCategories> empty{};  ///< no indicator present that day

  double operator[](Category c) const { return value[static_cast<int>(c)]; }
  double max() const;
  bool flagged() const;
};

/// Normalizes each present indicator by its maximum (clamped to [0, 1]) and
/// averages within each category; a category without values is 0 and flagged.
CategoryStrengths category_strengths(std::span<const IndicatorSpec> specs,
                                     std::span<const std::optional<double>> raw);

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct CountryDay {
  std::string country;
  Date date{};
  double land_area = kMissing;
  double population = kMissing;
  double new_cases = kMissing;
  double total_cases = kMissing;
  double new_deaths = kMissing;
  double total_deaths = kMissing;
  std::vector<std::optional<double>> indicators;  ///< raw values in mapping order
  CategoryStrengths strengths;

  double per_million(double count) const;
};

struct Dataset {
  std::vector<std::string> indicator_columns;
  std::vector<CountryDay> rows;  ///< grouped by country, dates strictly increasing
  std::vector<std::string> dropped_countries;
  std::vector<std::string> warnings;

  std::vector<std::string> countries() const;
  /// Rows of one country; empty when absent.
  std::span<const CountryDay> country_rows(std::string_view country) const;
};

/// Inner join of policy and outcome rows on (country, date) with the country
/// statistics broadcast to every row. Countries missing from any source are
/// dropped and listed. Throws SchemaError, DateParseError or
/// DuplicateRowError.
Dataset load_merge(const CsvTable& policy, const CsvTable& outcomes, const CsvTable& stats, const Mapping& mapping);
Dataset load_merge(const std::string& policy_csv, const std::string& outcomes_csv, const std::string& stats_csv,
                   const Mapping& mapping);

/// Merged dataset as CSV text, and back.
std::string dataset_to_csv(const Dataset& ds);
Dataset dataset_from_csv(const CsvTable& table);
void write_dataset(const std::string& path, const Dataset& ds);  ///< gzip
Dataset read_dataset(const std::string& path);

struct WindowOptions {
  int min_len = 7;
  double strength_threshold = 0.05;
  double min_cases = 10.0;  ///< on the smoothed series
  int smoothing = 7;        ///< trailing mean width in days
};

struct GrowthWindow {
  std::string country;
  Date start{};
  std::vector<double> new_cases;  ///< raw daily values
  std::vector<double> smoothed;
  std::vector<double> growth_rates;  ///< ln(s[t+1] / s[t]), length - 1 values

  int length() const noexcept { return static_cast<int>(smoothed.size()); }
};

/// Trailing mean over the last `width` values; missing (NaN) values are
/// skipped and a day with no value in reach stays NaN.
std::vector<double> smooth_trailing(std::span<const double> series, int width);

/// Per-day log growth of a smoothed series.
std::vector<double> log_growth_rates(std::span<const double> smoothed);

/// Windows of one consecutive daily series. `max_strength[t]` is the largest
/// category strength on day t.
std::vector<GrowthWindow> growth_windows(const std::string& country, Date start, std::span<const double> new_cases,
                                         std::span<const double> max_strength, const WindowOptions& opts);

/// Maximal runs of consecutive days where every category strength is at most
/// the threshold and the smoothed new cases reach min_cases; shorter runs
/// than min_len are discarded. A missing calendar day breaks a run.
std::vector<GrowthWindow> extract_growth_windows(const Dataset& ds, const WindowOptions& opts = {});

/// Pooled finite growth rates. Throws DataError when nothing remains.
std::vector<double> growth_rate_distribution(std::span<const GrowthWindow> windows);

nlohmann::json windows_to_json(std::span<const GrowthWindow> windows);

}  // namespace epi::data
