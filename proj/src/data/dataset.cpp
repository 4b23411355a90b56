#include "epi/data/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace epi::data {

namespace {

using namespace std::chrono;

std::optional<double> parse_number(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty() || s == "NA" || s == "nan" || s == "NaN") return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string number_text(double v) {
  if (std::isnan(v)) return {};
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double count_or_missing(std::optional<double> v, std::size_t& negatives) {
  if (!v) return kMissing;
  if (*v < 0.0) {
    ++negatives;
    return kMissing;
  }
  return *v;
}

int day_number(Date d) { return d.time_since_epoch().count(); }

}  // namespace

Date parse_date(std::string_view text) {
  auto digits = [&](std::size_t pos, std::size_t len) {
    int v = 0;
    for (std::size_t k = pos; k < pos + len; ++k) {
      if (text[k] < '0' || text[k] > '9') throw DateParseError("unparseable date '" + std::string(text) + "'");
      v = v * 10 + (text[k] - '0');
    }
    return v;
  };
  int y = 0, m = 0, d = 0;
  if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
    y = digits(0, 4), m = digits(5, 2), d = digits(8, 2);
  } else if (text.size() == 8) {
    y = digits(0, 4), m = digits(4, 2), d = digits(6, 2);
  } else {
    throw DateParseError("unparseable date '" + std::string(text) + "'");
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw DateParseError("invalid calendar date '" + std::string(text) + "'");
  return sys_days{ymd};
}

std::string format_date(Date d) {
  const year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string_view category_name(Category c) {
  switch (c) {
    case Category::Closure: return "closure";
    case Category::Economic: return "economic";
    case Category::Health: return "health";
    case Category::Vaccine: return "vaccine";
  }
  return "?";
}

Category category_from_name(std::string_view name) {
  for (int k = 0; k < kNumCategories; ++k)
    if (category_name(static_cast<Category>(k)) == name) return static_cast<Category>(k);
  throw std::invalid_argument("unknown indicator category '" + std::string(name) + "'");
}

Mapping Mapping::oxcgrt_owid() {
  Mapping m;
  m.policy.filter_column = "Jurisdiction";
  m.policy.filter_value = "NAT_TOTAL";
  const auto C = Category::Closure, E = Category::Economic, H = Category::Health, V = Category::Vaccine;
  m.indicators = {
      {"C1M_School closing", C, 3},
      {"C2M_Workplace closing", C, 3},
      {"C3M_Cancel public events", C, 2},
      {"C4M_Restrictions on gatherings", C, 4},
      {"C5M_Close public transport", C, 2},
      {"C6M_Stay at home requirements", C, 3},
      {"C7M_Restrictions on internal movement", C, 2},
      {"C8EV_International travel controls", C, 4},
      {"E1_Income support", E, 2},
      {"E2_Debt/contract relief", E, 2},
      {"E3_Fiscal measures", E, 1, true},
      {"E4_International support", E, 1, true},
      {"H1_Public information campaigns", H, 2},
      {"H2_Testing policy", H, 3},
      {"H3_Contact tracing", H, 2},
      {"H4_Emergency investment in healthcare", H, 1, true},
      {"H5_Investment in vaccines", H, 1, true},
      {"H6M_Facial Coverings", H, 4},
      {"H7_Vaccination policy", H, 5},
      {"H8M_Protection of elderly people", H, 3},
      {"V1_Vaccine Prioritisation (summary)", V, 2},
      {"V2A_Vaccine Availability (summary)", V, 3},
      {"V3_Vaccine Financial Support (summary)", V, 5},
      {"V4_Mandatory Vaccination (summary)", V, 1},
  };
  return m;
}

Mapping Mapping::from_json(const nlohmann::json& j) {
  Mapping m;
  if (j.contains("policy")) {
    const auto& p = j["policy"];
    m.policy.country = p.value("country", m.policy.country);
    m.policy.date = p.value("date", m.policy.date);
    m.policy.filter_column = p.value("filter_column", std::string{});
    m.policy.filter_value = p.value("filter_value", std::string{});
  }
  if (j.contains("outcomes")) {
    const auto& o = j["outcomes"];
    m.outcomes.country = o.value("country", m.outcomes.country);
    m.outcomes.date = o.value("date", m.outcomes.date);
    m.outcomes.new_cases = o.value("new_cases", m.outcomes.new_cases);
    m.outcomes.total_cases = o.value("total_cases", m.outcomes.total_cases);
    m.outcomes.new_deaths = o.value("new_deaths", m.outcomes.new_deaths);
    m.outcomes.total_deaths = o.value("total_deaths", m.outcomes.total_deaths);
  }
  if (j.contains("stats")) {
    const auto& s = j["stats"];
    m.stats.country = s.value("country", m.stats.country);
    m.stats.land_area = s.value("land_area", m.stats.land_area);
    m.stats.population = s.value("population", m.stats.population);
  }
  if (j.contains("indicators")) {
    for (const auto& it : j["indicators"]) {
      IndicatorSpec spec;
      spec.column = it.at("column").get<std::string>();
      spec.category = category_from_name(it.at("category").get<std::string>());
      spec.max = it.value("max", 1.0);
      spec.binary = it.value("binary", false);
      if (!(spec.max > 0.0)) throw std::invalid_argument("indicator '" + spec.column + "' needs max > 0");
      m.indicators.push_back(std::move(spec));
    }
  } else {
    m.indicators = oxcgrt_owid().indicators;
  }
  return m;
}

nlohmann::json Mapping::to_json() const {
  nlohmann::json ind = nlohmann::json::array();
  for (const auto& s : indicators) {
    nlohmann::json item{{"column", s.column}, {"category", category_name(s.category)}, {"max", s.max}};
    if (s.binary) item["binary"] = true;
    ind.push_back(std::move(item));
  }
  return {{"policy",
           {{"country", policy.country},
            {"date", policy.date},
            {"filter_column", policy.filter_column},
            {"filter_value", policy.filter_value}}},
          {"outcomes",
           {{"country", outcomes.country},
            {"date", outcomes.date},
            {"new_cases", outcomes.new_cases},
            {"total_cases", outcomes.total_cases},
            {"new_deaths", outcomes.new_deaths},
            {"total_deaths", outcomes.total_deaths}}},
          {"stats", {{"country", stats.country}, {"land_area", stats.land_area}, {"population", stats.population}}},
          {"indicators", ind}};
}

double CategoryStrengths::max() const { return *std::max_element(value.begin(), value.end()); }

bool CategoryStrengths::flagged() const { return std::any_of(empty.begin(), empty.end(), [](bool b) { return b; }); }

CategoryStrengths category_strengths(std::span<const IndicatorSpec> specs, std::span<const std::optional<double>> raw) {
  if (specs.size() != raw.size()) throw std::invalid_argument("category_strengths: one value per indicator expected");
  std::array<double, kNumCategories> sum{};
  std::array<int, kNumCategories> count{};
  for (std::size_t k = 0; k < specs.size(); ++k) {
    if (!raw[k] || std::isnan(*raw[k])) continue;
    const double v = specs[k].binary ? (*raw[k] > 0.0 ? 1.0 : 0.0) : *raw[k] / specs[k].max;
    const int c = static_cast<int>(specs[k].category);
    sum[c] += std::clamp(v, 0.0, 1.0);
    ++count[c];
  }
  CategoryStrengths out;
  for (int c = 0; c < kNumCategories; ++c) {
    out.empty[c] = count[c] == 0;
    out.value[c] = count[c] ? sum[c] / count[c] : 0.0;
  }
  return out;
}

double CountryDay::per_million(double count) const {
  if (std::isnan(count) || !(population > 0.0)) return kMissing;
  return count / population * 1e6;
}

std::vector<std::string> Dataset::countries() const {
  std::vector<std::string> out;
  for (const auto& r : rows)
    if (out.empty() || out.back() != r.country) out.push_back(r.country);
  return out;
}

std::span<const CountryDay> Dataset::country_rows(std::string_view country) const {
  auto first = std::find_if(rows.begin(), rows.end(), [&](const CountryDay& r) { return r.country == country; });
  auto last = std::find_if(first, rows.end(), [&](const CountryDay& r) { return r.country != country; });
  return {first, last};
}

Dataset load_merge(const CsvTable& policy, const CsvTable& outcomes, const CsvTable& stats, const Mapping& mapping) {
  Dataset ds;
  for (const auto& s : mapping.indicators) ds.indicator_columns.push_back(s.column);

  // policy table
  const auto p_country = policy.require(mapping.policy.country, "policy");
  const auto p_date = policy.require(mapping.policy.date, "policy");
  std::optional<std::size_t> p_filter;
  if (!mapping.policy.filter_column.empty()) p_filter = policy.require(mapping.policy.filter_column, "policy");
  std::vector<std::size_t> p_ind;
  for (const auto& s : mapping.indicators) p_ind.push_back(policy.require(s.column, "policy"));

  std::map<std::string, std::map<int, std::vector<std::optional<double>>>> pol;
  for (const auto& row : policy.rows) {
    if (p_filter && row[*p_filter] != mapping.policy.filter_value) continue;
    const int d = day_number(parse_date(row[p_date]));
    std::vector<std::optional<double>> values;
    values.reserve(p_ind.size());
    for (auto c : p_ind) values.push_back(parse_number(row[c]));
    if (!pol[row[p_country]].emplace(d, std::move(values)).second)
      throw DuplicateRowError("policy: duplicate row for " + row[p_country] + " on " + row[p_date]);
  }

  // outcomes table
  const auto o_country = outcomes.require(mapping.outcomes.country, "outcomes");
  const auto o_date = outcomes.require(mapping.outcomes.date, "outcomes");
  const std::array<std::size_t, 4> o_counts{outcomes.require(mapping.outcomes.new_cases, "outcomes"),
                                            outcomes.require(mapping.outcomes.total_cases, "outcomes"),
                                            outcomes.require(mapping.outcomes.new_deaths, "outcomes"),
                                            outcomes.require(mapping.outcomes.total_deaths, "outcomes")};
  std::size_t negatives = 0;
  std::map<std::string, std::map<int, std::array<double, 4>>> out;
  for (const auto& row : outcomes.rows) {
    const int d = day_number(parse_date(row[o_date]));
    std::array<double, 4> v{};
    for (int k = 0; k < 4; ++k) v[k] = count_or_missing(parse_number(row[o_counts[k]]), negatives);
    if (!out[row[o_country]].emplace(d, v).second)
      throw DuplicateRowError("outcomes: duplicate row for " + row[o_country] + " on " + row[o_date]);
  }
  if (negatives)
    ds.warnings.push_back(std::to_string(negatives) + " negative outcome values treated as missing");

  // country statistics
  const auto s_country = stats.require(mapping.stats.country, "stats");
  const auto s_area = stats.require(mapping.stats.land_area, "stats");
  const auto s_pop = stats.require(mapping.stats.population, "stats");
  std::map<std::string, std::pair<double, double>> st;
  for (const auto& row : stats.rows) {
    const double area = parse_number(row[s_area]).value_or(kMissing);
    const double pop = parse_number(row[s_pop]).value_or(kMissing);
    if (!st.emplace(row[s_country], std::make_pair(area, pop)).second)
      throw DuplicateRowError("stats: duplicate row for " + row[s_country]);
  }

  std::set<std::string> all;
  for (const auto& [c, _] : pol) all.insert(c);
  for (const auto& [c, _] : out) all.insert(c);
  for (const auto& [c, _] : st) all.insert(c);

  for (const auto& country : all) {
    const auto pi = pol.find(country);
    const auto oi = out.find(country);
    const auto si = st.find(country);
    if (pi == pol.end() || oi == out.end() || si == st.end()) {
      ds.dropped_countries.push_back(country);
      continue;
    }
    std::size_t added = 0;
    for (const auto& [d, counts] : oi->second) {
      const auto p = pi->second.find(d);
      if (p == pi->second.end()) continue;
      CountryDay r;
      r.country = country;
      r.date = Date{days{d}};
      r.land_area = si->second.first;
      r.population = si->second.second;
      r.new_cases = counts[0];
      r.total_cases = counts[1];
      r.new_deaths = counts[2];
      r.total_deaths = counts[3];
      r.indicators = p->second;
      r.strengths = category_strengths(mapping.indicators, r.indicators);
      ds.rows.push_back(std::move(r));
      ++added;
    }
    if (added == 0) ds.dropped_countries.push_back(country);
  }
  if (!ds.dropped_countries.empty()) {
    std::string msg = "dropped " + std::to_string(ds.dropped_countries.size()) + " countries lacking a source:";
    for (const auto& c : ds.dropped_countries) msg += " " + c;
    ds.warnings.push_back(std::move(msg));
  }
  return ds;
}

Dataset load_merge(const std::string& policy_csv, const std::string& outcomes_csv, const std::string& stats_csv,
                   const Mapping& mapping) {
  return load_merge(read_csv(policy_csv), read_csv(outcomes_csv), read_csv(stats_csv), mapping);
}

namespace {
const std::vector<std::string> kFixedColumns{
    "country",    "date",        "land_area",  "population",  "new_cases",           "total_cases",
    "new_deaths", "total_deaths", "new_cases_per_million", "new_deaths_per_million", "closure", "economic",
    "health",     "vaccine",     "empty_categories"};
}

std::string dataset_to_csv(const Dataset& ds) {
  std::ostringstream o;
  for (std::size_t k = 0; k < kFixedColumns.size(); ++k) o << (k ? "," : "") << kFixedColumns[k];
  for (const auto& c : ds.indicator_columns) o << ',' << csv_escape(c);
  o << '\n';
  for (const auto& r : ds.rows) {
    std::string empties;
    for (int c = 0; c < kNumCategories; ++c)
      if (r.strengths.empty[c]) empties += (empties.empty() ? "" : ";") + std::string(category_name(Category(c)));
    o << csv_escape(r.country) << ',' << format_date(r.date) << ',' << number_text(r.land_area) << ','
      << number_text(r.population) << ',' << number_text(r.new_cases) << ',' << number_text(r.total_cases) << ','
      << number_text(r.new_deaths) << ',' << number_text(r.total_deaths) << ','
      << number_text(r.per_million(r.new_cases)) << ',' << number_text(r.per_million(r.new_deaths));
    for (double v : r.strengths.value) o << ',' << number_text(v);
    o << ',' << empties;
    for (const auto& v : r.indicators) o << ',' << (v ? number_text(*v) : std::string{});
    o << '\n';
  }
  return o.str();
}

Dataset dataset_from_csv(const CsvTable& table) {
  for (std::size_t k = 0; k < kFixedColumns.size(); ++k)
    if (k >= table.header.size() || table.header[k] != kFixedColumns[k])
      throw SchemaError("dataset: expected column '" + kFixedColumns[k] + "' at position " + std::to_string(k));
  Dataset ds;
  ds.indicator_columns.assign(table.header.begin() + static_cast<std::ptrdiff_t>(kFixedColumns.size()),
                              table.header.end());
  auto num = [](const std::string& s) { return parse_number(s).value_or(kMissing); };
  for (const auto& row : table.rows) {
    CountryDay r;
    r.country = row[0];
    r.date = parse_date(row[1]);
    r.land_area = num(row[2]);
    r.population = num(row[3]);
    r.new_cases = num(row[4]);
    r.total_cases = num(row[5]);
    r.new_deaths = num(row[6]);
    r.total_deaths = num(row[7]);
    for (int c = 0; c < kNumCategories; ++c) {
      r.strengths.value[c] = num(row[10 + c]);
      r.strengths.empty[c] = row[14].find(category_name(Category(c))) != std::string::npos;
    }
    for (std::size_t k = kFixedColumns.size(); k < row.size(); ++k) r.indicators.push_back(parse_number(row[k]));
    if (!ds.rows.empty() && ds.rows.back().country == r.country && !(ds.rows.back().date < r.date))
      throw DataError("dataset: dates not strictly increasing for " + r.country);
    ds.rows.push_back(std::move(r));
  }
  return ds;
}

void write_dataset(const std::string& path, const Dataset& ds) { write_gzip(path, dataset_to_csv(ds)); }

Dataset read_dataset(const std::string& path) { return dataset_from_csv(read_csv(path)); }

std::vector<double> smooth_trailing(std::span<const double> series, int width) {
  if (width < 1) throw std::invalid_argument("smoothing width must be >= 1");
  std::vector<double> out(series.size(), kMissing);
  for (std::size_t t = 0; t < series.size(); ++t) {
    double sum = 0.0;
    int n = 0;
    for (std::size_t k = t + 1 > static_cast<std::size_t>(width) ? t + 1 - width : 0; k <= t; ++k)
      if (!std::isnan(series[k])) {
        sum += series[k];
        ++n;
      }
    if (n) out[t] = sum / n;
  }
  return out;
}

std::vector<double> log_growth_rates(std::span<const double> smoothed) {
  std::vector<double> out;
  for (std::size_t t = 0; t + 1 < smoothed.size(); ++t) out.push_back(std::log(smoothed[t + 1] / smoothed[t]));
  return out;
}

std::vector<GrowthWindow> growth_windows(const std::string& country, Date start, std::span<const double> new_cases,
                                         std::span<const double> max_strength, const WindowOptions& opts) {
  if (new_cases.size() != max_strength.size()) throw std::invalid_argument("growth_windows: length mismatch");
  const auto smoothed = smooth_trailing(new_cases, opts.smoothing);
  std::vector<GrowthWindow> out;
  std::size_t t = 0;
  const std::size_t n = new_cases.size();
  auto qualifies = [&](std::size_t k) {
    return max_strength[k] <= opts.strength_threshold && !std::isnan(smoothed[k]) && smoothed[k] >= opts.min_cases;
  };
  while (t < n) {
    if (!qualifies(t)) {
      ++t;
      continue;
    }
    std::size_t end = t;
    while (end < n && qualifies(end)) ++end;
    if (static_cast<int>(end - t) >= opts.min_len) {
      GrowthWindow w;
      w.country = country;
      w.start = start + days{static_cast<int>(t)};
      w.new_cases.assign(new_cases.begin() + static_cast<std::ptrdiff_t>(t),
                         new_cases.begin() + static_cast<std::ptrdiff_t>(end));
      w.smoothed.assign(smoothed.begin() + static_cast<std::ptrdiff_t>(t),
                        smoothed.begin() + static_cast<std::ptrdiff_t>(end));
      w.growth_rates = log_growth_rates(w.smoothed);
      out.push_back(std::move(w));
    }
    t = end;
  }
  return out;
}

std::vector<GrowthWindow> extract_growth_windows(const Dataset& ds, const WindowOptions& opts) {
  std::vector<GrowthWindow> out;
  for (const auto& country : ds.countries()) {
    const auto rows = ds.country_rows(country);
    // split at calendar gaps so every segment is a consecutive daily series
    std::size_t seg = 0;
    for (std::size_t k = 1; k <= rows.size(); ++k) {
      if (k < rows.size() && rows[k].date == rows[k - 1].date + days{1}) continue;
      std::vector<double> cases, strength;
      for (std::size_t j = seg; j < k; ++j) {
        cases.push_back(rows[j].new_cases);
        strength.push_back(rows[j].strengths.max());
      }
      auto w = growth_windows(country, rows[seg].date, cases, strength, opts);
      out.insert(out.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
      seg = k;
    }
  }
  return out;
}

std::vector<double> growth_rate_distribution(std::span<const GrowthWindow> windows) {
  std::vector<double> pool;
  for (const auto& w : windows)
    for (double r : w.growth_rates)
      if (std::isfinite(r)) pool.push_back(r);
  if (pool.empty()) throw DataError("no finite growth rates in the given windows");
  return pool;
}

nlohmann::json windows_to_json(std::span<const GrowthWindow> windows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& w : windows) {
    auto clean = [](const std::vector<double>& v) {
      nlohmann::json a = nlohmann::json::array();
      for (double x : v) a.push_back(std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr));
      return a;
    };
    arr.push_back({{"country", w.country},
                   {"start", format_date(w.start)},
                   {"length", w.length()},
                   {"new_cases", clean(w.new_cases)},
                   {"smoothed", clean(w.smoothed)},
                   {"growth_rates", clean(w.growth_rates)}});
  }
  return arr;
}

}  // namespace epi::data
