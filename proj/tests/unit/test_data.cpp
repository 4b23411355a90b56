#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "epi/data/dataset.hpp"

using namespace epi::data;

namespace {

// Two-indicator mapping keeps fixtures readable.
Mapping small_mapping() {
  Mapping m;
  m.policy = {"code", "day", "", ""};
  m.outcomes = {"code", "date", "new", "total", "dnew", "dtotal"};
  m.stats = {"code", "area", "pop"};
  m.indicators = {{"C1", Category::Closure, 3}, {"C2", Category::Closure, 2}, {"E3", Category::Economic, 1, true},
                  {"H1", Category::Health, 2},  {"V1", Category::Vaccine, 2}};
  return m;
}

std::string policy_csv(const std::string& rows) { return "code,day,C1,C2,E3,H1,V1\n" + rows; }
std::string outcomes_csv(const std::string& rows) { return "code,date,new,total,dnew,dtotal\n" + rows; }
std::string stats_csv(const std::string& rows) { return "code,area,pop\n" + rows; }

Dataset merge(const std::string& p, const std::string& o, const std::string& s) {
  return load_merge(parse_csv(policy_csv(p)), parse_csv(outcomes_csv(o)), parse_csv(stats_csv(s)), small_mapping());
}

std::string date_plus(int k) { return format_date(parse_date("2020-03-01") + std::chrono::days{k}); }

}  // namespace

TEST_CASE("csv parsing handles quotes and line endings") {
  const auto t = parse_csv("a,\"b,c\",d\r\n1,\"say \"\"hi\"\"\",\n\n2,x,\"multi\nline\"\n");
  CHECK(t.header == std::vector<std::string>{"a", "b,c", "d"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0] == std::vector<std::string>{"1", "say \"hi\"", ""});
  CHECK(t.rows[1][2] == "multi\nline");
  CHECK_THROWS_AS(parse_csv("a,b\n1,2,3\n"), SchemaError);
  CHECK_THROWS_AS(parse_csv("a\n\"open\n"), SchemaError);
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,\"b\"") == "\"a,\"\"b\"\"\"");
}

TEST_CASE("dates") {
  CHECK(format_date(parse_date("2020-02-29")) == "2020-02-29");
  CHECK(parse_date("20200301") == parse_date("2020-03-01"));
  CHECK(parse_date("2021-01-01") - parse_date("2020-12-31") == std::chrono::days{1});
  CHECK_THROWS_AS(parse_date("2021-02-29"), DateParseError);
  CHECK_THROWS_AS(parse_date("03/01/2020"), DateParseError);
  CHECK_THROWS_AS(parse_date("2020-0a-01"), DateParseError);
}

TEST_CASE("category strengths") {
  const auto m = small_mapping();
  using O = std::optional<double>;
  SUBCASE("closure at ordinal max gives 1") {
    const std::vector<O> raw{3.0, 2.0, std::nullopt, std::nullopt, std::nullopt};
    const auto s = category_strengths(m.indicators, raw);
    CHECK(s[Category::Closure] == 1.0);
    CHECK_FALSE(s.empty[0]);
    CHECK(s.empty[1]);
  }
  SUBCASE("all absent is zero and flagged") {
    const std::vector<O> raw(5, std::nullopt);
    const auto s = category_strengths(m.indicators, raw);
    for (int c = 0; c < kNumCategories; ++c) {
      CHECK(s.value[c] == 0.0);
      CHECK(s.empty[c]);
    }
    CHECK(s.flagged());
  }
  SUBCASE("two-element mean") {
    const std::vector<O> raw{1.5, 2.0, std::nullopt, std::nullopt, std::nullopt};
    CHECK(category_strengths(m.indicators, raw)[Category::Closure] == doctest::Approx(0.75));
  }
  SUBCASE("monetary indicators are binary and values are bounded") {
    const std::vector<O> raw{9.0, std::nullopt, 1.5e9, 0.0, 1.0};
    const auto s = category_strengths(m.indicators, raw);
    CHECK(s[Category::Closure] == 1.0);
    CHECK(s[Category::Economic] == 1.0);
    CHECK(s[Category::Health] == 0.0);
    CHECK(s[Category::Vaccine] == 0.5);
  }
  SUBCASE("permutation invariance") {
    std::vector<IndicatorSpec> specs{{"a", Category::Health, 2}, {"b", Category::Health, 4}, {"c", Category::Health, 1}};
    std::vector<O> raw{1.0, 3.0, 0.0};
    const double before = category_strengths(specs, raw)[Category::Health];
    std::swap(specs[0], specs[2]);
    std::swap(raw[0], raw[2]);
    CHECK(category_strengths(specs, raw)[Category::Health] == doctest::Approx(before));
  }
}

TEST_CASE("load_merge inner joins and broadcasts country stats") {
  const auto ds = merge(
      "AAA,20200301,1,0,0,1,0\nAAA,20200302,3,2,1,2,2\nBBB,20200301,0,0,0,0,0\nCCC,20200301,,,,,\n",
      "AAA,2020-03-01,5,5,0,0\nAAA,2020-03-02,7,12,1,1\nAAA,2020-03-03,9,21,0,1\nBBB,2020-03-01,1,1,0,0\n"
      "DDD,2020-03-01,1,1,0,0\n",
      "AAA,100,1000000\nBBB,50,2000\nCCC,10,10\n");
  CHECK(ds.countries() == std::vector<std::string>{"AAA", "BBB"});
  CHECK(ds.dropped_countries == std::vector<std::string>{"CCC", "DDD"});
  REQUIRE(ds.rows.size() == 3);
  const auto aaa = ds.country_rows("AAA");
  REQUIRE(aaa.size() == 2);
  CHECK(aaa[0].population == 1000000.0);
  CHECK(aaa[1].land_area == 100.0);
  CHECK(aaa[1].new_cases == 7.0);
  CHECK(aaa[1].per_million(aaa[1].new_cases) == doctest::Approx(7.0));
  CHECK(aaa[1].strengths[Category::Closure] == 1.0);
  CHECK(aaa[0].strengths[Category::Closure] == doctest::Approx(1.0 / 6.0));
  CHECK(ds.country_rows("ZZZ").empty());
  CHECK_FALSE(ds.warnings.empty());
}

TEST_CASE("load_merge edge cases") {
  SUBCASE("empty outcomes give an empty dataset listing every country") {
    const auto ds = merge("AAA,20200301,1,0,0,1,0\nBBB,20200301,0,0,0,0,0\n", "", "AAA,1,1\nBBB,1,1\n");
    CHECK(ds.rows.empty());
    CHECK(ds.dropped_countries == std::vector<std::string>{"AAA", "BBB"});
    REQUIRE_FALSE(ds.warnings.empty());
    CHECK(ds.warnings.back().find("AAA") != std::string::npos);
    CHECK(ds.warnings.back().find("BBB") != std::string::npos);
  }
  SUBCASE("a single overlapping day") {
    const auto ds = merge("AAA,20200301,1,0,0,1,0\nAAA,20200302,1,0,0,1,0\n", "AAA,2020-03-02,4,4,0,0\n",
                          "AAA,1,1\n");
    REQUIRE(ds.rows.size() == 1);
    CHECK(format_date(ds.rows[0].date) == "2020-03-02");
  }
  SUBCASE("distinct errors") {
    CHECK_THROWS_AS(load_merge(parse_csv("code,day,C1\n"), parse_csv(outcomes_csv("")), parse_csv(stats_csv("")),
                               small_mapping()),
                    SchemaError);
    CHECK_THROWS_AS(merge("AAA,2020-13-01,1,0,0,1,0\n", "", ""), DateParseError);
    CHECK_THROWS_AS(merge("AAA,20200301,1,0,0,1,0\nAAA,2020-03-01,1,0,0,1,0\n", "", ""), DuplicateRowError);
    CHECK_THROWS_AS(merge("", "AAA,2020-03-01,1,1,0,0\nAAA,2020-03-01,1,1,0,0\n", ""), DuplicateRowError);
    CHECK_THROWS_AS(merge("", "", "AAA,1,1\nAAA,1,1\n"), DuplicateRowError);
  }
  SUBCASE("negative counts become missing with a warning") {
    const auto ds = merge("AAA,20200301,1,0,0,1,0\n", "AAA,2020-03-01,-3,4,0,0\n", "AAA,1,1\n");
    CHECK(std::isnan(ds.rows[0].new_cases));
    CHECK(ds.warnings.front().find("negative") != std::string::npos);
  }
  SUBCASE("row filter") {
    auto m = small_mapping();
    m.policy.filter_column = "C2";
    m.policy.filter_value = "0";
    const auto ds = load_merge(parse_csv(policy_csv("AAA,20200301,1,0,0,1,0\nAAA,20200301,1,1,0,1,0\n")),
                               parse_csv(outcomes_csv("AAA,2020-03-01,1,1,0,0\n")), parse_csv(stats_csv("AAA,1,1\n")),
                               m);
    CHECK(ds.rows.size() == 1);
  }
}

TEST_CASE("merge is idempotent and the dataset file round-trips") {
  const std::string p = "AAA,20200301,1,,0,1,0\nAAA,20200302,3,2,1,2,2\nB\"B,20200301,,,,,\n";
  const std::string o = "AAA,2020-03-01,5,5,0,0\nAAA,2020-03-02,,12,1,1\n";
  const std::string s = "AAA,100,1000000\n";
  const auto a = merge(p, o, s);
  const auto b = merge(p, o, s);
  CHECK(dataset_to_csv(a) == dataset_to_csv(b));

  const auto path = (std::filesystem::temp_directory_path() / "epiwb_test_dataset.csv.gz").string();
  write_dataset(path, a);
  const auto back = read_dataset(path);
  std::filesystem::remove(path);
  CHECK(dataset_to_csv(back) == dataset_to_csv(a));
  CHECK(back.indicator_columns == a.indicator_columns);
  CHECK(std::isnan(back.rows[1].new_cases));
  CHECK_FALSE(back.rows[0].indicators[1].has_value());
}

TEST_CASE("default mapping covers 24 indicators in four categories") {
  const auto m = Mapping::oxcgrt_owid();
  CHECK(m.indicators.size() == 24);
  std::array<int, kNumCategories> per{};
  for (const auto& s : m.indicators) ++per[static_cast<int>(s.category)];
  CHECK(per == std::array<int, kNumCategories>{8, 4, 8, 4});
  const auto back = Mapping::from_json(m.to_json());
  CHECK(back.to_json() == m.to_json());
}

TEST_CASE("trailing smoothing and growth rates") {
  const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8};
  const auto s = smooth_trailing(x, 3);
  CHECK(s[0] == 1.0);
  CHECK(s[1] == 1.5);
  CHECK(s[2] == 2.0);
  CHECK(s[7] == 7.0);
  const std::vector<double> gap{kMissing, 4.0, kMissing};
  const auto g = smooth_trailing(gap, 1);
  CHECK(std::isnan(g[0]));
  CHECK(g[1] == 4.0);

  const std::vector<double> constant(10, 5.0);
  for (double r : log_growth_rates(constant)) CHECK(r == 0.0);
  std::vector<double> doubling{1};
  for (int k = 0; k < 9; ++k) doubling.push_back(doubling.back() * 2);
  for (double r : log_growth_rates(doubling)) CHECK(r == doctest::Approx(std::log(2.0)));
}

TEST_CASE("growth windows") {
  const auto start = parse_date("2020-03-01");
  WindowOptions opts;
  SUBCASE("steady zero-strength series is one window") {
    const std::vector<double> cases(30, 50.0), strength(30, 0.0);
    const auto w = growth_windows("AAA", start, cases, strength, opts);
    REQUIRE(w.size() == 1);
    CHECK(w[0].length() == 30);
    CHECK(w[0].growth_rates.size() == 29);
    for (double r : w[0].growth_rates) CHECK(r == 0.0);
  }
  SUBCASE("strengths above the threshold give nothing") {
    const std::vector<double> cases(30, 50.0), strength(30, 0.5);
    CHECK(growth_windows("AAA", start, cases, strength, opts).empty());
  }
  SUBCASE("one intervention day splits the run") {
    opts.strength_threshold = 0.0;
    const std::vector<double> cases(30, 50.0);
    std::vector<double> strength(30, 0.0);
    strength[15] = 0.1;
    const auto w = growth_windows("AAA", start, cases, strength, opts);
    REQUIRE(w.size() == 2);
    CHECK(w[0].length() == 15);
    CHECK(w[1].length() == 14);
    CHECK(w[1].start == start + std::chrono::days{16});
  }
  SUBCASE("short runs and low counts are discarded") {
    std::vector<double> cases(20, 50.0);
    for (int k = 0; k < 14; ++k) cases[k] = 1.0;
    const std::vector<double> strength(20, 0.0);
    const auto w = growth_windows("AAA", start, cases, strength, opts);
    // smoothed values cross 10 on day 15; days 15..19 are only five
    CHECK(w.empty());
  }
}

TEST_CASE("windows from a merged dataset respect every predicate") {
  std::string p, o;
  for (int k = 0; k < 40; ++k) {
    // interventions start on day 25; a missing calendar day at 10
    const std::string strength = k >= 25 ? "3" : "0";
    if (k == 10) continue;
    p += "AAA," + date_plus(k) + "," + strength + ",0,0,0,0\n";
    o += "AAA," + date_plus(k) + "," + std::to_string(20 + 3 * k) + ",0,0,0\n";
  }
  const auto ds = merge(p, o, "AAA,1,1\n");
  const auto windows = extract_growth_windows(ds, {});
  REQUIRE(windows.size() == 2);
  CHECK(windows[0].length() == 10);
  CHECK(windows[1].length() == 14);
  for (const auto& w : windows) {
    for (int t = 0; t < w.length(); ++t) {
      const auto date = w.start + std::chrono::days{t};
      const auto rows = ds.country_rows("AAA");
      const auto it = std::find_if(rows.begin(), rows.end(), [&](const CountryDay& r) { return r.date == date; });
      REQUIRE(it != rows.end());
      CHECK(it->strengths.max() <= 0.05);
      CHECK(w.smoothed[t] >= 10.0);
    }
  }
  const auto pool = growth_rate_distribution(windows);
  CHECK(pool.size() == 9 + 13);
  for (double r : pool) CHECK(r > 0.0);
  const auto j = windows_to_json(windows);
  CHECK(j.size() == 2);
  CHECK(j[0]["start"] == "2020-03-01");

  CHECK_THROWS_AS(growth_rate_distribution(std::vector<GrowthWindow>{}), DataError);
}
