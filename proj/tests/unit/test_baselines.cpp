#include <doctest.h>

#include <cmath>

#include "epi/baselines/abm.hpp"
#include "epi/baselines/gsir.hpp"

using namespace epi;
using namespace epi::baselines;

namespace {

// Sign changes of the first difference after a centred moving average.
int peak_count(const std::vector<double>& x, int half_width) {
  std::vector<double> s;
  for (std::size_t t = 0; t < x.size(); ++t) {
    double sum = 0;
    int n = 0;
    for (int k = -half_width; k <= half_width; ++k) {
      const auto j = static_cast<long>(t) + k;
      if (j >= 0 && j < static_cast<long>(x.size())) sum += x[static_cast<std::size_t>(j)], ++n;
    }
    s.push_back(sum / n);
  }
  int changes = 0, last = 0;
  for (std::size_t t = 1; t < s.size(); ++t) {
    const double d = s[t] - s[t - 1];
    const int sign = d > 0 ? 1 : (d < 0 ? -1 : 0);
    if (sign != 0 && last != 0 && sign != last) ++changes;
    if (sign != 0) last = sign;
  }
  return changes;
}

}  // namespace

TEST_CASE("GSIR step examples") {
  Rng rng(1);
  const auto p = GsirParams::linear(0.3);
  const GsirState none = GsirState::initial(1000, 0);
  CHECK(gsir_step(none, 1, p, rng) == none);

  auto all_removed = GsirParams::linear(0.3, 7, 0.15, 1.0);
  const auto st = GsirState::initial(1000, 50);
  const auto next = gsir_step(st, 3, all_removed, rng);
  CHECK(next.r == 50);
  CHECK(next.s + next.i + next.r == 1000);

  CHECK_THROWS_AS(gsir_step(st, 0, p, rng), std::invalid_argument);
  CHECK_THROWS_AS(gsir_step(st, 8, p, rng), std::invalid_argument);
  CHECK_THROWS_AS(GsirParams::linear(0.3, 8), std::invalid_argument);
  CHECK_THROWS_AS(GsirParams::linear(0.3, 7, 0.15, 1.5), std::invalid_argument);
}

TEST_CASE("GSIR infections match the Poisson mean") {
  const auto p = GsirParams::linear(0.3);
  const GsirState st{60000, 1000, 7000, 68000};
  const double mean = p.beta_by_level[1] * 1000.0 * 60000.0 / 68000.0;
  Rng rng(77);
  const int n = 10000;
  double sum = 0.0;
  for (int k = 0; k < n; ++k) sum += static_cast<double>(st.s - gsir_step(st, 2, p, rng).s);
  const double se = std::sqrt(mean / n);
  CHECK(std::abs(sum / n - mean) < 3.0 * se);
}

TEST_CASE("GSIR conservation and monotonicity") {
  const auto p = GsirParams::linear(0.3);
  Rng rng(5);
  const auto series = gsir_simulate(p, [](int t) { return 1 + t % 7; }, 200, GsirState::initial(68000, 1000), rng);
  REQUIRE(series.states.size() == 201);
  for (std::size_t t = 0; t < series.states.size(); ++t) {
    const auto& s = series.states[t];
    CHECK(s.s + s.i + s.r == s.m);
    CHECK(s.i >= 0);
    if (t > 0) {
      CHECK(s.s <= series.states[t - 1].s);
      CHECK(s.r >= series.states[t - 1].r);
      CHECK(series.new_infections[t - 1] == series.states[t - 1].s - s.s);
    }
  }
}

TEST_CASE("GSIR series is single peaked") {
  const auto p = GsirParams::linear(0.3, 7, 0.15, 0.1);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto series = gsir_simulate(p, [](int) { return 1; }, 100, GsirState::initial(68000, 1000), rng);
    std::vector<double> xi;
    for (const auto& s : series.states) xi.push_back(static_cast<double>(s.i));
    CHECK(peak_count(xi, 3) == 1);
  }
}

TEST_CASE("GSIR degenerate cases") {
  Rng rng(2);
  const auto flat = gsir_simulate(GsirParams::linear(0.3), [](int) { return 1; }, 30, GsirState::initial(500, 0), rng);
  for (const auto& s : flat.states) CHECK(s == GsirState::initial(500, 0));

  GsirParams one;
  one.beta_by_level = {0.25};
  one.zeta = 0.1;
  const auto sir = gsir_simulate(one, [](int) { return 1; }, 50, GsirState::initial(5000, 10), rng);
  CHECK(sir.states.back().r > 0);
  CHECK(one.level_for_action(0) == 1);
  CHECK(one.level_for_action(10) == 1);

  const auto p = GsirParams::linear(0.3);
  CHECK(p.level_for_action(0) == 1);
  CHECK(p.level_for_action(5) == 4);
  CHECK(p.level_for_action(10) == 7);
}

TEST_CASE("GSIR beta1 fit reproduces the target growth") {
  const double g = sde_early_growth(presets::covid(), 68000, 1000, 10);
  // hand value: early growth about mu*sigma*S/N - (phi + nu + a)
  CHECK(g == doctest::Approx(0.2 * 67000.0 / 68000.0 - 0.14 - 0.0014 - 0.000018).epsilon(0.2));
  const double b1 = fit_gsir_beta1(g, 0.1, 68000, 1000, 10);
  CHECK(gsir_mean_growth(b1, 0.1, 68000, 1000, 10) == doctest::Approx(g).epsilon(1e-8));
  CHECK(b1 > 0.1);
  CHECK(b1 < 0.3);
  CHECK_THROWS_AS(fit_gsir_beta1(-5.0, 0.1, 68000, 1000, 10), std::domain_error);
}

TEST_CASE("ABM without transmission never infects") {
  AbmConfig c;
  c.grid_length = 20;
  c.infection_prob = 0.0;
  const auto r = abm_run(c, [](int) { return InterventionLevels{}; }, 20, 3);
  for (const auto& d : r.days) CHECK(d.new_infections == 0);
}

TEST_CASE("ABM counts are conserved and statuses only move forward") {
  AbmConfig c;
  c.grid_length = 15;
  c.density = 40;
  c.initial_infected = 20;
  const auto pop = c.population();
  const auto r = abm_run(c, [](int d) { return InterventionLevels{d % 3, 1, d % 2}; }, 40, 9);
  std::int64_t prev_s = pop, prev_gone = 0;
  for (const auto& d : r.days) {
    CHECK(d.susceptible + d.incubating + d.infectious + d.recovered + d.dead == pop);
    CHECK(d.susceptible <= prev_s);
    CHECK(d.recovered + d.dead >= prev_gone);
    prev_s = d.susceptible;
    prev_gone = d.recovered + d.dead;
  }
}

TEST_CASE("ABM is reproducible from the seed and validates its world") {
  AbmConfig c;
  c.grid_length = 12;
  c.density = 30;
  auto none = [](int) { return InterventionLevels{}; };
  const auto a = abm_run(c, none, 15, 4), b = abm_run(c, none, 15, 4);
  for (std::size_t d = 0; d < a.days.size(); ++d) CHECK(a.days[d].new_infections == b.days[d].new_infections);

  AbmConfig empty = c;
  empty.density = 0.0;
  CHECK_THROWS_AS(abm_run(empty, none, 5, 1), std::invalid_argument);
  AbmWorld w;
  Rng rng(0);
  CHECK_THROWS_AS(abm_simulate(w, none, 5, rng), std::invalid_argument);
}

TEST_CASE("ABM incubation delays new cases") {
  AbmConfig c;
  c.grid_length = 10;
  c.density = 50;
  c.initial_infected = 30;
  c.incubation_days = 5;
  const auto r = abm_run(c, [](int) { return InterventionLevels{}; }, 12, 6);
  for (int d = 0; d < 4; ++d) CHECK(r.days[static_cast<std::size_t>(d)].new_cases == 0);
  CHECK(r.days[4].new_cases == r.days[0].new_infections);
}

TEST_CASE("runtime measurement and fits") {
  AbmConfig c;
  c.density = 5;
  const auto fit = abm_init_runtime(c, {10, 20, 30, 40}, 1, 1);
  CHECK(fit.seconds.size() == 4);
  for (std::size_t k = 0; k < fit.lengths.size(); ++k) CHECK(fit.seconds[k] >= 0.0);
  CHECK(std::isfinite(fit.power_exponent));
  CHECK_THROWS_AS(abm_init_runtime(c, {10, 20}, 1, 1), std::invalid_argument);

  std::vector<double> t;
  for (int L : {10, 20, 40, 80}) t.push_back(0.5 + 0.01 * L + 3e-4 * L * L);
  const auto exact = fit_runtime({10, 20, 40, 80}, t);
  CHECK(exact.quadratic[0] == doctest::Approx(0.5));
  CHECK(exact.quadratic[1] == doctest::Approx(0.01));
  CHECK(exact.quadratic[2] == doctest::Approx(3e-4));
  CHECK(exact.predict(500) == doctest::Approx(0.5 + 5.0 + 75.0));
  const auto power = fit_runtime({10, 20, 40}, {1e-3, 8e-3, 64e-3});
  CHECK(power.power_exponent == doctest::Approx(3.0));
}
