#include <doctest.h>

#include <cmath>
#include <sstream>

#include "epi/core/economics.hpp"
#include "epi/core/io.hpp"
#include "epi/core/model.hpp"
#include "epi/core/sde.hpp"
#include "epi/core/simulate.hpp"

using namespace epi;

TEST_CASE("covid preset matches the published parameter table") {
  const DiseaseProfile p = presets::covid();
  CHECK(p.omega == 0.000047);
  CHECK(p.sigma == 0.020);
  CHECK(p.natural_death == 0.000018);
  CHECK(p.delta == 0.005);
  CHECK(p.nu == 0.0014);
  CHECK(p.phi == 0.14);
  CHECK(p.mu0 == 10.0);
  CHECK(p.beta_unit == 0.0005);
  CHECK(p.rho_unit == 0.01);
  CHECK(p.closure_factor == 0.2);
  CHECK_NOTHROW(p.validate());
  for (const auto& name : presets::names()) CHECK_NOTHROW(presets::by_name(name).validate());
}

TEST_CASE("reparameterized presets") {
  CHECK(presets::polio().sigma == doctest::Approx(0.035));
  CHECK(presets::influenza().sigma == doctest::Approx(0.010));
  CHECK(presets::measles().sigma == doctest::Approx(0.090));
  // nu = cfr * phi / (1 - cfr)
  CHECK(presets::measles().nu == doctest::Approx(0.008 * 0.12 / 0.992));
  CHECK(presets::polio().nu == doctest::Approx(0.23 * 0.1 / 0.77));
  CHECK(presets::measles().delta == doctest::Approx(0.0009));
  CHECK_THROWS_AS(presets::by_name("ebola"), std::out_of_range);
}

TEST_CASE("profile validation rejects bad rates") {
  DiseaseProfile p = presets::covid();
  p.delta = 0.5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = presets::covid();
  p.mu0 = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = presets::covid();
  p.w[2] = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("effective_rates maps intervention levels") {
  const DiseaseProfile p = presets::covid();
  SUBCASE("zero action") {
    const auto r = effective_rates(p, {0, 0, 0});
    CHECK(r.beta == 0.0);
    CHECK(r.rho == 0.0);
    CHECK(r.mu == 10.0);
  }
  SUBCASE("full closure") {
    const auto r = effective_rates(p, {10, 0, 0});
    CHECK(r.mu == doctest::Approx(10.0 / 3.0));
  }
  SUBCASE("full vaccination and quarantine") {
    const auto r = effective_rates(p, {0, 10, 10});
    CHECK(r.beta == doctest::Approx(0.005));
    CHECK(r.rho == doctest::Approx(0.1));
    CHECK(r.mu == 10.0);
  }
  CHECK_THROWS_AS(effective_rates(p, {11, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(effective_rates(p, {0, -1, 0}), std::invalid_argument);
}

TEST_CASE("infectious_fraction") {
  CHECK(infectious_fraction({1000, 0, 10, 0, 0}) == doctest::Approx(10.0 / 1010.0));
  CHECK(infectious_fraction({1000, 0, 10, 0, 0}) == doctest::Approx(0.009901).epsilon(1e-4));
  CHECK(infectious_fraction({1000, 50, 0, 3, 7}) == 0.0);
  CHECK(infectious_fraction({0, 0, 5, 5, 0}) == 0.5);
  // the dead are not part of the denominator
  CHECK(infectious_fraction({0, 0, 5, 5, 1000}) == 0.5);
  CHECK_THROWS_AS(infectious_fraction({0, 0, 0, 0, 12}), DegenerateStateError);
}

TEST_CASE("drift terms") {
  const DiseaseProfile p = presets::covid();
  const auto r0 = effective_rates(p, {0, 0, 0});

  SUBCASE("no infection source") {
    const auto f = drift({5000, 300, 0, 0, 10}, r0);
    CHECK(f.d == 0.0);
    CHECK(f.i == 0.0);
  }
  SUBCASE("infection inflow, hand arithmetic") {
    // 0.02 * 10 * 1000 * (10 / 1010)
    const double expected = 0.02 * 10.0 * 1000.0 * 10.0 / 1010.0;
    const auto f = drift({1000, 0, 10, 0, 0}, r0);
    CHECK(f.infection_inflow == doctest::Approx(expected));
    CHECK(f.infection_inflow == doctest::Approx(1.9802).epsilon(1e-4));
  }
  SUBCASE("vital dynamics only") {
    const Compartments c{68000, 0, 0, 0, 0};
    const auto f = drift(c, r0);
    CHECK(f.s == doctest::Approx(p.omega * 68000 - p.natural_death * 68000));
  }
  SUBCASE("explicit formulas") {
    const Compartments c{500, 200, 40, 10, 3};
    const auto r = effective_rates(p, {2, 4, 6});
    const double n = 750.0, frac = 40.0 / n, a = p.natural_death;
    const auto f = drift(c, r);
    CHECK(f.s == doctest::Approx(p.omega * n - r.sigma * r.mu * 500 * frac - (a + r.beta) * 500));
    CHECK(f.h == doctest::Approx(r.beta * 500 + p.phi * 40 + p.phi * 10 - r.delta * r.mu * 200 * frac - a * 200));
    CHECK(f.i == doctest::Approx(r.sigma * r.mu * 500 * frac + r.delta * r.mu * 200 * frac -
                                 (a + p.nu + p.phi + r.rho) * 40));
    CHECK(f.q == doctest::Approx(r.rho * 40 - (a + p.nu + p.phi) * 10));
    CHECK(f.d == doctest::Approx(p.nu * 50));
  }
  CHECK_THROWS_AS(drift({0, 0, 0, 0, 5}, r0), DegenerateStateError);
}

TEST_CASE("accounting identity holds in drift-only mode") {
  // d(S+H+I+Q+D)/dt = omega*N - a*N with N the living population.
  const DiseaseProfile p = presets::covid().deterministic();
  Rng rng(7);
  Compartments c{67000, 0, 1000, 0, 0};
  for (int step = 0; step < 2000; ++step) {
    const InterventionLevels a{rng.uniform_int(0, 10), rng.uniform_int(0, 10), rng.uniform_int(0, 10)};
    const auto r = effective_rates(p, a);
    const auto f = drift(c, r);
    const double lhs = f.s + f.h + f.i + f.q + f.d;
    const double rhs = (p.omega - p.natural_death) * c.living();
    CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max({std::abs(rhs), c.total() * 1e-6, 1e-12}));
    c = euler_step(c, r, 0.01);
  }
}

TEST_CASE("em_step with zero diffusion equals the Euler step") {
  const DiseaseProfile p = presets::covid().deterministic();
  const auto r = effective_rates(p, {3, 2, 1});
  NoiseStreams noise{Rng(1)};
  const Compartments c{60000, 5000, 2000, 300, 40};
  const auto step = em_step(c, r, 0.01, noise);
  const auto expected = euler_step(c, r, 0.01);
  CHECK(step.state.s == doctest::Approx(expected.s));
  CHECK(step.state.h == doctest::Approx(expected.h));
  CHECK(step.state.i == doctest::Approx(expected.i));
  CHECK(step.state.q == doctest::Approx(expected.q));
  CHECK(step.state.d == doctest::Approx(expected.d));
}

TEST_CASE("em_step tends to identity as dt -> 0") {
  const auto r = effective_rates(presets::covid(), {0, 0, 0});
  NoiseStreams noise{Rng(3)};
  const Compartments c{60000, 5000, 2000, 300, 40};
  const auto step = em_step(c, r, 1e-14, noise);
  CHECK(step.state.s == doctest::Approx(c.s).epsilon(1e-6));
  CHECK(step.state.i == doctest::Approx(c.i).epsilon(1e-6));
  CHECK(step.state.d == doctest::Approx(c.d).epsilon(1e-6));
}

TEST_CASE("em_step sample mean matches the deterministic step within 3 standard errors") {
  DiseaseProfile p = presets::covid();
  const auto r = effective_rates(p, {1, 1, 1});
  const auto r_det = effective_rates(p.deterministic(), {1, 1, 1});
  const Compartments c{60000, 5000, 2000, 300, 0};
  const double dt = 0.01;
  const auto expected = euler_step(c, r_det, dt).as_array();

  const int n = 10000;
  std::array<double, 5> sum{}, sum_sq{};
  NoiseStreams noise{Rng(2024)};
  for (int k = 0; k < n; ++k) {
    const auto x = em_step(c, r, dt, noise).state.as_array();
    for (int j = 0; j < 5; ++j) {
      sum[j] += x[j];
      sum_sq[j] += x[j] * x[j];
    }
  }
  for (int j = 0; j < 5; ++j) {
    const double mean = sum[j] / n;
    const double var = std::max(sum_sq[j] / n - mean * mean, 0.0);
    const double se = std::sqrt(var / n);
    CAPTURE(j);
    CHECK(std::abs(mean - expected[j]) <= 3.0 * se + 1e-9 * std::abs(expected[j]));
  }
}

TEST_CASE("em_step clamps and ratchets deaths") {
  DiseaseProfile p = presets::covid();
  p.w.fill(5.0);  // violent noise so clamping triggers
  const auto r = effective_rates(p, {0, 0, 0});
  NoiseStreams noise{Rng(11)};
  Compartments c{100, 10, 5, 5, 20};
  for (int k = 0; k < 5000 && c.living() > 0; ++k) {
    const auto next = em_step(c, r, 0.01, noise);
    CHECK(next.state.s >= 0.0);
    CHECK(next.state.h >= 0.0);
    CHECK(next.state.i >= 0.0);
    CHECK(next.state.q >= 0.0);
    CHECK(next.state.d >= c.d);
    CHECK(next.flows.new_infections >= 0.0);
    CHECK(next.flows.new_deaths >= 0.0);
    c = next.state;
  }
}

TEST_CASE("interventions move one-step flows in the expected direction") {
  const DiseaseProfile p = presets::covid().deterministic();
  const Compartments c{60000, 4000, 3000, 100, 5};
  double prev_inflow = INFINITY;
  for (int level = 0; level <= 10; ++level) {
    const double inflow = drift(c, effective_rates(p, {level, 0, 0})).infection_inflow;
    CHECK(inflow <= prev_inflow);
    prev_inflow = inflow;
  }
  double prev_vacc = -1.0;
  for (int level = 0; level <= 10; ++level) {
    const double vacc = drift(c, effective_rates(p, {0, level, 0})).vaccination_flow;
    CHECK(vacc >= prev_vacc);
    prev_vacc = vacc;
  }
}

TEST_CASE("simulate runs the full horizon") {
  SimConfig cfg;
  cfg.record_substeps = true;
  const auto traj = simulate(presets::covid(), cfg, constant_policy({}), {67000, 0, 1000, 0, 0});
  CHECK(traj.size() == 50);
  CHECK(traj.substeps.size() == 5001);
  CHECK(cfg.total_substeps() == 5000);
  for (std::size_t d = 0; d < traj.size(); ++d) {
    CHECK(traj.days[d].day == static_cast<int>(d) + 1);
    CHECK(traj.days[d].new_infections >= 0.0);
    CHECK(traj.days[d].new_deaths >= 0.0);
  }
}

TEST_CASE("simulate edge cases") {
  SimConfig cfg;
  SUBCASE("zero horizon") {
    cfg.horizon_days = 0;
    CHECK(simulate(presets::covid(), cfg, constant_policy({}), {100, 0, 1, 0, 0}).size() == 0);
  }
  SUBCASE("no infected, no imports") {
    const auto traj = simulate(presets::covid(), cfg, constant_policy({3, 3, 3}), {68000, 0, 0, 0, 0});
    for (const auto& d : traj.days) {
      CHECK(d.new_infections == 0.0);
      CHECK(d.new_deaths == 0.0);
    }
  }
  SUBCASE("bad config") {
    cfg.dt = 0.02;
    CHECK_THROWS_AS(simulate(presets::covid(), cfg, constant_policy({}), {100, 0, 1, 0, 0}), std::invalid_argument);
  }
  SUBCASE("policy returning invalid levels") {
    CHECK_THROWS_AS(simulate(presets::covid(), cfg, constant_policy({0, 0, 12}), {100, 0, 1, 0, 0}),
                    std::invalid_argument);
  }
}

TEST_CASE("uncontrolled covid outbreak grows in its early days") {
  double growth_sum = 0.0;
  int count = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SimConfig cfg;
    cfg.rng_seed = seed;
    const auto inf = simulate(presets::covid(), cfg, constant_policy({}), {67000, 0, 1000, 0, 0}).new_infections();
    for (int d = 1; d < 10; ++d) {
      growth_sum += inf[d] - inf[d - 1];
      ++count;
    }
  }
  CHECK(growth_sum / count > 0.0);
}

TEST_CASE("simulate is deterministic given the seed") {
  SimConfig cfg;
  cfg.rng_seed = 42;
  auto policy = [](int day, const Compartments& c) {
    return InterventionLevels{day % 11, static_cast<int>(c.i) % 11, (day * 7) % 11};
  };
  const auto a = simulate(presets::covid(), cfg, policy, {67000, 0, 1000, 0, 0});
  const auto b = simulate(presets::covid(), cfg, policy, {67000, 0, 1000, 0, 0});
  REQUIRE(a.size() == b.size());
  for (std::size_t d = 0; d < a.size(); ++d) {
    CHECK(a.days[d].state == b.days[d].state);
    CHECK(a.days[d].new_infections == b.days[d].new_infections);
    CHECK(a.days[d].reward == b.days[d].reward);
  }
  cfg.rng_seed = 43;
  const auto c = simulate(presets::covid(), cfg, policy, {67000, 0, 1000, 0, 0});
  CHECK(c.days.back().state.s != a.days.back().state.s);
}

TEST_CASE("reported deaths equal the summed substep nu*(I+Q)*dt despite clamping") {
  DiseaseProfile p = presets::covid();
  p.w.fill(2.0);
  SimConfig cfg;
  cfg.record_substeps = true;
  cfg.rng_seed = 5;
  const auto traj = simulate(p, cfg, constant_policy({0, 0, 5}), {300, 0, 40, 0, 0});
  for (int day = 0; day < cfg.horizon_days; ++day) {
    double expected = 0.0;
    for (int k = 0; k < cfg.steps_per_day; ++k) {
      const auto& pre = traj.substeps[static_cast<std::size_t>(day * cfg.steps_per_day + k)];
      expected += p.nu * (pre.i + pre.q) * cfg.dt;
    }
    CHECK(traj.days[static_cast<std::size_t>(day)].new_deaths == doctest::Approx(expected).epsilon(1e-12));
  }
  for (std::size_t k = 1; k < traj.substeps.size(); ++k) CHECK(traj.substeps[k].d >= traj.substeps[k - 1].d);
}

TEST_CASE("economic cost") {
  // i / N = 0.2 makes one level of closure and quarantine cost the same
  CHECK(economic_cost({1, 0, 1}, {800, 0, 200, 0, 0}) == doctest::Approx(2.0));
  CHECK(economic_cost({1, 0, 0}, {800, 0, 200, 0, 0}) == doctest::Approx(economic_cost({0, 0, 1}, {800, 0, 200, 0, 0})));
  CHECK(economic_cost({2, 0, 0}, {123, 4, 56, 7, 8}) == 2.0);
  CHECK(economic_cost({0, 0, 10}, {1000, 0, 0, 0, 0}) == 0.0);
  CHECK_THROWS_AS(economic_cost({0, 0, 1}, {0, 0, 0, 0, 3}), DegenerateStateError);
}

TEST_CASE("trajectory export") {
  SimConfig cfg;
  cfg.horizon_days = 3;
  const auto traj = simulate(presets::covid(), cfg, constant_policy({1, 2, 3}), {67000, 0, 1000, 0, 0});
  std::ostringstream csv;
  write_trajectory_csv(csv, traj);
  std::istringstream lines(csv.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header == "day,s,h,i,q,d,new_infections,new_deaths,a_c,a_v,a_q,r1,r2,r3");
  int rows = 0;
  for (std::string line; std::getline(lines, line);) ++rows;
  CHECK(rows == 3);

  // JSON mirror round-trips exactly
  const auto back = trajectory_from_json(json::parse(trajectory_to_json(traj).dump()));
  REQUIRE(back.size() == traj.size());
  for (std::size_t d = 0; d < traj.size(); ++d) {
    CHECK(back.days[d].state == traj.days[d].state);
    CHECK(back.days[d].action == traj.days[d].action);
    CHECK(back.days[d].reward == traj.days[d].reward);
  }
}

TEST_CASE("model config json") {
  const json j = json::parse(R"({"profile": {"preset": "measles", "mu0": 12, "w": 0.1},
                                 "sim": {"horizon_days": 20, "rng_seed": 9}})");
  ModelConfig cfg;
  cfg.profile = j.at("profile").get<DiseaseProfile>();
  cfg.sim = j.at("sim").get<SimConfig>();
  CHECK(cfg.profile.name == "measles");
  CHECK(cfg.profile.mu0 == 12.0);
  CHECK(cfg.profile.w[3] == 0.1);
  CHECK(cfg.sim.horizon_days == 20);
  CHECK(cfg.sim.rng_seed == 9);
  CHECK(cfg.sim.dt == doctest::Approx(0.01));

  const json bad = json::parse(R"({"sigma": 0.001, "delta": 0.01})");
  CHECK_THROWS_AS(bad.get<DiseaseProfile>(), std::invalid_argument);
}
