#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "epi/env/environment.hpp"
#include "epi/env/scenario_io.hpp"
#include "epi/pareto/pareto.hpp"

using namespace epi;

TEST_CASE("reset follows the scenario's initial rule") {
  env::Environment uk(env::scenarios::by_id("covid_uk"));
  const auto& s = uk.reset(7);
  CHECK(s.comps.i == 1000.0);
  CHECK(s.comps.s == 67000.0);
  CHECK(s.comps.h == 0.0);
  CHECK(s.comps.q == 0.0);
  CHECK(s.comps.d == 0.0);
  CHECK(s.day == 0);

  env::Environment measles(env::scenarios::by_id("measles_cov95"));
  const auto& m = measles.reset(1);
  CHECK(m.comps.h == doctest::Approx(950.0));
  CHECK(m.comps.s == doctest::Approx(49.0));
  CHECK(m.comps.i == 1.0);

  env::Environment train(env::scenarios::by_id("covid_train"));
  std::set<int> seen;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    const double i = train.reset(seed).comps.i;
    CHECK(i >= 1.0);
    CHECK(i <= 20.0);
    CHECK(i == std::floor(i));
    seen.insert(static_cast<int>(i));
  }
  CHECK(seen.size() == 20);
}

TEST_CASE("zero action has zero economic reward and rewards are non-positive") {
  env::Environment e(env::scenarios::by_id("covid_uk"));
  e.reset(3);
  const auto out = e.step({0, 0, 0});
  CHECK(out.reward[2] == 0.0);
  CHECK(out.reward[0] <= 0.0);
  CHECK(out.reward[1] <= 0.0);
  CHECK(out.state.day == 1);

  const auto start = e.state().comps;
  const auto out2 = e.step({4, 0, 6});
  CHECK(out2.reward[2] == doctest::Approx(-(4.0 + 5.0 * 6.0 * start.i / start.living())));
}

TEST_CASE("masked channels are forced to zero") {
  const auto spec = env::scenarios::by_id("measles_cov85");
  CHECK_FALSE(spec.allowed[1]);
  env::Environment e(spec);
  e.reset(0);
  const auto out = e.step({3, 9, 2});
  CHECK(out.applied == InterventionLevels{3, 0, 2});
  CHECK(e.trajectory().days.back().action == InterventionLevels{3, 0, 2});
}

TEST_CASE("episode ends at the horizon and refuses further steps") {
  env::Environment e(env::scenarios::by_id("covid_uk"));
  e.reset(11);
  int steps = 0;
  bool done = false;
  while (!done) {
    done = e.step({1, 1, 1}).done;
    ++steps;
  }
  CHECK(steps == 50);
  CHECK(e.trajectory().days.size() == 50);
  CHECK_THROWS_AS(e.step({0, 0, 0}), env::EpisodeDoneError);
  e.reset(11);
  CHECK_FALSE(e.done());
}

TEST_CASE("step before reset and invalid actions are rejected") {
  env::Environment e(env::scenarios::by_id("covid_uk"));
  CHECK_THROWS(e.step({0, 0, 0}));
  e.reset(0);
  CHECK_THROWS_AS(e.step({11, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(e.step({0, -1, 0}), std::invalid_argument);
}

TEST_CASE("same seed reproduces the episode") {
  const auto spec = env::scenarios::by_id("covid_uk");
  auto policy = [](int day, const Compartments&) { return InterventionLevels{day % 11, 5, 10 - day % 11}; };
  const auto a = env::rollout(spec, policy, 42);
  const auto b = env::rollout(spec, policy, 42);
  const auto c = env::rollout(spec, policy, 43);
  CHECK(env::episode_return(a) == env::episode_return(b));
  CHECK(env::episode_return(a) != env::episode_return(c));
}

TEST_CASE("observation layout") {
  env::Environment e(env::scenarios::by_id("covid_uk"));
  e.reset(0);
  auto obs = e.observation();
  REQUIRE(obs.size() == env::Environment::kObservationSize);
  CHECK(obs[0] == doctest::Approx(67000.0 / 68000.0));
  CHECK(obs[2] == doctest::Approx(1000.0 / 68000.0));
  CHECK(obs[5] == 0.0);
  e.step({0, 0, 0});
  CHECK(e.observation()[5] == doctest::Approx(1.0 / 50.0));
}

TEST_CASE("scenario presets") {
  CHECK(env::scenarios::ids().size() == 10);
  CHECK(env::scenarios::by_id("covid_mu15").effective_profile().mu0 == 15.0);
  CHECK(env::scenarios::by_id("covid_mu20").effective_profile().mu0 == 20.0);
  CHECK(env::scenarios::by_id("polio").profile.name == "polio");
  CHECK_THROWS(env::scenarios::by_id("nope"));
  auto bad = env::scenarios::by_id("covid_uk");
  bad.coverage = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

// --- pareto -----------------------------------------------------------------

namespace {

bool dominates_oracle(const pareto::Point& u, const pareto::Point& v) {
  bool all_ge = true, any_gt = false;
  for (std::size_t k = 0; k < u.size(); ++k) {
    all_ge = all_ge && u[k] >= v[k];
    any_gt = any_gt || u[k] > v[k];
  }
  return all_ge && any_gt;
}

std::vector<pareto::Point> oracle_filter(const std::vector<pareto::Point>& pts) {
  std::vector<pareto::Point> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < pts.size(); ++j) dominated = dominated || dominates_oracle(pts[j], pts[i]);
    if (!dominated && std::find(out.begin(), out.end(), pts[i]) == out.end()) out.push_back(pts[i]);
  }
  return out;
}

}  // namespace

TEST_CASE("dominance examples") {
  using V = std::vector<double>;
  CHECK(pareto::dominates(V{1, 2, 3}, V{1, 2, 2}));
  CHECK_FALSE(pareto::dominates(V{1, 2, 3}, V{1, 2, 3}));
  CHECK_FALSE(pareto::dominates(V{2, 0}, V{0, 2}));
  CHECK_FALSE(pareto::dominates(V{0, 2}, V{2, 0}));
  CHECK_THROWS_AS(pareto::dominates(V{1, 2}, V{1, 2, 3}), std::invalid_argument);
}

TEST_CASE("non-dominated filter matches the quadratic oracle on random instances") {
  Rng rng(2024);
  for (int inst = 0; inst < 1000; ++inst) {
    const int n = rng.uniform_int(0, 40);
    const int dims = rng.uniform_int(1, 4);
    std::vector<pareto::Point> pts;
    for (int i = 0; i < n; ++i) {
      pareto::Point p;
      // a coarse grid so ties and duplicates occur
      for (int k = 0; k < dims; ++k) p.push_back(static_cast<double>(rng.uniform_int(0, 5)));
      pts.push_back(p);
    }
    auto got = pareto::non_dominated_filter(pts);
    auto want = oracle_filter(pts);
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    REQUIRE(got == want);
  }
}

TEST_CASE("dominance is a strict partial order") {
  Rng rng(5);
  std::vector<pareto::Point> pts;
  for (int i = 0; i < 60; ++i) pts.push_back({double(rng.uniform_int(0, 3)), double(rng.uniform_int(0, 3)),
                                              double(rng.uniform_int(0, 3))});
  for (const auto& a : pts) {
    CHECK_FALSE(pareto::dominates(a, a));
    for (const auto& b : pts) {
      if (pareto::dominates(a, b)) CHECK_FALSE(pareto::dominates(b, a));
      for (const auto& c : pts)
        if (pareto::dominates(a, b) && pareto::dominates(b, c)) CHECK(pareto::dominates(a, c));
    }
  }
}

TEST_CASE("filter is idempotent") {
  Rng rng(9);
  std::vector<pareto::Point> pts;
  for (int i = 0; i < 200; ++i) pts.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
  const auto once = pareto::non_dominated_filter(pts);
  CHECK(pareto::non_dominated_filter(once) == once);
}

TEST_CASE("non-domination ranks peel fronts") {
  const std::vector<pareto::Point> pts{{3, 3}, {1, 1}, {2, 2}, {3, 0}, {0, 3}, {2, 2}};
  const auto r = pareto::non_domination_ranks(pts);
  CHECK(r == std::vector<int>{0, 2, 1, 1, 1, 1});
}

TEST_CASE("crowding distance examples") {
  constexpr double inf = std::numeric_limits<double>::infinity();
  // collinear front in two objectives; interior gaps sum over both axes
  const std::vector<pareto::Point> front{{0, 4}, {1, 3}, {3, 1}, {4, 0}};
  const auto cd = pareto::crowding_distance(front);
  CHECK(cd[0] == inf);
  CHECK(cd[3] == inf);
  CHECK(cd[1] == doctest::Approx(3.0 / 4.0 + 3.0 / 4.0));
  CHECK(cd[2] == doctest::Approx(3.0 / 4.0 + 3.0 / 4.0));

  CHECK(pareto::crowding_distance({}).empty());
  const auto two = pareto::crowding_distance({{0, 1}, {1, 0}});
  CHECK(two[0] == inf);
  CHECK(two[1] == inf);
}

TEST_CASE("constant policy grid honours the mask") {
  const auto uk = env::scenarios::by_id("covid_uk");
  CHECK(pareto::constant_policy_grid(uk, 11).size() == 1331);
  const auto two = pareto::constant_policy_grid(uk, 2);
  CHECK(two.size() == 8);
  for (const auto& a : two)
    for (int k = 0; k < 3; ++k) CHECK((a[k] == 0 || a[k] == 10));
  const auto measles = env::scenarios::by_id("measles_cov80");
  const auto g = pareto::constant_policy_grid(measles, 11);
  CHECK(g.size() == 121);
  for (const auto& a : g) CHECK(a.vaccination == 0);
  CHECK_THROWS_AS(pareto::constant_policy_grid(uk, 0), std::invalid_argument);
}

TEST_CASE("reference front on a coarse grid") {
  auto spec = env::scenarios::by_id("covid_uk");
  pareto::ReferenceFrontOptions opts;
  opts.levels_per_channel = 2;
  opts.threads = 2;
  const auto front = pareto::reference_front(spec, opts);
  REQUIRE_FALSE(front.empty());
  std::vector<pareto::Point> pts;
  for (const auto& p : front) pts.emplace_back(p.ret.begin(), p.ret.end());
  CHECK(pareto::non_dominated_filter(pts).size() == pts.size());

  // every grid policy is dominated by or equal to some front member
  for (const auto& a : pareto::constant_policy_grid(spec, 2)) {
    const auto r = pareto::evaluate_constant_policy(spec, a, opts);
    const pareto::Point rp(r.begin(), r.end());
    bool covered = false;
    for (const auto& p : pts) covered = covered || p == rp || pareto::dominates(p, rp);
    CHECK(covered);
  }

  // threads do not change the result
  opts.threads = 1;
  CHECK(pareto::reference_front(spec, opts) == front);
}

TEST_CASE("front JSON roundtrip") {
  std::vector<pareto::FrontPoint> front{{{-1.5, -0.25, 0.0}, {0, 10, 0}, "constant(0,10,0)"},
                                        {{-0.5, -0.125, -3.0}, {3, 10, 1}, ""}};
  const auto back = pareto::front_from_json(pareto::front_to_json(front));
  CHECK(back == front);
  CHECK(pareto::front_to_csv(front).rfind("r1,r2,r3,c,v,q\n", 0) == 0);
}

TEST_CASE("scenario JSON round trip and shipped preset files") {
  for (const auto& id : env::scenarios::ids()) {
    const auto spec = env::scenarios::by_id(id);
    const nlohmann::json j = spec;
    CHECK(nlohmann::json(j.get<env::ScenarioSpec>()) == j);

    const auto path = std::string(EPI_PRESETS_DIR) + "/" + id + ".json";
    CAPTURE(path);
    const auto shipped = env::load_scenario(path);
    CHECK(nlohmann::json(shipped) == j);
    CHECK(shipped.effective_profile() == spec.effective_profile());
  }
  const auto partial = nlohmann::json::parse(R"({"base": "covid_mu15", "id": "dense", "initial_infected": 50})")
                           .get<env::ScenarioSpec>();
  CHECK(partial.id == "dense");
  CHECK(partial.mu_override == env::scenarios::by_id("covid_mu15").mu_override);
  CHECK(partial.infected.fixed == 50);
  CHECK_THROWS_AS(nlohmann::json::parse(R"({"initial_infected": {"kind": "poisson"}})").get<env::ScenarioSpec>(),
                  std::invalid_argument);
  CHECK_THROWS_AS(env::load_scenario("no_such_preset"), std::out_of_range);
}
