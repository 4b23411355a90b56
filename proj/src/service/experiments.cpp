#include "epi/service/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "epi/core/io.hpp"
#include "epi/pareto/pareto.hpp"

namespace epi::service {

using nlohmann::json;

Priority priority_from_name(std::string_view name) {
  if (name == "balance") return Priority::Balance;
  if (name == "infection") return Priority::Infection;
  if (name == "economy") return Priority::Economy;
  throw std::invalid_argument("unknown priority '" + std::string(name) + "' (balance, infection, economy)");
}

std::string_view priority_name(Priority p) {
  switch (p) {
    case Priority::Balance: return "balance";
    case Priority::Infection: return "infection";
    case Priority::Economy: return "economy";
  }
  return "?";
}

RunStats summarize(const std::vector<Trajectory>& runs) {
  RunStats s;
  if (runs.empty()) return s;
  for (const auto& t : runs) {
    const auto r = t.total_reward();
    double peak_i = 0, peak_d = 0, peak_q = 0, total = 0, top = 0, early = 0;
    int early_days = 0;
    for (const auto& d : t.days) {
      peak_i = std::max(peak_i, d.new_infections);
      peak_d = std::max(peak_d, d.new_deaths);
      peak_q = std::max(peak_q, d.state.q);
      total += d.action.sum();
      top = std::max({top, double(d.action.closure), double(d.action.vaccination), double(d.action.quarantine)});
      if (d.day <= 7) early += d.action.sum() / 3.0, ++early_days;
    }
    for (int k = 0; k < 3; ++k) s.mean_return[k] += r[k];
    s.peak_new_infections += peak_i;
    s.peak_new_deaths += peak_d;
    s.peak_quarantined += peak_q;
    s.total_interventions += total;
    s.max_level += top;
    s.early_mean_level += early_days ? early / early_days : 0.0;
  }
  const double n = static_cast<double>(runs.size());
  for (auto& v : s.mean_return) v /= n;
  s.peak_new_infections /= n;
  s.peak_new_deaths /= n;
  s.peak_quarantined /= n;
  s.total_interventions /= n;
  s.max_level /= n;
  s.early_mean_level /= n;
  return s;
}

json to_json(const RunStats& s) {
  return {{"mean_return", s.mean_return},
          {"cumulative_infections", s.cumulative_infections()},
          {"economic_cost", s.economic_cost()},
          {"peak_new_infections", s.peak_new_infections},
          {"peak_new_deaths", s.peak_new_deaths},
          {"peak_quarantined", s.peak_quarantined},
          {"total_interventions", s.total_interventions},
          {"max_level", s.max_level},
          {"early_mean_level", s.early_mean_level}};
}

namespace {

env::ScenarioSpec deterministic(env::ScenarioSpec spec) {
  spec.deterministic = true;
  return spec;
}

double peak_infectious(const env::ScenarioSpec& spec, const InterventionLevels& levels) {
  const auto t = env::rollout(deterministic(spec), constant_policy(levels), 0);
  double peak = t.initial.i;
  for (const auto& d : t.days) peak = std::max(peak, d.state.i);
  return peak;
}

}  // namespace

bool contains_outbreak(const env::ScenarioSpec& spec, const InterventionLevels& levels) {
  const auto t = env::rollout(deterministic(spec), constant_policy(levels), 0);
  for (const auto& d : t.days)
    if (d.state.i > t.initial.i) return false;
  return true;
}

pcn::Command priority_command(const TrainedAgent& agent, const env::ScenarioSpec& spec, Priority p) {
  const auto& front = agent.front;
  if (front.empty()) throw std::invalid_argument("agent has an empty seeding front");
  const pareto::FrontPoint* pick = &front.front();
  switch (p) {
    case Priority::Economy:
      for (const auto& f : front)
        if (f.ret[2] > pick->ret[2] || (f.ret[2] == pick->ret[2] && f.ret[0] > pick->ret[0])) pick = &f;
      break;
    case Priority::Infection:
      for (const auto& f : front)
        if (f.ret[0] > pick->ret[0]) pick = &f;
      break;
    case Priority::Balance: {
      pick = nullptr;
      for (const auto& f : front)
        if (contains_outbreak(spec, f.policy) && (!pick || f.ret[2] > pick->ret[2])) pick = &f;
      if (!pick) {
        double best = 0.0;
        for (const auto& f : front) {
          const double peak = peak_infectious(spec, f.policy);
          if (!pick || peak < best) pick = &f, best = peak;
        }
      }
      break;
    }
  }
  return {pick->ret, static_cast<double>(spec.sim.horizon_days)};
}

std::vector<Trajectory> pcn_runs(const pcn::Agent& agent, const env::ScenarioSpec& spec, const pcn::Command& cmd,
                                 int n, std::uint64_t seed) {
  std::vector<Trajectory> out(static_cast<std::size_t>(n));
  Rng unused(seed);
  for (int k = 0; k < n; ++k) pcn::run_episode(agent, spec, cmd, seed + k, unused, true, &out[k]);
  return out;
}

std::vector<Trajectory> constant_runs(const env::ScenarioSpec& spec, const InterventionLevels& levels, int n,
                                      std::uint64_t seed) {
  std::vector<Trajectory> out;
  for (int k = 0; k < n; ++k) out.push_back(env::rollout(spec, constant_policy(levels), seed + k));
  return out;
}

std::string_view trend_name(Trend t) {
  switch (t) {
    case Trend::Declining: return "declining";
    case Trend::Rising: return "rising";
    case Trend::Mixed: return "mixed";
  }
  return "?";
}

Trend trend(const std::vector<double>& series) {
  bool up = true, down = true;
  for (std::size_t t = 1; t < series.size(); ++t) {
    if (series[t] > series[t - 1]) down = false;
    if (series[t] < series[t - 1]) up = false;
  }
  if (down && !up) return Trend::Declining;
  if (up && !down) return Trend::Rising;
  return Trend::Mixed;
}

MinimalControl minimal_control(const env::ScenarioSpec& spec) {
  const auto det = deterministic(spec);
  MinimalControl best;
  for (const auto& levels : pareto::constant_policy_grid(det, kLevelsPerChannel)) {
    auto t = env::rollout(det, constant_policy(levels), 0);
    bool never_up = true;
    const auto ni = t.new_infections();
    for (std::size_t d = 1; d < ni.size(); ++d)
      if (ni[d] > ni[d - 1]) never_up = false;
    if (!never_up) continue;
    const double cost = 0.0 - t.total_reward()[2];
    if (!best.found || cost < best.cost) {
      best.found = true;
      best.cost = cost;
      best.levels = levels;
      best.trajectory = std::move(t);
    }
  }
  return best;
}

std::string ArtifactBundle::trajectories_csv() const {
  std::ostringstream out;
  bool header = true;
  for (const auto& [name, traj] : trajectories) {
    std::ostringstream one;
    write_trajectory_csv(one, traj);
    std::istringstream lines(one.str());
    std::string line;
    std::getline(lines, line);
    if (header) out << "run," << line << '\n', header = false;
    while (std::getline(lines, line)) out << name << ',' << line << '\n';
  }
  return out.str();
}

void ArtifactBundle::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    return f;
  };
  open("summary.json") << json{{"experiment", id}, {"seed", seed}, {"summary", summary}}.dump(2) << '\n';
  open("trajectories.csv") << trajectories_csv();
  open("front.json") << front.dump(2) << '\n';
}

std::vector<std::string> experiment_ids() {
  return {"priority_balance", "priority_infection", "priority_economy", "dense_mu15", "dense_mu20",
          "budget_matched",   "polio",              "influenza",        "measles_coverage", "outbreak_severity"};
}

namespace {

struct Context {
  const ExperimentSpec& spec;
  AgentStore& agents;
  ArtifactBundle& bundle;

  int runs() const {
    const int n = param("runs", 5);
    if (n < 1) throw std::invalid_argument("runs must be >= 1");
    return n;
  }

  template <class T>
  T param(const char* key, T fallback) const {
    return spec.params.is_object() && spec.params.contains(key) ? spec.params.at(key).get<T>() : fallback;
  }

  void keep(const std::string& label, const std::vector<Trajectory>& runs) {
    if (!runs.empty()) bundle.trajectories.emplace_back(label, runs.front());
  }

  // evaluates one priority command for a scenario and records the first run
  std::pair<pcn::Command, RunStats> priority_run(const std::string& scenario, Priority p, const std::string& label) {
    const auto trained = agents.get(scenario);
    const auto s = env::scenarios::by_id(scenario);
    const auto cmd = priority_command(*trained, s, p);
    const auto runs_ = pcn_runs(trained->agent, s, cmd, runs(), spec.seed);
    keep(label, runs_);
    return {cmd, summarize(runs_)};
  }
};

json command_json(const pcn::Command& c) { return {{"desired_return", c.desired_return}, {"horizon", c.horizon}}; }

double ratio(double a, double b) { return b != 0.0 ? a / b : std::numeric_limits<double>::infinity(); }

json front_bundle(const TrainedAgent& trained, const env::ScenarioSpec& s, std::uint64_t seed) {
  std::vector<pcn::Command> commands;
  for (const auto& p : trained.front) commands.push_back({p.ret, static_cast<double>(s.sim.horizon_days)});
  json pcn = json::array();
  for (const auto& e : pcn::evaluate_front(trained.agent, commands, s, 20, seed))
    pcn.push_back({{"ret", e.ret}, {"command", command_json(e.command)}, {"seed", e.seed}});
  return {{"scenario", s.id}, {"reference", pareto::front_to_json(trained.front)}, {"pcn", pcn}};
}

void priority_experiment(Context& cx, Priority p) {
  const std::string scenario = "covid_uk";
  const auto s = env::scenarios::by_id(scenario);
  const auto zero = constant_runs(s, {0, 0, 0}, cx.runs(), cx.spec.seed);
  cx.keep("zero", zero);
  const auto z = summarize(zero);
  auto& out = cx.bundle.summary;
  out["scenario"] = scenario;
  out["zero"] = to_json(z);

  const auto [cmd, stats] = cx.priority_run(scenario, p, std::string(priority_name(p)));
  out["priority"] = priority_name(p);
  out["command"] = command_json(cmd);
  out["pcn"] = to_json(stats);
  out["ratios_vs_zero"] = {{"cumulative_infections", ratio(stats.cumulative_infections(), z.cumulative_infections())},
                           {"peak_new_infections", ratio(stats.peak_new_infections, z.peak_new_infections)},
                           {"peak_new_deaths", ratio(stats.peak_new_deaths, z.peak_new_deaths)}};

  if (p == Priority::Balance) {
    const auto infection = cx.priority_run(scenario, Priority::Infection, "infection").second;
    const auto economy = cx.priority_run(scenario, Priority::Economy, "economy").second;
    const auto& r = stats.mean_return;
    out["corners"] = {{"infection", to_json(infection)}, {"economy", to_json(economy)}};
    out["non_dominated_vs_corners"] =
        !pareto::dominates(infection.mean_return, r) && !pareto::dominates(economy.mean_return, r);
  }
  cx.bundle.front = front_bundle(*cx.agents.get(scenario), s, cx.spec.seed);
}

void dense_experiment(Context& cx, int mu) {
  const std::string scenario = "covid_mu" + std::to_string(mu);
  const auto base = cx.priority_run("covid_uk", Priority::Balance, "mu10").second;
  const auto [cmd, dense] = cx.priority_run(scenario, Priority::Balance, "mu" + std::to_string(mu));
  auto& out = cx.bundle.summary;
  out["scenario"] = scenario;
  out["baseline"] = to_json(base);
  out["dense"] = to_json(dense);
  out["command"] = command_json(cmd);
  out["ratios"] = {{"economic_cost", ratio(dense.economic_cost(), base.economic_cost())},
                   {"peak_new_infections", ratio(dense.peak_new_infections, base.peak_new_infections)},
                   {"peak_new_deaths", ratio(dense.peak_new_deaths, base.peak_new_deaths)},
                   {"max_level", ratio(dense.max_level, base.max_level)}};
  cx.bundle.front = front_bundle(*cx.agents.get(scenario), env::scenarios::by_id(scenario), cx.spec.seed);
}

void budget_experiment(Context& cx) {
  const double tolerance = cx.param("tolerance", 0.05);
  const auto [base_cmd, base] = cx.priority_run("covid_uk", Priority::Balance, "mu10");
  const double budget = base.economic_cost();
  auto& out = cx.bundle.summary;
  out["baseline"] = to_json(base);
  out["budget"] = budget;
  out["tolerance"] = tolerance;
  for (int mu : cx.param<std::vector<int>>("mu", {15, 20})) {
    const std::string scenario = "covid_mu" + std::to_string(mu);
    const auto trained = cx.agents.get(scenario);
    const auto s = env::scenarios::by_id(scenario);
    // candidate commands: every front point as is, and with its cost target moved around the budget
    std::vector<pcn::Command> candidates;
    for (const auto& p : trained->front) {
      candidates.push_back({p.ret, double(s.sim.horizon_days)});
      for (int k = 1; k <= 30; ++k)
        candidates.push_back({{p.ret[0], p.ret[1], -0.1 * k * budget}, double(s.sim.horizon_days)});
    }
    // and seeded uniform draws from the front's bounding box
    RewardVector lo = trained->front.front().ret, hi = lo;
    for (const auto& p : trained->front)
      for (int k = 0; k < 3; ++k) lo[k] = std::min(lo[k], p.ret[k]), hi[k] = std::max(hi[k], p.ret[k]);
    Rng draw = Rng(cx.spec.seed).split(static_cast<std::uint64_t>(mu));
    for (int n = 0; n < cx.param("box_samples", 500); ++n) {
      pcn::Command c{{}, double(s.sim.horizon_days)};
      for (int k = 0; k < 3; ++k) c.desired_return[k] = lo[k] + (hi[k] - lo[k]) * draw.uniform();
      candidates.push_back(c);
    }
    std::vector<Trajectory> best_runs;
    pcn::Command best_cmd;
    RunStats best;
    double best_gap = std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) {
      auto runs = pcn_runs(trained->agent, s, c, cx.runs(), cx.spec.seed);
      const auto st = summarize(runs);
      const double gap = std::abs(st.economic_cost() - budget) / std::max(budget, 1e-12);
      // among matched commands prefer the best epidemiological outcome
      const bool better = gap <= tolerance && best_gap <= tolerance
                              ? st.cumulative_infections() < best.cumulative_infections()
                              : gap < best_gap;
      if (better) best_gap = gap, best = st, best_cmd = c, best_runs = std::move(runs);
    }
    cx.keep("mu" + std::to_string(mu), best_runs);
    out["mu" + std::to_string(mu)] = {
        {"command", command_json(best_cmd)},
        {"stats", to_json(best)},
        {"cost_gap", best_gap},
        {"matched", best_gap <= tolerance},
        {"ratios",
         {{"peak_new_infections", ratio(best.peak_new_infections, base.peak_new_infections)},
          {"peak_new_deaths", ratio(best.peak_new_deaths, base.peak_new_deaths)},
          {"peak_quarantined", ratio(best.peak_quarantined, base.peak_quarantined)}}}};
  }
}

void disease_experiment(Context& cx, const std::string& scenario) {
  const auto base = cx.priority_run("covid_uk", Priority::Balance, "covid").second;
  const auto [cmd, st] = cx.priority_run(scenario, Priority::Balance, scenario);
  auto& out = cx.bundle.summary;
  out["scenario"] = scenario;
  out["covid"] = to_json(base);
  out["disease"] = to_json(st);
  out["command"] = command_json(cmd);
  out["ratios_vs_covid"] = {{"economic_cost", ratio(st.economic_cost(), base.economic_cost())},
                            {"peak_new_deaths", ratio(st.peak_new_deaths, base.peak_new_deaths)},
                            {"peak_quarantined", ratio(st.peak_quarantined, base.peak_quarantined)},
                            {"peak_new_infections", ratio(st.peak_new_infections, base.peak_new_infections)}};
  cx.bundle.front = front_bundle(*cx.agents.get(scenario), env::scenarios::by_id(scenario), cx.spec.seed);
}

void measles_experiment(Context& cx) {
  auto& out = cx.bundle.summary;
  json rows = json::array();
  std::map<int, double> cost_by_pct;
  for (double cov : cx.param<std::vector<double>>("coverages", {0.95, 0.90, 0.85, 0.80})) {
    const int pct = static_cast<int>(std::lround(cov * 100));
    auto s = env::scenarios::by_id("measles_cov80");
    s.id = "measles_cov" + std::to_string(pct);
    s.coverage = cov;
    s.deterministic = true;
    const auto zero = env::rollout(s, constant_policy({0, 0, 0}), cx.spec.seed);
    cx.bundle.trajectories.emplace_back("zero_cov" + std::to_string(pct), zero);
    const auto mc = minimal_control(s);
    if (mc.found) {
      cx.bundle.trajectories.emplace_back("minimal_cov" + std::to_string(pct), mc.trajectory);
      cost_by_pct[pct] = mc.cost;
    }
    rows.push_back({{"coverage", cov},
                    {"zero_trend", trend_name(trend(zero.new_infections()))},
                    {"zero_cumulative_infections", -zero.total_reward()[0]},
                    {"minimal_found", mc.found},
                    {"minimal_levels", mc.levels},
                    {"minimal_cost", mc.found ? json(mc.cost) : json(nullptr)}});
  }
  out["coverages"] = rows;
  if (cost_by_pct.contains(80) && cost_by_pct.contains(85))
    out["cost_ratio_80_vs_85"] = ratio(cost_by_pct[80], cost_by_pct[85]);
}

void severity_experiment(Context& cx) {
  const auto trained = cx.agents.get("covid_uk");
  auto s = env::scenarios::by_id("covid_uk");
  const auto cmd = priority_command(*trained, s, Priority::Infection);
  json rows = json::array();
  for (int i0 : cx.param<std::vector<int>>("severities", {10, 100, 1000})) {
    auto si = s;
    si.infected = env::InitialInfected::exactly(i0);
    const auto runs = pcn_runs(trained->agent, si, cmd, cx.runs(), cx.spec.seed);
    cx.keep("i0_" + std::to_string(i0), runs);
    rows.push_back({{"initial_infected", i0}, {"pcn", to_json(summarize(runs))}});
  }
  cx.bundle.summary["command"] = command_json(cmd);
  cx.bundle.summary["severities"] = rows;
}

}  // namespace

ArtifactBundle run_experiment(const ExperimentSpec& spec, AgentStore& agents) {
  const auto ids = experiment_ids();
  if (std::find(ids.begin(), ids.end(), spec.id) == ids.end())
    throw UnknownExperimentError("unknown experiment '" + spec.id + "'");
  ArtifactBundle bundle;
  bundle.id = spec.id;
  bundle.seed = spec.seed;
  bundle.summary = json::object();
  Context cx{spec, agents, bundle};
  if (spec.id == "priority_balance") priority_experiment(cx, Priority::Balance);
  else if (spec.id == "priority_infection") priority_experiment(cx, Priority::Infection);
  else if (spec.id == "priority_economy") priority_experiment(cx, Priority::Economy);
  else if (spec.id == "dense_mu15") dense_experiment(cx, 15);
  else if (spec.id == "dense_mu20") dense_experiment(cx, 20);
  else if (spec.id == "budget_matched") budget_experiment(cx);
  else if (spec.id == "polio" || spec.id == "influenza") disease_experiment(cx, spec.id);
  else if (spec.id == "measles_coverage") measles_experiment(cx);
  else severity_experiment(cx);
  return bundle;
}

}  // namespace epi::service
