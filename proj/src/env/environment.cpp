#include "epi/env/environment.hpp"

#include <cmath>
#include <stdexcept>

#include "epi/core/economics.hpp"

namespace epi::env {

void ScenarioSpec::validate() const {
  profile.validate();
  sim.validate();
  if (!(population > 0.0)) throw std::invalid_argument("scenario population must be > 0");
  if (!(coverage >= 0.0 && coverage <= 1.0)) throw std::invalid_argument("coverage must lie in [0, 1]");
  if (mu_override && !(*mu_override > 0.0)) throw std::invalid_argument("mu override must be > 0");
  const int lo = infected.kind == InitialInfected::Kind::Fixed ? infected.fixed : infected.lo;
  const int hi = infected.kind == InitialInfected::Kind::Fixed ? infected.fixed : infected.hi;
  if (lo < 0 || hi < lo) throw std::invalid_argument("invalid initial infected range");
  if (coverage * population + hi > population)
    throw std::invalid_argument("initial infected plus protected exceed the population");
}

DiseaseProfile ScenarioSpec::effective_profile() const {
  DiseaseProfile p = deterministic ? profile.deterministic() : profile;
  if (mu_override) p.mu0 = *mu_override;
  return p;
}

InterventionLevels ScenarioSpec::mask(InterventionLevels action) const {
  for (int k = 0; k < kNumChannels; ++k)
    if (!allowed[static_cast<std::size_t>(k)]) action[k] = 0;
  return action;
}

namespace scenarios {

namespace {

ScenarioSpec covid_base(std::string id) {
  ScenarioSpec s;
  s.id = std::move(id);
  s.profile = presets::covid();
  s.population = 68000.0;
  s.infected = InitialInfected::exactly(1000);
  return s;
}

ScenarioSpec measles(int coverage_pct) {
  ScenarioSpec s;
  s.id = "measles_cov" + std::to_string(coverage_pct);
  s.profile = presets::measles();
  s.population = 1000.0;
  s.infected = InitialInfected::exactly(1);
  s.coverage = coverage_pct / 100.0;
  s.allowed = {true, false, true};
  return s;
}

}  // namespace

ScenarioSpec by_id(const std::string& id) {
  if (id == "covid_uk") return covid_base(id);
  if (id == "covid_train") {
    auto s = covid_base(id);
    s.infected = InitialInfected::uniform(1, 20);
    return s;
  }
  if (id == "covid_mu15" || id == "covid_mu20") {
    auto s = covid_base(id);
    s.mu_override = id == "covid_mu15" ? 15.0 : 20.0;
    return s;
  }
  if (id == "polio" || id == "influenza") {
    auto s = covid_base(id);
    s.profile = presets::by_name(id);
    return s;
  }
  if (id == "measles_cov80") return measles(80);
  if (id == "measles_cov85") return measles(85);
  if (id == "measles_cov90") return measles(90);
  if (id == "measles_cov95") return measles(95);
  throw std::out_of_range("unknown scenario: " + id);
}

std::vector<std::string> ids() {
  return {"covid_uk", "covid_train", "covid_mu15", "covid_mu20", "polio", "influenza",
          "measles_cov80", "measles_cov85", "measles_cov90", "measles_cov95"};
}

}  // namespace scenarios

Environment::Environment(ScenarioSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  profile_ = spec_.effective_profile();
}

const EnvState& Environment::reset(std::uint64_t seed) {
  const Rng root(seed);
  Rng init_rng = root.split(0x1001);
  int infected = spec_.infected.fixed;
  if (spec_.infected.kind == InitialInfected::Kind::Uniform)
    infected = init_rng.uniform_int(spec_.infected.lo, spec_.infected.hi);

  const double n = spec_.population;
  Compartments c;
  c.h = spec_.coverage * n;
  c.i = infected;
  c.s = n - c.h - c.i;

  state_ = EnvState{c, 0, spec_.id};
  trajectory_ = Trajectory{};
  trajectory_.initial = c;
  trajectory_.days.reserve(static_cast<std::size_t>(spec_.sim.horizon_days));
  noise_.emplace(root.split(0x2002));
  started_ = true;
  return state_;
}

StepOutcome Environment::step(const InterventionLevels& action) {
  if (!started_) throw std::logic_error("step() called before reset()");
  if (done()) throw EpisodeDoneError("episode is done; call reset()");
  check_levels(action);

  const InterventionLevels applied = spec_.mask(action);
  const Compartments start = state_.comps;
  const EffectiveRates rates = effective_rates(profile_, applied);
  const DayOutcome outcome = advance_day(start, rates, spec_.sim, *noise_);

  StepOutcome out;
  out.applied = applied;
  out.flows = outcome.flows;
  out.reward = day_reward(outcome.flows, applied, start);

  state_.comps = outcome.state;
  ++state_.day;
  out.state = state_;
  out.done = done();

  DayRecord rec;
  rec.day = state_.day;
  rec.state = outcome.state;
  rec.new_infections = outcome.flows.new_infections;
  rec.new_deaths = outcome.flows.new_deaths;
  rec.action = applied;
  rec.reward = out.reward;
  trajectory_.days.push_back(rec);
  return out;
}

std::vector<double> Environment::observation() const {
  const double n = spec_.population;
  const auto& c = state_.comps;
  return {c.s / n, c.h / n, c.i / n, c.q / n, c.d / n,
          static_cast<double>(state_.day) / std::max(1, spec_.sim.horizon_days)};
}

RewardVector episode_return(const Trajectory& trajectory) { return trajectory.total_reward(); }

Trajectory rollout(const ScenarioSpec& spec, const Policy& policy, std::uint64_t seed) {
  Environment env(spec);
  env.reset(seed);
  while (!env.done()) env.step(policy(env.state().day, env.state().comps));
  return env.trajectory();
}

}  // namespace epi::env
