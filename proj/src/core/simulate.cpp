#include "epi/core/simulate.hpp"

#include <cmath>
#include <stdexcept>

#include "epi/core/economics.hpp"

namespace epi {

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  if (steps_per_day < 1) throw std::invalid_argument("steps_per_day must be >= 1");
  if (horizon_days < 0) throw std::invalid_argument("horizon_days must be >= 0");
  if (std::abs(dt * steps_per_day - 1.0) > 1e-9)
    throw std::invalid_argument("dt * steps_per_day must equal one day");
  if (!(population_scale > 0.0)) throw std::invalid_argument("population_scale must be > 0");
}

std::vector<double> Trajectory::new_infections() const {
  std::vector<double> out;
  out.reserve(days.size());
  for (const auto& d : days) out.push_back(d.new_infections);
  return out;
}

std::vector<double> Trajectory::new_deaths() const {
  std::vector<double> out;
  out.reserve(days.size());
  for (const auto& d : days) out.push_back(d.new_deaths);
  return out;
}

RewardVector Trajectory::total_reward() const {
  RewardVector sum{};
  for (const auto& d : days)
    for (int k = 0; k < 3; ++k) sum[k] += d.reward[k];
  return sum;
}

Policy constant_policy(InterventionLevels levels) {
  return [levels](int, const Compartments&) { return levels; };
}

DayOutcome advance_day(const Compartments& start, const EffectiveRates& rates, const SimConfig& cfg,
                       NoiseStreams& noise, std::vector<Compartments>* substeps) {
  DayOutcome out{start, {}};
  for (int k = 0; k < cfg.steps_per_day; ++k) {
    StepResult step = em_step(out.state, rates, cfg.dt, noise);
    out.state = step.state;
    out.flows += step.flows;
    if (substeps) substeps->push_back(out.state);
  }
  return out;
}

RewardVector day_reward(const Flows& flows, const InterventionLevels& action, const Compartments& start) {
  // 0.0 - x keeps zero rewards as +0.0 rather than -0.0 in exports.
  return {0.0 - flows.new_infections, 0.0 - flows.new_deaths, 0.0 - economic_cost(action, start)};
}

Trajectory simulate(const DiseaseProfile& profile, const SimConfig& cfg, const Policy& policy,
                    const Compartments& init) {
  profile.validate();
  cfg.validate();

  Trajectory traj;
  traj.initial = init;
  traj.days.reserve(static_cast<std::size_t>(cfg.horizon_days));
  if (cfg.record_substeps) {
    traj.substeps.reserve(static_cast<std::size_t>(cfg.total_substeps()) + 1);
    traj.substeps.push_back(init);
  }

  NoiseStreams noise{Rng(cfg.rng_seed)};
  Compartments state = init;
  for (int day = 0; day < cfg.horizon_days; ++day) {
    const InterventionLevels action = policy(day, state);
    const EffectiveRates rates = effective_rates(profile, action);
    DayOutcome outcome = advance_day(state, rates, cfg, noise, cfg.record_substeps ? &traj.substeps : nullptr);

    DayRecord rec;
    rec.day = day + 1;
    rec.state = outcome.state;
    rec.new_infections = outcome.flows.new_infections;
    rec.new_deaths = outcome.flows.new_deaths;
    rec.action = action;
    rec.reward = day_reward(outcome.flows, action, state);
    traj.days.push_back(rec);
    state = outcome.state;
  }
  return traj;
}

}  // namespace epi
