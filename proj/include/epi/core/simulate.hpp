#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "epi/core/model.hpp"
#include "epi/core/sde.hpp"

namespace epi {

struct SimConfig {
  double dt = 0.01;              ///< days per substep
  int steps_per_day = 100;
  int horizon_days = 50;
  double population_scale = 1000.0;  ///< real persons per simulated individual
  std::uint64_t rng_seed = 0;
  bool record_substeps = false;

  /// dt * steps_per_day must equal one day.
  void validate() const;
  int total_substeps() const noexcept { return horizon_days * steps_per_day; }

  bool operator==(const SimConfig&) const = default;
};

using RewardVector = std::array<double, 3>;

/// One simulated day. `state` is the end-of-day snapshot; day numbers start at 1.
struct DayRecord {
  int day = 0;
  Compartments state;
  double new_infections = 0.0;
  double new_deaths = 0.0;
  InterventionLevels action;
  RewardVector reward{};
};

struct Trajectory {
  Compartments initial;
  std::vector<DayRecord> days;
  /// Substep-resolution states (including the initial state) when requested.
  std::vector<Compartments> substeps;

  std::size_t size() const noexcept { return days.size(); }
  std::vector<double> new_infections() const;
  std::vector<double> new_deaths() const;
  /// Componentwise sum of per-day rewards.
  RewardVector total_reward() const;
};

/// Chooses the day's intervention from the day index (0-based) and the
/// start-of-day state.
using Policy = std::function<InterventionLevels(int day, const Compartments& state)>;

Policy constant_policy(InterventionLevels levels);

struct DayOutcome {
  Compartments state;
  Flows flows;
};

/// Advances `steps_per_day` substeps at fixed rates.
DayOutcome advance_day(const Compartments& start, const EffectiveRates& rates, const SimConfig& cfg,
                       NoiseStreams& noise, std::vector<Compartments>* substeps = nullptr);

/// Reward for one day: (-new infections, -new deaths, -economic cost at start of day).
RewardVector day_reward(const Flows& flows, const InterventionLevels& action, const Compartments& start);

/// Runs a full horizon. Deterministic given (profile, cfg, policy, init).
Trajectory simulate(const DiseaseProfile& profile, const SimConfig& cfg, const Policy& policy,
                    const Compartments& init);

}  // namespace epi
