#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "epi/core/model.hpp"
#include "epi/core/rng.hpp"
#include "epi/core/sde.hpp"
#include "epi/core/simulate.hpp"

namespace epi::env {

inline constexpr int kRewardDim = 3;

/// How the initial infected count is chosen at reset.
struct InitialInfected {
  enum class Kind { Fixed, Uniform } kind = Kind::Fixed;
  int fixed = 1000;
  int lo = 1;  ///< inclusive bounds for Kind::Uniform
  int hi = 20;

  static InitialInfected exactly(int n) { return {Kind::Fixed, n, n, n}; }
  static InitialInfected uniform(int lo, int hi) { return {Kind::Uniform, 0, lo, hi}; }
};

struct ScenarioSpec {
  std::string id = "covid_uk";
  DiseaseProfile profile;
  SimConfig sim;
  double population = 68000.0;  ///< living population at reset
  InitialInfected infected;
  std::optional<double> mu_override;
  double coverage = 0.0;  ///< fraction of the population protected at reset
  /// Allowed channels (closure, vaccination, quarantine); masked ones are forced to 0.
  std::array<bool, kNumChannels> allowed{true, true, true};
  bool deterministic = false;  ///< zero diffusion

  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
  /// Profile with mu override and deterministic mode applied.
  DiseaseProfile effective_profile() const;
  /// Coerces masked channels to 0.
  InterventionLevels mask(InterventionLevels action) const;
};

/// Shipped scenario presets: covid_uk, covid_train, covid_mu15, covid_mu20,
/// polio, influenza, measles_cov80, measles_cov85, measles_cov90, measles_cov95.
namespace scenarios {
ScenarioSpec by_id(const std::string& id);
std::vector<std::string> ids();
}  // namespace scenarios

struct EnvState {
  Compartments comps;
  int day = 0;
  std::string scenario;
};

struct StepOutcome {
  EnvState state;
  RewardVector reward{};
  bool done = false;
  InterventionLevels applied;  ///< the action after masking
  Flows flows;
};

/// Thrown by step() once the horizon has been reached.
class EpisodeDoneError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Episodic three-objective environment around the SDE simulator: one action
/// per simulated day, reward (-new infections, -new deaths, -economic cost).
class Environment {
 public:
  explicit Environment(ScenarioSpec spec);

  const EnvState& reset(std::uint64_t seed);
  StepOutcome step(const InterventionLevels& action);

  const EnvState& state() const noexcept { return state_; }
  const ScenarioSpec& spec() const noexcept { return spec_; }
  bool done() const noexcept { return state_.day >= spec_.sim.horizon_days; }
  int horizon() const noexcept { return spec_.sim.horizon_days; }
  /// The episode so far, one record per completed day.
  const Trajectory& trajectory() const noexcept { return trajectory_; }

  /// Compartments divided by the reset population, then day / horizon.
  std::vector<double> observation() const;
  static constexpr int kObservationSize = kNumCompartments + 1;

 private:
  ScenarioSpec spec_;
  DiseaseProfile profile_;
  EnvState state_;
  Trajectory trajectory_;
  std::optional<NoiseStreams> noise_;
  bool started_ = false;
};

/// Componentwise sum of per-day rewards.
RewardVector episode_return(const Trajectory& trajectory);

/// Runs one episode under a policy; returns the trajectory.
Trajectory rollout(const ScenarioSpec& spec, const Policy& policy, std::uint64_t seed);

}  // namespace epi::env
