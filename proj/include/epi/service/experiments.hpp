#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "epi/core/simulate.hpp"
#include "epi/env/environment.hpp"
#include "epi/pcn/agent.hpp"
#include "epi/service/agents.hpp"

namespace epi::service {

class UnknownExperimentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Priority { Balance, Infection, Economy };
Priority priority_from_name(std::string_view name);
std::string_view priority_name(Priority p);

/// Per-run summaries averaged over a set of trajectories.
struct RunStats {
  RewardVector mean_return{};
  double peak_new_infections = 0.0;
  double peak_new_deaths = 0.0;
  double peak_quarantined = 0.0;
  double total_interventions = 0.0;  ///< sum of all levels over the episode
  double max_level = 0.0;            ///< largest single level used
  double early_mean_level = 0.0;     ///< mean level over the first week

  double cumulative_infections() const { return -mean_return[0]; }
  double economic_cost() const { return 0.0 - mean_return[2]; }
};
RunStats summarize(const std::vector<Trajectory>& runs);
nlohmann::json to_json(const RunStats& s);

/// True when I(t) never exceeds I(0) in a deterministic constant run.
bool contains_outbreak(const env::ScenarioSpec& spec, const InterventionLevels& levels);

/// Full-episode command for a priority, read off the agent's seeding front:
/// economy is the highest-r3 point (ties to the better r1), infection the
/// highest-r1 point, balance the cheapest point that keeps I(t) <= I(0)
/// (the point with the lowest peak when none does).
pcn::Command priority_command(const TrainedAgent& agent, const env::ScenarioSpec& spec, Priority p);

/// Greedy rollouts on seeds seed, seed+1, ...
std::vector<Trajectory> pcn_runs(const pcn::Agent& agent, const env::ScenarioSpec& spec, const pcn::Command& cmd,
                                 int n, std::uint64_t seed);
std::vector<Trajectory> constant_runs(const env::ScenarioSpec& spec, const InterventionLevels& levels, int n,
                                      std::uint64_t seed);

enum class Trend { Declining, Rising, Mixed };
std::string_view trend_name(Trend t);
/// Declining when non-increasing every day, rising when non-decreasing.
Trend trend(const std::vector<double>& series);

struct MinimalControl {
  InterventionLevels levels;
  double cost = 0.0;
  bool found = false;
  Trajectory trajectory;
};

/// Cheapest constant policy (deterministic mode, allowed channels only) whose
/// daily new infections never increase.
MinimalControl minimal_control(const env::ScenarioSpec& spec);

struct ExperimentSpec {
  std::string id;
  std::uint64_t seed = 1;
  nlohmann::json params = nlohmann::json::object();  ///< e.g. runs, coverages, severities
};

struct ArtifactBundle {
  std::string id;
  std::uint64_t seed = 0;
  nlohmann::json summary;
  std::vector<std::pair<std::string, Trajectory>> trajectories;
  nlohmann::json front = nlohmann::json::object();

  /// Long-format CSV: a `run` column followed by the trajectory columns.
  std::string trajectories_csv() const;
  /// Writes summary.json, trajectories.csv and front.json into `dir`.
  void write(const std::filesystem::path& dir) const;
};

std::vector<std::string> experiment_ids();

/// Runs one named experiment end to end. Throws UnknownExperimentError and
/// MissingCheckpointError.
ArtifactBundle run_experiment(const ExperimentSpec& spec, AgentStore& agents);

}  // namespace epi::service
