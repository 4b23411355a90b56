#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "epi/core/rng.hpp"
#include "epi/core/simulate.hpp"
#include "epi/env/environment.hpp"
#include "epi/pareto/pareto.hpp"
#include "epi/pcn/mlp.hpp"

namespace epi::pcn {

/// Desired return and remaining days handed to the policy.
struct Command {
  RewardVector desired_return{};
  double horizon = 1.0;

  /// Bookkeeping after one step: subtract the observed reward, decrement the
  /// horizon (floored at 1).
  void advance(const RewardVector& reward);
};

struct Transition {
  std::vector<double> observation;
  InterventionLevels action;
  RewardVector reward{};
};

/// One rollout stored in the replay buffer.
struct EpisodeRecord {
  std::vector<Transition> steps;
  RewardVector ret{};
  std::string origin;  ///< e.g. "seed:constant(0,10,0)" or "iter:12"

  std::size_t length() const noexcept { return steps.size(); }
  /// Sum of rewards from step t to the end.
  RewardVector return_to_go(std::size_t t) const;
  static EpisodeRecord from_environment(const env::Environment& env, std::vector<std::vector<double>> observations,
                                        std::string origin);
};

/// Fixed scaling of network inputs.
struct CommandScaling {
  RewardVector return_scale{1.0, 1.0, 1.0};
  double horizon_scale = 1.0 / 50.0;

  /// One over each objective's range on the front (1 where the range is 0).
  static CommandScaling from_front(const std::vector<pareto::FrontPoint>& front, int horizon);
};

std::vector<double> network_input(std::span<const double> observation, const Command& cmd,
                                  const CommandScaling& scaling);
int network_input_size();

struct TrainConfig {
  int batch_size = 256;
  int buffer_capacity = 300;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double clip_norm = 10.0;
  int iterations = 200;
  int updates_per_iteration = 50;
  int episodes_per_iteration = 10;
  double noise = 0.1;  ///< command inflation in units of the buffer return std
  std::vector<int> hidden{64, 64};
  std::uint64_t seed = 0;
  bool verbose = false;
};

struct TrainLogRow {
  int iteration = 0;
  double loss = 0.0;
  std::size_t buffer_size = 0;
  std::size_t front_size = 0;
  RewardVector best_return{};  ///< componentwise best return in the buffer
};

/// Network plus the scaling it was trained with; what a checkpoint stores.
struct Agent {
  Mlp net;
  CommandScaling scaling;
  std::string scenario;

  InterventionLevels act(std::span<const double> observation, const Command& cmd, Rng& rng, bool greedy) const;

  nlohmann::json to_json() const;
  static Agent from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static Agent load(const std::string& path);
};

/// Per-head sample from the softmax (greedy = false) or per-head argmax.
InterventionLevels act(const Mlp& net, std::span<const double> input, Rng& rng, bool greedy);

/// Uniformly picks a non-dominated episode; inflates one uniformly chosen
/// objective by noise * (that objective's return std over the buffer).
/// Throws std::invalid_argument on an empty buffer.
Command select_command(const std::vector<EpisodeRecord>& buffer, Rng& rng, double noise);

/// Keeps the `capacity` best episodes by (non-domination rank, -crowding distance).
void prune_buffer(std::vector<EpisodeRecord>& buffer, std::size_t capacity);

/// Runs one episode driven by the agent under `cmd`.
EpisodeRecord run_episode(const Agent& agent, const env::ScenarioSpec& spec, Command cmd, std::uint64_t seed,
                          Rng& rng, bool greedy, Trajectory* trajectory = nullptr);

/// Rolls out a constant policy and records it as an episode.
EpisodeRecord constant_episode(const env::ScenarioSpec& spec, const InterventionLevels& levels, std::uint64_t seed,
                               std::string origin);

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainResult {
  Agent agent;
  std::vector<EpisodeRecord> buffer;
  std::vector<TrainLogRow> log;
};

/// Supervised training on relabeled episodes. The buffer is seeded by
/// replaying the constant policies of `seed_front` (computed when absent).
TrainResult train(const env::ScenarioSpec& spec, const TrainConfig& cfg,
                  std::optional<std::vector<pareto::FrontPoint>> seed_front = std::nullopt);

std::string train_log_csv(const std::vector<TrainLogRow>& log);

struct EvaluatedPoint {
  RewardVector ret{};
  Command command;
  std::uint64_t seed = 0;
};

/// Greedy rollouts: `n_episodes` in total, cycling through `commands`; the
/// non-dominated returns with their commands.
std::vector<EvaluatedPoint> evaluate_front(const Agent& agent, const std::vector<Command>& commands,
                                           const env::ScenarioSpec& spec, int n_episodes = 20,
                                           std::uint64_t seed = 0);

}  // namespace epi::pcn
