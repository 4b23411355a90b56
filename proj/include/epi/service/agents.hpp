#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "epi/pareto/pareto.hpp"
#include "epi/pcn/agent.hpp"

namespace epi::service {

/// Thrown when an operation needs a trained agent that is not available.
class MissingCheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A trained agent with the reference front its buffer was seeded from.
struct TrainedAgent {
  pcn::Agent agent;
  std::vector<pareto::FrontPoint> front;  ///< stochastic reference front of the scenario
};

/// Loads agents from `<dir>/<scenario>.pcn.json` and `<dir>/<scenario>.front.json`.
/// When training is allowed, a missing agent is trained and written back
/// (if a directory is set). Thread-safe; each scenario is trained once.
class AgentStore {
 public:
  AgentStore(std::optional<std::filesystem::path> dir, pcn::TrainConfig train, bool allow_train);

  /// Throws MissingCheckpointError when absent and training is not allowed.
  std::shared_ptr<const TrainedAgent> get(const std::string& scenario);
  bool available(const std::string& scenario);
  /// Trains unconditionally and stores the result.
  std::shared_ptr<const TrainedAgent> train(const std::string& scenario);

  const pcn::TrainConfig& train_config() const noexcept { return train_; }
  const std::optional<std::filesystem::path>& directory() const noexcept { return dir_; }

  static std::filesystem::path agent_path(const std::filesystem::path& dir, const std::string& scenario);
  static std::filesystem::path front_path(const std::filesystem::path& dir, const std::string& scenario);

 private:
  std::shared_ptr<const TrainedAgent> load(const std::string& scenario);
  std::shared_ptr<const TrainedAgent> train_locked(const std::string& scenario);

  std::optional<std::filesystem::path> dir_;
  pcn::TrainConfig train_;
  bool allow_train_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const TrainedAgent>> cache_;
};

/// Training settings used by the experiment runner and the CLI default.
pcn::TrainConfig experiment_train_config();

/// Options of the stochastic reference front that seeds training.
pareto::ReferenceFrontOptions seeding_front_options(std::uint64_t seed);

}  // namespace epi::service
