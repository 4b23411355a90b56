#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "epi/env/environment.hpp"
#include "epi/pcn/agent.hpp"
#include "epi/service/agents.hpp"
#include "epi/service/experiments.hpp"

namespace epi::service {

class SessionNotFoundError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

enum class SessionMode { Manual, AgentSuggest };
SessionMode session_mode_from_name(std::string_view name);
std::string_view session_mode_name(SessionMode m);

/// What a session is created from; also the first record of its log.
struct SessionRequest {
  std::string scenario = "covid_uk";
  std::uint64_t seed = 0;
  SessionMode mode = SessionMode::Manual;
  bool deterministic = false;
  std::optional<double> mu;
  std::optional<double> coverage;
  std::optional<int> initial_infected;

  /// Throws std::invalid_argument for malformed fields or an unknown scenario.
  static SessionRequest from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  env::ScenarioSpec scenario_spec() const;
};

struct SessionDay {
  int day = 0;
  InterventionLevels submitted;
  InterventionLevels applied;  ///< after masking
  Compartments state;
  double new_infections = 0.0;
  double new_deaths = 0.0;
  RewardVector reward{};
  bool done = false;  ///< the horizon was reached with this day
};

/// Echoes only the applied action, with a flag when masking changed it.
nlohmann::json to_json(const SessionDay& d);

/// Scenario summary as served by the API.
nlohmann::json scenario_to_json(const env::ScenarioSpec& spec);

/// In-memory sessions with optional append-only logs (one JSON line per
/// record) that are replayed on construction. Operations on one session are
/// serialized by that session's mutex; distinct sessions run concurrently.
class SessionManager {
 public:
  explicit SessionManager(std::optional<std::filesystem::path> log_dir = std::nullopt,
                          AgentStore* agents = nullptr);

  /// Returns the new session's id.
  std::string create(const SessionRequest& request);
  /// Advances one day. Throws SessionNotFoundError, env::EpisodeDoneError,
  /// std::invalid_argument for out-of-range levels.
  SessionDay step(const std::string& id, const InterventionLevels& action);
  /// Full session view: request, state, history, cumulative reward.
  nlohmann::json state(const std::string& id) const;
  /// Greedy PCN action for the current state under a full-episode target;
  /// the return-to-go subtracts what the session has already accrued.
  /// Throws MissingCheckpointError without an agent for the scenario.
  nlohmann::json suggest(const std::string& id, const std::optional<Priority>& priority,
                         const std::optional<RewardVector>& targets) const;

  std::vector<std::string> ids() const;
  std::size_t size() const;

 private:
  struct Session {
    std::string id;
    SessionRequest request;
    std::chrono::system_clock::time_point created;
    env::Environment env;
    std::vector<SessionDay> history;
    mutable std::mutex mutex;

    Session(std::string id_, SessionRequest req, std::chrono::system_clock::time_point at);
    SessionDay advance(const InterventionLevels& action);
  };

  std::shared_ptr<Session> find(const std::string& id) const;
  void append_log(const Session& s, const nlohmann::json& record) const;
  void restore();

  std::optional<std::filesystem::path> log_dir_;
  AgentStore* agents_;
  mutable std::shared_mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

}  // namespace epi::service
