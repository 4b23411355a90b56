#pragma once

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <json.hpp>

#include "epi/service/agents.hpp"
#include "epi/service/experiments.hpp"
#include "epi/service/sessions.hpp"

namespace httplib {
class Server;
}

namespace epi::service {

class JobNotFoundError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Background experiment jobs, run one at a time in submission order.
class JobQueue {
 public:
  JobQueue(AgentStore& agents, std::optional<std::filesystem::path> artifact_dir);
  ~JobQueue();

  /// Validates the id and queues the job; returns the job id.
  std::string submit(ExperimentSpec spec);
  /// {job, experiment, seed, status: queued|running|done|failed, ...}.
  nlohmann::json status(const std::string& job) const;
  /// Blocks until the job leaves the queue; returns its final status.
  nlohmann::json wait(const std::string& job) const;

 private:
  struct Job {
    std::string id;
    ExperimentSpec spec;
    std::string status = "queued";
    std::string error;
    nlohmann::json summary;
    std::optional<std::filesystem::path> artifacts;
  };

  void run(std::stop_token stop);
  nlohmann::json describe(const Job& job) const;

  AgentStore& agents_;
  std::optional<std::filesystem::path> artifact_dir_;
  mutable std::mutex mutex_;
  mutable std::condition_variable_any changed_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::deque<std::shared_ptr<Job>> queue_;
  std::uint64_t next_id_ = 1;
  std::jthread worker_;
};

struct ServiceOptions {
  std::optional<std::filesystem::path> checkpoint_dir;
  std::optional<std::filesystem::path> session_log_dir;
  std::optional<std::filesystem::path> artifact_dir;
  bool allow_train = false;  ///< train missing agents on demand (slow)
};

/// Everything the HTTP API serves, independent of the transport.
class Service {
 public:
  explicit Service(ServiceOptions opts);

  nlohmann::json scenarios() const;
  /// Deterministic reference front, plus the agent's evaluated front when a
  /// checkpoint exists. Cached per scenario.
  nlohmann::json fronts(const std::string& scenario);

  SessionManager& sessions() noexcept { return sessions_; }
  JobQueue& jobs() noexcept { return jobs_; }
  AgentStore& agents() noexcept { return agents_; }

  /// Registers every route on `server`.
  void mount(httplib::Server& server);

 private:
  ServiceOptions opts_;
  AgentStore agents_;
  SessionManager sessions_;
  JobQueue jobs_;
  std::mutex fronts_mutex_;
  std::map<std::string, nlohmann::json> fronts_;
};

}  // namespace epi::service
