#include "epi/service/agents.hpp"

#include <fstream>

#include "epi/env/environment.hpp"

namespace epi::service {

pcn::TrainConfig experiment_train_config() {
  pcn::TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.iterations = 300;
  cfg.seed = 1;
  return cfg;
}

pareto::ReferenceFrontOptions seeding_front_options(std::uint64_t seed) {
  pareto::ReferenceFrontOptions opts;
  opts.deterministic = false;
  opts.base_seed = seed;
  return opts;
}

AgentStore::AgentStore(std::optional<std::filesystem::path> dir, pcn::TrainConfig train, bool allow_train)
    : dir_(std::move(dir)), train_(std::move(train)), allow_train_(allow_train) {}

std::filesystem::path AgentStore::agent_path(const std::filesystem::path& dir, const std::string& scenario) {
  return dir / (scenario + ".pcn.json");
}

std::filesystem::path AgentStore::front_path(const std::filesystem::path& dir, const std::string& scenario) {
  return dir / (scenario + ".front.json");
}

std::shared_ptr<const TrainedAgent> AgentStore::load(const std::string& scenario) {
  if (!dir_) return nullptr;
  const auto a = agent_path(*dir_, scenario), f = front_path(*dir_, scenario);
  if (!std::filesystem::exists(a) || !std::filesystem::exists(f)) return nullptr;
  auto t = std::make_shared<TrainedAgent>();
  t->agent = pcn::Agent::load(a.string());
  if (t->agent.scenario != scenario)
    throw std::runtime_error("checkpoint " + a.string() + " was trained on " + t->agent.scenario);
  std::ifstream in(f);
  t->front = pareto::front_from_json(nlohmann::json::parse(in));
  return t;
}

bool AgentStore::available(const std::string& scenario) {
  std::lock_guard lock(mutex_);
  if (cache_.contains(scenario)) return true;
  return dir_ && std::filesystem::exists(agent_path(*dir_, scenario)) &&
         std::filesystem::exists(front_path(*dir_, scenario));
}

std::shared_ptr<const TrainedAgent> AgentStore::get(const std::string& scenario) {
  std::lock_guard lock(mutex_);
  if (auto it = cache_.find(scenario); it != cache_.end()) return it->second;
  if (auto loaded = load(scenario)) return cache_[scenario] = loaded;
  if (!allow_train_) {
    std::string where = dir_ ? " in " + dir_->string() : " (no checkpoint directory)";
    throw MissingCheckpointError("no trained agent for scenario '" + scenario + "'" + where);
  }
  // training holds the lock, so concurrent requests wait for a single run
  return train_locked(scenario);
}

std::shared_ptr<const TrainedAgent> AgentStore::train(const std::string& scenario) {
  std::lock_guard lock(mutex_);
  return train_locked(scenario);
}

std::shared_ptr<const TrainedAgent> AgentStore::train_locked(const std::string& scenario) {
  const auto spec = env::scenarios::by_id(scenario);
  auto t = std::make_shared<TrainedAgent>();
  t->front = pareto::reference_front(spec, seeding_front_options(train_.seed));
  t->agent = pcn::train(spec, train_, t->front).agent;
  if (dir_) {
    std::filesystem::create_directories(*dir_);
    t->agent.save(agent_path(*dir_, scenario).string());
    std::ofstream(front_path(*dir_, scenario)) << pareto::front_to_json(t->front).dump(2) << '\n';
  }
  return cache_[scenario] = t;
}

}  // namespace epi::service
