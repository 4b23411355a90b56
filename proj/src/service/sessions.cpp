#include "epi/service/sessions.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "epi/core/io.hpp"

namespace epi::service {

using nlohmann::json;

SessionMode session_mode_from_name(std::string_view name) {
  if (name == "manual") return SessionMode::Manual;
  if (name == "agent-suggest") return SessionMode::AgentSuggest;
  throw std::invalid_argument("unknown session mode '" + std::string(name) + "' (manual, agent-suggest)");
}

std::string_view session_mode_name(SessionMode m) { return m == SessionMode::Manual ? "manual" : "agent-suggest"; }

SessionRequest SessionRequest::from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("session request must be a JSON object");
  SessionRequest r;
  try {
    r.scenario = j.value("scenario", r.scenario);
    r.seed = j.value("seed", r.seed);
    r.mode = session_mode_from_name(j.value("mode", std::string("manual")));
    r.deterministic = j.value("deterministic", false);
    if (j.contains("mu") && !j["mu"].is_null()) r.mu = j["mu"].get<double>();
    if (j.contains("coverage") && !j["coverage"].is_null()) r.coverage = j["coverage"].get<double>();
    if (j.contains("initial_infected") && !j["initial_infected"].is_null())
      r.initial_infected = j["initial_infected"].get<int>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed session request: ") + e.what());
  }
  r.scenario_spec();  // validates
  return r;
}

json SessionRequest::to_json() const {
  json j{{"scenario", scenario}, {"seed", seed}, {"mode", session_mode_name(mode)}, {"deterministic", deterministic}};
  if (mu) j["mu"] = *mu;
  if (coverage) j["coverage"] = *coverage;
  if (initial_infected) j["initial_infected"] = *initial_infected;
  return j;
}

env::ScenarioSpec SessionRequest::scenario_spec() const {
  env::ScenarioSpec s;
  try {
    s = env::scenarios::by_id(scenario);
  } catch (const std::out_of_range& e) {
    throw std::invalid_argument(e.what());
  }
  s.deterministic = s.deterministic || deterministic;
  if (mu) s.mu_override = *mu;
  if (coverage) s.coverage = *coverage;
  if (initial_infected) s.infected = env::InitialInfected::exactly(*initial_infected);
  s.validate();
  return s;
}

json to_json(const SessionDay& d) {
  return {{"day", d.day},
          {"action", d.applied},
          {"masked", d.applied != d.submitted},
          {"state", d.state},
          {"new_infections", d.new_infections},
          {"new_deaths", d.new_deaths},
          {"reward", d.reward},
          {"done", d.done}};
}

json scenario_to_json(const env::ScenarioSpec& spec) {
  json infected = spec.infected.kind == env::InitialInfected::Kind::Fixed
                      ? json{{"kind", "fixed"}, {"value", spec.infected.fixed}}
                      : json{{"kind", "uniform"}, {"lo", spec.infected.lo}, {"hi", spec.infected.hi}};
  return {{"id", spec.id},
          {"population", spec.population},
          {"initial_infected", infected},
          {"coverage", spec.coverage},
          {"allowed", {{"c", spec.allowed[0]}, {"v", spec.allowed[1]}, {"q", spec.allowed[2]}}},
          {"deterministic", spec.deterministic},
          {"horizon_days", spec.sim.horizon_days},
          {"profile", spec.effective_profile()}};
}

namespace {

std::string iso8601(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::chrono::system_clock::time_point parse_iso8601(const std::string& s) {
  std::tm tm{};
  if (!strptime(s.c_str(), "%Y-%m-%dT%H:%M:%SZ", &tm)) return std::chrono::system_clock::now();
  return std::chrono::system_clock::from_time_t(timegm(&tm));
}

}  // namespace

SessionManager::Session::Session(std::string id_, SessionRequest req, std::chrono::system_clock::time_point at)
    : id(std::move(id_)), request(std::move(req)), created(at), env(request.scenario_spec()) {
  env.reset(request.seed);
}

SessionDay SessionManager::Session::advance(const InterventionLevels& action) {
  const auto out = env.step(action);
  SessionDay d;
  d.day = out.state.day;
  d.submitted = action;
  d.applied = out.applied;
  d.state = out.state.comps;
  d.new_infections = out.flows.new_infections;
  d.new_deaths = out.flows.new_deaths;
  d.reward = out.reward;
  d.done = out.done;
  history.push_back(d);
  return d;
}

SessionManager::SessionManager(std::optional<std::filesystem::path> log_dir, AgentStore* agents)
    : log_dir_(std::move(log_dir)), agents_(agents) {
  if (log_dir_) {
    std::filesystem::create_directories(*log_dir_);
    restore();
  }
}

void SessionManager::restore() {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(*log_dir_))
    if (e.path().extension() == ".jsonl") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    std::ifstream in(path);
    std::string line;
    std::shared_ptr<Session> s;
    while (std::getline(in, line)) {
      json rec;
      try {
        rec = json::parse(line);
      } catch (const json::parse_error&) {
        break;  // torn final write
      }
      if (!s) {
        s = std::make_shared<Session>(path.stem().string(), SessionRequest::from_json(rec.at("create")),
                                      parse_iso8601(rec.value("created", std::string())));
      } else {
        s->advance(rec.at("step").get<InterventionLevels>());
      }
    }
    if (!s) continue;
    const auto& id = s->id;
    if (id.size() > 1 && id[0] == 's') {
      try {
        next_id_ = std::max<std::uint64_t>(next_id_, std::stoull(id.substr(1)) + 1);
      } catch (const std::exception&) {
      }
    }
    sessions_[id] = std::move(s);
  }
}

void SessionManager::append_log(const Session& s, const json& record) const {
  if (!log_dir_) return;
  std::ofstream out(*log_dir_ / (s.id + ".jsonl"), std::ios::app);
  out << record.dump() << '\n';
  out.flush();
  if (!out) throw std::runtime_error("cannot append to the session log of " + s.id);
}

std::string SessionManager::create(const SessionRequest& request) {
  std::unique_lock lock(map_mutex_);
  std::ostringstream id;
  id << 's' << std::setw(6) << std::setfill('0') << next_id_++;
  auto s = std::make_shared<Session>(id.str(), request, std::chrono::system_clock::now());
  append_log(*s, {{"create", request.to_json()}, {"created", iso8601(s->created)}});
  sessions_[s->id] = s;
  return s->id;
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& id) const {
  std::shared_lock lock(map_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw SessionNotFoundError("unknown session: " + id);
  return it->second;
}

SessionDay SessionManager::step(const std::string& id, const InterventionLevels& action) {
  const auto s = find(id);
  std::lock_guard lock(s->mutex);
  if (s->env.done()) throw env::EpisodeDoneError("session " + id + " has finished its episode");
  if (!action.valid()) throw std::invalid_argument("intervention levels must be integers in 0..10");
  auto day = s->advance(action);
  append_log(*s, {{"step", action}});
  return day;
}

json SessionManager::state(const std::string& id) const {
  const auto s = find(id);
  std::lock_guard lock(s->mutex);
  RewardVector total{};
  json history = json::array();
  for (const auto& d : s->history) {
    for (int k = 0; k < 3; ++k) total[k] += d.reward[k];
    history.push_back(to_json(d));
  }
  return {{"id", s->id},
          {"request", s->request.to_json()},
          {"scenario", scenario_to_json(s->env.spec())},
          {"created", iso8601(s->created)},
          {"mode", session_mode_name(s->request.mode)},
          {"day", s->env.state().day},
          {"horizon", s->env.horizon()},
          {"done", s->env.done()},
          {"initial", s->env.trajectory().initial},
          {"state", s->env.state().comps},
          {"history", history},
          {"cumulative_reward", total},
          {"cumulative_economic_cost", 0.0 - total[2]}};
}

json SessionManager::suggest(const std::string& id, const std::optional<Priority>& priority,
                             const std::optional<RewardVector>& targets) const {
  const auto s = find(id);
  if (!agents_) throw MissingCheckpointError("the service was started without a checkpoint directory");
  const auto trained = agents_->get(s->request.scenario);
  std::lock_guard lock(s->mutex);
  if (s->env.done()) throw env::EpisodeDoneError("session " + id + " has finished its episode");
  pcn::Command cmd;
  if (targets) {
    cmd.desired_return = *targets;
  } else {
    cmd = priority_command(*trained, s->env.spec(), priority.value_or(Priority::Balance));
  }
  const json full_target = cmd.desired_return;
  for (const auto& d : s->history)
    for (int k = 0; k < 3; ++k) cmd.desired_return[k] -= d.reward[k];
  cmd.horizon = std::max(1, s->env.horizon() - s->env.state().day);
  Rng unused(0);
  const auto raw = trained->agent.act(s->env.observation(), cmd, unused, true);
  const auto applied = s->env.spec().mask(raw);
  json out{{"id", s->id},
           {"day", s->env.state().day},
           {"action", applied},
           {"target", full_target},
           {"command", {{"desired_return", cmd.desired_return}, {"horizon", cmd.horizon}}}};
  if (priority && !targets) out["priority"] = priority_name(*priority);
  return out;
}

std::vector<std::string> SessionManager::ids() const {
  std::shared_lock lock(map_mutex_);
  std::vector<std::string> out;
  for (const auto& [id, _] : sessions_) out.push_back(id);
  return out;
}

std::size_t SessionManager::size() const {
  std::shared_lock lock(map_mutex_);
  return sessions_.size();
}

}  // namespace epi::service
