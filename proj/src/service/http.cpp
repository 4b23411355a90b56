#include "epi/service/http.hpp"

#include <httplib.h>

#include <sstream>

#include "epi/core/io.hpp"
#include "epi/pareto/pareto.hpp"

namespace epi::service {

using nlohmann::json;

JobQueue::JobQueue(AgentStore& agents, std::optional<std::filesystem::path> artifact_dir)
    : agents_(agents), artifact_dir_(std::move(artifact_dir)), worker_([this](std::stop_token st) { run(st); }) {}

JobQueue::~JobQueue() {
  worker_.request_stop();
  changed_.notify_all();
}

std::string JobQueue::submit(ExperimentSpec spec) {
  const auto ids = experiment_ids();
  if (std::find(ids.begin(), ids.end(), spec.id) == ids.end())
    throw UnknownExperimentError("unknown experiment '" + spec.id + "'");
  std::lock_guard lock(mutex_);
  auto job = std::make_shared<Job>();
  job->id = "j" + std::to_string(next_id_++);
  job->spec = std::move(spec);
  jobs_[job->id] = job;
  queue_.push_back(job);
  changed_.notify_all();
  return job->id;
}

json JobQueue::describe(const Job& job) const {
  json j{{"job", job.id}, {"experiment", job.spec.id}, {"seed", job.spec.seed}, {"status", job.status}};
  if (!job.error.empty()) j["error"] = job.error;
  if (job.status == "done") j["summary"] = job.summary;
  if (job.artifacts) j["artifacts"] = job.artifacts->string();
  return j;
}

json JobQueue::status(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) throw JobNotFoundError("unknown job: " + id);
  return describe(*it->second);
}

json JobQueue::wait(const std::string& id) const {
  std::unique_lock lock(mutex_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) throw JobNotFoundError("unknown job: " + id);
  const auto job = it->second;
  changed_.wait(lock, [&] { return job->status == "done" || job->status == "failed"; });
  return describe(*job);
}

void JobQueue::run(std::stop_token stop) {
  while (true) {
    std::shared_ptr<Job> job;
    {
      std::unique_lock lock(mutex_);
      if (!changed_.wait(lock, stop, [&] { return !queue_.empty(); })) return;
      job = queue_.front();
      queue_.pop_front();
      job->status = "running";
    }
    std::string status = "done", error;
    json summary;
    std::optional<std::filesystem::path> artifacts;
    try {
      const auto bundle = run_experiment(job->spec, agents_);
      summary = bundle.summary;
      if (artifact_dir_) {
        artifacts = *artifact_dir_ / job->id;
        bundle.write(*artifacts);
      }
    } catch (const std::exception& e) {
      status = "failed";
      error = e.what();
    }
    std::lock_guard lock(mutex_);
    job->status = status;
    job->error = error;
    job->summary = std::move(summary);
    job->artifacts = artifacts;
    changed_.notify_all();
  }
}

Service::Service(ServiceOptions opts)
    : opts_(std::move(opts)),
      agents_(opts_.checkpoint_dir, experiment_train_config(), opts_.allow_train),
      sessions_(opts_.session_log_dir, &agents_),
      jobs_(agents_, opts_.artifact_dir) {}

json Service::scenarios() const {
  json out = json::array();
  for (const auto& id : env::scenarios::ids()) out.push_back(scenario_to_json(env::scenarios::by_id(id)));
  return out;
}

json Service::fronts(const std::string& scenario) {
  const auto spec = env::scenarios::by_id(scenario);  // std::out_of_range when unknown
  std::lock_guard lock(fronts_mutex_);
  const bool have_agent = agents_.available(scenario);
  if (auto it = fronts_.find(scenario); it != fronts_.end() && (!have_agent || it->second.contains("pcn")))
    return it->second;
  json out{{"scenario", scenario}, {"reference", pareto::front_to_json(pareto::reference_front(spec))}};
  if (have_agent) {
    const auto trained = agents_.get(scenario);
    std::vector<pcn::Command> commands;
    for (const auto& p : trained->front) commands.push_back({p.ret, double(spec.sim.horizon_days)});
    json pcn = json::array();
    for (const auto& e : pcn::evaluate_front(trained->agent, commands, spec, 20, 0))
      pcn.push_back({{"ret", e.ret}, {"desired_return", e.command.desired_return}, {"seed", e.seed}});
    out["pcn"] = pcn;
  }
  return fronts_[scenario] = out;
}

namespace {

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

// Maps library exceptions to HTTP statuses.
template <class F>
auto guarded(F&& handler) {
  return [handler = std::forward<F>(handler)](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const SessionNotFoundError& e) {
      send(res, 404, {{"error", e.what()}});
    } catch (const JobNotFoundError& e) {
      send(res, 404, {{"error", e.what()}});
    } catch (const UnknownExperimentError& e) {
      send(res, 404, {{"error", e.what()}});
    } catch (const std::out_of_range& e) {
      send(res, 404, {{"error", e.what()}});
    } catch (const env::EpisodeDoneError& e) {
      send(res, 409, {{"error", e.what()}});
    } catch (const MissingCheckpointError& e) {
      send(res, 409, {{"error", e.what()}});
    } catch (const json::exception& e) {
      send(res, 400, {{"error", std::string("bad JSON: ") + e.what()}});
    } catch (const std::invalid_argument& e) {
      send(res, 400, {{"error", e.what()}});
    } catch (const std::exception& e) {
      send(res, 500, {{"error", e.what()}});
    }
  };
}

json body_json(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return json::parse(req.body);
}

RewardVector parse_targets(const std::string& text) {
  RewardVector r{};
  std::istringstream in(text);
  std::string field;
  int k = 0;
  while (std::getline(in, field, ',')) {
    if (k == 3) throw std::invalid_argument("targets takes three comma-separated numbers");
    std::size_t used = 0;
    r[k] = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument("targets: not a number: " + field);
    ++k;
  }
  if (k != 3) throw std::invalid_argument("targets takes three comma-separated numbers");
  return r;
}

}  // namespace

void Service::mount(httplib::Server& server) {
  server.Get("/scenarios", guarded([this](const auto&, auto& res) { send(res, 200, scenarios()); }));

  server.Post("/sessions", guarded([this](const auto& req, auto& res) {
    const auto id = sessions_.create(SessionRequest::from_json(body_json(req)));
    send(res, 201, sessions_.state(id));
  }));

  server.Post(R"(/sessions/([^/]+)/step)", guarded([this](const auto& req, auto& res) {
    auto body = body_json(req);
    const json& a = body.contains("action") ? body["action"] : body;
    InterventionLevels levels;
    levels.closure = a.at("c").template get<int>();
    levels.vaccination = a.at("v").template get<int>();
    levels.quarantine = a.at("q").template get<int>();
    const auto id = req.matches[1].str();
    send(res, 200, to_json(sessions_.step(id, levels)));
  }));

  server.Get(R"(/sessions/([^/]+)/suggest)", guarded([this](const auto& req, auto& res) {
    std::optional<Priority> priority;
    std::optional<RewardVector> targets;
    if (req.has_param("c")) priority = priority_from_name(req.get_param_value("c"));
    if (req.has_param("targets")) targets = parse_targets(req.get_param_value("targets"));
    send(res, 200, sessions_.suggest(req.matches[1].str(), priority, targets));
  }));

  server.Get(R"(/sessions/([^/]+))", guarded([this](const auto& req, auto& res) {
    send(res, 200, sessions_.state(req.matches[1].str()));
  }));

  server.Get(R"(/fronts/([^/]+))", guarded([this](const auto& req, auto& res) {
    send(res, 200, fronts(req.matches[1].str()));
  }));

  server.Post("/experiments", guarded([this](const auto& req, auto& res) {
    const auto body = body_json(req);
    ExperimentSpec spec;
    spec.id = body.at("id").template get<std::string>();
    spec.seed = body.value("seed", std::uint64_t{1});
    spec.params = body.value("params", json::object());
    const auto job = jobs_.submit(std::move(spec));
    send(res, 202, jobs_.status(job));
  }));

  server.Get(R"(/experiments/([^/]+))", guarded([this](const auto& req, auto& res) {
    send(res, 200, jobs_.status(req.matches[1].str()));
  }));
}

}  // namespace epi::service
