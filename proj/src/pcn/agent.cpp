#include "epi/pcn/agent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "epi/core/io.hpp"

namespace epi::pcn {

namespace {
constexpr int kCheckpointVersion = 1;
}

void Command::advance(const RewardVector& reward) {
  for (int k = 0; k < 3; ++k) desired_return[k] -= reward[k];
  horizon = std::max(horizon - 1.0, 1.0);
}

RewardVector EpisodeRecord::return_to_go(std::size_t t) const {
  RewardVector rtg{};
  for (std::size_t s = t; s < steps.size(); ++s)
    for (int k = 0; k < 3; ++k) rtg[k] += steps[s].reward[k];
  return rtg;
}

EpisodeRecord EpisodeRecord::from_environment(const env::Environment& env,
                                              std::vector<std::vector<double>> observations, std::string origin) {
  const auto& days = env.trajectory().days;
  if (observations.size() != days.size()) throw std::invalid_argument("one observation per day is required");
  EpisodeRecord rec;
  rec.origin = std::move(origin);
  for (std::size_t t = 0; t < days.size(); ++t)
    rec.steps.push_back({std::move(observations[t]), days[t].action, days[t].reward});
  rec.ret = env.trajectory().total_reward();
  return rec;
}

CommandScaling CommandScaling::from_front(const std::vector<pareto::FrontPoint>& front, int horizon) {
  CommandScaling s;
  s.horizon_scale = 1.0 / std::max(1, horizon);
  for (int k = 0; k < 3; ++k) {
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (const auto& p : front) {
      lo = first ? p.ret[k] : std::min(lo, p.ret[k]);
      hi = first ? p.ret[k] : std::max(hi, p.ret[k]);
      first = false;
    }
    // a one-sided range still has a scale: distance from the origin
    double range = hi - lo;
    if (!(range > 0.0)) range = std::max(std::abs(lo), std::abs(hi));
    s.return_scale[k] = range > 0.0 ? 1.0 / range : 1.0;
  }
  return s;
}

int network_input_size() { return env::Environment::kObservationSize + 3 + 1; }

std::vector<double> network_input(std::span<const double> observation, const Command& cmd,
                                  const CommandScaling& scaling) {
  std::vector<double> in(observation.begin(), observation.end());
  for (int k = 0; k < 3; ++k) in.push_back(cmd.desired_return[k] * scaling.return_scale[k]);
  in.push_back(cmd.horizon * scaling.horizon_scale);
  return in;
}

InterventionLevels act(const Mlp& net, std::span<const double> input, Rng& rng, bool greedy) {
  const Logits logits = net.forward(input);
  InterventionLevels a;
  if (greedy) {
    for (int k = 0; k < kHeads; ++k) {
      Eigen::Index best = 0;
      logits.row(k).maxCoeff(&best);
      a[k] = static_cast<int>(best);
    }
    return a;
  }
  const Logits p = head_probabilities(logits);
  for (int k = 0; k < kHeads; ++k) {
    double u = rng.uniform();
    int level = kMaxLevel;
    for (int j = 0; j < kActionsPerHead; ++j) {
      u -= p(k, j);
      if (u < 0.0) {
        level = j;
        break;
      }
    }
    a[k] = level;
  }
  return a;
}

InterventionLevels Agent::act(std::span<const double> observation, const Command& cmd, Rng& rng, bool greedy) const {
  const auto in = network_input(observation, cmd, scaling);
  return pcn::act(net, in, rng, greedy);
}

nlohmann::json Agent::to_json() const {
  return {{"format", "epiwb-pcn"},
          {"version", kCheckpointVersion},
          {"scenario", scenario},
          {"input_size", net.input_size()},
          {"scaling", {{"return_scale", scaling.return_scale}, {"horizon_scale", scaling.horizon_scale}}},
          {"network", net.to_json()}};
}

Agent Agent::from_json(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != "epiwb-pcn") throw std::invalid_argument("not a PCN checkpoint");
  if (j.value("version", 0) != kCheckpointVersion)
    throw std::invalid_argument("unsupported checkpoint version " + std::to_string(j.value("version", 0)));
  Agent a;
  a.scenario = j.value("scenario", std::string{});
  a.scaling.return_scale = j.at("scaling").at("return_scale").get<RewardVector>();
  a.scaling.horizon_scale = j.at("scaling").at("horizon_scale").get<double>();
  a.net = Mlp::from_json(j.at("network"));
  if (a.net.input_size() != network_input_size()) throw std::invalid_argument("checkpoint input width mismatch");
  return a;
}

void Agent::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << to_json().dump() << '\n';
}

Agent Agent::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  return from_json(nlohmann::json::parse(in));
}

Command select_command(const std::vector<EpisodeRecord>& buffer, Rng& rng, double noise) {
  if (buffer.empty()) throw std::invalid_argument("select_command: empty buffer");
  std::vector<pareto::Point> returns;
  returns.reserve(buffer.size());
  for (const auto& e : buffer) returns.emplace_back(e.ret.begin(), e.ret.end());
  const auto front = pareto::non_dominated_indices(returns);
  const auto& chosen = buffer[front[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(front.size()) - 1))]];

  Command cmd;
  cmd.desired_return = chosen.ret;
  cmd.horizon = static_cast<double>(std::max<std::size_t>(chosen.length(), 1));
  if (noise > 0.0) {
    const int k = rng.uniform_int(0, 2);
    double mean = 0.0, sq = 0.0;
    for (const auto& e : buffer) {
      mean += e.ret[k];
      sq += e.ret[k] * e.ret[k];
    }
    mean /= buffer.size();
    const double std = std::sqrt(std::max(sq / buffer.size() - mean * mean, 0.0));
    cmd.desired_return[k] += noise * std;
  }
  return cmd;
}

void prune_buffer(std::vector<EpisodeRecord>& buffer, std::size_t capacity) {
  if (buffer.size() <= capacity) return;
  std::vector<pareto::Point> returns;
  for (const auto& e : buffer) returns.emplace_back(e.ret.begin(), e.ret.end());
  const auto rank = pareto::non_domination_ranks(returns);

  std::vector<double> crowd(buffer.size(), 0.0);
  const int max_rank = *std::max_element(rank.begin(), rank.end());
  for (int r = 0; r <= max_rank; ++r) {
    std::vector<std::size_t> members;
    std::vector<pareto::Point> pts;
    for (std::size_t i = 0; i < buffer.size(); ++i)
      if (rank[i] == r) {
        members.push_back(i);
        pts.push_back(returns[i]);
      }
    const auto cd = pareto::crowding_distance(pts);
    for (std::size_t m = 0; m < members.size(); ++m) crowd[members[m]] = cd[m];
  }

  std::vector<std::size_t> order(buffer.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    if (rank[a] != rank[b]) return rank[a] < rank[b];
    return crowd[a] > crowd[b];
  });
  order.resize(capacity);
  std::sort(order.begin(), order.end());
  std::vector<EpisodeRecord> kept;
  kept.reserve(capacity);
  for (auto i : order) kept.push_back(std::move(buffer[i]));
  buffer = std::move(kept);
}

EpisodeRecord run_episode(const Agent& agent, const env::ScenarioSpec& spec, Command cmd, std::uint64_t seed,
                          Rng& rng, bool greedy, Trajectory* trajectory) {
  env::Environment env(spec);
  env.reset(seed);
  std::vector<std::vector<double>> observations;
  while (!env.done()) {
    auto obs = env.observation();
    const InterventionLevels a = agent.act(obs, cmd, rng, greedy);
    const auto out = env.step(a);
    cmd.advance(out.reward);
    observations.push_back(std::move(obs));
  }
  if (trajectory) *trajectory = env.trajectory();
  return EpisodeRecord::from_environment(env, std::move(observations), greedy ? "greedy" : "sampled");
}

EpisodeRecord constant_episode(const env::ScenarioSpec& spec, const InterventionLevels& levels, std::uint64_t seed,
                               std::string origin) {
  env::Environment env(spec);
  env.reset(seed);
  std::vector<std::vector<double>> observations;
  while (!env.done()) {
    observations.push_back(env.observation());
    env.step(levels);
  }
  return EpisodeRecord::from_environment(env, std::move(observations), std::move(origin));
}

TrainResult train(const env::ScenarioSpec& spec, const TrainConfig& cfg,
                  std::optional<std::vector<pareto::FrontPoint>> seed_front) {
  spec.validate();
  if (cfg.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (cfg.buffer_capacity < 1) throw std::invalid_argument("buffer capacity must be >= 1");

  Rng rng(cfg.seed);
  Rng episode_seeds = rng.split(1);
  if (!seed_front) {
    pareto::ReferenceFrontOptions opts;
    opts.deterministic = spec.deterministic;
    opts.base_seed = cfg.seed;
    seed_front = pareto::reference_front(spec, opts);
  }

  TrainResult result;
  result.agent.scenario = spec.id;
  result.agent.scaling = CommandScaling::from_front(*seed_front, spec.sim.horizon_days);
  result.agent.net = Mlp(network_input_size(), cfg.hidden, cfg.seed ^ 0x5eedULL);

  auto& buffer = result.buffer;
  for (const auto& p : *seed_front)
    buffer.push_back(constant_episode(spec, p.policy, episode_seeds(), "seed:" + p.provenance));
  buffer.erase(std::remove_if(buffer.begin(), buffer.end(), [](const auto& e) { return e.steps.empty(); }),
               buffer.end());
  if (buffer.empty()) throw std::invalid_argument("scenario horizon is zero; nothing to train on");
  prune_buffer(buffer, static_cast<std::size_t>(cfg.buffer_capacity));

  SgdMomentum opt(cfg.learning_rate, cfg.momentum, cfg.clip_norm);
  Rng batch_rng = rng.split(2);
  Rng act_rng = rng.split(3);
  Rng cmd_rng = rng.split(4);

  const int in_size = network_input_size();
  Eigen::MatrixXd inputs(in_size, cfg.batch_size);
  std::vector<InterventionLevels> labels(static_cast<std::size_t>(cfg.batch_size));
  Gradients grads;

  for (int it = 0; it < cfg.iterations; ++it) {
    double loss_sum = 0.0;
    for (int u = 0; u < cfg.updates_per_iteration; ++u) {
      for (int n = 0; n < cfg.batch_size; ++n) {
        const auto& ep = buffer[static_cast<std::size_t>(batch_rng.uniform_int(0, static_cast<int>(buffer.size()) - 1))];
        const auto t = static_cast<std::size_t>(batch_rng.uniform_int(0, static_cast<int>(ep.length()) - 1));
        const Command cmd{ep.return_to_go(t), static_cast<double>(ep.length() - t)};
        const auto in = network_input(ep.steps[t].observation, cmd, result.agent.scaling);
        inputs.col(n) = Eigen::Map<const Eigen::VectorXd>(in.data(), in_size);
        labels[static_cast<std::size_t>(n)] = ep.steps[t].action;
      }
      const double loss = result.agent.net.loss_and_gradients(inputs, labels, grads);
      if (!std::isfinite(loss) || !std::isfinite(grads.squared_norm())) {
        std::ostringstream msg;
        msg << "training diverged at iteration " << it << ", update " << u << " (loss " << loss << ")";
        throw DivergenceError(msg.str());
      }
      grads.scale(1.0 / cfg.batch_size);
      opt.step(result.agent.net, grads);
      loss_sum += loss / cfg.batch_size;
    }

    for (int e = 0; e < cfg.episodes_per_iteration; ++e) {
      const Command cmd = select_command(buffer, cmd_rng, cfg.noise);
      auto ep = run_episode(result.agent, spec, cmd, episode_seeds(), act_rng, false);
      ep.origin = "iter:" + std::to_string(it);
      buffer.push_back(std::move(ep));
    }
    prune_buffer(buffer, static_cast<std::size_t>(cfg.buffer_capacity));

    TrainLogRow row;
    row.iteration = it;
    row.loss = cfg.updates_per_iteration > 0 ? loss_sum / cfg.updates_per_iteration : 0.0;
    row.buffer_size = buffer.size();
    std::vector<pareto::Point> rets;
    row.best_return = buffer.front().ret;
    for (const auto& b : buffer) {
      rets.emplace_back(b.ret.begin(), b.ret.end());
      for (int k = 0; k < 3; ++k) row.best_return[k] = std::max(row.best_return[k], b.ret[k]);
    }
    row.front_size = pareto::non_dominated_indices(rets).size();
    result.log.push_back(row);
    if (cfg.verbose)
      std::cerr << "iter " << it << " loss " << row.loss << " buffer " << row.buffer_size << " front "
                << row.front_size << '\n';
  }
  return result;
}

std::string train_log_csv(const std::vector<TrainLogRow>& log) {
  std::ostringstream out;
  out << "iteration,loss,buffer_size,front_size,best_r1,best_r2,best_r3\n";
  for (const auto& r : log)
    out << r.iteration << ',' << r.loss << ',' << r.buffer_size << ',' << r.front_size << ',' << r.best_return[0]
        << ',' << r.best_return[1] << ',' << r.best_return[2] << '\n';
  return out.str();
}

std::vector<EvaluatedPoint> evaluate_front(const Agent& agent, const std::vector<Command>& commands,
                                           const env::ScenarioSpec& spec, int n_episodes, std::uint64_t seed) {
  if (commands.empty()) throw std::invalid_argument("evaluate_front: no commands");
  std::vector<EvaluatedPoint> all;
  Rng unused(seed);
  for (int e = 0; e < n_episodes; ++e) {
    const Command& cmd = commands[static_cast<std::size_t>(e) % commands.size()];
    const auto ep = run_episode(agent, spec, cmd, seed + static_cast<std::uint64_t>(e), unused, true);
    all.push_back({ep.ret, cmd, seed + static_cast<std::uint64_t>(e)});
  }
  std::vector<pareto::Point> rets;
  for (const auto& p : all) rets.emplace_back(p.ret.begin(), p.ret.end());
  std::vector<EvaluatedPoint> front;
  for (auto i : pareto::non_dominated_indices(rets)) front.push_back(all[i]);
  return front;
}

}  // namespace epi::pcn
