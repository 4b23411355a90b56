#include "epi/pareto/pareto.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "epi/core/io.hpp"

namespace epi::pareto {

bool dominates(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("dominates: dimension mismatch");
  bool strictly = false;
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (u[k] < v[k]) return false;
    if (u[k] > v[k]) strictly = true;
  }
  return strictly;
}

std::vector<std::size_t> non_dominated_indices(const std::vector<Point>& points) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool keep = true;
    for (std::size_t j = 0; j < points.size() && keep; ++j) {
      if (j == i) continue;
      if (dominates(points[j], points[i])) keep = false;
      // duplicates: only the first occurrence survives
      if (j < i && points[j] == points[i]) keep = false;
    }
    if (keep) out.push_back(i);
  }
  return out;
}

std::vector<Point> non_dominated_filter(const std::vector<Point>& points) {
  std::vector<Point> out;
  for (auto i : non_dominated_indices(points)) out.push_back(points[i]);
  return out;
}

std::vector<int> non_domination_ranks(const std::vector<Point>& points) {
  const std::size_t n = points.size();
  std::vector<int> rank(n, -1);
  std::vector<int> dominated_by(n, 0);
  std::vector<std::vector<std::size_t>> dominates_list(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (dominates(points[i], points[j])) {
        dominates_list[i].push_back(j);
        ++dominated_by[j];
      } else if (dominates(points[j], points[i])) {
        dominates_list[j].push_back(i);
        ++dominated_by[i];
      }
    }
  }
  std::vector<std::size_t> current;
  for (std::size_t i = 0; i < n; ++i)
    if (dominated_by[i] == 0) current.push_back(i);
  int level = 0;
  while (!current.empty()) {
    std::vector<std::size_t> next;
    for (auto i : current) {
      rank[i] = level;
      for (auto j : dominates_list[i])
        if (--dominated_by[j] == 0) next.push_back(j);
    }
    current = std::move(next);
    ++level;
  }
  return rank;
}

std::vector<double> crowding_distance(const std::vector<Point>& front) {
  const std::size_t n = front.size();
  std::vector<double> dist(n, 0.0);
  if (n == 0) return dist;
  const std::size_t dims = front.front().size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < dims; ++k) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return front[a][k] < front[b][k]; });
    dist[order.front()] = inf;
    dist[order.back()] = inf;
    const double range = front[order.back()][k] - front[order.front()][k];
    if (!(range > 0.0)) continue;
    for (std::size_t r = 1; r + 1 < n; ++r)
      dist[order[r]] += (front[order[r + 1]][k] - front[order[r - 1]][k]) / range;
  }
  return dist;
}

std::vector<InterventionLevels> constant_policy_grid(const env::ScenarioSpec& spec, int levels_per_channel) {
  if (levels_per_channel < 1 || levels_per_channel > kLevelsPerChannel)
    throw std::invalid_argument("levels_per_channel must lie in [1, 11]");
  // evenly spaced levels including 0 and (for n > 1) 10
  std::vector<int> levels;
  for (int k = 0; k < levels_per_channel; ++k)
    levels.push_back(levels_per_channel == 1 ? 0 : (k * kMaxLevel) / (levels_per_channel - 1));

  std::vector<InterventionLevels> grid;
  auto channel_levels = [&](int ch) {
    return spec.allowed[static_cast<std::size_t>(ch)] ? levels : std::vector<int>{0};
  };
  for (int c : channel_levels(0))
    for (int v : channel_levels(1))
      for (int q : channel_levels(2)) grid.push_back({c, v, q});
  return grid;
}

RewardVector evaluate_constant_policy(const env::ScenarioSpec& spec, const InterventionLevels& levels,
                                      const ReferenceFrontOptions& opts) {
  env::ScenarioSpec s = spec;
  s.deterministic = s.deterministic || opts.deterministic;
  const int runs = s.deterministic ? 1 : std::max(1, opts.seeds);
  RewardVector mean{};
  for (int k = 0; k < runs; ++k) {
    const auto ret = env::episode_return(env::rollout(s, constant_policy(levels), opts.base_seed + k));
    for (int j = 0; j < 3; ++j) mean[j] += ret[j] / runs;
  }
  return mean;
}

std::vector<FrontPoint> reference_front(const env::ScenarioSpec& spec, const ReferenceFrontOptions& opts) {
  const auto grid = constant_policy_grid(spec, opts.levels_per_channel);
  std::vector<RewardVector> returns(grid.size());

  unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(grid.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < grid.size(); k = next++)
      returns[k] = evaluate_constant_policy(spec, grid[k], opts);
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::vector<Point> points;
  points.reserve(returns.size());
  for (const auto& r : returns) points.emplace_back(r.begin(), r.end());
  std::vector<FrontPoint> front;
  for (auto i : non_dominated_indices(points)) {
    const auto& a = grid[i];
    front.push_back({returns[i], a,
                     "constant(" + std::to_string(a.closure) + "," + std::to_string(a.vaccination) + "," +
                         std::to_string(a.quarantine) + ")"});
  }
  return front;
}

nlohmann::json front_to_json(const std::vector<FrontPoint>& front) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : front) {
    nlohmann::json item{{"return", p.ret}, {"policy", p.policy}};
    if (!p.provenance.empty()) item["provenance"] = p.provenance;
    arr.push_back(std::move(item));
  }
  return arr;
}

std::vector<FrontPoint> front_from_json(const nlohmann::json& j) {
  std::vector<FrontPoint> out;
  for (const auto& item : j) {
    FrontPoint p;
    p.ret = item.at("return").get<RewardVector>();
    if (item.contains("policy")) p.policy = item.at("policy").get<InterventionLevels>();
    p.provenance = item.value("provenance", std::string{});
    out.push_back(std::move(p));
  }
  return out;
}

std::string front_to_csv(const std::vector<FrontPoint>& front) {
  std::ostringstream out;
  out.precision(17);
  out << "r1,r2,r3,c,v,q\n";
  for (const auto& p : front)
    out << p.ret[0] << ',' << p.ret[1] << ',' << p.ret[2] << ',' << p.policy.closure << ','
        << p.policy.vaccination << ',' << p.policy.quarantine << '\n';
  return out.str();
}

}  // namespace epi::pareto
