#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "epi/core/model.hpp"
#include "epi/core/simulate.hpp"
#include "epi/env/environment.hpp"

namespace epi::pareto {

using Point = std::vector<double>;

/// True iff u >= v in every component and u > v in at least one (maximization).
/// Throws std::invalid_argument on a dimension mismatch.
bool dominates(std::span<const double> u, std::span<const double> v);

/// Indices of the points no other point dominates. Exact duplicates are
/// reported once (the first occurrence).
std::vector<std::size_t> non_dominated_indices(const std::vector<Point>& points);
std::vector<Point> non_dominated_filter(const std::vector<Point>& points);

/// Non-domination rank of every point (0 = first front), by repeated peeling.
std::vector<int> non_domination_ranks(const std::vector<Point>& points);

/// Crowding distance of each point of one front. Per objective the points are
/// sorted, boundary points get +inf, interior points accumulate the neighbor
/// gap divided by the objective's range.
std::vector<double> crowding_distance(const std::vector<Point>& front);

struct FrontPoint {
  RewardVector ret{};
  InterventionLevels policy;  ///< constant policy that produced the return
  std::string provenance;

  bool operator==(const FrontPoint&) const = default;
};

struct ReferenceFrontOptions {
  bool deterministic = true;
  int seeds = 5;                ///< episodes averaged per policy in stochastic mode
  std::uint64_t base_seed = 0;
  int levels_per_channel = kLevelsPerChannel;  ///< 11 -> the full {0..10} grid
  unsigned threads = 0;         ///< 0 = hardware concurrency
};

/// Every constant policy of the (masked) action grid, in enumeration order.
std::vector<InterventionLevels> constant_policy_grid(const env::ScenarioSpec& spec, int levels_per_channel);

/// Evaluates each constant policy over the full horizon and keeps the
/// non-dominated returns.
std::vector<FrontPoint> reference_front(const env::ScenarioSpec& spec, const ReferenceFrontOptions& opts = {});

/// Mean return of one constant policy under the given options.
RewardVector evaluate_constant_policy(const env::ScenarioSpec& spec, const InterventionLevels& levels,
                                      const ReferenceFrontOptions& opts);

/// JSON array of {"return": [r1, r2, r3], "policy": {"c","v","q"}}.
nlohmann::json front_to_json(const std::vector<FrontPoint>& front);
std::vector<FrontPoint> front_from_json(const nlohmann::json& j);
std::string front_to_csv(const std::vector<FrontPoint>& front);

}  // namespace epi::pareto
