#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "epi/core/model.hpp"
#include "epi/core/rng.hpp"

namespace epi::baselines {

enum class AbmStatus : std::uint8_t { Susceptible, Incubating, Infectious, Recovered, Dead };

struct Person {
  std::int32_t x = 0, y = 0;
  AbmStatus status = AbmStatus::Susceptible;
  std::uint16_t clock = 0;  ///< days in the current status
};

struct AbmConfig {
  int grid_length = 50;          ///< L; cells are 1 km squares
  double density = 281.0;        ///< persons per cell (UK, per km^2)
  int step_size = 1;             ///< max random-walk displacement per axis per day
  double infection_prob = 0.05;  ///< per same-cell contact with an infectious person
  int incubation_days = 5;
  double recovery_prob = 0.14;   ///< per infectious day
  double mortality_prob = 0.0014;
  double vaccination_unit = 0.0005;  ///< per day per vaccination level
  std::int64_t initial_infected = 10;

  std::int64_t population() const;
  void validate() const;
};

struct AbmWorld {
  AbmConfig config;
  std::vector<Person> persons;

  /// Scatters persons uniformly; the first `initial_infected` start infectious.
  static AbmWorld create(const AbmConfig& config, Rng& rng);
};

struct AbmTimings {
  double init_seconds = 0.0;
  double move_seconds = 0.0;
  double infect_seconds = 0.0;
  double progress_seconds = 0.0;
};

struct AbmDay {
  std::int64_t new_infections = 0;
  std::int64_t new_cases = 0;  ///< incubation completed, becoming infectious
  std::int64_t susceptible = 0, incubating = 0, infectious = 0, recovered = 0, dead = 0;
};

struct AbmResult {
  std::vector<AbmDay> days;
  AbmTimings timings;
};

/// Per day: random walk (closure shrinks the step), same-cell infection with
/// probability reduced by the quarantine level, status progression.
/// Throws std::invalid_argument for an empty population.
AbmResult abm_simulate(AbmWorld& world, const std::function<InterventionLevels(int)>& interventions, int horizon,
                       Rng& rng);

/// Convenience: creates the world (timed) and runs it.
AbmResult abm_run(const AbmConfig& config, const std::function<InterventionLevels(int)>& interventions, int horizon,
                  std::uint64_t seed);

struct RuntimeFit {
  std::vector<int> lengths;
  std::vector<double> seconds;  ///< median initialization time per length
  std::array<double, 3> quadratic{};  ///< a + b L + c L^2
  double power_exponent = 0.0;        ///< slope of log t against log L
  double predict(double length) const;
};

/// Least-squares quadratic and log-log slope of seconds against lengths.
RuntimeFit fit_runtime(std::vector<int> lengths, std::vector<double> seconds);

/// Times world initialization over the given grid lengths (median of
/// `repeats`) and fits both a quadratic and a power law.
RuntimeFit abm_init_runtime(const AbmConfig& base, const std::vector<int>& lengths, int repeats, std::uint64_t seed);

}  // namespace epi::baselines
