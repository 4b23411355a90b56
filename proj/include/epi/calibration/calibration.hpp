#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "epi/baselines/abm.hpp"
#include "epi/baselines/gsir.hpp"
#include "epi/core/model.hpp"
#include "epi/core/simulate.hpp"
#include "epi/data/dataset.hpp"

namespace epi::calibration {

struct KsResult {
  double statistic = 0.0;  ///< D, the largest ECDF gap
  double p_value = 1.0;    ///< asymptotic two-sample p
  std::size_t n_a = 0, n_b = 0;
};

/// Kolmogorov survival function Q(x) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 x^2).
double kolmogorov_q(double x);

/// Exact two-sample D by a sorted merge; p = Q(sqrt(n m / (n + m)) D).
/// Throws std::invalid_argument when either sample is empty.
KsResult ks_statistic(std::span<const double> a, std::span<const double> b);

/// How simulated growth-rate samples are produced for one sigma.
struct GrowthSimConfig {
  int runs = 10;
  int horizon_days = 50;
  double population = 68000.0;  ///< simulated individuals
  int infected_lo = 1, infected_hi = 20;
  data::WindowOptions windows{7, 0.05, 0.01, 7};  ///< min_cases in simulated units
  std::uint64_t seed = 0;
};

/// Zero-intervention epidemics at the given profile, passed through the same
/// window and growth estimator as the real data; rates pooled over runs.
std::vector<double> simulated_growth_rates(const DiseaseProfile& profile, const GrowthSimConfig& cfg);

struct SigmaRow {
  double sigma = 0.0;
  KsResult ks;
};

struct SigmaSearch {
  std::vector<SigmaRow> rows;  ///< sorted by sigma
  double best_sigma = 0.0;     ///< smallest D, ties to the smaller sigma
};

/// Inclusive grid lo, lo+step, ..., hi (rounded to avoid drift).
std::vector<double> make_grid(double lo, double hi, double step);

/// K-S of simulated against real growth rates for every sigma. Each grid
/// cell uses the seed of `cfg`, so cells differ only in sigma.
SigmaSearch sigma_grid_search(std::span<const double> real_rates, std::span<const double> grid,
                              const GrowthSimConfig& cfg, const DiseaseProfile& base = presets::covid(),
                              unsigned threads = 0);

/// Trapezoidal area under a daily series.
double trapezoid_auc(std::span<const double> series);

/// |AUC(sim) - AUC(obs)| / AUC(obs). Throws std::invalid_argument on length
/// mismatch or negative values and std::domain_error when AUC(obs) = 0.
double relative_auc_error(std::span<const double> sim, std::span<const double> obs);

enum class SimulatorId { Sde, Abm, Gsir };
SimulatorId simulator_from_name(std::string_view name);
std::string_view simulator_name(SimulatorId id);

class CountryNotFoundError : public data::DataError {
 public:
  using data::DataError::DataError;
};

/// Observed series and recorded interventions of one country, ready to replay.
struct ReplayInput {
  std::string country;
  data::Date start{};
  double population = 0.0;  ///< real persons
  double land_area = 0.0;
  double initial_cases = 0.0;  ///< real persons, first observed day
  std::vector<double> observed;  ///< real daily new cases (missing -> 0)
  std::vector<InterventionLevels> actions;
};

struct ReplayOptions {
  int days = 100;                      ///< replay length from the start day
  std::optional<data::Date> start;     ///< default: first day with new cases > 0
  double population_scale = 1000.0;    ///< real persons per simulated individual
};

/// Strength s in [0, 1] to level round(10 s): closure -> a_c, vaccine -> a_v,
/// health -> a_q. The economic category has no lever.
InterventionLevels strengths_to_action(const data::CategoryStrengths& s);

/// Throws CountryNotFoundError. A country with no usable day gives an input
/// with an empty series.
ReplayInput make_replay_input(const data::Dataset& ds, const std::string& country, const ReplayOptions& opts = {});

struct BaselineSettings {
  baselines::AbmConfig abm;  ///< grid length used; density and seeding come from the country
  double gsir_zeta = 0.1;
  int gsir_levels = 7;
  int gsir_fit_days = 10;
};

struct ReplayResult {
  std::vector<double> observed;
  std::vector<std::vector<double>> runs;  ///< simulated new cases in real units
  std::vector<double> errors;             ///< per run
  double mean_error = 0.0;
};

/// Replays the recorded interventions `runs` times with one simulator.
ReplayResult replay(const ReplayInput& input, SimulatorId sim, int runs, std::uint64_t seed,
                    const DiseaseProfile& profile = presets::covid(), const ReplayOptions& opts = {},
                    const BaselineSettings& baseline = {});

struct ValidationRow {
  std::string country;
  SimulatorId simulator = SimulatorId::Sde;
  double mean_error = 0.0;
  int runs = 0;
  bool flagged = false;  ///< no usable data; mean_error is NaN
  std::string note;
};

/// One row per (country, simulator). Throws CountryNotFoundError.
std::vector<ValidationRow> validate_countries(const data::Dataset& ds, std::span<const SimulatorId> simulators,
                                              std::span<const std::string> countries, int runs, std::uint64_t seed,
                                              const ReplayOptions& opts = {}, const BaselineSettings& baseline = {});

struct SensitivityRow {
  std::string name;  ///< mu, beta, delta, phi, rho, closure, vaccination, quarantine
  double value = 0.0;
  double mean_error = 0.0;
};

struct SensitivityGrids {
  std::vector<double> mu{9, 10, 11};
  std::vector<double> beta{0.0, 0.01, 0.1};
  std::vector<double> delta{0.001, 0.005, 0.01};
  std::vector<double> phi{0.1, 0.14, 0.2};
  std::vector<double> rho{0.01, 0.05, 0.1};
  std::vector<int> strengths{0, 1, 3};
};

/// The shared centre of the parameter grids: COVID preset with base
/// vaccination 0.01 and base quarantine 0.05 per day.
DiseaseProfile sensitivity_base_profile();

/// One-at-a-time sweep. Parameter rows run with no intervention; strength
/// rows hold one channel at a constant level with the others at 0. Every row
/// reuses the same seeds, so identical configurations give identical errors.
std::vector<SensitivityRow> sensitivity_sweep(const DiseaseProfile& base, const ReplayInput& reference,
                                              const SensitivityGrids& grids, int runs, std::uint64_t seed,
                                              const ReplayOptions& opts = {});

/// max/min mean error over the rows named `name`.
double error_spread(std::span<const SensitivityRow> rows, std::string_view name);

}  // namespace epi::calibration
