#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "epi/core/model.hpp"
#include "epi/core/rng.hpp"

namespace epi::baselines {

struct GsirState {
  std::int64_t s = 0, i = 0, r = 0;
  std::int64_t m = 0;  ///< total population, s + i + r

  static GsirState initial(std::int64_t population, std::int64_t infected);
  bool operator==(const GsirState&) const = default;
};

struct GsirParams {
  std::vector<double> beta_by_level;  ///< beta_j for j = 1..J (index j-1)
  double zeta = 0.1;

  int levels() const noexcept { return static_cast<int>(beta_by_level.size()); }
  /// beta_j = beta1 * (1 - step * (j - 1)), j = 1..levels.
  static GsirParams linear(double beta1, int levels = 7, double step = 0.15, double zeta = 0.1);
  /// Throws std::invalid_argument unless beta_j > 0, non-increasing, zeta in [0, 1].
  void validate() const;
  /// Level j for an environment action level 0..10 (closure channel), spread
  /// evenly over 1..J.
  int level_for_action(int action_level) const;
};

/// One step: e_S ~ Poisson(beta_j X_I X_S / M) clamped to X_S,
/// e_R ~ Binomial(X_I, zeta), then X_I = M - X_S - X_R.
GsirState gsir_step(const GsirState& state, int level, const GsirParams& params, Rng& rng);

struct GsirSeries {
  std::vector<GsirState> states;           ///< index 0 = initial
  std::vector<std::int64_t> new_infections;  ///< per step
};

/// `level_of_day(t)` returns the level j used on step t (0-based).
GsirSeries gsir_simulate(const GsirParams& params, const std::function<int(int)>& level_of_day, int horizon,
                         const GsirState& init, Rng& rng);

/// Mean per-day log growth of the expected GSIR new infections over the first
/// `days` steps at level 1 (mean-field recursion, no sampling).
double gsir_mean_growth(double beta1, double zeta, std::int64_t population, std::int64_t infected, int days);

/// Mean per-day log growth of the deterministic SDE's new infections over the
/// first `days` days with no intervention.
double sde_early_growth(const DiseaseProfile& profile, double population, double infected, int days);

/// beta1 such that the GSIR's early growth matches `target_growth`, by
/// bisection. Throws std::domain_error when no bracket below 10 exists.
double fit_gsir_beta1(double target_growth, double zeta, std::int64_t population, std::int64_t infected, int days);

}  // namespace epi::baselines
