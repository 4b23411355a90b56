#include "epi/baselines/gsir.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "epi/core/simulate.hpp"

namespace epi::baselines {

GsirState GsirState::initial(std::int64_t population, std::int64_t infected) {
  if (population < 0 || infected < 0 || infected > population)
    throw std::invalid_argument("GSIR initial state needs 0 <= infected <= population");
  return {population - infected, infected, 0, population};
}

GsirParams GsirParams::linear(double beta1, int levels, double step, double zeta) {
  GsirParams p;
  for (int j = 1; j <= levels; ++j) p.beta_by_level.push_back(beta1 * (1.0 - step * (j - 1)));
  p.zeta = zeta;
  p.validate();
  return p;
}

void GsirParams::validate() const {
  if (beta_by_level.empty()) throw std::invalid_argument("GSIR needs at least one level");
  for (std::size_t j = 0; j < beta_by_level.size(); ++j) {
    if (!(beta_by_level[j] > 0.0)) throw std::invalid_argument("GSIR beta_j must be positive");
    if (j > 0 && beta_by_level[j] > beta_by_level[j - 1])
      throw std::invalid_argument("GSIR beta_j must not increase with j");
  }
  if (!(zeta >= 0.0 && zeta <= 1.0)) throw std::invalid_argument("GSIR zeta must lie in [0, 1]");
}

int GsirParams::level_for_action(int action_level) const {
  if (action_level < 0 || action_level > kMaxLevel) throw std::invalid_argument("action level out of range");
  return 1 + static_cast<int>(std::lround(action_level * (levels() - 1) / static_cast<double>(kMaxLevel)));
}

GsirState gsir_step(const GsirState& state, int level, const GsirParams& params, Rng& rng) {
  if (level < 1 || level > params.levels()) throw std::invalid_argument("GSIR level out of range");
  if (state.s + state.i + state.r != state.m || state.s < 0 || state.i < 0 || state.r < 0)
    throw std::invalid_argument("GSIR state violates conservation");
  GsirState next = state;
  if (state.i == 0 || state.m == 0) return next;
  const double rate = params.beta_by_level[static_cast<std::size_t>(level - 1)] * static_cast<double>(state.i) *
                      static_cast<double>(state.s) / static_cast<double>(state.m);
  std::int64_t infections = rate > 0.0 ? std::poisson_distribution<std::int64_t>(rate)(rng) : 0;
  infections = std::min(infections, state.s);
  const std::int64_t removals = std::binomial_distribution<std::int64_t>(state.i, params.zeta)(rng);
  next.s = state.s - infections;
  next.r = state.r + removals;
  next.i = state.m - next.s - next.r;
  return next;
}

GsirSeries gsir_simulate(const GsirParams& params, const std::function<int(int)>& level_of_day, int horizon,
                         const GsirState& init, Rng& rng) {
  params.validate();
  if (horizon < 0) throw std::invalid_argument("horizon must be >= 0");
  GsirSeries out;
  out.states.push_back(init);
  for (int t = 0; t < horizon; ++t) {
    const auto next = gsir_step(out.states.back(), level_of_day(t), params, rng);
    out.new_infections.push_back(out.states.back().s - next.s);
    out.states.push_back(next);
  }
  return out;
}

double gsir_mean_growth(double beta1, double zeta, std::int64_t population, std::int64_t infected, int days) {
  if (days < 1) throw std::invalid_argument("days must be >= 1");
  double s = static_cast<double>(population - infected), i = static_cast<double>(infected);
  const double m = static_cast<double>(population);
  double first = 0.0, last = 0.0;
  for (int t = 0; t <= days; ++t) {
    const double e = std::min(beta1 * i * s / m, s);
    const double rem = zeta * i;
    if (t == 0) first = e;
    last = e;
    s -= e;
    i += e - rem;
  }
  return std::log(last / first) / days;
}

double sde_early_growth(const DiseaseProfile& profile, double population, double infected, int days) {
  if (days < 1) throw std::invalid_argument("days must be >= 1");
  SimConfig cfg;
  cfg.horizon_days = days + 1;
  Compartments init;
  init.s = population - infected;
  init.i = infected;
  const auto traj = simulate(profile.deterministic(), cfg, constant_policy({0, 0, 0}), init);
  return std::log(traj.days.back().new_infections / traj.days.front().new_infections) / days;
}

double fit_gsir_beta1(double target_growth, double zeta, std::int64_t population, std::int64_t infected, int days) {
  auto f = [&](double b) { return gsir_mean_growth(b, zeta, population, infected, days) - target_growth; };
  // growth rises with beta1 until depletion sets in, so grow the bracket from below
  double lo = 1e-9, hi = 0.01;
  if (f(lo) > 0.0) throw std::domain_error("GSIR growth target below the reachable range");
  while (f(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 10.0) throw std::domain_error("GSIR growth target above the reachable range");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace epi::baselines
