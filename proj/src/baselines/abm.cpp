#include "epi/baselines/abm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace epi::baselines {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Solves the 3x3 system by Gaussian elimination with partial pivoting.
std::array<double, 3> solve3(std::array<std::array<double, 4>, 3> a) {
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    if (a[c][c] == 0.0) throw std::domain_error("singular least-squares system");
    for (int r = 0; r < 3; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (int k = c; k < 4; ++k) a[r][k] -= f * a[c][k];
    }
  }
  return {a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]};
}

}  // namespace

std::int64_t AbmConfig::population() const {
  return static_cast<std::int64_t>(std::llround(density * grid_length * static_cast<double>(grid_length)));
}

void AbmConfig::validate() const {
  if (grid_length < 1) throw std::invalid_argument("grid length must be >= 1");
  if (population() < 1) throw std::invalid_argument("ABM population is empty");
  if (step_size < 0 || incubation_days < 0) throw std::invalid_argument("step size and incubation must be >= 0");
  for (double p : {infection_prob, recovery_prob, mortality_prob})
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("ABM probabilities must lie in [0, 1]");
  if (recovery_prob + mortality_prob > 1.0) throw std::invalid_argument("recovery + mortality must not exceed 1");
  if (initial_infected < 0 || initial_infected > population())
    throw std::invalid_argument("initial infected out of range");
}

AbmWorld AbmWorld::create(const AbmConfig& config, Rng& rng) {
  config.validate();
  AbmWorld w;
  w.config = config;
  const auto n = config.population();
  w.persons.resize(static_cast<std::size_t>(n));
  std::uniform_int_distribution<std::int32_t> pos(0, config.grid_length - 1);
  for (std::int64_t k = 0; k < n; ++k) {
    auto& p = w.persons[static_cast<std::size_t>(k)];
    p.x = pos(rng);
    p.y = pos(rng);
    if (k < config.initial_infected) p.status = AbmStatus::Infectious;
  }
  return w;
}

AbmResult abm_simulate(AbmWorld& world, const std::function<InterventionLevels(int)>& interventions, int horizon,
                       Rng& rng) {
  const auto& cfg = world.config;
  if (world.persons.empty()) throw std::invalid_argument("ABM population is empty");
  const int L = cfg.grid_length;
  std::vector<std::int32_t> infectious_in_cell(static_cast<std::size_t>(L) * L);
  std::uniform_int_distribution<std::int32_t> step(-cfg.step_size, cfg.step_size);
  AbmResult result;

  for (int day = 0; day < horizon; ++day) {
    const InterventionLevels a = interventions(day);
    check_levels(a);
    AbmDay rec;

    // movement: a closed day keeps a person in place with probability growing in the level
    auto t0 = Clock::now();
    const double move_prob = 1.0 / (1.0 + 0.2 * a.closure);
    for (auto& p : world.persons) {
      if (p.status == AbmStatus::Dead) continue;
      if (rng.uniform() >= move_prob) continue;
      p.x = std::clamp(p.x + step(rng), 0, L - 1);
      p.y = std::clamp(p.y + step(rng), 0, L - 1);
    }
    result.timings.move_seconds += seconds_since(t0);

    // same-cell infection, persons visited in index order
    t0 = Clock::now();
    std::fill(infectious_in_cell.begin(), infectious_in_cell.end(), 0);
    for (const auto& p : world.persons)
      if (p.status == AbmStatus::Infectious) ++infectious_in_cell[static_cast<std::size_t>(p.y) * L + p.x];
    const double p_contact = cfg.infection_prob / (1.0 + 0.2 * a.quarantine);
    const double p_vaccinate = cfg.vaccination_unit * a.vaccination;
    for (auto& p : world.persons) {
      if (p.status != AbmStatus::Susceptible) continue;
      const int k = infectious_in_cell[static_cast<std::size_t>(p.y) * L + p.x];
      if (k > 0 && rng.uniform() < 1.0 - std::pow(1.0 - p_contact, k)) {
        p.status = AbmStatus::Incubating;
        p.clock = 0;
        ++rec.new_infections;
      } else if (p_vaccinate > 0.0 && rng.uniform() < p_vaccinate) {
        p.status = AbmStatus::Recovered;
      }
    }
    result.timings.infect_seconds += seconds_since(t0);

    // progression
    t0 = Clock::now();
    for (auto& p : world.persons) {
      switch (p.status) {
        case AbmStatus::Incubating:
          if (++p.clock >= cfg.incubation_days) {
            p.status = AbmStatus::Infectious;
            p.clock = 0;
            ++rec.new_cases;
          }
          break;
        case AbmStatus::Infectious: {
          ++p.clock;
          const double u = rng.uniform();
          if (u < cfg.mortality_prob)
            p.status = AbmStatus::Dead;
          else if (u < cfg.mortality_prob + cfg.recovery_prob)
            p.status = AbmStatus::Recovered;
          break;
        }
        default:
          break;
      }
    }
    for (const auto& p : world.persons) {
      switch (p.status) {
        case AbmStatus::Susceptible: ++rec.susceptible; break;
        case AbmStatus::Incubating: ++rec.incubating; break;
        case AbmStatus::Infectious: ++rec.infectious; break;
        case AbmStatus::Recovered: ++rec.recovered; break;
        case AbmStatus::Dead: ++rec.dead; break;
      }
    }
    result.timings.progress_seconds += seconds_since(t0);
    result.days.push_back(rec);
  }
  return result;
}

AbmResult abm_run(const AbmConfig& config, const std::function<InterventionLevels(int)>& interventions, int horizon,
                  std::uint64_t seed) {
  Rng rng(seed);
  const auto t0 = Clock::now();
  AbmWorld world = AbmWorld::create(config, rng);
  const double init = seconds_since(t0);
  auto result = abm_simulate(world, interventions, horizon, rng);
  result.timings.init_seconds = init;
  return result;
}

double RuntimeFit::predict(double length) const {
  return quadratic[0] + quadratic[1] * length + quadratic[2] * length * length;
}

RuntimeFit fit_runtime(std::vector<int> lengths, std::vector<double> seconds) {
  if (lengths.size() < 3 || lengths.size() != seconds.size())
    throw std::invalid_argument("runtime fit needs at least three (length, seconds) pairs");
  RuntimeFit fit;
  fit.lengths = std::move(lengths);
  fit.seconds = std::move(seconds);
  std::array<std::array<double, 4>, 3> normal{};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < fit.lengths.size(); ++k) {
    const double L = fit.lengths[k], t = fit.seconds[k];
    const double basis[3] = {1.0, L, L * L};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) normal[r][c] += basis[r] * basis[c];
      normal[r][3] += basis[r] * t;
    }
    const double lx = std::log(L), ly = std::log(std::max(t, 1e-12));
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
  }
  fit.quadratic = solve3(normal);
  const double n = static_cast<double>(fit.lengths.size());
  fit.power_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return fit;
}

RuntimeFit abm_init_runtime(const AbmConfig& base, const std::vector<int>& lengths, int repeats, std::uint64_t seed) {
  if (lengths.size() < 3) throw std::invalid_argument("runtime fit needs at least three grid lengths");
  std::vector<double> seconds;
  Rng rng(seed);
  for (int L : lengths) {
    AbmConfig cfg = base;
    cfg.grid_length = L;
    cfg.initial_infected = std::min(cfg.initial_infected, cfg.population());
    std::vector<double> times;
    for (int r = 0; r < std::max(1, repeats); ++r) {
      const auto t0 = Clock::now();
      const auto world = AbmWorld::create(cfg, rng);
      times.push_back(seconds_since(t0));
    }
    std::nth_element(times.begin(), times.begin() + times.size() / 2, times.end());
    seconds.push_back(times[times.size() / 2]);
  }
  return fit_runtime(lengths, std::move(seconds));
}

}  // namespace epi::baselines
