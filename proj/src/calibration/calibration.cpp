#include "epi/calibration/calibration.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <mutex>
#include <thread>

namespace epi::calibration {

double kolmogorov_q(double x) {
  if (x <= 0.0) return 1.0;
  // the alternating series converges slowly near 0; there Q is 1 to double precision
  if (x < 0.18) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    // step past every copy of the smaller value in both samples before comparing
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(i / n - j / m));
  }
  KsResult r;
  r.statistic = d;
  r.n_a = x.size();
  r.n_b = y.size();
  r.p_value = kolmogorov_q(std::sqrt(n * m / (n + m)) * d);
  return r;
}

std::vector<double> simulated_growth_rates(const DiseaseProfile& profile, const GrowthSimConfig& cfg) {
  if (cfg.runs < 1) throw std::invalid_argument("runs must be >= 1");
  if (cfg.infected_lo < 0 || cfg.infected_hi < cfg.infected_lo || cfg.infected_hi > cfg.population)
    throw std::invalid_argument("initial infected range is invalid");
  std::vector<double> pool;
  const Rng root(cfg.seed);
  for (int run = 0; run < cfg.runs; ++run) {
    Rng rng = root.split(static_cast<std::uint64_t>(run));
    SimConfig sc;
    sc.horizon_days = cfg.horizon_days;
    sc.rng_seed = rng();
    Compartments init;
    init.i = rng.uniform_int(cfg.infected_lo, cfg.infected_hi);
    init.s = cfg.population - init.i;
    const auto traj = simulate(profile, sc, constant_policy({0, 0, 0}), init);
    const auto cases = traj.new_infections();
    const std::vector<double> strength(cases.size(), 0.0);
    for (const auto& w : data::growth_windows("sim", data::Date{}, cases, strength, cfg.windows))
      for (double g : w.growth_rates)
        if (std::isfinite(g)) pool.push_back(g);
  }
  return pool;
}

std::vector<double> make_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw std::invalid_argument("grid needs step > 0 and hi >= lo");
  std::vector<double> g;
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long k = 0; k <= n; ++k) g.push_back(std::round((lo + k * step) * 1e9) / 1e9);
  return g;
}

SigmaSearch sigma_grid_search(std::span<const double> real_rates, std::span<const double> grid,
                              const GrowthSimConfig& cfg, const DiseaseProfile& base, unsigned threads) {
  if (grid.empty()) throw std::invalid_argument("sigma grid is empty");
  if (real_rates.empty()) throw std::invalid_argument("real growth-rate sample is empty");
  SigmaSearch out;
  out.rows.resize(grid.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < grid.size(); k = next++) {
      try {
        DiseaseProfile p = base;
        p.sigma = grid[k];
        p.delta = std::min(p.delta, p.sigma);
        const auto sim = simulated_growth_rates(p, cfg);
        if (sim.empty()) throw std::runtime_error("no simulated growth rates");
        out.rows[k] = {grid[k], ks_statistic(sim, real_rates)};
      } catch (const std::exception& e) {
        std::lock_guard lock(failure_mutex);
        if (!failure)
          failure = std::make_exception_ptr(std::runtime_error("sigma " + std::to_string(grid[k]) + ": " + e.what()));
      }
    }
  };
  unsigned n = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  n = std::min<unsigned>(n, static_cast<unsigned>(grid.size()));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::sort(out.rows.begin(), out.rows.end(), [](const auto& a, const auto& b) { return a.sigma < b.sigma; });
  const auto best = std::min_element(out.rows.begin(), out.rows.end(), [](const auto& a, const auto& b) {
    return a.ks.statistic < b.ks.statistic;
  });
  out.best_sigma = best->sigma;
  return out;
}

double trapezoid_auc(std::span<const double> series) {
  double auc = 0.0;
  for (std::size_t t = 0; t + 1 < series.size(); ++t) auc += 0.5 * (series[t] + series[t + 1]);
  return auc;
}

double relative_auc_error(std::span<const double> sim, std::span<const double> obs) {
  if (sim.size() != obs.size()) throw std::invalid_argument("relative_auc_error: series lengths differ");
  for (std::size_t t = 0; t < sim.size(); ++t)
    if (sim[t] < 0.0 || obs[t] < 0.0) throw std::invalid_argument("relative_auc_error: negative values");
  const double a_obs = trapezoid_auc(obs);
  if (!(a_obs > 0.0)) throw std::domain_error("relative_auc_error: observed AUC is zero");
  return std::abs(trapezoid_auc(sim) - a_obs) / a_obs;
}

SimulatorId simulator_from_name(std::string_view name) {
  if (name == "sde") return SimulatorId::Sde;
  if (name == "abm") return SimulatorId::Abm;
  if (name == "gsir") return SimulatorId::Gsir;
  throw std::invalid_argument("unknown simulator '" + std::string(name) + "' (sde, abm, gsir)");
}

std::string_view simulator_name(SimulatorId id) {
  switch (id) {
    case SimulatorId::Sde: return "sde";
    case SimulatorId::Abm: return "abm";
    case SimulatorId::Gsir: return "gsir";
  }
  return "?";
}

InterventionLevels strengths_to_action(const data::CategoryStrengths& s) {
  auto level = [](double v) { return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * kMaxLevel)); };
  return {level(s[data::Category::Closure]), level(s[data::Category::Vaccine]), level(s[data::Category::Health])};
}

ReplayInput make_replay_input(const data::Dataset& ds, const std::string& country, const ReplayOptions& opts) {
  const auto rows = ds.country_rows(country);
  if (rows.empty()) throw CountryNotFoundError("country not in dataset: " + country);
  ReplayInput in;
  in.country = country;
  in.population = rows.front().population;
  in.land_area = rows.front().land_area;

  std::size_t first = 0;
  if (opts.start) {
    while (first < rows.size() && rows[first].date < *opts.start) ++first;
  } else {
    while (first < rows.size() && !(rows[first].new_cases > 0.0)) ++first;
  }
  if (first == rows.size()) return in;
  in.start = rows[first].date;
  const data::Date end = in.start + std::chrono::days{opts.days};
  const data::Date last = std::min(end, rows.back().date + std::chrono::days{1});
  const auto n = static_cast<std::size_t>((last - in.start).count());
  in.observed.assign(n, 0.0);
  in.actions.assign(n, InterventionLevels{});
  std::size_t k = first;
  InterventionLevels current{};
  for (std::size_t t = 0; t < n; ++t) {
    const data::Date day = in.start + std::chrono::days{static_cast<int>(t)};
    if (k < rows.size() && rows[k].date == day) {
      if (rows[k].new_cases > 0.0) in.observed[t] = rows[k].new_cases;
      current = strengths_to_action(rows[k].strengths);
      ++k;
    }
    in.actions[t] = current;
  }
  in.initial_cases = in.observed.front();
  return in;
}

namespace {

std::vector<double> run_sde(const ReplayInput& in, const DiseaseProfile& profile, const ReplayOptions& opts,
                            std::uint64_t seed) {
  const double n = in.population / opts.population_scale;
  Compartments init;
  init.i = std::min(in.initial_cases / opts.population_scale, n);
  init.s = n - init.i;
  SimConfig cfg;
  cfg.horizon_days = static_cast<int>(in.observed.size());
  cfg.population_scale = opts.population_scale;
  cfg.rng_seed = seed;
  const auto& actions = in.actions;
  const auto traj = simulate(profile, cfg, [&](int day, const Compartments&) { return actions[day]; }, init);
  auto cases = traj.new_infections();
  for (double& c : cases) c *= opts.population_scale;
  return cases;
}

std::vector<double> run_gsir(const ReplayInput& in, const DiseaseProfile& profile, const ReplayOptions& opts,
                             const BaselineSettings& b, std::uint64_t seed) {
  const auto m = static_cast<std::int64_t>(std::llround(in.population / opts.population_scale));
  const auto i0 = std::clamp<std::int64_t>(std::llround(in.initial_cases / opts.population_scale), 1, m);
  const double growth = baselines::sde_early_growth(profile, static_cast<double>(m), static_cast<double>(i0),
                                                    b.gsir_fit_days);
  const double beta1 = baselines::fit_gsir_beta1(growth, b.gsir_zeta, m, i0, b.gsir_fit_days);
  const auto params = baselines::GsirParams::linear(beta1, b.gsir_levels, 0.15, b.gsir_zeta);
  Rng rng(seed);
  const auto series = baselines::gsir_simulate(
      params, [&](int t) { return params.level_for_action(in.actions[static_cast<std::size_t>(t)].closure); },
      static_cast<int>(in.observed.size()), baselines::GsirState::initial(m, i0), rng);
  std::vector<double> cases;
  for (auto e : series.new_infections) cases.push_back(static_cast<double>(e) * opts.population_scale);
  return cases;
}

std::vector<double> run_abm(const ReplayInput& in, const BaselineSettings& b, std::uint64_t seed) {
  baselines::AbmConfig cfg = b.abm;
  if (in.land_area > 0.0 && in.population > 0.0) cfg.density = in.population / in.land_area;
  const double ratio = in.population / static_cast<double>(cfg.population());
  cfg.initial_infected = std::clamp<std::int64_t>(std::llround(in.initial_cases / ratio), 1, cfg.population());
  const auto result = baselines::abm_run(
      cfg, [&](int t) { return in.actions[static_cast<std::size_t>(t)]; }, static_cast<int>(in.observed.size()),
      seed);
  std::vector<double> cases;
  for (const auto& d : result.days) cases.push_back(static_cast<double>(d.new_infections) * ratio);
  return cases;
}

}  // namespace

ReplayResult replay(const ReplayInput& input, SimulatorId sim, int runs, std::uint64_t seed,
                    const DiseaseProfile& profile, const ReplayOptions& opts, const BaselineSettings& baseline) {
  if (runs < 1) throw std::invalid_argument("runs must be >= 1");
  if (input.observed.empty()) throw data::DataError("no observed days to replay for " + input.country);
  if (!(input.population > 0.0)) throw data::DataError("population missing for " + input.country);
  ReplayResult r;
  r.observed = input.observed;
  const Rng root(seed);
  for (int k = 0; k < runs; ++k) {
    const std::uint64_t s = root.split(static_cast<std::uint64_t>(k))();
    std::vector<double> cases;
    switch (sim) {
      case SimulatorId::Sde: cases = run_sde(input, profile, opts, s); break;
      case SimulatorId::Gsir: cases = run_gsir(input, profile, opts, baseline, s); break;
      case SimulatorId::Abm: cases = run_abm(input, baseline, s); break;
    }
    r.errors.push_back(relative_auc_error(cases, r.observed));
    r.runs.push_back(std::move(cases));
  }
  r.mean_error = std::accumulate(r.errors.begin(), r.errors.end(), 0.0) / runs;
  return r;
}

std::vector<ValidationRow> validate_countries(const data::Dataset& ds, std::span<const SimulatorId> simulators,
                                              std::span<const std::string> countries, int runs, std::uint64_t seed,
                                              const ReplayOptions& opts, const BaselineSettings& baseline) {
  std::vector<ValidationRow> out;
  for (const auto& country : countries) {
    const auto input = make_replay_input(ds, country, opts);
    for (auto sim : simulators) {
      ValidationRow row;
      row.country = country;
      row.simulator = sim;
      row.runs = runs;
      try {
        row.mean_error = replay(input, sim, runs, seed, presets::covid(), opts, baseline).mean_error;
      } catch (const std::exception& e) {
        row.flagged = true;
        row.mean_error = std::numeric_limits<double>::quiet_NaN();
        row.note = e.what();
      }
      out.push_back(std::move(row));
    }
  }
  return out;
}

DiseaseProfile sensitivity_base_profile() {
  DiseaseProfile p = presets::covid();
  p.beta_base = 0.01;
  p.rho_base = 0.05;
  return p;
}

std::vector<SensitivityRow> sensitivity_sweep(const DiseaseProfile& base, const ReplayInput& reference,
                                              const SensitivityGrids& grids, int runs, std::uint64_t seed,
                                              const ReplayOptions& opts) {
  std::vector<SensitivityRow> rows;
  ReplayInput idle = reference;
  std::fill(idle.actions.begin(), idle.actions.end(), InterventionLevels{});

  auto sweep = [&](const std::string& name, const std::vector<double>& values, auto&& set) {
    for (double v : values) {
      DiseaseProfile p = base;
      set(p, v);
      p.validate();
      rows.push_back({name, v, replay(idle, SimulatorId::Sde, runs, seed, p, opts).mean_error});
    }
  };
  sweep("mu", grids.mu, [](DiseaseProfile& p, double v) { p.mu0 = v; });
  sweep("beta", grids.beta, [](DiseaseProfile& p, double v) { p.beta_base = v; });
  sweep("delta", grids.delta, [](DiseaseProfile& p, double v) { p.delta = v; });
  sweep("phi", grids.phi, [](DiseaseProfile& p, double v) { p.phi = v; });
  sweep("rho", grids.rho, [](DiseaseProfile& p, double v) { p.rho_base = v; });

  const char* channels[] = {"closure", "vaccination", "quarantine"};
  for (int ch = 0; ch < kNumChannels; ++ch) {
    for (int level : grids.strengths) {
      ReplayInput held = idle;
      for (auto& a : held.actions) a[ch] = level;
      rows.push_back({channels[ch], static_cast<double>(level),
                      replay(held, SimulatorId::Sde, runs, seed, base, opts).mean_error});
    }
  }
  return rows;
}

double error_spread(std::span<const SensitivityRow> rows, std::string_view name) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& r : rows)
    if (r.name == name) lo = std::min(lo, r.mean_error), hi = std::max(hi, r.mean_error);
  if (!(hi >= lo)) throw std::invalid_argument("no sensitivity rows named " + std::string(name));
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

}  // namespace epi::calibration
