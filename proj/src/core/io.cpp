#include "epi/core/io.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace epi {

void to_json(json& j, const Compartments& c) {
  j = json{{"s", c.s}, {"h", c.h}, {"i", c.i}, {"q", c.q}, {"d", c.d}};
}

void from_json(const json& j, Compartments& c) {
  c.s = j.value("s", 0.0);
  c.h = j.value("h", 0.0);
  c.i = j.value("i", 0.0);
  c.q = j.value("q", 0.0);
  c.d = j.value("d", 0.0);
}

void to_json(json& j, const InterventionLevels& a) {
  j = json{{"c", a.closure}, {"v", a.vaccination}, {"q", a.quarantine}};
}

void from_json(const json& j, InterventionLevels& a) {
  if (j.is_array()) {
    if (j.size() != 3) throw std::invalid_argument("action array must have 3 entries");
    a = {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
    return;
  }
  a.closure = j.value("c", 0);
  a.vaccination = j.value("v", 0);
  a.quarantine = j.value("q", 0);
}

void to_json(json& j, const DiseaseProfile& p) {
  j = json{{"name", p.name},
           {"omega", p.omega},
           {"sigma", p.sigma},
           {"natural_death", p.natural_death},
           {"delta", p.delta},
           {"nu", p.nu},
           {"phi", p.phi},
           {"mu0", p.mu0},
           {"beta_unit", p.beta_unit},
           {"rho_unit", p.rho_unit},
           {"closure_factor", p.closure_factor},
           {"beta_base", p.beta_base},
           {"rho_base", p.rho_base},
           {"w", p.w}};
}

void from_json(const json& j, DiseaseProfile& p) {
  p = presets::by_name(j.value("preset", std::string("covid")));
  p.name = j.value("name", p.name);
  p.omega = j.value("omega", p.omega);
  p.sigma = j.value("sigma", p.sigma);
  p.natural_death = j.value("natural_death", p.natural_death);
  p.delta = j.value("delta", p.delta);
  p.nu = j.value("nu", p.nu);
  p.phi = j.value("phi", p.phi);
  p.mu0 = j.value("mu0", p.mu0);
  p.beta_unit = j.value("beta_unit", p.beta_unit);
  p.rho_unit = j.value("rho_unit", p.rho_unit);
  p.closure_factor = j.value("closure_factor", p.closure_factor);
  p.beta_base = j.value("beta_base", p.beta_base);
  p.rho_base = j.value("rho_base", p.rho_base);
  if (j.contains("w")) {
    const auto& w = j.at("w");
    if (w.is_number()) {
      p.w.fill(w.get<double>());
    } else {
      p.w = w.get<std::array<double, kNumCompartments>>();
    }
  }
  p.validate();
}

void to_json(json& j, const SimConfig& c) {
  j = json{{"dt", c.dt},
           {"steps_per_day", c.steps_per_day},
           {"horizon_days", c.horizon_days},
           {"population_scale", c.population_scale},
           {"rng_seed", c.rng_seed},
           {"record_substeps", c.record_substeps}};
}

void from_json(const json& j, SimConfig& c) {
  c = SimConfig{};
  c.steps_per_day = j.value("steps_per_day", c.steps_per_day);
  c.dt = j.value("dt", 1.0 / c.steps_per_day);
  c.horizon_days = j.value("horizon_days", c.horizon_days);
  c.population_scale = j.value("population_scale", c.population_scale);
  c.rng_seed = j.value("rng_seed", c.rng_seed);
  c.record_substeps = j.value("record_substeps", c.record_substeps);
  c.validate();
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "day,s,h,i,q,d,new_infections,new_deaths,a_c,a_v,a_q,r1,r2,r3\n";
  const auto old_precision = out.precision(17);
  for (const auto& r : traj.days) {
    out << r.day << ',' << r.state.s << ',' << r.state.h << ',' << r.state.i << ',' << r.state.q << ','
        << r.state.d << ',' << r.new_infections << ',' << r.new_deaths << ',' << r.action.closure << ','
        << r.action.vaccination << ',' << r.action.quarantine << ',' << r.reward[0] << ',' << r.reward[1]
        << ',' << r.reward[2] << '\n';
  }
  out.precision(old_precision);
}

json trajectory_to_json(const Trajectory& traj) {
  json days = json::array();
  for (const auto& r : traj.days) {
    days.push_back({{"day", r.day},
                    {"state", r.state},
                    {"new_infections", r.new_infections},
                    {"new_deaths", r.new_deaths},
                    {"action", r.action},
                    {"reward", r.reward}});
  }
  return {{"initial", traj.initial}, {"days", days}};
}

Trajectory trajectory_from_json(const json& j) {
  Trajectory t;
  t.initial = j.at("initial").get<Compartments>();
  for (const auto& d : j.at("days")) {
    DayRecord r;
    r.day = d.at("day").get<int>();
    r.state = d.at("state").get<Compartments>();
    r.new_infections = d.at("new_infections").get<double>();
    r.new_deaths = d.at("new_deaths").get<double>();
    r.action = d.at("action").get<InterventionLevels>();
    r.reward = d.at("reward").get<RewardVector>();
    t.days.push_back(r);
  }
  return t;
}

ModelConfig load_model_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  const json j = json::parse(in);
  ModelConfig cfg;
  if (j.contains("profile")) cfg.profile = j.at("profile").get<DiseaseProfile>();
  if (j.contains("sim")) cfg.sim = j.at("sim").get<SimConfig>();
  return cfg;
}

json model_config_to_json(const ModelConfig& cfg) { return {{"profile", cfg.profile}, {"sim", cfg.sim}}; }

}  // namespace epi
