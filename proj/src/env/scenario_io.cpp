#include "epi/env/scenario_io.hpp"

#include <fstream>
#include <stdexcept>

#include "epi/core/io.hpp"

namespace epi::env {

using nlohmann::json;

void to_json(json& j, const ScenarioSpec& s) {
  json infected = s.infected.kind == InitialInfected::Kind::Fixed
                      ? json{{"kind", "fixed"}, {"value", s.infected.fixed}}
                      : json{{"kind", "uniform"}, {"lo", s.infected.lo}, {"hi", s.infected.hi}};
  j = json{{"id", s.id},
           {"profile", s.profile},
           {"sim", s.sim},
           {"population", s.population},
           {"initial_infected", infected},
           {"mu", s.mu_override ? json(*s.mu_override) : json(nullptr)},
           {"coverage", s.coverage},
           {"allowed", {{"c", s.allowed[0]}, {"v", s.allowed[1]}, {"q", s.allowed[2]}}},
           {"deterministic", s.deterministic}};
}

void from_json(const json& j, ScenarioSpec& s) {
  if (!j.is_object()) throw std::invalid_argument("scenario must be a JSON object");
  s = scenarios::by_id(j.value("base", std::string("covid_uk")));
  s.id = j.value("id", s.id);
  if (j.contains("profile")) s.profile = j.at("profile").get<DiseaseProfile>();
  if (j.contains("sim")) s.sim = j.at("sim").get<SimConfig>();
  s.population = j.value("population", s.population);
  if (j.contains("initial_infected")) {
    const auto& inf = j.at("initial_infected");
    if (inf.is_number_integer()) {
      s.infected = InitialInfected::exactly(inf.get<int>());
    } else {
      const auto kind = inf.at("kind").get<std::string>();
      if (kind == "fixed") s.infected = InitialInfected::exactly(inf.at("value").get<int>());
      else if (kind == "uniform") s.infected = InitialInfected::uniform(inf.at("lo").get<int>(), inf.at("hi").get<int>());
      else throw std::invalid_argument("initial_infected kind must be fixed or uniform, got " + kind);
    }
  }
  if (j.contains("mu")) {
    s.mu_override = j.at("mu").is_null() ? std::nullopt : std::optional<double>(j.at("mu").get<double>());
  }
  s.coverage = j.value("coverage", s.coverage);
  if (j.contains("allowed")) {
    const auto& a = j.at("allowed");
    s.allowed = {a.value("c", true), a.value("v", true), a.value("q", true)};
  }
  s.deterministic = j.value("deterministic", s.deterministic);
  s.validate();
}

ScenarioSpec load_scenario(const std::string& id_or_path) {
  if (!id_or_path.ends_with(".json")) return scenarios::by_id(id_or_path);
  std::ifstream in(id_or_path);
  if (!in) throw std::runtime_error("cannot open scenario file " + id_or_path);
  return json::parse(in).get<ScenarioSpec>();
}

}  // namespace epi::env
