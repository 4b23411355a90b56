#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "epi/core/model.hpp"
#include "epi/core/simulate.hpp"

namespace epi {

using json = nlohmann::json;

void to_json(json& j, const Compartments& c);
void from_json(const json& j, Compartments& c);
void to_json(json& j, const InterventionLevels& a);
void from_json(const json& j, InterventionLevels& a);

/// Missing keys fall back to the COVID preset (or to the preset named by
/// "preset" when present).
void to_json(json& j, const DiseaseProfile& p);
void from_json(const json& j, DiseaseProfile& p);
void to_json(json& j, const SimConfig& c);
void from_json(const json& j, SimConfig& c);

/// Header: day,s,h,i,q,d,new_infections,new_deaths,a_c,a_v,a_q,r1,r2,r3
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
json trajectory_to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const json& j);

/// Reads {"profile": {...}, "sim": {...}} from a JSON file. Either key may be absent.
struct ModelConfig {
  DiseaseProfile profile;
  SimConfig sim;
};
ModelConfig load_model_config(const std::string& path);
json model_config_to_json(const ModelConfig& cfg);

}  // namespace epi
