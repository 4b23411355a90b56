#pragma once

#include <string>

#include <json.hpp>

#include "epi/env/environment.hpp"

namespace epi::env {

/// Raw spec fields; the profile is stored before the mu override is applied.
void to_json(nlohmann::json& j, const ScenarioSpec& s);
/// Missing keys fall back to the preset named by "base" (default covid_uk).
/// Throws std::invalid_argument on an inconsistent spec.
void from_json(const nlohmann::json& j, ScenarioSpec& s);

/// A shipped preset id, or a path to a scenario JSON file (anything ending in .json).
ScenarioSpec load_scenario(const std::string& id_or_path);

}  // namespace epi::env
