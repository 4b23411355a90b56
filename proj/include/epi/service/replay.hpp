#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "epi/calibration/calibration.hpp"
#include "epi/data/dataset.hpp"

namespace epi::service {

/// ISO-3 code for a few common country names ("UK", "United States", ...);
/// anything else is returned upper-cased.
std::string country_code(std::string name);

/// Overlay-ready replay of one country: observed series, every simulated run
/// and the relative AUC errors. Throws calibration::CountryNotFoundError.
nlohmann::json replay_country(const data::Dataset& ds, const std::string& country, calibration::SimulatorId sim,
                              int runs = 10, std::uint64_t seed = 0,
                              const calibration::ReplayOptions& opts = {});

}  // namespace epi::service
