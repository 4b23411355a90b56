#include "epi/service/replay.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace epi::service {

std::string country_code(std::string name) {
  static const std::map<std::string, std::string> aliases{
      {"UK", "GBR"},          {"UNITED KINGDOM", "GBR"}, {"US", "USA"},        {"UNITED STATES", "USA"},
      {"IT", "ITA"},          {"ITALY", "ITA"},          {"AR", "ARG"},        {"ARGENTINA", "ARG"},
      {"NZ", "NZL"},          {"NEW ZEALAND", "NZL"},    {"VN", "VNM"},        {"VIETNAM", "VNM"},
      {"VIET NAM", "VNM"}};
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::toupper(c); });
  const auto it = aliases.find(name);
  return it == aliases.end() ? name : it->second;
}

nlohmann::json replay_country(const data::Dataset& ds, const std::string& country, calibration::SimulatorId sim,
                              int runs, std::uint64_t seed, const calibration::ReplayOptions& opts) {
  const auto code = country_code(country);
  const auto input = calibration::make_replay_input(ds, code, opts);
  const auto result = calibration::replay(input, sim, runs, seed, presets::covid(), opts);
  return {{"country", code},
          {"simulator", calibration::simulator_name(sim)},
          {"start", data::format_date(input.start)},
          {"observed", result.observed},
          {"runs", result.runs},
          {"errors", result.errors},
          {"mean_error", result.mean_error}};
}

}  // namespace epi::service
