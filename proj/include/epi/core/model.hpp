#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace epi {

/// Raised when a state has no living population (S+H+I+Q = 0).
class DegenerateStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Index of each compartment in per-compartment arrays.
enum class Compartment : int { S = 0, H = 1, I = 2, Q = 3, D = 4 };
inline constexpr int kNumCompartments = 5;

/// Population groups at one instant, in simulated-individual units.
struct Compartments {
  double s = 0.0;  ///< susceptible
  double h = 0.0;  ///< healthy / protected
  double i = 0.0;  ///< infected, transmitting
  double q = 0.0;  ///< infected, quarantined
  double d = 0.0;  ///< deceased (disease-induced)

  /// S + H + I + Q; the dead neither give birth nor make contacts.
  double living() const noexcept { return s + h + i + q; }
  double total() const noexcept { return living() + d; }

  double& operator[](Compartment c) noexcept;
  double operator[](Compartment c) const noexcept;

  std::array<double, kNumCompartments> as_array() const noexcept { return {s, h, i, q, d}; }
  static Compartments from_array(const std::array<double, kNumCompartments>& v) noexcept {
    return {v[0], v[1], v[2], v[3], v[4]};
  }

  bool operator==(const Compartments&) const = default;
};

/// Epidemiological rate constants plus per-compartment diffusion coefficients.
/// Rates are per day.
struct DiseaseProfile {
  std::string name = "covid";
  double omega = 0.000047;          ///< birth rate
  double sigma = 0.020;             ///< transmission rate, unprotected
  double natural_death = 0.000018;  ///< a
  double delta = 0.005;             ///< transmission rate, protected
  double nu = 0.0014;               ///< disease-induced death rate
  double phi = 0.14;                ///< recovery rate
  double mu0 = 10.0;                ///< baseline daily interactions
  double beta_unit = 0.0005;        ///< vaccination rate per action level
  double rho_unit = 0.01;           ///< quarantine rate per action level
  double closure_factor = 0.2;      ///< contact divisor increment per closure level
  double beta_base = 0.0;           ///< vaccination rate with no intervention
  double rho_base = 0.0;            ///< quarantine rate with no intervention
  std::array<double, kNumCompartments> w{0.05, 0.05, 0.05, 0.05, 0.05};

  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const;

  /// Same profile with all diffusion coefficients set to zero.
  DiseaseProfile deterministic() const;

  bool operator==(const DiseaseProfile&) const = default;
};

/// Daily death rate implied by a case fatality ratio: nu = cfr * phi / (1 - cfr).
double death_rate_from_cfr(double cfr, double recovery_rate);

namespace presets {
DiseaseProfile covid();
/// 1.75x COVID transmission, 23% CFR, recovery 0.1/day.
DiseaseProfile polio();
/// 0.5x COVID transmission, 0.1% CFR, recovery 0.14/day, 50% vaccine efficacy.
DiseaseProfile influenza();
/// 4.5x COVID transmission, 0.8% CFR, recovery 0.12/day, 99% vaccine efficacy.
DiseaseProfile measles();

/// Looks up a preset by name; throws std::out_of_range for unknown names.
DiseaseProfile by_name(std::string_view name);
std::vector<std::string> names();
}  // namespace presets

inline constexpr int kMaxLevel = 10;
inline constexpr int kLevelsPerChannel = kMaxLevel + 1;
inline constexpr int kNumChannels = 3;

/// Discrete intervention strengths, each in {0..10}.
struct InterventionLevels {
  int closure = 0;
  int vaccination = 0;
  int quarantine = 0;

  bool valid() const noexcept;
  int sum() const noexcept { return closure + vaccination + quarantine; }
  int operator[](int channel) const;
  int& operator[](int channel);

  bool operator==(const InterventionLevels&) const = default;
};

/// Throws std::invalid_argument if any level is outside [0, 10].
void check_levels(const InterventionLevels& levels);

/// Profile constants with the intervention-dependent rates resolved.
struct EffectiveRates {
  double omega = 0.0;
  double sigma = 0.0;
  double natural_death = 0.0;
  double delta = 0.0;
  double nu = 0.0;
  double phi = 0.0;
  double beta = 0.0;  ///< vaccination rate
  double rho = 0.0;   ///< quarantine rate
  double mu = 0.0;    ///< daily interactions
  std::array<double, kNumCompartments> w{};
};

/// beta = beta_unit * a_v, rho = rho_unit * a_q, mu = mu0 / (1 + closure_factor * a_c)
/// (plus the profile's base rates, zero in every shipped preset).
EffectiveRates effective_rates(const DiseaseProfile& profile, const InterventionLevels& levels);

}  // namespace epi
