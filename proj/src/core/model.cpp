#include "epi/core/model.hpp"

#include <cmath>

namespace epi {

double& Compartments::operator[](Compartment c) noexcept {
  switch (c) {
    case Compartment::S: return s;
    case Compartment::H: return h;
    case Compartment::I: return i;
    case Compartment::Q: return q;
    case Compartment::D: break;
  }
  return d;
}

double Compartments::operator[](Compartment c) const noexcept {
  return const_cast<Compartments&>(*this)[c];
}

void DiseaseProfile::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid disease profile: ") + what);
  };
  const double rates[] = {omega, sigma, natural_death, delta, nu, phi,
                          beta_unit, rho_unit, closure_factor, beta_base, rho_base};
  for (double r : rates) require(std::isfinite(r) && r >= 0.0, "rates must be finite and >= 0");
  require(delta <= sigma, "delta must not exceed sigma");
  require(std::isfinite(mu0) && mu0 > 0.0, "mu0 must be > 0");
  for (double c : w) require(std::isfinite(c) && c >= 0.0, "diffusion coefficients must be >= 0");
}

DiseaseProfile DiseaseProfile::deterministic() const {
  DiseaseProfile p = *this;
  p.w.fill(0.0);
  return p;
}

double death_rate_from_cfr(double cfr, double recovery_rate) {
  if (!(cfr >= 0.0 && cfr < 1.0)) throw std::invalid_argument("cfr must be in [0, 1)");
  return cfr * recovery_rate / (1.0 - cfr);
}

namespace presets {

DiseaseProfile covid() { return DiseaseProfile{}; }

DiseaseProfile polio() {
  DiseaseProfile p;
  p.name = "polio";
  p.sigma = 1.75 * covid().sigma;
  p.delta = 0.25 * p.sigma;  // same protected/unprotected ratio as COVID
  p.phi = 0.1;
  p.nu = death_rate_from_cfr(0.23, p.phi);
  return p;
}

DiseaseProfile influenza() {
  DiseaseProfile p;
  p.name = "influenza";
  p.sigma = 0.5 * covid().sigma;
  p.delta = (1.0 - 0.50) * p.sigma;
  p.phi = 0.14;
  p.nu = death_rate_from_cfr(0.001, p.phi);
  return p;
}

DiseaseProfile measles() {
  DiseaseProfile p;
  p.name = "measles";
  p.sigma = 4.5 * covid().sigma;
  p.delta = (1.0 - 0.99) * p.sigma;
  p.phi = 0.12;
  p.nu = death_rate_from_cfr(0.008, p.phi);
  return p;
}

DiseaseProfile by_name(std::string_view name) {
  if (name == "covid") return covid();
  if (name == "polio") return polio();
  if (name == "influenza") return influenza();
  if (name == "measles") return measles();
  throw std::out_of_range("unknown disease preset: " + std::string(name));
}

std::vector<std::string> names() { return {"covid", "polio", "influenza", "measles"}; }

}  // namespace presets

bool InterventionLevels::valid() const noexcept {
  auto in = [](int v) { return v >= 0 && v <= kMaxLevel; };
  return in(closure) && in(vaccination) && in(quarantine);
}

int InterventionLevels::operator[](int channel) const {
  return const_cast<InterventionLevels&>(*this)[channel];
}

int& InterventionLevels::operator[](int channel) {
  switch (channel) {
    case 0: return closure;
    case 1: return vaccination;
    case 2: return quarantine;
    default: throw std::out_of_range("intervention channel must be 0, 1 or 2");
  }
}

void check_levels(const InterventionLevels& levels) {
  if (!levels.valid()) {
    throw std::invalid_argument("intervention levels must lie in [0, 10]: (" +
                                std::to_string(levels.closure) + "," +
                                std::to_string(levels.vaccination) + "," +
                                std::to_string(levels.quarantine) + ")");
  }
}

EffectiveRates effective_rates(const DiseaseProfile& profile, const InterventionLevels& levels) {
  check_levels(levels);
  EffectiveRates r;
  r.omega = profile.omega;
  r.sigma = profile.sigma;
  r.natural_death = profile.natural_death;
  r.delta = profile.delta;
  r.nu = profile.nu;
  r.phi = profile.phi;
  r.beta = profile.beta_base + profile.beta_unit * levels.vaccination;
  r.rho = profile.rho_base + profile.rho_unit * levels.quarantine;
  r.mu = profile.mu0 / (1.0 + profile.closure_factor * levels.closure);
  r.w = profile.w;
  return r;
}

}  // namespace epi
