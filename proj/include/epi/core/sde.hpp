#pragma once

#include <array>

#include "epi/core/model.hpp"
#include "epi/core/rng.hpp"

namespace epi {

/// I / (S + H + I + Q): the share of the living population that is infected
/// and not quarantining. Throws DegenerateStateError when nobody is alive.
double infectious_fraction(const Compartments& c);

/// Per-day rate of change of every compartment (the drift part of the SDE).
struct Drift {
  double s = 0.0, h = 0.0, i = 0.0, q = 0.0, d = 0.0;

  /// Infection inflow into I: sigma*mu*S*If + delta*mu*H*If.
  double infection_inflow = 0.0;
  /// nu * (I + Q).
  double death_inflow = 0.0;
  /// beta * S, the S -> H vaccination flow.
  double vaccination_flow = 0.0;
};

Drift drift(const Compartments& c, const EffectiveRates& r);

/// Gross flows accumulated over one or more substeps, from drift terms only.
struct Flows {
  double new_infections = 0.0;
  double new_deaths = 0.0;

  Flows& operator+=(const Flows& o) noexcept {
    new_infections += o.new_infections;
    new_deaths += o.new_deaths;
    return *this;
  }
};

/// One independent normal stream per compartment noise channel.
class NoiseStreams {
 public:
  explicit NoiseStreams(const Rng& root)
      : streams_{root.split(0), root.split(1), root.split(2), root.split(3), root.split(4)} {}

  double draw(Compartment c) { return streams_[static_cast<int>(c)].normal(); }

 private:
  std::array<Rng, kNumCompartments> streams_;
};

struct StepResult {
  Compartments state;
  Flows flows;
};

/// Euler-Maruyama update
///   c' = c + drift(c) dt + w_k * c_k * sqrt(dt) * z_k,   z_k ~ N(0, 1) i.i.d.
/// followed by clamping at zero; D never decreases. Draws are skipped entirely
/// for compartments whose diffusion coefficient is zero.
StepResult em_step(const Compartments& c, const EffectiveRates& r, double dt, NoiseStreams& noise);

/// Drift-only Euler step (the w = 0 special case, no clamping).
Compartments euler_step(const Compartments& c, const EffectiveRates& r, double dt);

}  // namespace epi
