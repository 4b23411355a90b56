#include "epi/core/sde.hpp"

#include <algorithm>
#include <cmath>

namespace epi {

double infectious_fraction(const Compartments& c) {
  const double n = c.living();
  if (!(n > 0.0)) throw DegenerateStateError("living population is zero");
  return c.i / n;
}

Drift drift(const Compartments& c, const EffectiveRates& r) {
  const double n = c.living();
  const double frac = infectious_fraction(c);
  const double a = r.natural_death;

  const double infect_s = r.sigma * r.mu * c.s * frac;
  const double infect_h = r.delta * r.mu * c.h * frac;

  Drift f;
  f.infection_inflow = infect_s + infect_h;
  f.death_inflow = r.nu * (c.i + c.q);
  f.vaccination_flow = r.beta * c.s;

  f.s = r.omega * n - infect_s - (a + r.beta) * c.s;
  f.h = r.beta * c.s + r.phi * c.i + r.phi * c.q - infect_h - a * c.h;
  f.i = f.infection_inflow - (a + r.nu + r.phi + r.rho) * c.i;
  f.q = r.rho * c.i - (a + r.nu + r.phi) * c.q;
  f.d = f.death_inflow;
  return f;
}

Compartments euler_step(const Compartments& c, const EffectiveRates& r, double dt) {
  const Drift f = drift(c, r);
  return {c.s + f.s * dt, c.h + f.h * dt, c.i + f.i * dt, c.q + f.q * dt, c.d + f.d * dt};
}

StepResult em_step(const Compartments& c, const EffectiveRates& r, double dt, NoiseStreams& noise) {
  const Drift f = drift(c, r);
  const double sqrt_dt = std::sqrt(dt);

  const std::array<double, kNumCompartments> rate{f.s, f.h, f.i, f.q, f.d};
  const auto now = c.as_array();
  std::array<double, kNumCompartments> next{};
  for (int k = 0; k < kNumCompartments; ++k) {
    double x = now[k] + rate[k] * dt;
    if (r.w[k] != 0.0) x += r.w[k] * now[k] * sqrt_dt * noise.draw(static_cast<Compartment>(k));
    next[k] = std::max(x, 0.0);
  }
  next[4] = std::max(next[4], now[4]);

  StepResult out;
  out.state = Compartments::from_array(next);
  out.flows.new_infections = f.infection_inflow * dt;
  out.flows.new_deaths = f.death_inflow * dt;
  return out;
}

}  // namespace epi
