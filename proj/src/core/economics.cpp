#include "epi/core/economics.hpp"

#include "epi/core/sde.hpp"

namespace epi {

double economic_cost(const InterventionLevels& action, const Compartments& comp) {
  check_levels(action);
  const double frac = infectious_fraction(comp);
  return action.closure + 5.0 * action.quarantine * frac;
}

}  // namespace epi
