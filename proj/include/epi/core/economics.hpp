#pragma once

#include "epi/core/model.hpp"

namespace epi {

/// Daily economic impact of an action:
///   a_c + 5 * a_q * I / N,   N = living population.
/// Closure and quarantine weigh the same once 20% of the living population is
/// infected. Throws DegenerateStateError when N = 0.
double economic_cost(const InterventionLevels& action, const Compartments& comp);

}  // namespace epi
