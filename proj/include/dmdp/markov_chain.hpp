#pragma once

#include <vector>

#include "dmdp/mdp.hpp"

namespace dmdp {

/// Closed communicating classes (recurrent classes) of a finite chain, each sorted,
/// ordered by smallest member.
std::vector<std::vector<int>> closed_classes(const Matrix& transition);

/// States reachable (in zero or more steps) from any state with positive initial mass.
std::vector<bool> reachable_states(const Matrix& transition, const Vector& initial);

/// Cesaro limit of initial * P^t: absorption mass into each closed class times that
/// class's stationary distribution. Well defined for periodic and multichain P.
Vector long_run_distribution(const Matrix& transition, const Vector& initial);

/// Stationary (long-run) state distribution of the chain induced by phi from mdp.initial().
Vector stationary_distribution(const FactoredMdp& mdp, const ControlMap& phi);

} // namespace dmdp
