#pragma once

#include <string>

#include "dmdp/model_spec.hpp"

namespace dmdp {

/// Optimal value from the initial distribution by both solvers, the policy table and |Phi*|.
std::string cmd_solve(const ModelSpec& spec);

/// Rate report in spec.run.rate_mode: noninteractive, interactive or scalar-protocol.
std::string cmd_rate(const ModelSpec& spec);

/// Tradeoff CSV, one row per lambda per method plus the blind baseline.
std::string cmd_tradeoff(const ModelSpec& spec);

/// Monte Carlo stats CSV for the optimal map and its rate-minimizing encoder.
std::string cmd_simulate(const ModelSpec& spec);

} // namespace dmdp
