#pragma once

#include <optional>
#include <vector>

#include "dmdp/mdp.hpp"

namespace dmdp {

/// Value that may be the bottom element (minus infinity), kept explicit rather than a
/// large negative float.
using Extended = std::optional<double>;

/// max c'x subject to A x = b, x >= 0, with b >= 0. Two-phase simplex with Bland's rule.
/// Returns nullopt when infeasible. The feasible region must be bounded.
std::optional<double> lp_maximize(const Matrix& a, const Vector& b, const Vector& c);

/// Least concave majorant of (points, values) over the convex hull of the finite points,
/// evaluated at every point. Points are distributions of equal dimension. A point outside
/// the hull of finite points stays at the bottom element.
std::vector<Extended> upper_concave_envelope(const std::vector<Vector>& points,
                                             const std::vector<Extended>& values);

} // namespace dmdp
