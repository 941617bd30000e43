#pragma once
#include "lagred/reduction.hpp"

namespace lagred {

/// Transport the reduced field back through the quotient chart at symbolic t.
/// The result lives on the full chart and pairs to zero with dt; projecting it
/// through the chart's tangent map recovers the reduced field.
VectorField lift_reduced_field(const ReducedSystem& red);

/// Full dynamics rebuilt from the reduced ones: the prolonged suspension plus
/// the vertical part of the lift. Equal to the dynamical field of a regular
/// Lagrangian.
VectorField reconstruct(const LagrangianSystem& sys, const Connection& c,
                        const ReducedSystem& red);

} // namespace lagred
