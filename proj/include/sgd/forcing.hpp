#pragma once

#include <string>
#include <vector>

#include "sgd/fem_space.hpp"

namespace sgd {

/// Names accepted by builtin_forcing.
std::vector<std::string> builtin_forcing_names();

/// Body forces used by the experiments:
///   paper_rotational  min(t,1) (-4y(1-x^2-y^2), 4x(1-x^2-y^2), 0), for a
///                     unit-radius cylinder centred on the z axis;
///   box_rotational    the same profile recentred on the unit box with
///                     x' = 2x-1, y' = 2y-1 and the radial factor clamped at 0;
///   zero.
/// Throws Error(kInvalidArgument) for unknown names.
VectorField builtin_forcing(const std::string& name);

}  // namespace sgd
