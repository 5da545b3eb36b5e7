#pragma once

#include "recip/nn/param_vector.hpp"

namespace recip {

// Floating-point type used by rollout agents, environments' observations
// and learned estimators.
using Real = float;
using Mat = nn::Matrix<Real>;
using Vec = nn::Vector<Real>;

}  // namespace recip
