#pragma once

#include <array>
#include <vector>

#include "recip/real.hpp"

namespace recip::env {

// One lane's joint step: full state, joint action, extrinsic rewards and the
// resulting state.
template <class State>
struct JointTransition {
  State state{};
  std::array<int, 2> actions{};
  std::array<double, 2> rewards{};
  State next{};
  int episode = 0;
  int step = 0;
};

template <class State>
struct StepResult {
  std::array<std::vector<double>, 2> rewards;  // per agent, per lane
  std::array<Mat, 2> observations;             // per agent, lanes x features
  bool done = false;
  std::vector<JointTransition<State>> transitions;  // one per lane
};

}  // namespace recip::env
