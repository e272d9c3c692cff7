#pragma once

#include <vector>

#include "bayescat/core_types.hpp"
#include "bayescat/priors.hpp"
#include "bayescat/tree.hpp"

namespace bayescat {

// The sampled state (tau, V, H, Theta).
struct ModelState {
  Tree tree;
  TreeHistory history;
  Parameters params;

  friend auto operator==(const ModelState&, const ModelState&) -> bool = default;
};

inline auto node_length(const ModelState& s, NodeId n) -> int {
  return n == s.tree.root() ? s.history.root_length : s.history.edge(n).child_length;
}

}  // namespace bayescat
