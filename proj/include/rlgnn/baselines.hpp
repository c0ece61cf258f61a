#pragma once

#include "rlgnn/graph.hpp"

namespace rlgnn {

// Min-degree greedy: repeatedly take the lowest-degree node of the residual
// graph (ties: lowest id) and delete it together with its neighbors.
Selection greedy_mis(const Graph& g);

inline constexpr std::size_t kExactMaxNodes = 30;

// Maximum independent set by branch and bound over 32-bit masks.
// Throws SizeGuardError above kExactMaxNodes nodes.
Selection exact_mis(const Graph& g);

}  // namespace rlgnn
