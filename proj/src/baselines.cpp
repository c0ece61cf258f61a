#include "rlgnn/baselines.hpp"

#include <bit>
#include <cstdint>
#include <functional>
#include <queue>
#include <string>

#include "rlgnn/errors.hpp"

namespace rlgnn {

Selection greedy_mis(const Graph& g) {
  const std::size_t n = g.node_count();
  Selection chosen(n, false);
  std::vector<bool> removed(n, false);
  std::vector<std::size_t> deg(n);
  using Key = std::pair<std::size_t, NodeId>;
  std::priority_queue<Key, std::vector<Key>, std::greater<>> heap;
  for (NodeId v = 0; v < n; ++v) {
    deg[v] = g.degree(v);
    heap.emplace(deg[v], v);
  }
  while (!heap.empty()) {
    auto [d, v] = heap.top();
    heap.pop();
    if (removed[v] || d != deg[v]) continue;
    chosen[v] = true;
    removed[v] = true;
    for (NodeId w : g.neighbors(v)) {
      if (removed[w]) continue;
      removed[w] = true;
      for (NodeId x : g.neighbors(w)) {
        if (removed[x]) continue;
        --deg[x];
        heap.emplace(deg[x], x);
      }
    }
  }
  return chosen;
}

namespace {

using Mask = std::uint32_t;

struct ExactSearch {
  std::vector<Mask> adj;
  Mask best = 0;
  int best_size = 0;

  void run(Mask current, Mask candidates) {
    int cur = std::popcount(current);
    while (true) {
      if (candidates == 0) {
        if (cur > best_size) {
          best_size = cur;
          best = current;
        }
        return;
      }
      if (cur + std::popcount(candidates) <= best_size) return;

      // Nodes of residual degree <= 1 belong to some maximum set: take them.
      int pick = -1, branch = -1, branch_deg = -1;
      for (Mask rest = candidates; rest; rest &= rest - 1) {
        int v = std::countr_zero(rest);
        int d = std::popcount(adj[v] & candidates);
        if (d <= 1) {
          pick = v;
          break;
        }
        if (d > branch_deg) {
          branch_deg = d;
          branch = v;
        }
      }
      if (pick >= 0) {
        current |= Mask{1} << pick;
        candidates &= ~(adj[pick] | (Mask{1} << pick));
        ++cur;
        continue;
      }
      Mask bit = Mask{1} << branch;
      run(current | bit, candidates & ~(adj[branch] | bit));
      candidates &= ~bit;
    }
  }
};

}  // namespace

Selection exact_mis(const Graph& g) {
  const std::size_t n = g.node_count();
  if (n > kExactMaxNodes)
    throw SizeGuardError("exact solver limited to " + std::to_string(kExactMaxNodes) +
                         " nodes, got " + std::to_string(n));
  ExactSearch s;
  s.adj.assign(n, 0);
  for (auto [u, v] : g.edges()) {
    s.adj[u] |= Mask{1} << v;
    s.adj[v] |= Mask{1} << u;
  }
  Mask all = n == 32 ? ~Mask{0} : (Mask{1} << n) - 1;
  s.run(0, all);
  Selection out(n, false);
  for (std::size_t v = 0; v < n; ++v) out[v] = (s.best >> v) & 1;
  return out;
}

}  // namespace rlgnn
