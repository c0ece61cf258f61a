#include <doctest.h>

#include "rlgnn/baselines.hpp"
#include "rlgnn/errors.hpp"
#include "test_util.hpp"

using namespace rlgnn;
using rlgnn::testing::make_graph;
using rlgnn::testing::random_graph;

namespace {

// Independence number by enumerating all 2^n subsets.
std::size_t enumerate_mis_size(const Graph& g) {
  const std::size_t n = g.node_count();
  std::vector<std::uint32_t> adj(n, 0);
  for (auto [u, v] : g.edges()) {
    adj[u] |= 1u << v;
    adj[v] |= 1u << u;
  }
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    bool ok = true;
    for (std::size_t v = 0; v < n && ok; ++v)
      if ((mask >> v) & 1) ok = (adj[v] & mask) == 0;
    if (ok) best = std::max<std::size_t>(best, static_cast<std::size_t>(__builtin_popcount(mask)));
  }
  return best;
}

std::size_t size_of(const Selection& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), true)); }

}  // namespace

TEST_CASE("greedy_mis") {
  Graph k3 = make_graph(3, {{0, 1}, {1, 2}, {0, 2}});
  CHECK(size_of(greedy_mis(k3)) == 1);

  Graph star = make_graph(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  CHECK(greedy_mis(star) == Selection{false, true, true, true, true});

  CHECK(size_of(greedy_mis(make_graph(4, {}))) == 4);
}

TEST_CASE("greedy_mis is always valid") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Graph g = random_graph(60, 0.1, seed);
    CHECK(evaluate_solution(g, greedy_mis(g)).conflict_count == 0);
  }
  Graph r = generate_regular(200, 20, 1);
  CHECK(evaluate_solution(r, greedy_mis(r)).conflict_count == 0);
}

TEST_CASE("exact_mis known graphs") {
  Graph c5 = make_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}});
  CHECK(size_of(exact_mis(c5)) == 2);
  Graph k4 = make_graph(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  CHECK(size_of(exact_mis(k4)) == 1);
  CHECK(size_of(exact_mis(make_graph(0, {}))) == 0);
  CHECK(size_of(exact_mis(make_graph(30, {}))) == 30);
}

TEST_CASE("exact_mis matches bitmask enumeration and dominates greedy") {
  const double densities[] = {0.1, 0.3, 0.5, 0.8};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::size_t n = 4 + seed % 13;  // 4..16
    Graph g = random_graph(n, densities[seed % 4], 1000 + seed);
    auto exact = exact_mis(g);
    CHECK(evaluate_solution(g, exact).conflict_count == 0);
    CHECK(size_of(exact) == enumerate_mis_size(g));
    CHECK(size_of(exact) >= size_of(greedy_mis(g)));
  }
}

TEST_CASE("exact_mis size guard") {
  CHECK_THROWS_AS(exact_mis(make_graph(31, {})), SizeGuardError);
  Graph g = random_graph(30, 0.3, 4);
  CHECK(evaluate_solution(g, exact_mis(g)).conflict_count == 0);
}
