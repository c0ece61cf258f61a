#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "rlgnn/graph.hpp"

namespace rlgnn::testing {

// G(n, p) with a fixed seed.
inline Graph random_graph(std::size_t n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v)
      if (coin(rng)) edges.emplace_back(u, v);
  return Graph::from_edges(n, edges);
}

inline Graph make_graph(std::size_t n, std::vector<Edge> edges) {
  return Graph::from_edges(n, edges);
}

// Two triangles {0,1,2} and {3,4,5} joined by the bridge (2,3).
inline Graph two_triangles() {
  return make_graph(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}, {2, 3}});
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("rlgnn_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Calls f(labels) for every set partition of n items, as restricted growth
// strings (labels[0] = 0, labels[i] <= 1 + max(labels[0..i-1])).
template <typename F>
void for_each_set_partition(std::size_t n, F&& f) {
  std::vector<std::uint32_t> labels(n, 0);
  auto rec = [&](auto&& self, std::size_t i, std::uint32_t max_label) -> void {
    if (i == n) {
      f(labels);
      return;
    }
    for (std::uint32_t c = 0; c <= max_label + 1; ++c) {
      labels[i] = c;
      self(self, i + 1, std::max(max_label, c));
    }
  };
  if (n == 0) return;
  labels[0] = 0;
  rec(rec, 1, 0);
}

}  // namespace rlgnn::testing
