#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace rlgnn {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

// Immutable simple undirected graph in CSR form.
//
// Node ids are dense 0..node_count()-1. Edges are stored once with u < v,
// sorted lexicographically; neighbor lists are sorted ascending.
class Graph {
 public:
  Graph() = default;

  // Builds a graph from an arbitrary edge list. Self-loops and duplicate
  // (including mirrored) edges are dropped; the counts are reported through
  // the optional out-parameters.
  static Graph from_edges(std::size_t node_count, std::span<const Edge> edges,
                          std::size_t* dropped_self_loops = nullptr,
                          std::size_t* dropped_duplicates = nullptr);

  std::size_t node_count() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t edge_count() const { return edges_.size(); }

  std::span<const NodeId> neighbors(NodeId v) const {
    return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
  }
  std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }
  std::span<const Edge> edges() const { return edges_; }
  bool has_edge(NodeId u, NodeId v) const;

  // Induced subgraph on `nodes` (global ids). Local id i corresponds to nodes[i].
  Graph induced(std::span<const NodeId> nodes) const;

  // FNV-1a digest over node count and edge list.
  std::uint64_t content_hash() const;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> adjacency_;
  std::vector<Edge> edges_;
};

// Result of reading an edge-list file: the graph plus the map from dense id
// back to the id used in the file.
struct EdgeListData {
  Graph graph;
  std::vector<std::int64_t> original_ids;
  std::size_t dropped_self_loops = 0;
  std::size_t dropped_duplicates = 0;
};

// Reads a SNAP-style edge list: one "u v" pair per line, '#' comments.
// Ids are remapped to dense ranks of the original ids. A "# nodes: N" header
// (as written by write_edge_list) keeps ids as-is when they all lie in
// [0, N), which preserves isolated nodes.
EdgeListData load_edge_list(const std::filesystem::path& path);

void write_edge_list(const Graph& g, const std::filesystem::path& path);

// Writes "dense original" lines for the id map produced by load_edge_list.
void write_id_map(std::span<const std::int64_t> original_ids,
                  const std::filesystem::path& path);

// Random simple d-regular graph on n nodes, deterministic in `seed`.
Graph generate_regular(std::size_t n, std::size_t d, std::uint64_t seed);

// Per-node selection mask.
using Selection = std::vector<bool>;

inline constexpr double kDefaultConflictPenalty = 2.0;

struct SolutionMetrics {
  std::size_t set_size = 0;
  std::size_t conflict_count = 0;
  double conflict_rate = 0.0;
  double score = 0.0;
  double runtime_s = 0.0;
};

SolutionMetrics evaluate_solution(const Graph& g, const Selection& sel,
                                  double conflict_penalty = kDefaultConflictPenalty);

// Drops chosen nodes until no edge has both endpoints chosen. The node
// removed at each step has the most chosen neighbors (ties: higher degree,
// then higher id). Output is a subset of `sel`.
Selection repair_selection(const Graph& g, const Selection& sel);

}  // namespace rlgnn
