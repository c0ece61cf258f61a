#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include <json.hpp>

#include "rlgnn/graph.hpp"

namespace rlgnn {

using CommunityId = std::uint32_t;

struct CommunityAssignment {
  // Dense ids 0..community_count()-1.
  std::vector<CommunityId> community_of;

  std::size_t community_count() const;
};

struct PartitionResult {
  CommunityAssignment assignment;
  std::vector<Graph> subgraphs;
  // local_to_global[s][i] is the global id of local node i of subgraph s.
  std::vector<std::vector<NodeId>> local_to_global;
  // Global (u, v) with u < v whose endpoints sit in different communities.
  std::vector<Edge> cross_edges;
  std::vector<bool> cross_node;
  double modularity = 0.0;
  // Modularity of the projected assignment after each Louvain level, with
  // index 0 the singleton partition. Empty when not produced by louvain().
  std::vector<double> level_modularity;

  // Subgraph index and local id of a global node.
  std::pair<std::size_t, NodeId> locate(NodeId global) const {
    return {assignment.community_of[global], global_to_local[global]};
  }

  std::vector<NodeId> global_to_local;
};

// Q = sum_c [in_c/2m - (tot_c/2m)^2] with unit weights. Throws
// DegenerateGraphError on graphs without edges.
double modularity(const Graph& g, const CommunityAssignment& a);

// Inputs of the gain of moving an isolated node i into a target community.
struct GainContext {
  double sigma_in = 0.0;   // internal weight of the target (each edge twice)
  double sigma_tot = 0.0;  // total degree of the target
  double k_i = 0.0;        // degree of i
  double k_i_in = 0.0;     // weight from i into the target
  double m = 0.0;          // total edge weight
};

// k_i_in/m - sigma_tot*k_i/(2m^2).
double modularity_gain(const GainContext& ctx);

// Expanded before/after form of the same gain:
// [(S_in + 2k_i_in)/2m - ((S_tot + k_i)/2m)^2] - [S_in/2m - (S_tot/2m)^2 - (k_i/2m)^2].
// Reference for tests; algebraically equal to modularity_gain.
double modularity_gain_reference(const GainContext& ctx);

struct LouvainMove {
  std::size_t level;
  double predicted_gain;
  // Assignments of the original nodes (not yet renumbered) around the move.
  const std::vector<CommunityId>* before;
  const std::vector<CommunityId>* after;
};

struct LouvainOptions {
  std::uint64_t seed = 0;
  std::size_t max_levels = 16;
  // Communities larger than this are split by recursive Louvain; 0 = no cap.
  std::size_t max_community_size = 0;
  // Test hook; invoked for every accepted move. Slow.
  std::function<void(const LouvainMove&)> on_move;
};

PartitionResult louvain(const Graph& g, const LouvainOptions& opts = {});

PartitionResult extract_subgraphs(const Graph& g, const CommunityAssignment& a);

nlohmann::json partition_report(const PartitionResult& p);
void write_partition_report(const PartitionResult& p, const std::filesystem::path& path);

}  // namespace rlgnn
