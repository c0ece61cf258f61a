#include "rlgnn/partition.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "rlgnn/errors.hpp"
#include "rlgnn/log.hpp"
#include "rlgnn/rng.hpp"

namespace rlgnn {

std::size_t CommunityAssignment::community_count() const {
  if (community_of.empty()) return 0;
  return static_cast<std::size_t>(*std::max_element(community_of.begin(), community_of.end())) + 1;
}

double modularity(const Graph& g, const CommunityAssignment& a) {
  if (a.community_of.size() != g.node_count())
    throw ContractError("assignment size does not match node count");
  if (g.edge_count() == 0) throw DegenerateGraphError("modularity undefined for m = 0");
  const double two_m = 2.0 * static_cast<double>(g.edge_count());
  std::vector<double> in(a.community_count(), 0.0), tot(a.community_count(), 0.0);
  for (NodeId v = 0; v < g.node_count(); ++v) tot[a.community_of[v]] += static_cast<double>(g.degree(v));
  for (auto [u, v] : g.edges())
    if (a.community_of[u] == a.community_of[v]) in[a.community_of[u]] += 2.0;
  double q = 0.0;
  for (std::size_t c = 0; c < in.size(); ++c) q += in[c] / two_m - (tot[c] / two_m) * (tot[c] / two_m);
  return q;
}

double modularity_gain(const GainContext& ctx) {
  return ctx.k_i_in / ctx.m - ctx.sigma_tot * ctx.k_i / (2.0 * ctx.m * ctx.m);
}

double modularity_gain_reference(const GainContext& c) {
  const double two_m = 2.0 * c.m;
  const double after = (c.sigma_in + 2.0 * c.k_i_in) / two_m -
                       ((c.sigma_tot + c.k_i) / two_m) * ((c.sigma_tot + c.k_i) / two_m);
  const double before = c.sigma_in / two_m - (c.sigma_tot / two_m) * (c.sigma_tot / two_m) -
                        (c.k_i / two_m) * (c.k_i / two_m);
  return after - before;
}

namespace {

// Weighted graph used across Louvain levels. self_loop[i] holds the weight
// of edges collapsed inside super-node i (each counted once).
struct WeightedGraph {
  std::vector<std::vector<std::pair<NodeId, double>>> adj;
  std::vector<double> self_loop;
  std::vector<double> degree;
  double total_weight = 0.0;

  std::size_t size() const { return adj.size(); }

  static WeightedGraph from(const Graph& g) {
    WeightedGraph w;
    const std::size_t n = g.node_count();
    w.adj.resize(n);
    w.self_loop.assign(n, 0.0);
    w.degree.assign(n, 0.0);
    for (NodeId v = 0; v < n; ++v) {
      for (NodeId u : g.neighbors(v)) w.adj[v].emplace_back(u, 1.0);
      w.degree[v] = static_cast<double>(g.degree(v));
    }
    w.total_weight = static_cast<double>(g.edge_count());
    return w;
  }
};

// Renumbers community ids densely by order of first appearance.
std::size_t renumber(std::vector<CommunityId>& comm) {
  std::unordered_map<CommunityId, CommunityId> remap;
  for (auto& c : comm) {
    auto [it, inserted] = remap.try_emplace(c, static_cast<CommunityId>(remap.size()));
    c = it->second;
  }
  return remap.size();
}

WeightedGraph aggregate(const WeightedGraph& w, const std::vector<CommunityId>& comm,
                        std::size_t count) {
  WeightedGraph out;
  out.adj.resize(count);
  out.self_loop.assign(count, 0.0);
  out.degree.assign(count, 0.0);
  out.total_weight = w.total_weight;
  std::vector<std::unordered_map<NodeId, double>> links(count);
  for (NodeId v = 0; v < w.size(); ++v) {
    const CommunityId cv = comm[v];
    out.self_loop[cv] += w.self_loop[v];
    out.degree[cv] += w.degree[v];
    for (auto [u, wt] : w.adj[v]) {
      const CommunityId cu = comm[u];
      if (cu == cv) {
        if (u > v) out.self_loop[cv] += wt;
      } else {
        links[cv][cu] += wt;
      }
    }
  }
  for (std::size_t c = 0; c < count; ++c) {
    out.adj[c].assign(links[c].begin(), links[c].end());
    std::sort(out.adj[c].begin(), out.adj[c].end());
  }
  return out;
}

struct LevelOutcome {
  std::vector<CommunityId> comm;
  std::size_t moves = 0;
};

// Local-moving phase on one level. `node_of` maps original nodes to the
// current level's super-nodes; only used to report moves to the observer.
LevelOutcome local_moves(const WeightedGraph& w, Rng& rng, std::size_t level,
                         const LouvainOptions& opts, const std::vector<NodeId>& node_of) {
  const std::size_t n = w.size();
  const double m = w.total_weight;
  LevelOutcome out;
  out.comm.resize(n);
  std::iota(out.comm.begin(), out.comm.end(), 0);
  std::vector<double> tot(w.degree);

  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<double> weight_to(n, 0.0);
  std::vector<CommunityId> touched;
  std::vector<CommunityId> projected_before, projected_after;

  bool improved = true;
  while (improved) {
    improved = false;
    for (NodeId i : order) {
      const CommunityId own = out.comm[i];
      const double k_i = w.degree[i];
      touched.clear();
      for (auto [j, wt] : w.adj[i]) {
        const CommunityId c = out.comm[j];
        if (weight_to[c] == 0.0) touched.push_back(c);
        weight_to[c] += wt;
      }
      tot[own] -= k_i;
      auto gain_for = [&](CommunityId c) {
        return modularity_gain({0.0, tot[c], k_i, weight_to[c], m});
      };
      const double own_gain = gain_for(own);
      CommunityId best = own;
      double best_gain = -std::numeric_limits<double>::infinity();
      for (CommunityId c : touched) {
        if (c == own) continue;
        const double gain = gain_for(c);
        if (gain > best_gain || (gain == best_gain && c < best)) {
          best_gain = gain;
          best = c;
        }
      }
      constexpr double kMinImprovement = 1e-12;
      if (best != own && best_gain - own_gain > kMinImprovement) {
        if (opts.on_move) {
          projected_before.resize(node_of.size());
          for (std::size_t v = 0; v < node_of.size(); ++v) projected_before[v] = out.comm[node_of[v]];
        }
        out.comm[i] = best;
        tot[best] += k_i;
        ++out.moves;
        improved = true;
        if (opts.on_move) {
          projected_after.resize(node_of.size());
          for (std::size_t v = 0; v < node_of.size(); ++v) projected_after[v] = out.comm[node_of[v]];
          opts.on_move({level, best_gain - own_gain, &projected_before, &projected_after});
        }
      } else {
        tot[own] += k_i;
      }
      for (CommunityId c : touched) weight_to[c] = 0.0;
    }
  }
  return out;
}

std::vector<CommunityId> louvain_assignment(const Graph& g, const LouvainOptions& opts,
                                            std::vector<double>* level_q) {
  const std::size_t n = g.node_count();
  std::vector<NodeId> node_of(n);
  std::iota(node_of.begin(), node_of.end(), 0);
  std::vector<CommunityId> result(node_of.begin(), node_of.end());
  if (g.edge_count() == 0) return result;

  Rng rng(opts.seed);
  WeightedGraph w = WeightedGraph::from(g);
  if (level_q) level_q->push_back(modularity(g, {result}));
  for (std::size_t level = 0; level < opts.max_levels; ++level) {
    LevelOutcome lvl = local_moves(w, rng, level, opts, node_of);
    if (lvl.moves == 0) break;
    const std::size_t count = renumber(lvl.comm);
    for (std::size_t v = 0; v < n; ++v) node_of[v] = lvl.comm[node_of[v]];
    w = aggregate(w, lvl.comm, count);
    if (level_q) level_q->push_back(modularity(g, {std::vector<CommunityId>(node_of)}));
    if (count == 1) break;
  }
  return {node_of.begin(), node_of.end()};
}

// Splits communities above the size budget, recursing with Louvain first and
// falling back to contiguous chunks when Louvain cannot split further.
void enforce_size_cap(const Graph& g, std::vector<CommunityId>& comm, const LouvainOptions& opts,
                      std::size_t depth) {
  const std::size_t cap = opts.max_community_size;
  std::size_t count = renumber(comm);
  std::vector<std::vector<NodeId>> members(count);
  for (NodeId v = 0; v < g.node_count(); ++v) members[comm[v]].push_back(v);

  CommunityId next = static_cast<CommunityId>(count);
  for (std::size_t c = 0; c < count; ++c) {
    if (members[c].size() <= cap) continue;
    const Graph sub = g.induced(members[c]);
    LouvainOptions sub_opts;
    sub_opts.seed = derive_seed(opts.seed, depth * 1000003 + c);
    sub_opts.max_levels = opts.max_levels;
    sub_opts.max_community_size = cap;
    std::vector<CommunityId> sub_comm = louvain_assignment(sub, sub_opts, nullptr);
    if (renumber(sub_comm) > 1 && depth < 32) {
      enforce_size_cap(sub, sub_comm, sub_opts, depth + 1);
    } else {
      for (std::size_t i = 0; i < sub_comm.size(); ++i)
        sub_comm[i] = static_cast<CommunityId>(i / cap);
    }
    renumber(sub_comm);
    for (std::size_t i = 0; i < members[c].size(); ++i) {
      comm[members[c][i]] = sub_comm[i] == 0 ? static_cast<CommunityId>(c) : next + sub_comm[i] - 1;
    }
    next += *std::max_element(sub_comm.begin(), sub_comm.end());
  }
  renumber(comm);
}

}  // namespace

PartitionResult louvain(const Graph& g, const LouvainOptions& opts) {
  std::vector<double> level_q;
  std::vector<CommunityId> comm = louvain_assignment(g, opts, &level_q);
  if (opts.max_community_size > 0) enforce_size_cap(g, comm, opts, 0);
  renumber(comm);
  PartitionResult p = extract_subgraphs(g, {std::move(comm)});
  p.level_modularity = std::move(level_q);
  return p;
}

PartitionResult extract_subgraphs(const Graph& g, const CommunityAssignment& a) {
  const std::size_t n = g.node_count();
  if (a.community_of.size() != n) throw ContractError("assignment does not cover all nodes");
  PartitionResult p;
  p.assignment = a;
  const std::size_t count = a.community_count();
  p.local_to_global.assign(count, {});
  p.global_to_local.assign(n, 0);
  for (NodeId v = 0; v < n; ++v) {
    auto& members = p.local_to_global[a.community_of[v]];
    p.global_to_local[v] = static_cast<NodeId>(members.size());
    members.push_back(v);
  }
  p.subgraphs.reserve(count);
  for (const auto& members : p.local_to_global) p.subgraphs.push_back(g.induced(members));
  p.cross_node.assign(n, false);
  for (auto [u, v] : g.edges()) {
    if (a.community_of[u] != a.community_of[v]) {
      p.cross_edges.emplace_back(u, v);
      p.cross_node[u] = p.cross_node[v] = true;
    }
  }
  if (g.edge_count() == 0) {
    log::warn("partition of a graph without edges: modularity undefined, reported as 0");
    p.modularity = 0.0;
  } else {
    p.modularity = modularity(g, a);
  }
  return p;
}

nlohmann::json partition_report(const PartitionResult& p) {
  nlohmann::json j;
  j["modularity"] = p.modularity;
  j["community_count"] = p.subgraphs.size();
  j["communities"] = p.local_to_global;
  auto& cross = j["cross_edges"] = nlohmann::json::array();
  for (auto [u, v] : p.cross_edges) cross.push_back({u, v});
  if (!p.level_modularity.empty()) j["level_modularity"] = p.level_modularity;
  return j;
}

void write_partition_report(const PartitionResult& p, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << partition_report(p).dump(2) << '\n';
}

}  // namespace rlgnn
