#include "rlgnn/graph.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <tuple>

#include "rlgnn/errors.hpp"
#include "rlgnn/log.hpp"
#include "rlgnn/rng.hpp"

namespace rlgnn {

Graph Graph::from_edges(std::size_t node_count, std::span<const Edge> edges,
                        std::size_t* dropped_self_loops,
                        std::size_t* dropped_duplicates) {
  std::vector<Edge> norm;
  norm.reserve(edges.size());
  std::size_t loops = 0;
  for (auto [u, v] : edges) {
    if (u >= node_count || v >= node_count)
      throw ContractError("edge endpoint out of range");
    if (u == v) {
      ++loops;
      continue;
    }
    norm.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(norm.begin(), norm.end());
  auto last = std::unique(norm.begin(), norm.end());
  std::size_t dups = static_cast<std::size_t>(norm.end() - last);
  norm.erase(last, norm.end());

  if (dropped_self_loops) *dropped_self_loops = loops;
  if (dropped_duplicates) *dropped_duplicates = dups;

  Graph g;
  g.offsets_.assign(node_count + 1, 0);
  for (auto [u, v] : norm) {
    ++g.offsets_[u + 1];
    ++g.offsets_[v + 1];
  }
  for (std::size_t i = 0; i < node_count; ++i) g.offsets_[i + 1] += g.offsets_[i];
  g.adjacency_.resize(2 * norm.size());
  std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  // Edges are sorted by (u, v), so pushing v into u's list and u into v's
  // list in this order leaves every neighbor list sorted.
  for (auto [u, v] : norm) g.adjacency_[cursor[u]++] = v;
  for (auto [u, v] : norm) g.adjacency_[cursor[v]++] = u;
  for (std::size_t i = 0; i < node_count; ++i)
    std::sort(g.adjacency_.begin() + g.offsets_[i], g.adjacency_.begin() + g.offsets_[i + 1]);
  g.edges_ = std::move(norm);
  return g;
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

Graph Graph::induced(std::span<const NodeId> nodes) const {
  std::map<NodeId, NodeId> local;
  for (std::size_t i = 0; i < nodes.size(); ++i) local[nodes[i]] = static_cast<NodeId>(i);
  std::vector<Edge> sub;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (NodeId w : neighbors(nodes[i])) {
      auto it = local.find(w);
      if (it != local.end() && it->second > i)
        sub.emplace_back(static_cast<NodeId>(i), it->second);
    }
  }
  return from_edges(nodes.size(), sub);
}

std::uint64_t Graph::content_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t x) {
    for (int i = 0; i < 8; ++i) {
      h ^= (x >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  mix(node_count());
  for (auto [u, v] : edges_) {
    mix(u);
    mix(v);
  }
  return h;
}

namespace {

bool parse_int(std::string_view tok, std::int64_t& out) {
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && p == tok.data() + tok.size();
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

EdgeListData load_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);

  std::vector<std::pair<std::int64_t, std::int64_t>> raw;
  std::int64_t declared_nodes = -1;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks[0].front() == '#') {
      // "# nodes: N" header written by write_edge_list.
      if (toks.size() >= 3 && (toks[0] == "#" && toks[1] == "nodes:")) {
        std::int64_t n = 0;
        if (parse_int(toks[2], n) && n >= 0) declared_nodes = n;
      }
      continue;
    }
    std::int64_t u = 0, v = 0;
    if (toks.size() < 2 || !parse_int(toks[0], u) || !parse_int(toks[1], v))
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                           ": expected two integer node ids",
                       lineno);
    raw.emplace_back(u, v);
  }

  EdgeListData out;
  bool identity = declared_nodes > 0;
  for (auto [u, v] : raw)
    if (u < 0 || v < 0 || u >= declared_nodes || v >= declared_nodes) identity = false;

  std::vector<Edge> edges;
  edges.reserve(raw.size());
  if (identity) {
    out.original_ids.resize(static_cast<std::size_t>(declared_nodes));
    for (std::size_t i = 0; i < out.original_ids.size(); ++i)
      out.original_ids[i] = static_cast<std::int64_t>(i);
    for (auto [u, v] : raw) edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
  } else {
    std::vector<std::int64_t> ids;
    ids.reserve(2 * raw.size());
    for (auto [u, v] : raw) {
      ids.push_back(u);
      ids.push_back(v);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    auto dense = [&ids](std::int64_t x) {
      return static_cast<NodeId>(std::lower_bound(ids.begin(), ids.end(), x) - ids.begin());
    };
    for (auto [u, v] : raw) edges.emplace_back(dense(u), dense(v));
    out.original_ids = std::move(ids);
  }
  if (out.original_ids.empty()) throw ParseError(path.string() + ": graph has no nodes", 0);

  out.graph = Graph::from_edges(out.original_ids.size(), edges, &out.dropped_self_loops,
                                &out.dropped_duplicates);
  if (out.dropped_self_loops || out.dropped_duplicates) {
    std::ostringstream msg;
    msg << path.string() << ": dropped " << out.dropped_self_loops << " self-loops and "
        << out.dropped_duplicates << " duplicate edges";
    log::warn(msg.str());
  }
  return out;
}

void write_edge_list(const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "# nodes: " << g.node_count() << " edges: " << g.edge_count() << '\n';
  for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

void write_id_map(std::span<const std::int64_t> original_ids,
                  const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "# dense original\n";
  for (std::size_t i = 0; i < original_ids.size(); ++i) out << i << ' ' << original_ids[i] << '\n';
}

namespace {

constexpr int kRegularMaxTries = 1000;

// One attempt of the stub-pairing construction: shuffle the remaining stubs,
// keep every pair that forms a new simple edge, and put the rest back.
// Returns false when the leftover stubs cannot form any valid edge.
bool try_pairing(std::size_t n, std::size_t d, Rng& rng, std::set<Edge>& edges) {
  edges.clear();
  std::vector<NodeId> stubs;
  stubs.reserve(n * d);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t v = 0; v < n; ++v) stubs.push_back(static_cast<NodeId>(v));

  while (!stubs.empty()) {
    std::shuffle(stubs.begin(), stubs.end(), rng);
    std::map<NodeId, std::size_t> leftover;
    for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
      NodeId a = std::min(stubs[i], stubs[i + 1]);
      NodeId b = std::max(stubs[i], stubs[i + 1]);
      if (a != b && !edges.contains({a, b})) {
        edges.insert({a, b});
      } else {
        ++leftover[a];
        ++leftover[b];
      }
    }
    if (leftover.empty()) return true;
    bool suitable = false;
    for (auto it = leftover.begin(); it != leftover.end() && !suitable; ++it)
      for (auto jt = std::next(it); jt != leftover.end(); ++jt)
        if (!edges.contains({it->first, jt->first})) {
          suitable = true;
          break;
        }
    if (!suitable) return false;
    stubs.clear();
    for (auto [v, c] : leftover) stubs.insert(stubs.end(), c, v);
  }
  return true;
}

}  // namespace

Graph generate_regular(std::size_t n, std::size_t d, std::uint64_t seed) {
  if ((n * d) % 2 != 0) throw ParameterError("n*d must be even");
  if (d >= n) throw ParameterError("degree must be smaller than node count");
  if (d == 0) return Graph::from_edges(n, {});

  Rng rng(seed);
  std::set<Edge> edges;
  for (int attempt = 0; attempt < kRegularMaxTries; ++attempt) {
    if (try_pairing(n, d, rng, edges)) {
      std::vector<Edge> list(edges.begin(), edges.end());
      return Graph::from_edges(n, list);
    }
  }
  throw ParameterError("failed to generate a regular graph after bounded retries");
}

SolutionMetrics evaluate_solution(const Graph& g, const Selection& sel, double conflict_penalty) {
  if (sel.size() != g.node_count())
    throw ContractError("selection size does not match node count");
  SolutionMetrics m;
  for (bool c : sel) m.set_size += c;
  for (auto [u, v] : g.edges())
    if (sel[u] && sel[v]) ++m.conflict_count;
  m.conflict_rate = m.set_size == 0 ? 0.0
                                    : static_cast<double>(m.conflict_count) /
                                          static_cast<double>(m.set_size);
  m.score = static_cast<double>(m.set_size) -
            conflict_penalty * static_cast<double>(m.conflict_count);
  return m;
}

Selection repair_selection(const Graph& g, const Selection& sel) {
  if (sel.size() != g.node_count())
    throw ContractError("selection size does not match node count");
  Selection out = sel;
  const std::size_t n = g.node_count();
  std::vector<std::size_t> chosen_nb(n, 0);
  for (auto [u, v] : g.edges()) {
    if (out[u] && out[v]) {
      ++chosen_nb[u];
      ++chosen_nb[v];
    }
  }
  // Max-heap on (chosen neighbors, degree, id) with lazy invalidation.
  using Key = std::tuple<std::size_t, std::size_t, NodeId>;
  std::priority_queue<Key> heap;
  for (NodeId v = 0; v < n; ++v)
    if (out[v] && chosen_nb[v] > 0) heap.emplace(chosen_nb[v], g.degree(v), v);

  while (!heap.empty()) {
    auto [cnt, deg, v] = heap.top();
    heap.pop();
    if (!out[v] || chosen_nb[v] != cnt || cnt == 0) continue;
    out[v] = false;
    for (NodeId w : g.neighbors(v)) {
      if (!out[w]) continue;
      --chosen_nb[w];
      if (chosen_nb[w] > 0) heap.emplace(chosen_nb[w], g.degree(w), w);
    }
    chosen_nb[v] = 0;
  }
  return out;
}

}  // namespace rlgnn
