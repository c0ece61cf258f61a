#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include <json.hpp>

#include "rlgnn/gcn.hpp"
#include "rlgnn/graph.hpp"
#include "rlgnn/partition.hpp"
#include "rlgnn/rng.hpp"

namespace rlgnn {

// Global selection state: probability per node and its 0.5 binarization.
struct GlobalMask {
  std::vector<double> prob;
  std::vector<bool> chosen;
  std::vector<bool> cross_node;

  GlobalMask() = default;
  GlobalMask(std::vector<double> p, std::vector<bool> cross);

  std::size_t size() const { return prob.size(); }
  void set(NodeId v, double p) {
    prob[v] = p;
    chosen[v] = p >= 0.5;
  }
};

// Cross edges (u < v) with both endpoints chosen.
struct ConflictSet {
  std::vector<Edge> edges;

  bool empty() const { return edges.empty(); }
  std::size_t size() const { return edges.size(); }
};

ConflictSet detect_conflicts(const GlobalMask& mask, std::span<const Edge> cross_edges);

// Which endpoint of a conflict edge (u < v) gets pushed below 0.5.
enum class Endpoint : std::uint8_t { first, second };

inline NodeId target_of(const Edge& e, Endpoint c) {
  return c == Endpoint::first ? e.first : e.second;
}

using ActionMap = std::map<Edge, Endpoint>;

// One pass over conflicts in (min, max) order; each edge targets the
// endpoint incident to more conflict edges (ties: higher degree in `g`,
// then higher id).
ActionMap base_action_linear_cover(const ConflictSet& conflicts, const Graph& g);

// r = new.score - prev.score
double compute_reward(const SolutionMetrics& prev, const SolutionMetrics& next);

struct AgentConfig {
  double epsilon = 0.5;
  double epsilon_decay = 0.9;
  double epsilon_min = 0.05;
  double learning_rate = 0.1;
  double discount = 0.9;
};

// Tabular Q-learning over (conflict edge, endpoint) pairs. All actions taken
// in an episode share the global reward.
class CoordinationAgent {
 public:
  explicit CoordinationAgent(AgentConfig cfg = {});

  double q(const Edge& e, Endpoint c) const;
  void set_q(const Edge& e, Endpoint c, double value) { q_[{e, c}] = value; }
  std::size_t q_size() const { return q_.size(); }
  double epsilon() const { return epsilon_; }
  int episode() const { return episode_; }

  const ActionMap& base_action() const { return base_; }
  // Adds base actions for edges that do not have one yet.
  void merge_base_action(const ActionMap& base);

  // Per edge: with probability epsilon a uniform endpoint, otherwise the
  // higher-Q endpoint with ties going to the base action (first endpoint when
  // no base action exists).
  ActionMap select_actions(const ConflictSet& conflicts, Rng& rng) const;

  // Q <- Q + lr * (r + discount * max_c Q(edge, c) - Q) for every taken
  // action, then decays epsilon and advances the episode counter.
  void update_q(const ActionMap& taken, double reward);

  // Keep-best snapshot; returns true when `score` beat the previous best.
  bool offer(const GlobalMask& mask, double score);
  const GlobalMask& best_mask() const { return best_mask_; }
  double best_score() const { return best_score_; }

 private:
  AgentConfig cfg_;
  std::map<std::pair<Edge, Endpoint>, double> q_;
  ActionMap base_;
  double epsilon_;
  int episode_ = 0;
  GlobalMask best_mask_;
  double best_score_;
};

struct CoordinatorConfig {
  int episodes = 50;
  AgentConfig agent;
  double lambda = 2.0;
  int finetune_budget = 300;
  double conflict_penalty = kDefaultConflictPenalty;
  std::size_t num_workers = 1;
  std::uint64_t seed = 0;
  // Stop after this many non-improving episodes once no conflicts remain.
  int stall_episodes = 5;
  // Test hook, called before each fine-tune job; throwing simulates a
  // worker failure.
  std::function<void(std::uint32_t subgraph, int episode, int attempt)> fault_hook;
};

struct EpisodeRecord {
  int episode = 0;
  std::size_t conflicts = 0;  // cross conflicts after the episode
  std::size_t set_size = 0;
  double score = 0.0;
  double reward = 0.0;
  double epsilon = 0.0;  // exploration rate used for this episode
  double best_score = 0.0;
  std::size_t fine_tuned = 0;  // subgraphs fine-tuned this episode
};

struct CoordinationResult {
  GlobalMask best_mask;
  double initial_score = 0.0;
  double best_score = 0.0;
  std::size_t initial_conflicts = 0;
  std::vector<EpisodeRecord> log;
};

// Runs the episode loop. `models` are updated in place by fine-tuning; only
// subgraphs that own a targeted node are touched in an episode.
CoordinationResult coordinate(const Graph& g, const PartitionResult& partition,
                              std::vector<SubgraphModel>& models, const GlobalMask& mask,
                              const CoordinatorConfig& cfg);

nlohmann::json episode_log_json(std::span<const EpisodeRecord> log);

}  // namespace rlgnn
