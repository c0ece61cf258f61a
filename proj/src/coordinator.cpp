#include "rlgnn/coordinator.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "rlgnn/errors.hpp"
#include "rlgnn/log.hpp"
#include "rlgnn/runtime.hpp"

namespace rlgnn {

GlobalMask::GlobalMask(std::vector<double> p, std::vector<bool> cross)
    : prob(std::move(p)), chosen(prob.size()), cross_node(std::move(cross)) {
  if (cross_node.size() != prob.size()) throw ContractError("mask arrays differ in size");
  for (std::size_t v = 0; v < prob.size(); ++v) chosen[v] = prob[v] >= 0.5;
}

ConflictSet detect_conflicts(const GlobalMask& mask, std::span<const Edge> cross_edges) {
  ConflictSet out;
  for (auto [u, v] : cross_edges) {
    if (u >= mask.size() || v >= mask.size()) throw ContractError("cross edge outside mask");
    if (mask.chosen[u] && mask.chosen[v]) out.edges.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

ActionMap base_action_linear_cover(const ConflictSet& conflicts, const Graph& g) {
  std::map<NodeId, std::size_t> conflict_degree;
  for (auto [u, v] : conflicts.edges) {
    ++conflict_degree[u];
    ++conflict_degree[v];
  }
  std::vector<Edge> ordered = conflicts.edges;
  std::sort(ordered.begin(), ordered.end());
  ActionMap out;
  for (const Edge& e : ordered) {
    auto key = [&](NodeId x) { return std::tuple(conflict_degree[x], g.degree(x), x); };
    out[e] = key(e.first) > key(e.second) ? Endpoint::first : Endpoint::second;
  }
  return out;
}

double compute_reward(const SolutionMetrics& prev, const SolutionMetrics& next) {
  return next.score - prev.score;
}

CoordinationAgent::CoordinationAgent(AgentConfig cfg)
    : cfg_(cfg),
      epsilon_(std::clamp(cfg.epsilon, 0.0, 1.0)),
      best_score_(-std::numeric_limits<double>::infinity()) {}

double CoordinationAgent::q(const Edge& e, Endpoint c) const {
  auto it = q_.find({e, c});
  return it == q_.end() ? 0.0 : it->second;
}

void CoordinationAgent::merge_base_action(const ActionMap& base) {
  for (const auto& [e, c] : base) base_.try_emplace(e, c);
}

ActionMap CoordinationAgent::select_actions(const ConflictSet& conflicts, Rng& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ActionMap out;
  for (const Edge& e : conflicts.edges) {
    if (unit(rng) < epsilon_) {
      out[e] = unit(rng) < 0.5 ? Endpoint::first : Endpoint::second;
      continue;
    }
    const double qf = q(e, Endpoint::first);
    const double qs = q(e, Endpoint::second);
    if (qf > qs) {
      out[e] = Endpoint::first;
    } else if (qs > qf) {
      out[e] = Endpoint::second;
    } else {
      auto it = base_.find(e);
      out[e] = it == base_.end() ? Endpoint::first : it->second;
    }
  }
  return out;
}

void CoordinationAgent::update_q(const ActionMap& taken, double reward) {
  for (const auto& [e, c] : taken) {
    const double current = q(e, c);
    const double next_max = std::max(q(e, Endpoint::first), q(e, Endpoint::second));
    q_[{e, c}] = current + cfg_.learning_rate * (reward + cfg_.discount * next_max - current);
  }
  epsilon_ = std::max(cfg_.epsilon_min, epsilon_ * cfg_.epsilon_decay);
  ++episode_;
}

bool CoordinationAgent::offer(const GlobalMask& mask, double score) {
  if (score <= best_score_) return false;
  best_score_ = score;
  best_mask_ = mask;
  return true;
}

namespace {

struct FineTuneJob {
  std::uint32_t subgraph = 0;
  std::vector<NodeId> targets;  // local ids
  SubgraphModel model;
  TrainReport report;
};

}  // namespace

CoordinationResult coordinate(const Graph& g, const PartitionResult& partition,
                              std::vector<SubgraphModel>& models, const GlobalMask& initial,
                              const CoordinatorConfig& cfg) {
  if (initial.size() != g.node_count()) throw ContractError("mask does not cover the graph");
  if (models.size() != partition.subgraphs.size())
    throw ContractError("one model per subgraph required");

  CoordinationAgent agent(cfg.agent);
  Rng rng(derive_seed(cfg.seed, 0xc0de));
  GlobalMask mask = initial;
  SolutionMetrics prev = evaluate_solution(g, mask.chosen, cfg.conflict_penalty);

  CoordinationResult result;
  result.initial_score = prev.score;
  agent.offer(mask, prev.score);

  ConflictSet conflicts = detect_conflicts(mask, partition.cross_edges);
  result.initial_conflicts = conflicts.size();
  if (conflicts.empty()) {
    result.best_mask = mask;
    result.best_score = prev.score;
    return result;
  }
  agent.merge_base_action(base_action_linear_cover(conflicts, g));

  WorkerPool pool(std::max<std::size_t>(cfg.num_workers, 1));
  int stalled = 0;
  for (int episode = 1; episode <= cfg.episodes; ++episode) {
    if (conflicts.empty() && stalled >= cfg.stall_episodes) break;
    const double epsilon_used = agent.epsilon();
    ActionMap actions;
    std::vector<FineTuneJob> jobs;
    if (!conflicts.empty()) {
      agent.merge_base_action(base_action_linear_cover(conflicts, g));
      actions = agent.select_actions(conflicts, rng);

      std::map<std::uint32_t, std::vector<NodeId>> per_subgraph;
      for (const auto& [e, c] : actions) {
        auto [s, local] = partition.locate(target_of(e, c));
        per_subgraph[static_cast<std::uint32_t>(s)].push_back(local);
      }
      for (auto& [s, targets] : per_subgraph) {
        std::sort(targets.begin(), targets.end());
        targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
        jobs.push_back({s, std::move(targets), {}, {}});
      }
    }

    std::vector<std::size_t> sizes;
    for (const auto& job : jobs) sizes.push_back(partition.subgraphs[job.subgraph].node_count());
    const auto lanes = assign_and_bucket(sizes, pool.width());
    for (int attempt = 1;; ++attempt) {
      auto errors = pool.run(lanes, jobs.size(), [&](std::size_t t, std::size_t) {
        FineTuneJob& job = jobs[t];
        if (cfg.fault_hook) cfg.fault_hook(job.subgraph, episode, attempt);
        job.model = models[job.subgraph];
        job.report = fine_tune(job.model, partition.subgraphs[job.subgraph], job.targets, cfg.lambda,
                               cfg.finetune_budget);
      });
      auto failed = std::find_if(errors.begin(), errors.end(), [](auto& e) { return e != nullptr; });
      if (failed == errors.end()) break;
      if (attempt >= 2) {
        std::string what = "unknown error";
        try {
          std::rethrow_exception(*failed);
        } catch (const std::exception& e) {
          what = e.what();
        } catch (...) {
        }
        throw StageError("stage3", "episode " + std::to_string(episode) + " failed twice: " + what);
      }
      log::warn("episode " + std::to_string(episode) + " aborted, retrying");
    }

    std::size_t tuned = 0;
    for (auto& job : jobs) {
      if (job.report.diverged) {
        log::warn("fine-tune of subgraph " + std::to_string(job.subgraph) +
                  " produced non-finite loss, update skipped");
        continue;
      }
      models[job.subgraph] = std::move(job.model);
      const auto& map = partition.local_to_global[job.subgraph];
      for (std::size_t i = 0; i < map.size(); ++i) mask.set(map[i], job.report.probabilities[i]);
      ++tuned;
    }

    const SolutionMetrics next = evaluate_solution(g, mask.chosen, cfg.conflict_penalty);
    const double reward = compute_reward(prev, next);
    if (!actions.empty()) agent.update_q(actions, reward);
    const bool improved = agent.offer(mask, next.score);
    stalled = improved ? 0 : stalled + 1;
    conflicts = detect_conflicts(mask, partition.cross_edges);

    EpisodeRecord rec;
    rec.episode = episode;
    rec.conflicts = conflicts.size();
    rec.set_size = next.set_size;
    rec.score = next.score;
    rec.reward = reward;
    rec.epsilon = epsilon_used;
    rec.best_score = agent.best_score();
    rec.fine_tuned = tuned;
    result.log.push_back(rec);
    prev = next;
  }

  result.best_mask = agent.best_mask();
  result.best_score = agent.best_score();
  return result;
}

nlohmann::json episode_log_json(std::span<const EpisodeRecord> log) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : log) {
    out.push_back({{"episode", r.episode},
                   {"conflicts", r.conflicts},
                   {"set_size", r.set_size},
                   {"score", r.score},
                   {"reward", r.reward},
                   {"epsilon", r.epsilon},
                   {"best_score", r.best_score},
                   {"fine_tuned", r.fine_tuned}});
  }
  return out;
}

}  // namespace rlgnn
