#include <doctest.h>

#include <set>

#include "rlgnn/coordinator.hpp"
#include "rlgnn/errors.hpp"
#include "rlgnn/log.hpp"
#include "rlgnn/runtime.hpp"
#include "test_util.hpp"

using namespace rlgnn;
using rlgnn::testing::make_graph;

namespace {

GlobalMask mask_of(std::vector<double> p) {
  std::vector<bool> cross(p.size(), false);
  return GlobalMask(std::move(p), std::move(cross));
}

struct Trained {
  PartitionResult partition;
  std::vector<SubgraphModel> models;
  GlobalMask mask;
};

Trained train_all(const Graph& g, const CommunityAssignment& a, std::uint64_t seed) {
  Trained t;
  t.partition = extract_subgraphs(g, a);
  std::vector<std::vector<double>> probs;
  for (std::size_t s = 0; s < t.partition.subgraphs.size(); ++s) {
    auto m = init_model(t.partition.subgraphs[s], Hyperparams{}, derive_seed(seed, s),
                        static_cast<std::uint32_t>(s));
    probs.push_back(train(m, t.partition.subgraphs[s]).probabilities);
    t.models.push_back(std::move(m));
  }
  t.mask = scatter_probabilities(t.partition, probs);
  return t;
}

}  // namespace

TEST_CASE("GlobalMask binarizes at one half") {
  auto m = mask_of({0.5, 0.4999, 0.9});
  CHECK(m.chosen == std::vector<bool>{true, false, true});
  m.set(0, 0.2);
  CHECK_FALSE(m.chosen[0]);
  CHECK_THROWS_AS(GlobalMask({0.1}, {false, true}), ContractError);
}

TEST_CASE("detect_conflicts") {
  auto m = mask_of({0.9, 0.8, 0.1, 0.7});
  std::vector<Edge> cross{{0, 1}, {1, 2}, {3, 0}, {2, 3}};
  auto c = detect_conflicts(m, cross);
  CHECK(c.edges == std::vector<Edge>{{0, 1}, {0, 3}});
  CHECK(detect_conflicts(mask_of({0.1, 0.1, 0.1, 0.1}), cross).empty());
}

TEST_CASE("base_action_linear_cover") {
  // Star of conflicts around node 1: it is the endpoint in every edge.
  Graph g = make_graph(4, {{0, 1}, {1, 2}, {1, 3}});
  ConflictSet c{{{0, 1}, {1, 2}, {1, 3}}};
  auto a = base_action_linear_cover(c, g);
  CHECK(a.at({0, 1}) == Endpoint::second);
  CHECK(a.at({1, 2}) == Endpoint::first);
  CHECK(a.at({1, 3}) == Endpoint::first);

  // Equal conflict degree: the higher graph degree, then the higher id.
  Graph h = make_graph(5, {{0, 1}, {1, 4}, {2, 3}});
  auto b = base_action_linear_cover(ConflictSet{{{0, 1}, {2, 3}}}, h);
  CHECK(b.at({0, 1}) == Endpoint::second);
  CHECK(b.at({2, 3}) == Endpoint::second);
}

TEST_CASE("select_actions") {
  ConflictSet c{{{1, 2}}};
  Rng rng(1);

  SUBCASE("greedy follows Q") {
    CoordinationAgent agent({.epsilon = 0.0});
    agent.set_q({1, 2}, Endpoint::first, 1.0);
    agent.set_q({1, 2}, Endpoint::second, 0.2);
    CHECK(agent.select_actions(c, rng).at({1, 2}) == Endpoint::first);
  }
  SUBCASE("unseen edge takes the base action") {
    CoordinationAgent agent({.epsilon = 0.0});
    agent.merge_base_action({{{1, 2}, Endpoint::second}});
    CHECK(agent.select_actions(c, rng).at({1, 2}) == Endpoint::second);
    CoordinationAgent bare({.epsilon = 0.0});
    CHECK(bare.select_actions(c, rng).at({1, 2}) == Endpoint::first);
  }
  SUBCASE("full exploration is uniform") {
    CoordinationAgent agent({.epsilon = 1.0});
    agent.set_q({1, 2}, Endpoint::first, 5.0);
    int first = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) first += agent.select_actions(c, rng).at({1, 2}) == Endpoint::first;
    CHECK(std::abs(first / double(draws) - 0.5) <= 0.01);
  }
  SUBCASE("one action per conflict edge") {
    CoordinationAgent agent({.epsilon = 0.5});
    ConflictSet many{{{0, 5}, {1, 2}, {3, 4}}};
    auto a = agent.select_actions(many, rng);
    CHECK(a.size() == 3);
  }
}

TEST_CASE("compute_reward") {
  SolutionMetrics a{.score = 10.0}, b{.score = 12.0};
  CHECK(compute_reward(a, b) == 2.0);
  CHECK(compute_reward(a, a) == 0.0);
  Graph edge = make_graph(2, {{0, 1}});
  auto before = evaluate_solution(edge, {true, true});
  auto after = evaluate_solution(edge, {true, false});
  CHECK(compute_reward(before, after) == doctest::Approx(1.0));
}

TEST_CASE("update_q") {
  const Edge e{0, 1};
  CoordinationAgent agent({.epsilon = 0.5, .epsilon_decay = 0.5, .epsilon_min = 0.2,
                           .learning_rate = 0.1, .discount = 0.9});
  agent.update_q({{e, Endpoint::first}}, 1.0);
  CHECK(agent.q(e, Endpoint::first) == doctest::Approx(0.1 + 0.1 * 0.9 * 0.0));
  CHECK(agent.epsilon() == doctest::Approx(0.25));
  CHECK(agent.episode() == 1);
  agent.update_q({}, 0.0);
  CHECK(agent.epsilon() == doctest::Approx(0.2));

  CoordinationAgent zero;
  zero.update_q({{e, Endpoint::second}}, 0.0);
  CHECK(zero.q(e, Endpoint::second) == 0.0);
  CHECK(zero.q(e, Endpoint::first) == 0.0);

  CoordinationAgent rep;
  for (int i = 0; i < 3; ++i) {
    rep.update_q({{e, Endpoint::second}}, 1.0);
    CHECK(rep.q(e, Endpoint::second) > rep.q(e, Endpoint::first));
  }
}

TEST_CASE("offer keeps the best") {
  CoordinationAgent agent;
  CHECK(agent.offer(mask_of({0.9}), 1.0));
  CHECK_FALSE(agent.offer(mask_of({0.1}), 0.5));
  CHECK_FALSE(agent.offer(mask_of({0.2}), 1.0));
  CHECK(agent.best_mask().prob == std::vector<double>{0.9});
  CHECK(agent.best_score() == 1.0);
}

TEST_CASE("coordinate with no conflicts runs no episodes") {
  Graph g = make_graph(4, {{0, 1}, {2, 3}});
  auto t = train_all(g, {{0, 0, 1, 1}}, 1);
  const auto before = t.models;
  auto r = coordinate(g, t.partition, t.models, t.mask, {});
  CHECK(r.log.empty());
  CHECK(r.best_mask.prob == t.mask.prob);
  CHECK(r.initial_conflicts == 0);
  CHECK(t.models[0].weight == before[0].weight);
}

TEST_CASE("coordinate resolves a single cross edge") {
  log::set_quiet(true);
  Graph g = make_graph(2, {{0, 1}});
  auto t = train_all(g, {{0, 1}}, 3);
  REQUIRE(t.mask.chosen == std::vector<bool>{true, true});
  auto r = coordinate(g, t.partition, t.models, t.mask, {.seed = 5});
  CHECK(r.initial_conflicts == 1);
  REQUIRE_FALSE(r.log.empty());
  const auto m = evaluate_solution(g, r.best_mask.chosen);
  CHECK(m.set_size == 1);
  CHECK(m.conflict_count == 0);
  CHECK(r.best_score == doctest::Approx(1.0));
  CHECK(r.initial_score == doctest::Approx(0.0));
}

TEST_CASE("coordinate properties on a regular graph") {
  log::set_quiet(true);
  Graph g = generate_regular(80, 6, 2);
  auto p = louvain(g, {.seed = 2});
  auto t = train_all(g, p.assignment, 2);
  const auto initial_models = t.models;
  CoordinatorConfig cfg;
  cfg.episodes = 15;
  cfg.seed = 9;
  cfg.agent.epsilon = 0.3;

  std::set<NodeId> targeted_subgraphs;
  cfg.fault_hook = [&](std::uint32_t s, int, int) { targeted_subgraphs.insert(s); };
  auto r = coordinate(g, t.partition, t.models, t.mask, cfg);

  CHECK(r.best_score >= r.initial_score);
  double running = r.initial_score;
  for (const auto& rec : r.log) {
    CHECK(rec.best_score >= running);
    running = rec.best_score;
    CHECK(rec.best_score >= rec.score);
  }
  CHECK(r.best_score == running);
  CHECK(evaluate_solution(g, r.best_mask.chosen, cfg.conflict_penalty).score == doctest::Approx(r.best_score));

  // Models never fine-tuned are left bit-identical.
  for (std::size_t s = 0; s < t.models.size(); ++s)
    if (!targeted_subgraphs.count(static_cast<std::uint32_t>(s)))
      CHECK(t.models[s].weight == initial_models[s].weight);
}

TEST_CASE("coordinate action targets are endpoints of current conflicts") {
  // Every targeted node must be chosen and cross: check via the agent API
  // over one step of the loop.
  Graph g = generate_regular(60, 6, 4);
  auto p = louvain(g, {.seed = 4});
  auto t = train_all(g, p.assignment, 4);
  auto conflicts = detect_conflicts(t.mask, t.partition.cross_edges);
  REQUIRE_FALSE(conflicts.empty());
  CoordinationAgent agent({.epsilon = 0.5});
  agent.merge_base_action(base_action_linear_cover(conflicts, g));
  Rng rng(0);
  auto actions = agent.select_actions(conflicts, rng);
  CHECK(actions.size() == conflicts.size());
  for (const auto& [e, c] : actions) {
    const NodeId v = target_of(e, c);
    CHECK(t.mask.chosen[v]);
    CHECK(t.partition.cross_node[v]);
    CHECK(std::binary_search(conflicts.edges.begin(), conflicts.edges.end(), e));
  }
}

TEST_CASE("coordinate retries a failed episode once") {
  log::set_quiet(true);
  Graph g = make_graph(2, {{0, 1}});
  auto t = train_all(g, {{0, 1}}, 3);

  SUBCASE("transient failure is absorbed") {
    CoordinatorConfig cfg;
    int calls = 0;
    cfg.fault_hook = [&](std::uint32_t, int episode, int attempt) {
      ++calls;
      if (episode == 1 && attempt == 1) throw std::runtime_error("worker lost");
    };
    auto r = coordinate(g, t.partition, t.models, t.mask, cfg);
    CHECK(calls >= 2);
    CHECK(evaluate_solution(g, r.best_mask.chosen).conflict_count == 0);
  }
  SUBCASE("persistent failure surfaces as a stage error") {
    CoordinatorConfig cfg;
    cfg.fault_hook = [](std::uint32_t, int, int) { throw std::runtime_error("worker lost"); };
    try {
      coordinate(g, t.partition, t.models, t.mask, cfg);
      FAIL("expected StageError");
    } catch (const StageError& e) {
      CHECK(e.stage == "stage3");
    }
  }
}

TEST_CASE("coordinate is deterministic") {
  Graph g = generate_regular(60, 6, 7);
  auto p = louvain(g, {.seed = 7});
  auto a = train_all(g, p.assignment, 7), b = train_all(g, p.assignment, 7);
  CoordinatorConfig cfg;
  cfg.seed = 3;
  cfg.episodes = 10;
  auto ra = coordinate(g, a.partition, a.models, a.mask, cfg);
  cfg.num_workers = 3;
  auto rb = coordinate(g, b.partition, b.models, b.mask, cfg);
  CHECK(ra.best_mask.prob == rb.best_mask.prob);
  CHECK(ra.log.size() == rb.log.size());
}

TEST_CASE("episode log json") {
  EpisodeRecord r{.episode = 1, .conflicts = 2, .set_size = 10, .score = 6.0};
  auto j = episode_log_json(std::vector<EpisodeRecord>{r});
  CHECK(j.size() == 1);
  CHECK(j[0]["conflicts"] == 2);
  CHECK(j[0]["score"] == 6.0);
}
