#include <doctest.h>

#include <atomic>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "rlgnn/checkpoint.hpp"
#include "rlgnn/errors.hpp"
#include "rlgnn/log.hpp"
#include "rlgnn/runtime.hpp"
#include "test_util.hpp"

using namespace rlgnn;
using rlgnn::testing::make_graph;
using rlgnn::testing::TempDir;

namespace {

using Lanes = std::vector<std::vector<std::size_t>>;

// Four communities of 30, 20, 20, 10 nodes, each a cycle, joined by a chain.
Graph four_blocks(std::vector<CommunityId>* assignment) {
  const std::size_t sizes[] = {30, 20, 20, 10};
  std::vector<Edge> edges;
  NodeId base = 0;
  for (std::size_t c = 0; c < 4; ++c) {
    for (NodeId i = 0; i < sizes[c]; ++i) {
      edges.emplace_back(base + i, base + (i + 1) % static_cast<NodeId>(sizes[c]));
      assignment->push_back(static_cast<CommunityId>(c));
    }
    if (c > 0) edges.emplace_back(base - 1, base);
    base += static_cast<NodeId>(sizes[c]);
  }
  return make_graph(base, edges);
}

Stage1Options options(const TempDir& dir, std::size_t workers) {
  Stage1Options opts;
  opts.dataset_id = "blocks";
  opts.paths.run_dir = dir.path();
  opts.num_workers = workers;
  opts.hp.max_epochs = 300;
  opts.seed = 11;
  return opts;
}

}  // namespace

TEST_CASE("assign_and_bucket examples") {
  std::vector<std::size_t> sizes{5, 3, 3, 1};
  CHECK(assign_and_bucket(sizes, 2) == Lanes{{0, 3}, {1, 2}});
  CHECK(assign_and_bucket(sizes, 1) == Lanes{{0, 1, 2, 3}});
  CHECK(assign_and_bucket(sizes, 6) == Lanes{{0}, {1}, {2}, {3}, {}, {}});
  CHECK(assign_and_bucket(std::vector<std::size_t>{}, 2) == Lanes{{}, {}});
  CHECK_THROWS_AS(assign_and_bucket(sizes, 0), ParameterError);
}

TEST_CASE("assign_and_bucket covers tasks and bounds the makespan") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::size_t> sizes(1 + rng() % 30);
    for (auto& s : sizes) s = 1 + rng() % 100;
    const std::size_t workers = 1 + rng() % 6;
    auto lanes = assign_and_bucket(sizes, workers);
    REQUIRE(lanes.size() == workers);
    std::multiset<std::size_t> seen;
    std::size_t total = 0, largest = 0, makespan = 0;
    for (const auto& lane : lanes) {
      std::size_t load = 0;
      for (std::size_t t : lane) {
        seen.insert(t);
        load += sizes[t];
      }
      makespan = std::max(makespan, load);
    }
    for (std::size_t s : sizes) {
      total += s;
      largest = std::max(largest, s);
    }
    CHECK(seen.size() == sizes.size());
    CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == sizes.size());
    // List-scheduling bound: average load plus (1 - 1/m) of the largest task.
    const double m = static_cast<double>(workers);
    CHECK(makespan <= static_cast<double>(total) / m + (1.0 - 1.0 / m) * static_cast<double>(largest) + 1e-9);
  }
}

TEST_CASE("WorkerPool runs every task and isolates failures") {
  WorkerPool pool(3);
  Lanes lanes{{0, 3}, {1, 4}, {2}};
  std::vector<std::atomic<int>> hits(5);
  std::mutex mu;
  std::set<std::thread::id> threads;
  auto errors = pool.run(lanes, 5, [&](std::size_t t, std::size_t) {
    ++hits[t];
    {
      std::lock_guard lock(mu);
      threads.insert(std::this_thread::get_id());
    }
    if (t == 4) throw std::runtime_error("boom");
  });
  for (auto& h : hits) CHECK(h == 1);
  CHECK(errors[4] != nullptr);
  for (std::size_t t = 0; t < 4; ++t) CHECK(errors[t] == nullptr);
  CHECK(threads.size() == 3);
  CHECK_THROWS_AS(WorkerPool(0), ParameterError);
}

TEST_CASE("stage1 trains every subgraph across workers") {
  TempDir dir;
  std::vector<CommunityId> comm;
  Graph g = four_blocks(&comm);
  auto p = extract_subgraphs(g, {comm});
  auto r = run_stage1(g, p, options(dir, 2));

  REQUIRE(r.models.size() == 4);
  CHECK(r.manifest.tasks.size() == 4);
  for (std::size_t s = 0; s < 4; ++s) {
    const auto& t = r.manifest.tasks[s];
    CHECK(t.status == TaskStatus::done);
    CHECK(t.attempts == 1);
    CHECK(t.nodes == p.subgraphs[s].node_count());
    CHECK(std::filesystem::exists(r.checkpoints[s]));
    CHECK(r.checkpoints[s] == dir.path() / "checkpoints" / ("blocks_" + std::to_string(s)));
  }
  // LPT with sizes 30, 20, 20, 10 on two workers.
  CHECK(r.manifest.tasks[0].worker_id == 0);
  CHECK(r.manifest.tasks[1].worker_id == 1);
  CHECK(r.manifest.tasks[2].worker_id == 1);
  CHECK(r.manifest.tasks[3].worker_id == 0);

  std::ifstream in(dir / "manifest");
  auto j = nlohmann::json::parse(in);
  CHECK(j["dataset_id"] == "blocks");
  CHECK(j["graph_hash"].get<std::string>().size() == 16);
  CHECK(j["tasks"].size() == 4);
  CHECK(j["partition"]["communities"] == 4);
}

TEST_CASE("stage1 is deterministic regardless of worker count") {
  TempDir a, b;
  std::vector<CommunityId> comm;
  Graph g = four_blocks(&comm);
  auto p = extract_subgraphs(g, {comm});
  auto ra = run_stage1(g, p, options(a, 1));
  auto rb = run_stage1(g, p, options(b, 3));
  for (std::size_t s = 0; s < 4; ++s) {
    CHECK(ra.models[s].weight == rb.models[s].weight);
    CHECK(ra.reports[s].probabilities == rb.reports[s].probabilities);
  }
}

TEST_CASE("stage1 retries once, then fails with the manifest written") {
  log::set_quiet(true);
  std::vector<CommunityId> comm;
  Graph g = four_blocks(&comm);
  auto p = extract_subgraphs(g, {comm});

  SUBCASE("transient") {
    TempDir dir;
    auto opts = options(dir, 2);
    opts.fault_hook = [](std::uint32_t s, int attempt) {
      if (s == 2 && attempt == 1) throw std::runtime_error("node lost");
    };
    auto r = run_stage1(g, p, opts);
    CHECK(r.manifest.tasks[2].attempts == 2);
    CHECK(r.manifest.tasks[2].status == TaskStatus::done);
    CHECK(r.manifest.tasks[2].error.empty());
  }
  SUBCASE("persistent") {
    TempDir dir;
    auto opts = options(dir, 2);
    opts.fault_hook = [](std::uint32_t s, int) {
      if (s == 1) throw std::runtime_error("disk full");
    };
    try {
      run_stage1(g, p, opts);
      FAIL("expected StageError");
    } catch (const StageError& e) {
      CHECK(e.stage == "stage1");
      CHECK(std::string(e.what()).find("disk full") != std::string::npos);
    }
    std::ifstream in(dir / "manifest");
    REQUIRE(in);
    auto j = nlohmann::json::parse(in);
    CHECK(j["tasks"][1]["status"] == "failed");
    CHECK(j["tasks"][1]["attempts"] == 2);
    CHECK(j["tasks"][0]["status"] == "done");
    CHECK(std::filesystem::exists(dir / "checkpoints" / "blocks_0"));
  }
}

TEST_CASE("scatter_probabilities") {
  Graph g = make_graph(3, {{0, 1}, {1, 2}});
  auto p = extract_subgraphs(g, {{0, 1, 0}});
  std::vector<std::vector<double>> local{{0.9, 0.7}, {0.2}};
  auto m = scatter_probabilities(p, local);
  CHECK(m.prob == std::vector<double>{0.9, 0.2, 0.7});
  CHECK(m.chosen == std::vector<bool>{true, false, true});
  CHECK(m.cross_node == std::vector<bool>{true, true, true});

  std::vector<std::vector<double>> extreme{{1.0, 0.0}, {0.5}};
  auto c = scatter_probabilities(p, extreme);
  CHECK(c.prob[0] == 1.0 - kProbClamp);
  CHECK(c.prob[2] == kProbClamp);

  std::vector<std::vector<double>> short_vec{{0.9}, {0.2}};
  CHECK_THROWS_AS(scatter_probabilities(p, short_vec), ContractError);
  std::vector<std::vector<double>> one{{0.9, 0.7}};
  CHECK_THROWS_AS(scatter_probabilities(p, one), ContractError);
}

TEST_CASE("reconstruction from checkpoints") {
  TempDir dir;
  std::vector<CommunityId> comm;
  Graph g = four_blocks(&comm);
  auto p = extract_subgraphs(g, {comm});
  auto r = run_stage1(g, p, options(dir, 2));

  SUBCASE("bit exact and covering") {
    std::vector<SubgraphModel> models;
    auto m = reconstruct_probabilities(r.checkpoints, p, &models);
    REQUIRE(m.size() == g.node_count());
    for (std::size_t s = 0; s < 4; ++s) {
      const auto fwd = forward(r.models[s], p.subgraphs[s]);
      for (std::size_t i = 0; i < p.local_to_global[s].size(); ++i) {
        const double expected = std::clamp(fwd[static_cast<Eigen::Index>(i)], kProbClamp, 1.0 - kProbClamp);
        CHECK(m.prob[p.local_to_global[s][i]] == expected);
      }
      CHECK(models[s].weight == r.models[s].weight);
    }
    for (NodeId v = 0; v < g.node_count(); ++v) CHECK(m.cross_node[v] == p.cross_node[v]);
    auto again = reconstruct_probabilities(r.checkpoints, p);
    CHECK(again.prob == m.prob);
  }
  SUBCASE("missing checkpoint names the subgraph") {
    std::filesystem::remove(r.checkpoints[2]);
    try {
      reconstruct_probabilities(r.checkpoints, p);
      FAIL("expected StageError");
    } catch (const StageError& e) {
      CHECK(e.stage == "stage2");
      CHECK(std::string(e.what()).find("subgraph 2") != std::string::npos);
    }
  }
  SUBCASE("corrupt checkpoint") {
    std::ofstream(r.checkpoints[1]) << "not json";
    CHECK_THROWS_AS(reconstruct_probabilities(r.checkpoints, p), StageError);
  }
}
