#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rlgnn/coordinator.hpp"
#include "rlgnn/gcn.hpp"
#include "rlgnn/graph.hpp"

namespace rlgnn {

// Environment variable consulted for the default worker count.
inline constexpr const char* kWorkersEnv = "RLGNN_WORKERS";

std::size_t default_workers();

struct GeneratorSpec {
  std::size_t nodes = 100;
  std::size_t degree = 10;
  std::uint64_t seed = 0;
};

struct RunConfig {
  std::string input;              // edge list; empty means use `generator`
  GeneratorSpec generator;
  std::string dataset_id;         // derived from input/generator when empty
  std::size_t num_workers = 1;
  Hyperparams hp;
  int episodes = 50;
  AgentConfig agent;
  double conflict_penalty = kDefaultConflictPenalty;
  std::uint64_t seed = 0;
  std::size_t max_levels = 16;
  std::size_t max_subgraph_size = 0;
  std::filesystem::path output_dir = "runs";
  std::string format = "both";    // text | json | both
  bool write_artifacts = true;    // run directory with manifest/checkpoints/report

  std::string resolved_dataset_id() const;
};

nlohmann::json to_json(const RunConfig& cfg);
// Fields present in `j` override those of `base`. Unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});

struct StageTimings {
  double partition_s = 0.0;
  double stage1_s = 0.0;
  double stage2_s = 0.0;
  double stage3_s = 0.0;
  double total_s = 0.0;
};

struct SolveReport {
  std::string dataset_name;
  std::size_t nodes = 0;
  std::size_t edges = 0;
  SolutionMetrics greedy;
  SolutionMetrics initial;   // merged mask after stage 2
  SolutionMetrics raw;       // best coordinator mask, before repair
  SolutionMetrics repaired;
  StageTimings timings;
  std::vector<EpisodeRecord> episodes;
  std::size_t subgraph_count = 0;
  std::size_t cross_edge_count = 0;
  std::size_t initial_cross_conflicts = 0;
  double modularity = 0.0;
  double initial_score = 0.0;
  double best_score = 0.0;
  Selection raw_selection;
  Selection repaired_selection;
  nlohmann::json config;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

// Loads or generates the graph named by the config.
Graph load_input(const RunConfig& cfg);

// partition -> stage 1 -> stage 2 -> coordinate -> repair -> evaluate.
// Writes <output_dir>/<dataset_id>/{manifest,checkpoints/,report,report.txt}
// when cfg.write_artifacts. Stage failures surface as StageError.
SolveReport solve(const Graph& g, const RunConfig& cfg);

struct BenchSpec {
  std::vector<std::size_t> nodes{100, 200, 500, 800, 1000};
  std::vector<std::size_t> degrees{10, 20, 30, 40};
  std::size_t samples = 10;
};

struct BenchRow {
  std::string method;
  std::size_t nodes = 0;
  std::size_t degree = 0;
  std::uint64_t seed = 0;
  std::size_t mis_size = 0;
  double conflict_rate = 0.0;
  double time_s = 0.0;
};

struct BenchFailure {
  std::size_t nodes = 0;
  std::size_t degree = 0;
  std::uint64_t seed = 0;
  std::string error;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  std::vector<BenchFailure> failures;
};

inline constexpr const char* kBenchColumns = "method,nodes,degree,seed,mis_size,conflict_rate,time_s";

// Runs greedy and the pipeline on every (n, d, seed) cell of the grid.
// Failed cells are recorded and skipped.
BenchResult bench(const BenchSpec& spec, const RunConfig& cfg);

// Writes bench.csv (per cell), aggregate.csv (mean/stddev per method, n, d)
// and fig_{conflict_rate,mis_size,runtime}.csv for external plotting.
void write_bench_outputs(const BenchResult& result, const std::filesystem::path& dir);

}  // namespace rlgnn
