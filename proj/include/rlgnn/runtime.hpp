#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rlgnn/coordinator.hpp"
#include "rlgnn/gcn.hpp"
#include "rlgnn/graph.hpp"
#include "rlgnn/partition.hpp"

namespace rlgnn {

// Longest-processing-time assignment: tasks sorted by size descending (ties:
// lower index first), each given to the least-loaded worker (ties: lower
// worker id). Returns per-worker task index lists, largest first.
std::vector<std::vector<std::size_t>> assign_and_bucket(std::span<const std::size_t> sizes,
                                                        std::size_t num_workers);
std::vector<std::vector<std::size_t>> assign_and_bucket(std::span<const Graph> subgraphs,
                                                        std::size_t num_workers);

// Parallel execution lanes within one process. Each lane runs its list
// sequentially; lanes run concurrently. Width 1 runs inline.
class WorkerPool {
 public:
  using Job = std::function<void(std::size_t task, std::size_t worker)>;

  explicit WorkerPool(std::size_t width);
  std::size_t width() const { return width_; }

  // Returns one exception_ptr per task index (null on success). Tasks are
  // indexed 0..task_count-1 and must each appear in exactly one lane.
  std::vector<std::exception_ptr> run(const std::vector<std::vector<std::size_t>>& lanes,
                                      std::size_t task_count, const Job& job) const;

 private:
  std::size_t width_;
};

enum class TaskStatus { pending, running, done, failed };

std::string to_string(TaskStatus s);

struct TrainTask {
  std::uint32_t subgraph_id = 0;
  const Graph* subgraph = nullptr;
  std::uint32_t worker_id = 0;
  TaskStatus status = TaskStatus::pending;
};

struct TaskRecord {
  std::uint32_t subgraph_id = 0;
  std::uint32_t worker_id = 0;
  std::size_t nodes = 0;
  TaskStatus status = TaskStatus::pending;
  int attempts = 0;
  int epochs = 0;
  double final_loss = 0.0;
  bool converged = false;
  double wall_time_s = 0.0;
  std::string checkpoint_path;
  std::string error;
};

struct RunManifest {
  std::string dataset_id;
  std::string graph_hash;
  nlohmann::json partition_summary;
  std::vector<TaskRecord> tasks;  // indexed by subgraph id
  std::map<std::string, double> stage_timings;
  nlohmann::json config;

  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;
};

struct RunPaths {
  std::filesystem::path run_dir;

  std::filesystem::path manifest() const { return run_dir / "manifest"; }
  std::filesystem::path report() const { return run_dir / "report"; }
  std::filesystem::path checkpoint_dir() const { return run_dir / "checkpoints"; }
  std::filesystem::path checkpoint(const std::string& dataset_id, std::uint32_t subgraph) const {
    return checkpoint_dir() / (dataset_id + "_" + std::to_string(subgraph));
  }
};

struct Stage1Options {
  std::string dataset_id = "graph";
  RunPaths paths;
  std::size_t num_workers = 1;
  Hyperparams hp;
  std::uint64_t seed = 0;
  // Test hook called before each attempt; throwing simulates a failure.
  std::function<void(std::uint32_t subgraph, int attempt)> fault_hook;
};

struct Stage1Result {
  RunManifest manifest;
  std::vector<SubgraphModel> models;
  std::vector<TrainReport> reports;
  std::vector<std::filesystem::path> checkpoints;
};

// Trains one model per subgraph across the worker pool, writing a checkpoint
// for each success and the manifest at the end. A failed task is retried once
// on its worker. Throws StageError("stage1") after writing the manifest if
// any task failed terminally.
Stage1Result run_stage1(const Graph& g, const PartitionResult& partition, const Stage1Options& opts);

// Scatters local probabilities of every subgraph into a global mask and
// flags cross nodes. Each global node is written exactly once.
GlobalMask scatter_probabilities(const PartitionResult& partition,
                                 std::span<const std::vector<double>> local_probs);

// Reloads each checkpoint, runs the forward pass and scatters the result.
// Throws StageError("stage2") naming the subgraph on missing/corrupt files.
GlobalMask reconstruct_probabilities(std::span<const std::filesystem::path> checkpoints,
                                     const PartitionResult& partition,
                                     std::vector<SubgraphModel>* models_out = nullptr);

}  // namespace rlgnn
