#include "rlgnn/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "rlgnn/checkpoint.hpp"
#include "rlgnn/errors.hpp"
#include "rlgnn/log.hpp"
#include "rlgnn/rng.hpp"

namespace rlgnn {

std::vector<std::vector<std::size_t>> assign_and_bucket(std::span<const std::size_t> sizes,
                                                        std::size_t num_workers) {
  if (num_workers == 0) throw ParameterError("num_workers must be >= 1");
  std::vector<std::size_t> order(sizes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sizes[a] > sizes[b]; });
  std::vector<std::vector<std::size_t>> lanes(num_workers);
  std::vector<std::size_t> load(num_workers, 0);
  for (std::size_t t : order) {
    const auto w = static_cast<std::size_t>(std::min_element(load.begin(), load.end()) - load.begin());
    lanes[w].push_back(t);
    load[w] += sizes[t];
  }
  return lanes;
}

std::vector<std::vector<std::size_t>> assign_and_bucket(std::span<const Graph> subgraphs,
                                                        std::size_t num_workers) {
  std::vector<std::size_t> sizes;
  sizes.reserve(subgraphs.size());
  for (const auto& g : subgraphs) sizes.push_back(g.node_count());
  return assign_and_bucket(sizes, num_workers);
}

WorkerPool::WorkerPool(std::size_t width) : width_(width) {
  if (width == 0) throw ParameterError("worker pool width must be >= 1");
}

std::vector<std::exception_ptr> WorkerPool::run(const std::vector<std::vector<std::size_t>>& lanes,
                                                std::size_t task_count, const Job& job) const {
  std::vector<std::exception_ptr> errors(task_count);
  auto run_lane = [&](std::size_t worker) {
    for (std::size_t task : lanes[worker]) {
      try {
        job(task, worker);
      } catch (...) {
        errors[task] = std::current_exception();
      }
    }
  };
  if (width_ == 1 || lanes.size() <= 1) {
    for (std::size_t w = 0; w < lanes.size(); ++w) run_lane(w);
    return errors;
  }
  std::vector<std::jthread> threads;
  threads.reserve(lanes.size());
  for (std::size_t w = 0; w < lanes.size(); ++w) threads.emplace_back(run_lane, w);
  threads.clear();  // joins
  return errors;
}

std::string to_string(TaskStatus s) {
  switch (s) {
    case TaskStatus::pending: return "pending";
    case TaskStatus::running: return "running";
    case TaskStatus::done: return "done";
    case TaskStatus::failed: return "failed";
  }
  return "unknown";
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["dataset_id"] = dataset_id;
  j["graph_hash"] = graph_hash;
  j["partition"] = partition_summary;
  auto& tasks_json = j["tasks"] = nlohmann::json::array();
  for (const auto& t : tasks) {
    tasks_json.push_back({{"subgraph_id", t.subgraph_id},
                          {"worker_id", t.worker_id},
                          {"nodes", t.nodes},
                          {"status", to_string(t.status)},
                          {"attempts", t.attempts},
                          {"epochs", t.epochs},
                          {"final_loss", t.final_loss},
                          {"converged", t.converged},
                          {"wall_time_s", t.wall_time_s},
                          {"checkpoint_path", t.checkpoint_path},
                          {"error", t.error}});
  }
  j["stage_timings"] = stage_timings;
  j["config"] = config;
  return j;
}

void RunManifest::write(const std::filesystem::path& path) const {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write manifest " + path.string());
  out << to_json().dump(2) << '\n';
}

namespace {

std::string hex_digest(std::uint64_t h) {
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << h;
  return s.str();
}

}  // namespace

Stage1Result run_stage1(const Graph& g, const PartitionResult& partition, const Stage1Options& opts) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t count = partition.subgraphs.size();
  std::filesystem::create_directories(opts.paths.checkpoint_dir());

  Stage1Result result;
  RunManifest& manifest = result.manifest;
  manifest.dataset_id = opts.dataset_id;
  manifest.graph_hash = hex_digest(g.content_hash());
  std::size_t largest = 0;
  for (const auto& s : partition.subgraphs) largest = std::max(largest, s.node_count());
  manifest.partition_summary = {{"communities", count},
                                {"cross_edges", partition.cross_edges.size()},
                                {"modularity", partition.modularity},
                                {"largest_subgraph", largest}};

  const auto lanes = assign_and_bucket(std::span<const Graph>(partition.subgraphs), opts.num_workers);
  std::vector<TrainTask> tasks(count);
  manifest.tasks.resize(count);
  for (std::size_t w = 0; w < lanes.size(); ++w) {
    for (std::size_t t : lanes[w]) {
      tasks[t] = {static_cast<std::uint32_t>(t), &partition.subgraphs[t],
                  static_cast<std::uint32_t>(w), TaskStatus::pending};
      manifest.tasks[t].subgraph_id = static_cast<std::uint32_t>(t);
      manifest.tasks[t].worker_id = static_cast<std::uint32_t>(w);
      manifest.tasks[t].nodes = partition.subgraphs[t].node_count();
    }
  }
  result.models.resize(count);
  result.reports.resize(count);
  result.checkpoints.resize(count);

  // Each task writes only its own slots, so no locking is needed.
  WorkerPool pool(opts.num_workers);
  auto errors = pool.run(lanes, count, [&](std::size_t t, std::size_t) {
    TrainTask& task = tasks[t];
    TaskRecord& rec = manifest.tasks[t];
    task.status = TaskStatus::running;
    for (int attempt = 1; attempt <= 2; ++attempt) {
      rec.attempts = attempt;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        if (opts.fault_hook) opts.fault_hook(task.subgraph_id, attempt);
        SubgraphModel model = init_model(*task.subgraph, opts.hp,
                                         derive_seed(opts.seed, task.subgraph_id), task.subgraph_id);
        TrainReport report = train(model, *task.subgraph);
        if (report.diverged) throw NumericError("training diverged");
        const auto path = opts.paths.checkpoint(opts.dataset_id, task.subgraph_id);
        save_checkpoint({model, opts.dataset_id, report.final_loss, report.epochs_run}, path);
        rec.epochs = report.epochs_run;
        rec.final_loss = report.final_loss;
        rec.converged = report.converged;
        rec.checkpoint_path = path.string();
        rec.error.clear();
        rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.models[t] = std::move(model);
        result.reports[t] = std::move(report);
        result.checkpoints[t] = path;
        task.status = TaskStatus::done;
        break;
      } catch (const std::exception& e) {
        rec.error = e.what();
        rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        task.status = TaskStatus::failed;
      }
    }
    rec.status = task.status;
  });

  manifest.stage_timings["stage1_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::vector<std::uint32_t> failed;
  for (std::size_t t = 0; t < count; ++t) {
    if (errors[t]) {
      manifest.tasks[t].status = TaskStatus::failed;
      manifest.tasks[t].error = "unexpected worker error";
    }
    if (manifest.tasks[t].status != TaskStatus::done) failed.push_back(static_cast<std::uint32_t>(t));
  }
  manifest.write(opts.paths.manifest());
  if (!failed.empty()) {
    std::ostringstream msg;
    msg << failed.size() << " task(s) failed, first subgraph " << failed.front() << ": "
        << manifest.tasks[failed.front()].error;
    throw StageError("stage1", msg.str());
  }
  return result;
}

GlobalMask scatter_probabilities(const PartitionResult& partition,
                                 std::span<const std::vector<double>> local_probs) {
  const std::size_t n = partition.assignment.community_of.size();
  if (local_probs.size() != partition.subgraphs.size())
    throw ContractError("one probability vector per subgraph required");
  std::vector<double> prob(n, 0.0);
  std::vector<bool> written(n, false);
  for (std::size_t s = 0; s < local_probs.size(); ++s) {
    const auto& map = partition.local_to_global[s];
    if (local_probs[s].size() != map.size())
      throw ContractError("probability vector size mismatch for subgraph " + std::to_string(s));
    for (std::size_t i = 0; i < map.size(); ++i) {
      if (written[map[i]]) throw ContractError("node written twice during reconstruction");
      written[map[i]] = true;
      prob[map[i]] = std::clamp(local_probs[s][i], kProbClamp, 1.0 - kProbClamp);
    }
  }
  if (std::find(written.begin(), written.end(), false) != written.end())
    throw ContractError("reconstruction left nodes unwritten");
  return GlobalMask(std::move(prob), partition.cross_node);
}

GlobalMask reconstruct_probabilities(std::span<const std::filesystem::path> checkpoints,
                                     const PartitionResult& partition,
                                     std::vector<SubgraphModel>* models_out) {
  if (checkpoints.size() != partition.subgraphs.size())
    throw StageError("stage2", "expected one checkpoint per subgraph");
  std::vector<std::vector<double>> probs(checkpoints.size());
  if (models_out) models_out->assign(checkpoints.size(), {});
  for (std::size_t s = 0; s < checkpoints.size(); ++s) {
    Checkpoint ckpt;
    try {
      ckpt = load_checkpoint(checkpoints[s]);
    } catch (const Error& e) {
      throw StageError("stage2", "subgraph " + std::to_string(s) + ": " + e.what());
    }
    const Graph& sub = partition.subgraphs[s];
    if (ckpt.model.embeddings.rows() != static_cast<Eigen::Index>(sub.node_count()))
      throw StageError("stage2", "subgraph " + std::to_string(s) + ": checkpoint size mismatch");
    const Eigen::VectorXd p = forward(ckpt.model, sub);
    probs[s].assign(p.data(), p.data() + p.size());
    if (models_out) (*models_out)[s] = std::move(ckpt.model);
  }
  return scatter_probabilities(partition, probs);
}

}  // namespace rlgnn
