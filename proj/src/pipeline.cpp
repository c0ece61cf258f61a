#include "rlgnn/pipeline.hpp"

#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <unistd.h>

#include "rlgnn/baselines.hpp"
#include "rlgnn/checkpoint.hpp"
#include "rlgnn/errors.hpp"
#include "rlgnn/log.hpp"
#include "rlgnn/partition.hpp"
#include "rlgnn/runtime.hpp"

namespace rlgnn {

using Clock = std::chrono::steady_clock;

static double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::size_t default_workers() {
  if (const char* env = std::getenv(kWorkersEnv)) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
    log::warn(std::string(kWorkersEnv) + " ignored: expected a positive integer");
  }
  return 1;
}

std::string RunConfig::resolved_dataset_id() const {
  if (!dataset_id.empty()) return dataset_id;
  if (!input.empty()) return std::filesystem::path(input).stem().string();
  std::ostringstream s;
  s << "regular_n" << generator.nodes << "_d" << generator.degree << "_s" << generator.seed;
  return s.str();
}

nlohmann::json to_json(const RunConfig& c) {
  return {{"input", c.input},
          {"generator", {{"nodes", c.generator.nodes}, {"degree", c.generator.degree},
                         {"seed", c.generator.seed}}},
          {"dataset_id", c.dataset_id},
          {"num_workers", c.num_workers},
          {"hyperparams", hyperparams_to_json(c.hp)},
          {"episodes", c.episodes},
          {"agent", {{"epsilon", c.agent.epsilon}, {"epsilon_decay", c.agent.epsilon_decay},
                     {"epsilon_min", c.agent.epsilon_min}, {"learning_rate", c.agent.learning_rate},
                     {"discount", c.agent.discount}}},
          {"conflict_penalty", c.conflict_penalty},
          {"seed", c.seed},
          {"max_levels", c.max_levels},
          {"max_subgraph_size", c.max_subgraph_size},
          {"output_dir", c.output_dir.string()},
          {"format", c.format}};
}

namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys,
                    const std::string& where) {
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.contains(it.key()))
      throw ParameterError("unknown config key '" + where + it.key() + "'");
}

}  // namespace

RunConfig run_config_from_json(const nlohmann::json& j, RunConfig c) {
  if (!j.is_object()) throw ParameterError("config must be a JSON object");
  reject_unknown(j, {"input", "generator", "dataset_id", "num_workers", "hyperparams", "episodes",
                     "agent", "conflict_penalty", "seed", "max_levels", "max_subgraph_size",
                     "output_dir", "format"},
                 "");
  try {
    c.input = j.value("input", c.input);
    if (j.contains("generator")) {
      const auto& g = j["generator"];
      reject_unknown(g, {"nodes", "degree", "seed"}, "generator.");
      c.generator.nodes = g.value("nodes", c.generator.nodes);
      c.generator.degree = g.value("degree", c.generator.degree);
      c.generator.seed = g.value("seed", c.generator.seed);
    }
    c.dataset_id = j.value("dataset_id", c.dataset_id);
    c.num_workers = j.value("num_workers", c.num_workers);
    if (j.contains("hyperparams")) {
      nlohmann::json merged = hyperparams_to_json(c.hp);
      reject_unknown(j["hyperparams"],
                     {"d_in", "alpha", "beta", "learning_rate", "tolerance", "patience", "max_epochs",
                      "temperature", "lambda", "finetune_budget", "hard_gumbel", "activation"},
                     "hyperparams.");
      merged.update(j["hyperparams"]);
      c.hp = hyperparams_from_json(merged);
    }
    c.episodes = j.value("episodes", c.episodes);
    if (j.contains("agent")) {
      const auto& a = j["agent"];
      reject_unknown(a, {"epsilon", "epsilon_decay", "epsilon_min", "learning_rate", "discount"},
                     "agent.");
      c.agent.epsilon = a.value("epsilon", c.agent.epsilon);
      c.agent.epsilon_decay = a.value("epsilon_decay", c.agent.epsilon_decay);
      c.agent.epsilon_min = a.value("epsilon_min", c.agent.epsilon_min);
      c.agent.learning_rate = a.value("learning_rate", c.agent.learning_rate);
      c.agent.discount = a.value("discount", c.agent.discount);
    }
    c.conflict_penalty = j.value("conflict_penalty", c.conflict_penalty);
    c.seed = j.value("seed", c.seed);
    c.max_levels = j.value("max_levels", c.max_levels);
    c.max_subgraph_size = j.value("max_subgraph_size", c.max_subgraph_size);
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    c.format = j.value("format", c.format);
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("bad config value: ") + e.what());
  }
  return c;
}

namespace {

nlohmann::json metrics_json(const SolutionMetrics& m) {
  return {{"set_size", m.set_size},
          {"conflict_count", m.conflict_count},
          {"conflict_rate", m.conflict_rate},
          {"score", m.score},
          {"runtime_s", m.runtime_s}};
}

}  // namespace

nlohmann::json SolveReport::to_json() const {
  return {{"dataset", {{"name", dataset_name}, {"nodes", nodes}, {"edges", edges}}},
          {"greedy", metrics_json(greedy)},
          {"initial", metrics_json(initial)},
          {"raw", metrics_json(raw)},
          {"repaired", metrics_json(repaired)},
          {"timings", {{"partition_s", timings.partition_s}, {"stage1_s", timings.stage1_s},
                       {"stage2_s", timings.stage2_s}, {"stage3_s", timings.stage3_s},
                       {"total_s", timings.total_s}}},
          {"episodes", episode_log_json(episodes)},
          {"subgraph_count", subgraph_count},
          {"cross_edge_count", cross_edge_count},
          {"initial_cross_conflicts", initial_cross_conflicts},
          {"modularity", modularity},
          {"initial_score", initial_score},
          {"best_score", best_score},
          {"config", config}};
}

std::string SolveReport::to_text() const {
  std::ostringstream s;
  s << std::fixed;
  s << "dataset      " << dataset_name << "  nodes " << nodes << "  edges " << edges << '\n';
  s << "partition    " << subgraph_count << " subgraphs, " << cross_edge_count
    << " cross edges, modularity " << std::setprecision(4) << modularity << '\n';
  auto row = [&s](const char* name, const SolutionMetrics& m) {
    s << std::left << std::setw(13) << name << std::right << "size " << std::setw(7) << m.set_size
      << "  conflicts " << std::setw(6) << m.conflict_count << "  rate " << std::setprecision(4)
      << m.conflict_rate << "  time " << std::setprecision(3) << m.runtime_s << "s\n";
  };
  row("greedy", greedy);
  row("stage2", initial);
  row("raw", raw);
  row("repaired", repaired);
  s << "episodes     " << episodes.size() << " (initial cross conflicts " << initial_cross_conflicts
    << ", score " << std::setprecision(1) << initial_score << " -> " << best_score << ")\n";
  s << "timings      partition " << std::setprecision(3) << timings.partition_s << "s  stage1 "
    << timings.stage1_s << "s  stage2 " << timings.stage2_s << "s  stage3 " << timings.stage3_s
    << "s  total " << timings.total_s << "s\n";
  return s.str();
}

Graph load_input(const RunConfig& cfg) {
  if (!cfg.input.empty()) return load_edge_list(cfg.input).graph;
  return generate_regular(cfg.generator.nodes, cfg.generator.degree, cfg.generator.seed);
}

SolveReport solve(const Graph& g, const RunConfig& cfg) {
  SolveReport report;
  report.dataset_name = cfg.resolved_dataset_id();
  report.nodes = g.node_count();
  report.edges = g.edge_count();
  report.config = to_json(cfg);

  {
    const auto t0 = Clock::now();
    Selection greedy = greedy_mis(g);
    report.greedy = evaluate_solution(g, greedy, cfg.conflict_penalty);
    report.greedy.runtime_s = seconds_since(t0);
  }

  // Artifacts always go through a run directory: stage 2 reads checkpoints.
  const std::string dataset_id = report.dataset_name;
  std::filesystem::path run_dir = cfg.output_dir / dataset_id;
  std::optional<std::filesystem::path> scratch;
  if (!cfg.write_artifacts) {
    static std::atomic<std::uint64_t> counter{0};
    scratch = std::filesystem::temp_directory_path() /
              ("rlgnn_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    run_dir = *scratch;
  }
  const RunPaths paths{run_dir};
  struct ScratchGuard {
    std::optional<std::filesystem::path>& dir;
    ~ScratchGuard() {
      std::error_code ec;
      if (dir) std::filesystem::remove_all(*dir, ec);
    }
  } guard{scratch};

  const auto start = Clock::now();
  auto t0 = start;
  PartitionResult partition;
  try {
    LouvainOptions lo;
    lo.seed = derive_seed(cfg.seed, 1);
    lo.max_levels = cfg.max_levels;
    lo.max_community_size = cfg.max_subgraph_size;
    partition = louvain(g, lo);
  } catch (const std::exception& e) {
    throw StageError("partition", e.what());
  }
  report.timings.partition_s = seconds_since(t0);
  report.subgraph_count = partition.subgraphs.size();
  report.cross_edge_count = partition.cross_edges.size();
  report.modularity = partition.modularity;

  t0 = Clock::now();
  Stage1Options s1;
  s1.dataset_id = dataset_id;
  s1.paths = paths;
  s1.num_workers = cfg.num_workers;
  s1.hp = cfg.hp;
  s1.seed = derive_seed(cfg.seed, 2);
  Stage1Result stage1;
  try {
    stage1 = run_stage1(g, partition, s1);
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("stage1", e.what());
  }
  report.timings.stage1_s = seconds_since(t0);

  t0 = Clock::now();
  std::vector<SubgraphModel> models;
  GlobalMask mask = reconstruct_probabilities(stage1.checkpoints, partition, &models);
  report.initial = evaluate_solution(g, mask.chosen, cfg.conflict_penalty);
  report.timings.stage2_s = seconds_since(t0);

  t0 = Clock::now();
  CoordinatorConfig cc;
  cc.episodes = cfg.episodes;
  cc.agent = cfg.agent;
  cc.lambda = cfg.hp.lambda;
  cc.finetune_budget = cfg.hp.finetune_budget;
  cc.conflict_penalty = cfg.conflict_penalty;
  cc.num_workers = cfg.num_workers;
  cc.seed = derive_seed(cfg.seed, 3);
  CoordinationResult coord;
  try {
    coord = coordinate(g, partition, models, mask, cc);
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("stage3", e.what());
  }
  report.episodes = coord.log;
  report.initial_score = coord.initial_score;
  report.best_score = coord.best_score;
  report.initial_cross_conflicts = coord.initial_conflicts;
  report.raw_selection = coord.best_mask.chosen;
  report.repaired_selection = repair_selection(g, report.raw_selection);
  report.raw = evaluate_solution(g, report.raw_selection, cfg.conflict_penalty);
  report.repaired = evaluate_solution(g, report.repaired_selection, cfg.conflict_penalty);
  report.timings.stage3_s = seconds_since(t0);
  report.timings.total_s = seconds_since(start);
  report.raw.runtime_s = report.timings.total_s;
  report.repaired.runtime_s = report.timings.total_s;
  report.initial.runtime_s = report.timings.partition_s + report.timings.stage1_s +
                             report.timings.stage2_s;

  if (cfg.write_artifacts) {
    RunManifest manifest = stage1.manifest;
    manifest.stage_timings = {{"partition_s", report.timings.partition_s},
                              {"stage1_s", report.timings.stage1_s},
                              {"stage2_s", report.timings.stage2_s},
                              {"stage3_s", report.timings.stage3_s},
                              {"total_s", report.timings.total_s}};
    manifest.config = report.config;
    manifest.write(paths.manifest());
    write_partition_report(partition, run_dir / "partition");
    if (cfg.format != "text") {
      std::ofstream out(paths.report());
      out << report.to_json().dump(2) << '\n';
    }
    if (cfg.format != "json") {
      std::ofstream out(run_dir / "report.txt");
      out << report.to_text();
    }
  }
  return report;
}

BenchResult bench(const BenchSpec& spec, const RunConfig& base) {
  BenchResult result;
  for (std::size_t n : spec.nodes) {
    for (std::size_t d : spec.degrees) {
      for (std::uint64_t seed = 0; seed < spec.samples; ++seed) {
        try {
          const Graph g = generate_regular(n, d, seed);
          RunConfig cfg = base;
          cfg.input.clear();
          cfg.generator = {n, d, seed};
          cfg.dataset_id.clear();
          cfg.output_dir = base.output_dir / "bench";
          const SolveReport r = solve(g, cfg);
          result.rows.push_back({"greedy", n, d, seed, r.greedy.set_size, r.greedy.conflict_rate,
                                 r.greedy.runtime_s});
          result.rows.push_back({"rlgnn", n, d, seed, r.raw.set_size, r.raw.conflict_rate,
                                 r.raw.runtime_s});
          result.rows.push_back({"rlgnn_repaired", n, d, seed, r.repaired.set_size,
                                 r.repaired.conflict_rate, r.repaired.runtime_s});
        } catch (const std::exception& e) {
          log::warn("bench cell n=" + std::to_string(n) + " d=" + std::to_string(d) +
                    " seed=" + std::to_string(seed) + " failed: " + e.what());
          result.failures.push_back({n, d, seed, e.what()});
        }
      }
    }
  }
  return result;
}

namespace {

struct Stats {
  double mean = 0.0;
  double stddev = 0.0;
};

Stats stats(const std::vector<double>& xs) {
  Stats s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double acc = 0.0;
    for (double x : xs) acc += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(acc / static_cast<double>(xs.size() - 1));
  }
  return s;
}

}  // namespace

void write_bench_outputs(const BenchResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&dir](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw Error("cannot write " + (dir / name).string());
    out << std::setprecision(10);
    return out;
  };

  auto rows = open("bench.csv");
  rows << kBenchColumns << '\n';
  for (const auto& r : result.rows)
    rows << r.method << ',' << r.nodes << ',' << r.degree << ',' << r.seed << ',' << r.mis_size << ','
         << r.conflict_rate << ',' << r.time_s << '\n';

  using Key = std::tuple<std::string, std::size_t, std::size_t>;
  std::map<Key, std::array<std::vector<double>, 3>> groups;
  for (const auto& r : result.rows) {
    auto& g = groups[{r.method, r.nodes, r.degree}];
    g[0].push_back(static_cast<double>(r.mis_size));
    g[1].push_back(r.conflict_rate);
    g[2].push_back(r.time_s);
  }

  auto agg = open("aggregate.csv");
  agg << "method,nodes,degree,samples,mis_size_mean,mis_size_std,conflict_rate_mean,"
         "conflict_rate_std,time_s_mean,time_s_std\n";
  const char* fig_names[3] = {"fig_mis_size.csv", "fig_conflict_rate.csv", "fig_runtime.csv"};
  std::array<std::ofstream, 3> figs{open(fig_names[0]), open(fig_names[1]), open(fig_names[2])};
  for (auto& f : figs) f << "method,nodes,degree,mean,std\n";
  for (const auto& [key, g] : groups) {
    const auto& [method, n, d] = key;
    agg << method << ',' << n << ',' << d << ',' << g[0].size();
    for (std::size_t k = 0; k < 3; ++k) {
      const Stats s = stats(g[k]);
      agg << ',' << s.mean << ',' << s.stddev;
      figs[k] << method << ',' << n << ',' << d << ',' << s.mean << ',' << s.stddev << '\n';
    }
    agg << '\n';
  }

  auto fails = open("failures.csv");
  fails << "nodes,degree,seed,error\n";
  for (const auto& f : result.failures)
    fails << f.nodes << ',' << f.degree << ',' << f.seed << ",\"" << f.error << "\"\n";
}

}  // namespace rlgnn
