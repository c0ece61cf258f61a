// rlgnn: command-line driver for graph generation, partitioning, solving and
// benchmarking.
//
// Exit status: 0 success, 1 usage or input error, 2 stage failure,
// 3 exact-solver size guard.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rlgnn/baselines.hpp"
#include "rlgnn/errors.hpp"
#include "rlgnn/graph.hpp"
#include "rlgnn/log.hpp"
#include "rlgnn/partition.hpp"
#include "rlgnn/pipeline.hpp"

using namespace rlgnn;

namespace {

enum Exit { kOk = 0, kUsage = 1, kStage = 2, kSizeGuard = 3 };

struct GraphSource {
  std::string input;
  GeneratorSpec gen;

  void add_options(CLI::App* cmd) {
    cmd->add_option("-i,--input", input, "Edge list (SNAP format); overrides the generator");
    cmd->add_option("-n,--nodes", gen.nodes, "Generated graph: node count")->capture_default_str();
    cmd->add_option("-d,--degree", gen.degree, "Generated graph: degree")->capture_default_str();
    cmd->add_option("--graph-seed", gen.seed, "Generated graph: seed")->capture_default_str();
  }

  EdgeListData load() const {
    if (!input.empty()) return load_edge_list(input);
    EdgeListData data;
    data.graph = generate_regular(gen.nodes, gen.degree, gen.seed);
    data.original_ids.resize(data.graph.node_count());
    std::iota(data.original_ids.begin(), data.original_ids.end(), 0);
    return data;
  }
};

void print_selection(const Selection& s, const std::vector<std::int64_t>& ids, std::ostream& out) {
  for (std::size_t v = 0; v < s.size(); ++v)
    if (s[v]) out << ids[v] << '\n';
}

int run_baseline(const GraphSource& src, bool exact, const std::string& out_path) {
  const EdgeListData data = src.load();
  const Selection sel = exact ? exact_mis(data.graph) : greedy_mis(data.graph);
  const SolutionMetrics m = evaluate_solution(data.graph, sel);
  std::printf("%s  nodes %zu  edges %zu  size %zu  conflicts %zu\n", exact ? "exact" : "greedy",
              data.graph.node_count(), data.graph.edge_count(), m.set_size, m.conflict_count);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw Error("cannot write " + out_path);
    print_selection(sel, data.original_ids, out);
  }
  return kOk;
}

std::vector<std::size_t> parse_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (item.empty() || used != item.size()) throw ParameterError("bad list item '" + item + "'");
    out.push_back(static_cast<std::size_t>(v));
    pos = comma + 1;
  }
  return out;
}

void add_run_options(CLI::App* cmd, RunConfig& cfg, std::string& config_path) {
  cmd->add_option("-c,--config", config_path, "JSON config file; its fields override flags");
  cmd->add_option("-w,--workers", cfg.num_workers, "Parallel workers (default from RLGNN_WORKERS)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", cfg.seed, "Pipeline seed")->capture_default_str();
  cmd->add_option("--dataset-id", cfg.dataset_id, "Run name (default: derived from the input)");
  cmd->add_option("-o,--output-dir", cfg.output_dir, "Directory for run artifacts")->capture_default_str();
  cmd->add_option("--format", cfg.format, "Report format")
      ->capture_default_str()
      ->check(CLI::IsMember({"text", "json", "both"}));
  cmd->add_option("--episodes", cfg.episodes, "Coordination episodes")->capture_default_str();
  cmd->add_option("--conflict-penalty", cfg.conflict_penalty, "Score penalty per conflict")
      ->capture_default_str();
  cmd->add_option("--max-levels", cfg.max_levels, "Louvain level limit")->capture_default_str();
  cmd->add_option("--max-subgraph-size", cfg.max_subgraph_size, "Split larger communities (0: no cap)")
      ->capture_default_str();

  auto& hp = cfg.hp;
  cmd->add_option("--d-in", hp.d_in, "Embedding width")->capture_default_str();
  cmd->add_option("--alpha", hp.alpha, "Conflict weight in the loss")->capture_default_str();
  cmd->add_option("--beta", hp.beta, "Size reward in the loss")->capture_default_str();
  cmd->add_option("--lr", hp.learning_rate, "Gradient descent step")->capture_default_str();
  cmd->add_option("--tolerance", hp.tolerance, "Convergence threshold on |dL|")->capture_default_str();
  cmd->add_option("--patience", hp.patience, "Epochs under tolerance before stopping")->capture_default_str();
  cmd->add_option("--max-epochs", hp.max_epochs, "Training epoch cap")->capture_default_str();
  cmd->add_option("--temperature", hp.temperature, "Gumbel-softmax temperature")->capture_default_str();
  cmd->add_option("--lambda", hp.lambda, "Fine-tune penalty weight")->capture_default_str();
  cmd->add_option("--finetune-budget", hp.finetune_budget, "Fine-tune epoch cap")->capture_default_str();
  cmd->add_flag("--hard-gumbel", hp.hard_gumbel, "One-hot embeddings");
  cmd->add_option("--activation", hp.activation, "Convolution activation")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, Activation>{{"identity", Activation::identity}, {"relu", Activation::relu}}));

  auto& ag = cfg.agent;
  cmd->add_option("--epsilon", ag.epsilon, "Initial exploration rate")->capture_default_str();
  cmd->add_option("--epsilon-decay", ag.epsilon_decay, "Exploration decay per episode")->capture_default_str();
  cmd->add_option("--epsilon-min", ag.epsilon_min, "Exploration floor")->capture_default_str();
  cmd->add_option("--q-lr", ag.learning_rate, "Q-learning rate")->capture_default_str();
  cmd->add_option("--discount", ag.discount, "Q-learning discount")->capture_default_str();
}

RunConfig finalize(RunConfig cfg, const std::string& config_path) {
  if (config_path.empty()) return cfg;
  std::ifstream in(config_path);
  if (!in) throw ParameterError("cannot read config " + config_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError("config " + config_path + ": " + e.what());
  }
  return run_config_from_json(j, std::move(cfg));
}

int cmd_solve(RunConfig cfg, const GraphSource& src, const std::string& config_path) {
  cfg.input = src.input;
  cfg.generator = src.gen;
  cfg = finalize(std::move(cfg), config_path);
  GraphSource resolved{cfg.input, cfg.generator};
  const EdgeListData data = resolved.load();
  const SolveReport r = solve(data.graph, cfg);

  const auto run_dir = cfg.output_dir / r.dataset_name;
  if (cfg.write_artifacts) {
    if (!cfg.input.empty()) write_id_map(data.original_ids, run_dir / "id_map");
    std::ofstream out(run_dir / "solution");
    print_selection(r.repaired_selection, data.original_ids, out);
  }
  if (cfg.format == "json")
    std::cout << r.to_json().dump(2) << '\n';
  else
    std::cout << r.to_text();
  return kOk;
}

int cmd_partition(const GraphSource& src, std::uint64_t seed, std::size_t max_size, const std::string& out) {
  const EdgeListData data = src.load();
  LouvainOptions opts;
  opts.seed = seed;
  opts.max_community_size = max_size;
  const PartitionResult p = louvain(data.graph, opts);
  std::size_t largest = 0;
  for (const auto& s : p.subgraphs) largest = std::max(largest, s.node_count());
  std::printf("communities %zu  largest %zu  cross edges %zu  modularity %.6f\n", p.subgraphs.size(), largest,
              p.cross_edges.size(), p.modularity);
  if (!out.empty()) write_partition_report(p, out);
  return kOk;
}

int cmd_bench(RunConfig cfg, const std::string& config_path, const std::string& nodes,
              const std::string& degrees, std::size_t samples) {
  cfg = finalize(std::move(cfg), config_path);
  BenchSpec spec{parse_list(nodes), parse_list(degrees), samples};
  const BenchResult result = bench(spec, cfg);
  const auto dir = cfg.output_dir / "bench";
  write_bench_outputs(result, dir);
  std::printf("%zu rows, %zu failed cells, written to %s\n", result.rows.size(), result.failures.size(),
              dir.string().c_str());
  return result.failures.empty() ? kOk : kStage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed GNN + Q-learning maximum independent set solver"};
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");

  RunConfig cfg;
  cfg.num_workers = default_workers();
  std::string config_path;

  auto* gen = app.add_subcommand("gen", "Generate a random d-regular graph");
  GeneratorSpec gen_spec;
  std::string gen_out;
  gen->add_option("-n,--nodes", gen_spec.nodes, "Node count")->required();
  gen->add_option("-d,--degree", gen_spec.degree, "Degree")->required();
  gen->add_option("--seed", gen_spec.seed, "Seed")->capture_default_str();
  gen->add_option("-o,--output", gen_out, "Output edge list")->required();

  auto* part = app.add_subcommand("partition", "Louvain partition of a graph");
  GraphSource part_src;
  part_src.add_options(part);
  std::uint64_t part_seed = 0;
  std::size_t part_cap = 0;
  std::string part_out;
  part->add_option("--seed", part_seed, "Louvain seed")->capture_default_str();
  part->add_option("--max-subgraph-size", part_cap, "Split larger communities (0: no cap)");
  part->add_option("-o,--output", part_out, "Write the partition report (JSON)");

  auto* solve_cmd = app.add_subcommand("solve", "Run the full pipeline on one graph");
  GraphSource solve_src;
  solve_src.add_options(solve_cmd);
  add_run_options(solve_cmd, cfg, config_path);

  auto* bench_cmd = app.add_subcommand("bench", "Pipeline and greedy over a grid of regular graphs");
  std::string bench_nodes = "100,200,500,800,1000", bench_degrees = "10,20,30,40";
  std::size_t bench_samples = 10;
  bench_cmd->add_option("--nodes-list", bench_nodes, "Comma-separated node counts")->capture_default_str();
  bench_cmd->add_option("--degrees", bench_degrees, "Comma-separated degrees")->capture_default_str();
  bench_cmd->add_option("--samples", bench_samples, "Graphs per cell")->capture_default_str();
  add_run_options(bench_cmd, cfg, config_path);

  auto* exact_cmd = app.add_subcommand("exact", "Exact MIS by branch and bound (n <= 30)");
  GraphSource exact_src;
  std::string exact_out;
  exact_src.add_options(exact_cmd);
  exact_cmd->add_option("-o,--output", exact_out, "Write the chosen node ids");

  auto* greedy_cmd = app.add_subcommand("greedy", "Min-degree greedy MIS");
  GraphSource greedy_src;
  std::string greedy_out;
  greedy_src.add_options(greedy_cmd);
  greedy_cmd->add_option("-o,--output", greedy_out, "Write the chosen node ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  log::set_quiet(quiet);

  try {
    if (*gen) {
      write_edge_list(generate_regular(gen_spec.nodes, gen_spec.degree, gen_spec.seed), gen_out);
      return kOk;
    }
    if (*part) return cmd_partition(part_src, part_seed, part_cap, part_out);
    if (*solve_cmd) return cmd_solve(cfg, solve_src, config_path);
    if (*bench_cmd) return cmd_bench(cfg, config_path, bench_nodes, bench_degrees, bench_samples);
    if (*exact_cmd) return run_baseline(exact_src, true, exact_out);
    if (*greedy_cmd) return run_baseline(greedy_src, false, greedy_out);
  } catch (const SizeGuardError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSizeGuard;
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kStage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kStage;
  }
  return kUsage;
}
