#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rlgnn/graph.hpp"

namespace rlgnn {

// Activation applied to the convolution output before the sigmoid.
// Identity is the default: with a single output channel, ReLU pins every
// probability at >= 0.5 and no node can ever be deselected.
enum class Activation { identity, relu };

struct Hyperparams {
  int d_in = 64;
  double alpha = 2.0;
  double beta = 1.0;
  double learning_rate = 1.0;
  double tolerance = 1e-5;
  int patience = 20;
  int max_epochs = 3000;
  double temperature = 1.0;
  double lambda = 2.0;
  int finetune_budget = 300;
  bool hard_gumbel = false;
  Activation activation = Activation::identity;
};

struct SubgraphModel {
  Eigen::VectorXd weight;      // d_in x 1
  Eigen::MatrixXd embeddings;  // n_local x d_in, rows on the simplex, frozen
  Hyperparams hp;
  std::uint64_t seed = 0;
  std::uint32_t subgraph_id = 0;
};

struct TrainReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int epochs_run = 0;
  std::vector<double> probabilities;  // clamped to [kProbClamp, 1 - kProbClamp]
  bool converged = false;
  bool diverged = false;
};

inline constexpr double kProbClamp = 1e-7;

// softmax((logits + noise) / temperature). Throws ParameterError for
// temperature <= 0 or mismatched lengths.
Eigen::VectorXd gumbel_softmax(const Eigen::VectorXd& logits, double temperature,
                               const Eigen::VectorXd& noise);

// Random logits ~ N(0,1) and one frozen Gumbel draw per node, pushed through
// gumbel_softmax; weight ~ U[-1/sqrt(d_in), 1/sqrt(d_in)].
SubgraphModel init_model(const Graph& sub, const Hyperparams& hp, std::uint64_t seed,
                         std::uint32_t subgraph_id = 0);

// Row i = mean of x_j over j in {i} + N(i).
Eigen::MatrixXd aggregate_features(const Eigen::MatrixXd& embeddings, const Graph& sub);

Eigen::VectorXd forward(const SubgraphModel& model, const Graph& sub);

struct LossConfig {
  double alpha = 2.0;
  double beta = 1.0;
  std::vector<NodeId> penalty_nodes;
  double lambda = 0.0;

  static LossConfig plain(const Hyperparams& hp) { return {hp.alpha, hp.beta, {}, 0.0}; }
};

// alpha * sum_{(i,j) in E} p_i p_j - beta * sum_i p_i + lambda * sum_{j in penalty} p_j.
double loss(const Eigen::VectorXd& p, const Graph& sub, const LossConfig& cfg);

// Closed-form dL/dW. Throws NumericError on non-finite values.
Eigen::VectorXd gradient(const SubgraphModel& model, const Graph& sub, const LossConfig& cfg);

// Plain gradient descent to convergence (|dL| < tolerance for `patience`
// consecutive epochs) or max_epochs. Leaves the best-loss weights in `model`.
TrainReport train(SubgraphModel& model, const Graph& sub);

// Continues descent on the loss plus lambda * sum of the penalty nodes'
// probabilities. Stops as soon as every penalty node is below 0.5.
TrainReport fine_tune(SubgraphModel& model, const Graph& sub, std::span<const NodeId> penalty_nodes,
                      double lambda, int budget);

}  // namespace rlgnn
