#include "rlgnn/gcn.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "rlgnn/errors.hpp"
#include "rlgnn/rng.hpp"

namespace rlgnn {

Eigen::VectorXd gumbel_softmax(const Eigen::VectorXd& logits, double temperature,
                               const Eigen::VectorXd& noise) {
  if (!(temperature > 0.0)) throw ParameterError("gumbel_softmax: temperature must be positive");
  if (logits.size() != noise.size()) throw ParameterError("gumbel_softmax: length mismatch");
  if (logits.size() == 0) return {};
  Eigen::VectorXd z = (logits + noise) / temperature;
  z.array() -= z.maxCoeff();
  Eigen::VectorXd e = z.array().exp();
  return e / e.sum();
}

SubgraphModel init_model(const Graph& sub, const Hyperparams& hp, std::uint64_t seed,
                         std::uint32_t subgraph_id) {
  if (hp.d_in < 1) throw ParameterError("d_in must be >= 1");
  SubgraphModel model;
  model.hp = hp;
  model.seed = seed;
  model.subgraph_id = subgraph_id;

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(sub.node_count());
  const Eigen::Index d = hp.d_in;

  model.embeddings.resize(n, d);
  Eigen::VectorXd logits(d), noise(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) logits[k] = normal(rng);
    for (Eigen::Index k = 0; k < d; ++k) {
      double u = unit(rng);
      while (u <= 0.0) u = unit(rng);
      noise[k] = -std::log(-std::log(u));
    }
    Eigen::VectorXd row = gumbel_softmax(logits, hp.temperature, noise);
    if (hp.hard_gumbel) {
      Eigen::Index arg = 0;
      row.maxCoeff(&arg);
      row.setZero();
      row[arg] = 1.0;
    }
    model.embeddings.row(i) = row.transpose();
  }

  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  std::uniform_real_distribution<double> init(-bound, bound);
  model.weight.resize(d);
  for (Eigen::Index k = 0; k < d; ++k) model.weight[k] = init(rng);
  return model;
}

Eigen::MatrixXd aggregate_features(const Eigen::MatrixXd& x, const Graph& sub) {
  const auto n = static_cast<Eigen::Index>(sub.node_count());
  if (x.rows() != n) throw ContractError("embedding rows do not match subgraph size");
  Eigen::MatrixXd a(n, x.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::RowVectorXd acc = x.row(i);
    for (NodeId j : sub.neighbors(static_cast<NodeId>(i))) acc += x.row(j);
    a.row(i) = acc / static_cast<double>(sub.degree(static_cast<NodeId>(i)) + 1);
  }
  return a;
}

namespace {

double sigmoid(double h) {
  if (h >= 0) return 1.0 / (1.0 + std::exp(-h));
  const double e = std::exp(h);
  return e / (1.0 + e);
}

// Convolution output per node: activation(A W).
Eigen::VectorXd conv(const Eigen::MatrixXd& agg, const Eigen::VectorXd& w, Activation act) {
  Eigen::VectorXd h = agg * w;
  if (act == Activation::relu) h = h.cwiseMax(0.0);
  return h;
}

Eigen::VectorXd probabilities(const Eigen::MatrixXd& agg, const Eigen::VectorXd& w, Activation act) {
  return conv(agg, w, act).unaryExpr([](double h) { return sigmoid(h); });
}

Eigen::VectorXd loss_grad_p(const Eigen::VectorXd& p, const Graph& sub, const LossConfig& cfg) {
  Eigen::VectorXd g = Eigen::VectorXd::Constant(p.size(), -cfg.beta);
  for (auto [u, v] : sub.edges()) {
    g[u] += cfg.alpha * p[v];
    g[v] += cfg.alpha * p[u];
  }
  for (NodeId j : cfg.penalty_nodes) g[j] += cfg.lambda;
  return g;
}

Eigen::VectorXd grad_from_agg(const Eigen::MatrixXd& agg, const Eigen::VectorXd& w, Activation act,
                              const Graph& sub, const LossConfig& cfg) {
  const Eigen::VectorXd h = agg * w;
  const Eigen::VectorXd p = probabilities(agg, w, act);
  Eigen::VectorXd dh = loss_grad_p(p, sub, cfg).cwiseProduct(
      p.cwiseProduct((1.0 - p.array()).matrix()));
  if (act == Activation::relu) dh = (h.array() > 0.0).select(dh, 0.0);
  Eigen::VectorXd grad = agg.transpose() * dh;
  if (!grad.allFinite()) throw NumericError("non-finite gradient");
  return grad;
}

void check_penalty_nodes(std::span<const NodeId> nodes, const Graph& sub) {
  for (NodeId j : nodes)
    if (j >= sub.node_count()) throw ContractError("penalty node outside subgraph");
}

std::vector<double> clamped(const Eigen::VectorXd& p) {
  std::vector<double> out(static_cast<std::size_t>(p.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i)
    out[static_cast<std::size_t>(i)] = std::clamp(p[i], kProbClamp, 1.0 - kProbClamp);
  return out;
}

}  // namespace

Eigen::VectorXd forward(const SubgraphModel& model, const Graph& sub) {
  if (model.weight.size() != model.embeddings.cols())
    throw ContractError("weight size does not match embedding width");
  return probabilities(aggregate_features(model.embeddings, sub), model.weight, model.hp.activation);
}

double loss(const Eigen::VectorXd& p, const Graph& sub, const LossConfig& cfg) {
  if (static_cast<std::size_t>(p.size()) != sub.node_count())
    throw ContractError("probability vector does not match subgraph size");
  check_penalty_nodes(cfg.penalty_nodes, sub);
  double conflict = 0.0;
  for (auto [u, v] : sub.edges()) conflict += p[u] * p[v];
  double penalty = 0.0;
  for (NodeId j : cfg.penalty_nodes) penalty += p[j];
  return cfg.alpha * conflict - cfg.beta * p.sum() + cfg.lambda * penalty;
}

Eigen::VectorXd gradient(const SubgraphModel& model, const Graph& sub, const LossConfig& cfg) {
  check_penalty_nodes(cfg.penalty_nodes, sub);
  if (sub.node_count() == 0) return Eigen::VectorXd::Zero(model.weight.size());
  return grad_from_agg(aggregate_features(model.embeddings, sub), model.weight,
                       model.hp.activation, sub, cfg);
}

TrainReport train(SubgraphModel& model, const Graph& sub) {
  const Hyperparams& hp = model.hp;
  const Eigen::MatrixXd agg = aggregate_features(model.embeddings, sub);
  const LossConfig cfg = LossConfig::plain(hp);

  TrainReport report;
  Eigen::VectorXd w = model.weight;
  Eigen::VectorXd best_w = w;
  double best_loss = std::numeric_limits<double>::infinity();
  double prev_loss = std::numeric_limits<double>::quiet_NaN();
  int streak = 0;

  for (int epoch = 0;; ++epoch) {
    const double l = loss(probabilities(agg, w, hp.activation), sub, cfg);
    if (!std::isfinite(l)) {
      report.diverged = true;
      break;
    }
    if (epoch == 0) report.initial_loss = l;
    if (l < best_loss) {
      best_loss = l;
      best_w = w;
    }
    if (epoch > 0) {
      streak = std::abs(l - prev_loss) < hp.tolerance ? streak + 1 : 0;
      if (streak >= hp.patience) {
        report.converged = true;
        break;
      }
    }
    prev_loss = l;
    if (epoch >= hp.max_epochs) break;
    Eigen::VectorXd grad;
    try {
      grad = grad_from_agg(agg, w, hp.activation, sub, cfg);
    } catch (const NumericError&) {
      report.diverged = true;
      break;
    }
    w -= hp.learning_rate * grad;
    report.epochs_run = epoch + 1;
  }

  model.weight = best_w;
  report.final_loss = best_loss;
  report.probabilities = clamped(probabilities(agg, best_w, hp.activation));
  return report;
}

TrainReport fine_tune(SubgraphModel& model, const Graph& sub, std::span<const NodeId> penalty_nodes,
                      double lambda, int budget) {
  check_penalty_nodes(penalty_nodes, sub);
  const Hyperparams& hp = model.hp;
  const Eigen::MatrixXd agg = aggregate_features(model.embeddings, sub);
  LossConfig cfg{hp.alpha, hp.beta, {penalty_nodes.begin(), penalty_nodes.end()}, lambda};

  TrainReport report;
  Eigen::VectorXd w = model.weight;
  Eigen::VectorXd p = probabilities(agg, w, hp.activation);
  report.initial_loss = loss(p, sub, cfg);
  auto all_below = [&] {
    for (NodeId j : penalty_nodes)
      if (p[j] >= 0.5) return false;
    return true;
  };

  double l = report.initial_loss;
  while (!all_below() && report.epochs_run < budget) {
    Eigen::VectorXd grad;
    try {
      grad = grad_from_agg(agg, w, hp.activation, sub, cfg);
    } catch (const NumericError&) {
      report.diverged = true;
      break;
    }
    Eigen::VectorXd next = w - hp.learning_rate * grad;
    Eigen::VectorXd next_p = probabilities(agg, next, hp.activation);
    const double next_l = loss(next_p, sub, cfg);
    if (!std::isfinite(next_l)) {
      report.diverged = true;
      break;
    }
    w = std::move(next);
    p = std::move(next_p);
    l = next_l;
    ++report.epochs_run;
  }
  report.converged = all_below();
  report.final_loss = l;
  model.weight = w;
  report.probabilities = clamped(p);
  return report;
}

}  // namespace rlgnn
