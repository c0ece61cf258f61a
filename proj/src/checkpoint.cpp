#include "rlgnn/checkpoint.hpp"

#include <fstream>

#include "rlgnn/errors.hpp"

namespace rlgnn {

nlohmann::json hyperparams_to_json(const Hyperparams& hp) {
  return {{"d_in", hp.d_in},
          {"alpha", hp.alpha},
          {"beta", hp.beta},
          {"learning_rate", hp.learning_rate},
          {"tolerance", hp.tolerance},
          {"patience", hp.patience},
          {"max_epochs", hp.max_epochs},
          {"temperature", hp.temperature},
          {"lambda", hp.lambda},
          {"finetune_budget", hp.finetune_budget},
          {"hard_gumbel", hp.hard_gumbel},
          {"activation", hp.activation == Activation::relu ? "relu" : "identity"}};
}

Hyperparams hyperparams_from_json(const nlohmann::json& j) {
  Hyperparams hp;
  hp.d_in = j.value("d_in", hp.d_in);
  hp.alpha = j.value("alpha", hp.alpha);
  hp.beta = j.value("beta", hp.beta);
  hp.learning_rate = j.value("learning_rate", hp.learning_rate);
  hp.tolerance = j.value("tolerance", hp.tolerance);
  hp.patience = j.value("patience", hp.patience);
  hp.max_epochs = j.value("max_epochs", hp.max_epochs);
  hp.temperature = j.value("temperature", hp.temperature);
  hp.lambda = j.value("lambda", hp.lambda);
  hp.finetune_budget = j.value("finetune_budget", hp.finetune_budget);
  hp.hard_gumbel = j.value("hard_gumbel", hp.hard_gumbel);
  const std::string act = j.value("activation", std::string("identity"));
  if (act == "relu") hp.activation = Activation::relu;
  else if (act == "identity") hp.activation = Activation::identity;
  else throw ParameterError("unknown activation '" + act + "'");
  return hp;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const SubgraphModel& m = ckpt.model;
  nlohmann::json j;
  j["format"] = "rlgnn-checkpoint";
  j["format_version"] = kCheckpointFormatVersion;
  j["dataset_id"] = ckpt.dataset_id;
  j["subgraph_id"] = m.subgraph_id;
  j["seed"] = m.seed;
  j["hyperparams"] = hyperparams_to_json(m.hp);
  j["d_in"] = m.weight.size();
  j["n_local"] = m.embeddings.rows();
  j["weight"] = std::vector<double>(m.weight.data(), m.weight.data() + m.weight.size());
  std::vector<double> emb;
  emb.reserve(static_cast<std::size_t>(m.embeddings.size()));
  for (Eigen::Index r = 0; r < m.embeddings.rows(); ++r)
    for (Eigen::Index c = 0; c < m.embeddings.cols(); ++c) emb.push_back(m.embeddings(r, c));
  j["embeddings"] = std::move(emb);
  j["best_loss"] = ckpt.best_loss;
  j["epochs_run"] = ckpt.epochs_run;

  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    out << j.dump() << '\n';
    if (!out) throw Error("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing checkpoint " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    if (j.at("format") != "rlgnn-checkpoint") throw Error("not a checkpoint");
    if (j.at("format_version").get<int>() != kCheckpointFormatVersion)
      throw Error("unsupported checkpoint version");

    Checkpoint ckpt;
    ckpt.dataset_id = j.at("dataset_id").get<std::string>();
    ckpt.best_loss = j.at("best_loss").get<double>();
    ckpt.epochs_run = j.at("epochs_run").get<int>();
    SubgraphModel& m = ckpt.model;
    m.subgraph_id = j.at("subgraph_id").get<std::uint32_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.hp = hyperparams_from_json(j.at("hyperparams"));
    const auto d = j.at("d_in").get<Eigen::Index>();
    const auto n = j.at("n_local").get<Eigen::Index>();
    const auto w = j.at("weight").get<std::vector<double>>();
    const auto emb = j.at("embeddings").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != d ||
        static_cast<Eigen::Index>(emb.size()) != n * d)
      throw Error("checkpoint array sizes inconsistent");
    m.weight = Eigen::Map<const Eigen::VectorXd>(w.data(), d);
    m.embeddings.resize(n, d);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < d; ++c) m.embeddings(r, c) = emb[static_cast<std::size_t>(r * d + c)];
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw Error("corrupt checkpoint " + path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error("corrupt checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace rlgnn
