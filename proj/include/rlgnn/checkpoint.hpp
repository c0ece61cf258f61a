#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "rlgnn/gcn.hpp"

namespace rlgnn {

// Per-subgraph model checkpoint, stored as JSON:
//
//   {
//     "format": "rlgnn-checkpoint", "format_version": 1,
//     "dataset_id": str, "subgraph_id": int, "seed": uint64,
//     "hyperparams": {...}, "d_in": int, "n_local": int,
//     "weight": [d_in doubles],
//     "embeddings": [n_local * d_in doubles, row-major],
//     "best_loss": double, "epochs_run": int
//   }
//
// Doubles are written in shortest round-trip form, so load(save(m)) is
// bit-identical to m.
struct Checkpoint {
  SubgraphModel model;
  std::string dataset_id;
  double best_loss = 0.0;
  int epochs_run = 0;
};

inline constexpr int kCheckpointFormatVersion = 1;

nlohmann::json hyperparams_to_json(const Hyperparams& hp);
Hyperparams hyperparams_from_json(const nlohmann::json& j);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

// Throws Error on missing, unreadable or malformed files.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rlgnn
