#pragma once

#include "mmgan/trainer.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace mmgan {

inline constexpr int kCheckpointVersion = 1;

nlohmann::json train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const MmganModel& model);
MmganModel model_from_json(const nlohmann::json& j);

/// Everything needed to resume a run exactly: config, weights, latent parameters,
/// optimizer moments, random stream state and the log so far.
struct Checkpoint {
  TrainConfig config;
  MmganModel model;
  AdamState<double> d_optimizer;
  AdamState<double> ge_optimizer;
  std::string rng_state;
  RunLog log;
  std::int64_t iteration = 0;

  static Checkpoint capture(const Trainer& trainer);
  void restore_into(Trainer& trainer) const;
};

std::string checkpoint_to_string(const Checkpoint& ckpt);
Checkpoint checkpoint_from_string(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mmgan
