#pragma once

#include "mmgan/data.hpp"
#include "mmgan/trainer.hpp"

#include <string>
#include <string_view>

namespace mmgan {

/// Where training data comes from: a synthetic generator or a pair of IDX files.
struct DataConfig {
  std::string generator = "moons";  // moons | blobs | idx
  Eigen::Index n = 2000;
  double noise = 0.1;
  double test_fraction = 0.2;
  std::uint64_t seed = 1234;
  std::string normalize = "none";  // none | minus1to1 | zero1 | standardize
  std::vector<BlobCenter> centers;
  std::string idx_images;
  std::string idx_labels;
  Eigen::Index limit = 0;       // keep the first `limit` IDX images (0 = all)
  Eigen::Index downsample = 1;  // average-pool factor for IDX images
};

struct OutputConfig {
  std::string dir = "runs/experiment";
  bool plots = true;
};

struct ExperimentConfig {
  TrainConfig train;
  DataConfig data;
  OutputConfig output;
  int repeat = 1;
};

/// Parse sectioned `key = value` text ([train], [data], [output]; `#` comments).
/// Unknown keys, bad values and violated constraints raise ConfigError with key and line.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

/// Canonical text form with every default spelled out; parse_config(echo) round-trips.
std::string config_echo(const ExperimentConfig& config);

Dataset build_dataset(const DataConfig& config);

}  // namespace mmgan
