#pragma once

#include "mmgan/config.hpp"
#include "mmgan/trainer.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mmgan {

inline constexpr const char* kOutputRootEnv = "MMGAN_OUTPUT_ROOT";

struct SeedResult {
  int run_index = 0;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  MetricRecord final_metrics;
  double final_d_loss = 0;
  double wall_seconds = 0;
  std::size_t fallback_count = 0;
  std::filesystem::path directory;
};

struct MeanStd {
  double mean = 0;
  std::optional<double> std;  // absent for a single run
};

struct RunSummary {
  ExperimentConfig config;
  std::vector<SeedResult> seeds;
  bool failed = false;
  double wall_seconds = 0;
  std::vector<std::filesystem::path> artifacts;  // relative to the output directory
  std::filesystem::path directory;

  MeanStd aggregate(double MetricRecord::*field) const;
  nlohmann::json to_json() const;
};

/// Output directory for a config: $MMGAN_OUTPUT_ROOT/<dir> when the variable is set
/// and <dir> is relative, else <dir>.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

/// Runs `repeat` seeds (base_seed + run_index), each into <out>/run_<i>/, and writes
/// summary.json and seeds.csv into <out>.
RunSummary run_experiment(const ExperimentConfig& config);
RunSummary run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// `iter,d_loss,g_loss,ce_loss`
void write_iterations_csv(const std::filesystem::path& path, const RunLog& log);
std::vector<IterationRecord> read_iterations_csv(const std::filesystem::path& path);
/// `iter,nmi,ari,acc`
void write_metrics_csv(const std::filesystem::path& path, const RunLog& log);
std::vector<MetricRecord> read_metrics_csv(const std::filesystem::path& path);

/// `x0,...,x{p-1},label` (label column omitted when the dataset is unlabeled).
void write_samples_csv(const std::filesystem::path& path, const Eigen::MatrixXd& x,
                       const std::optional<Labels>& labels);
Dataset read_samples_csv(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace mmgan
