#include "mmgan/checkpoint.hpp"
#include "mmgan/config.hpp"
#include "mmgan/errors.hpp"
#include "mmgan/experiment.hpp"
#include "mmgan/latent.hpp"
#include "mmgan/svg.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace mmgan;

namespace {

constexpr int kExitAborted = 1;
constexpr int kExitInvalid = 2;

int cmd_run(const std::string& config_path, const std::string& out_override) {
  ExperimentConfig config;
  try {
    config = load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return kExitInvalid;
  }
  if (!out_override.empty()) config.output.dir = out_override;
  const RunSummary summary = run_experiment(config);
  for (const auto& s : summary.seeds) {
    std::cout << "run " << s.run_index << " seed " << s.seed << ": ";
    if (s.ok)
      std::cout << "nmi " << s.final_metrics.nmi << " ari " << s.final_metrics.ari << " acc " << s.final_metrics.acc;
    else
      std::cout << "aborted: " << s.error;
    std::cout << '\n';
  }
  const auto print = [&](const char* name, double MetricRecord::*field) {
    const auto m = summary.aggregate(field);
    std::cout << name << ' ' << m.mean;
    if (m.std) std::cout << " +- " << *m.std;
    std::cout << '\n';
  };
  print("nmi", &MetricRecord::nmi);
  print("ari", &MetricRecord::ari);
  print("acc", &MetricRecord::acc);
  std::cout << "summary " << (summary.directory / "summary.json").string() << '\n';
  return summary.failed ? kExitAborted : 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& dataset_path) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const Dataset data = read_samples_csv(dataset_path);
  if (data.dim() != ckpt.model.data_dim())
    throw InvalidArgument("dataset has " + std::to_string(data.dim()) + " features, model expects " +
                          std::to_string(ckpt.model.data_dim()));
  const Labels clusters = predict_clusters(ckpt.model, data.samples);
  nlohmann::json out = {{"checkpoint", checkpoint_path},
                        {"dataset", dataset_path},
                        {"iteration", ckpt.iteration},
                        {"rows", data.size()}};
  std::vector<std::size_t> counts(static_cast<std::size_t>(ckpt.model.latent.clusters()), 0);
  for (auto c : clusters) ++counts[static_cast<std::size_t>(c)];
  out["cluster_sizes"] = counts;
  if (data.labels) {
    const MetricRecord m = evaluate_clustering(ckpt.model, data.samples, *data.labels);
    out["nmi"] = m.nmi;
    out["ari"] = m.ari;
    out["acc"] = m.acc;
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_plot(const std::string& runlog, const std::string& out_override) {
  fs::path csv = runlog;
  if (fs::is_directory(csv)) csv /= "iterations.csv";
  const auto records = read_iterations_csv(csv);
  const fs::path out_dir = out_override.empty() ? csv.parent_path() : fs::path(out_override);
  if (!out_dir.empty()) fs::create_directories(out_dir);
  Series d{"d_loss", {}, {}}, g{"g_loss", {}, {}}, ce{"ce_loss", {}, {}};
  for (const auto& r : records) {
    for (auto* s : {&d, &g, &ce}) s->x.push_back(static_cast<double>(r.iter));
    d.y.push_back(r.d_loss);
    g.y.push_back(r.g_loss);
    ce.y.push_back(r.ce_loss);
  }
  const auto write = [&](const std::string& name, const std::string& svg) {
    std::ofstream(out_dir / name, std::ios::binary) << svg;
    std::cout << (out_dir / name).string() << '\n';
  };
  write("d_loss.svg", render_line_svg({d}, "discriminator loss", "iteration", "d_loss"));
  write("losses.svg", render_line_svg({d, g, ce}, "training losses", "iteration", "loss"));
  return 0;
}

int cmd_annulus(Eigen::Index d, double delta, std::int64_t n, std::uint64_t seed) {
  Rng rng(seed);
  const double fraction = annulus_mass_check(d, delta, n, rng);
  const double bound = annulus_bound(delta);
  const double slack = 4.0 * std::sqrt(bound / static_cast<double>(n));
  std::cout << "d " << d << " delta " << delta << " n " << n << '\n'
            << "outside fraction " << fraction << '\n'
            << "bound 4/delta^2 exp(-delta^2/4) " << bound << '\n'
            << (fraction <= bound + slack ? "within bound" : "exceeds bound") << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixture-of-Gaussians latent GAN: training, evaluation and plotting"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  auto* run = app.add_subcommand("run", "train from a config file");
  run->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory (overrides [output] dir)");

  std::string checkpoint_path, dataset_path;
  auto* eval = app.add_subcommand("eval", "cluster a CSV dataset with a saved checkpoint");
  eval->add_option("checkpoint", checkpoint_path, "checkpoint.json")->required()->check(CLI::ExistingFile);
  eval->add_option("dataset", dataset_path, "CSV with columns x0..x{p-1}[,label]")
      ->required()
      ->check(CLI::ExistingFile);

  std::string runlog, plot_out;
  auto* plot = app.add_subcommand("plot", "render loss curves from iterations.csv (or a run directory)");
  plot->add_option("runlog", runlog, "iterations.csv or run directory")->required()->check(CLI::ExistingPath);
  plot->add_option("--out", plot_out, "output directory (default: next to the log)");

  Eigen::Index dim = 0;
  double delta = 0;
  std::int64_t n = 0;
  std::uint64_t seed = 0;
  auto* annulus = app.add_subcommand("annulus-check", "Monte-Carlo mass outside the Gaussian annulus");
  annulus->add_option("d", dim, "dimension")->required();
  annulus->add_option("delta", delta, "annulus half-width")->required();
  annulus->add_option("n", n, "number of samples")->required();
  annulus->add_option("--seed", seed, "random seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, out_dir);
    if (*eval) return cmd_eval(checkpoint_path, dataset_path);
    if (*plot) return cmd_plot(runlog, plot_out);
    if (*annulus) return cmd_annulus(dim, delta, n, seed);
  } catch (const ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return 0;
}
