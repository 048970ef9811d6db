#include "mmgan/experiment.hpp"

#include "mmgan/checkpoint.hpp"
#include "mmgan/errors.hpp"
#include "mmgan/metrics.hpp"
#include "mmgan/svg.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace mmgan {

namespace fs = std::filesystem;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

namespace {

double parse_double(std::string_view s, const fs::path& path, std::size_t line) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw FormatError(path.string() + " line " + std::to_string(line) + ": bad number '" + std::string(s) + "'",
                      line);
  return v;
}

std::int64_t parse_int(std::string_view s, const fs::path& path, std::size_t line) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw FormatError(path.string() + " line " + std::to_string(line) + ": bad integer '" + std::string(s) + "'",
                      line);
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    for (auto c : split(line)) cells.emplace_back(c);
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != t.header.size())
        throw FormatError(path.string() + " line " + std::to_string(t.rows.size() + 2) + ": expected " +
                              std::to_string(t.header.size()) + " columns",
                          t.rows.size() + 2);
      t.rows.push_back(std::move(cells));
    }
  }
  if (first) throw FormatError(path.string() + ": missing header", 0);
  return t;
}

void expect_header(const CsvTable& t, const std::vector<std::string>& expected, const fs::path& path) {
  if (t.header != expected) throw FormatError(path.string() + ": unexpected header", 1);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) { open_out(path) << text; }

void write_latent_csv(const fs::path& path, const GmmLatent<double>& latent) {
  auto out = open_out(path);
  out << "cluster,sigma";
  for (Eigen::Index j = 0; j < latent.dim(); ++j) out << ",mu" << j;
  out << '\n';
  for (Eigen::Index k = 0; k < latent.clusters(); ++k) {
    out << k << ',' << format_double(latent.sigma(k));
    for (Eigen::Index j = 0; j < latent.dim(); ++j) out << ',' << format_double(latent.means(k, j));
    out << '\n';
  }
}

void write_seeds_csv(const fs::path& path, const std::vector<SeedResult>& seeds) {
  auto out = open_out(path);
  out << "run,seed,ok,nmi,ari,acc,final_d_loss,fallback_count\n";
  for (const auto& s : seeds)
    out << s.run_index << ',' << s.seed << ',' << (s.ok ? 1 : 0) << ',' << format_double(s.final_metrics.nmi) << ','
        << format_double(s.final_metrics.ari) << ',' << format_double(s.final_metrics.acc) << ','
        << format_double(s.final_d_loss) << ',' << s.fallback_count << '\n';
}

nlohmann::json mean_std_json(const MeanStd& m) {
  nlohmann::json j = {{"mean", m.mean}};
  if (m.std) j["std"] = *m.std;
  return j;
}

// Per-run plots; returns the written file names.
std::vector<std::string> write_plots(const fs::path& dir, const Trainer& trainer) {
  std::vector<std::string> files;
  const auto& model = trainer.model();
  const auto& data = trainer.data();
  const auto emit = [&](const std::string& name, const std::string& svg) {
    write_text(dir / name, svg);
    files.push_back(name);
  };

  const auto cos = cosine_matrix(model.latent.means);
  emit("cosine.svg", render_heatmap_svg(cos.values, "cosine similarity of cluster means"));
  emit("one_minus_cosine.svg", render_heatmap_svg(cos.one_minus(), "1 - cosine similarity of cluster means"));

  Series d_loss{"d_loss", {}, {}};
  for (const auto& r : trainer.log().iterations) {
    d_loss.x.push_back(static_cast<double>(r.iter));
    d_loss.y.push_back(r.d_loss);
  }
  emit("d_loss.svg", render_line_svg({d_loss}, "discriminator loss", "iteration", "d_loss"));

  if (model.latent.dim() == 2) {
    Rng rng(trainer.config().seed ^ 0x5eedULL);
    const auto prior = sample_prior(model.latent, 1000, rng);
    emit("latent.svg", render_scatter_svg(prior.z_tilde, prior.labels, model.latent.means, "latent samples"));
  }
  if (data.dim() == 2) {
    const auto& held_out = data.test_indices.empty() ? data.train_indices : data.test_indices;
    const Eigen::MatrixXd x = data.rows(held_out);
    emit("clusters.svg", render_scatter_svg(x, predict_clusters(model, x), {}, "encoder clusters (held-out)"));
    Rng rng(trainer.config().seed ^ 0xfa4eULL);
    const auto prior = sample_prior(model.latent, 1000, rng);
    const Eigen::MatrixXd fake = model.generator.forward(prior.z_tilde);
    emit("generated.svg", render_scatter_svg(fake, prior.labels, {}, "generated samples"));
  }
  return files;
}

}  // namespace

void write_iterations_csv(const fs::path& path, const RunLog& log) {
  auto out = open_out(path);
  out << "iter,d_loss,g_loss,ce_loss\n";
  for (const auto& r : log.iterations)
    out << r.iter << ',' << format_double(r.d_loss) << ',' << format_double(r.g_loss) << ','
        << format_double(r.ce_loss) << '\n';
}

std::vector<IterationRecord> read_iterations_csv(const fs::path& path) {
  const auto t = read_csv(path);
  expect_header(t, {"iter", "d_loss", "g_loss", "ce_loss"}, path);
  std::vector<IterationRecord> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    out.push_back({parse_int(r[0], path, i + 2), parse_double(r[1], path, i + 2), parse_double(r[2], path, i + 2),
                   parse_double(r[3], path, i + 2)});
  }
  return out;
}

void write_metrics_csv(const fs::path& path, const RunLog& log) {
  auto out = open_out(path);
  out << "iter,nmi,ari,acc\n";
  for (const auto& r : log.metrics)
    out << r.iter << ',' << format_double(r.nmi) << ',' << format_double(r.ari) << ',' << format_double(r.acc)
        << '\n';
}

std::vector<MetricRecord> read_metrics_csv(const fs::path& path) {
  const auto t = read_csv(path);
  expect_header(t, {"iter", "nmi", "ari", "acc"}, path);
  std::vector<MetricRecord> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    MetricRecord m;
    m.iter = parse_int(r[0], path, i + 2);
    m.nmi = parse_double(r[1], path, i + 2);
    m.ari = parse_double(r[2], path, i + 2);
    m.acc = parse_double(r[3], path, i + 2);
    out.push_back(std::move(m));
  }
  return out;
}

void write_samples_csv(const fs::path& path, const Eigen::MatrixXd& x, const std::optional<Labels>& labels) {
  if (labels && static_cast<Eigen::Index>(labels->size()) != x.rows())
    throw InvalidArgument("write_samples_csv: one label per row required");
  auto out = open_out(path);
  for (Eigen::Index j = 0; j < x.cols(); ++j) out << (j ? "," : "") << 'x' << j;
  if (labels) out << ",label";
  out << '\n';
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) out << (j ? "," : "") << format_double(x(i, j));
    if (labels) out << ',' << (*labels)[static_cast<std::size_t>(i)];
    out << '\n';
  }
}

Dataset read_samples_csv(const fs::path& path) {
  const auto t = read_csv(path);
  const bool labeled = !t.header.empty() && t.header.back() == "label";
  const std::size_t p = t.header.size() - (labeled ? 1 : 0);
  if (p == 0) throw FormatError(path.string() + ": no feature columns", 1);
  for (std::size_t j = 0; j < p; ++j)
    if (t.header[j] != "x" + std::to_string(j)) throw FormatError(path.string() + ": unexpected header", 1);
  Dataset d;
  d.name = path.stem().string();
  d.samples.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(p));
  Labels labels;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t j = 0; j < p; ++j)
      d.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = parse_double(t.rows[i][j], path, i + 2);
    if (labeled) {
      const auto label = parse_int(t.rows[i][p], path, i + 2);
      if (label < 0) throw FormatError(path.string() + " line " + std::to_string(i + 2) + ": negative label", i + 2);
      labels.push_back(label);
    }
  }
  if (labeled) d.labels = std::move(labels);
  for (Eigen::Index i = 0; i < d.samples.rows(); ++i) d.test_indices.push_back(i);
  d.validate();
  return d;
}

MeanStd RunSummary::aggregate(double MetricRecord::*field) const {
  std::vector<double> values;
  for (const auto& s : seeds)
    if (s.ok) values.push_back(s.final_metrics.*field);
  MeanStd r;
  if (values.empty()) return r;
  double sum = 0;
  for (double v : values) sum += v;
  r.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0;
    for (double v : values) sq += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return r;
}

nlohmann::json RunSummary::to_json() const {
  nlohmann::json seed_rows = nlohmann::json::array();
  std::size_t fallbacks = 0;
  for (const auto& s : seeds) {
    nlohmann::json row = {{"run", s.run_index},
                          {"seed", s.seed},
                          {"ok", s.ok},
                          {"nmi", s.final_metrics.nmi},
                          {"ari", s.final_metrics.ari},
                          {"acc", s.final_metrics.acc},
                          {"final_d_loss", s.final_d_loss},
                          {"sigmas", s.final_metrics.sigmas},
                          {"fallback_count", s.fallback_count},
                          {"wall_seconds", s.wall_seconds},
                          {"directory", s.directory.lexically_relative(directory).generic_string()}};
    if (!s.ok) row["error"] = s.error;
    seed_rows.push_back(std::move(row));
    fallbacks += s.fallback_count;
  }
  nlohmann::json artifact_list = nlohmann::json::array();
  for (const auto& a : artifacts) artifact_list.push_back(a.generic_string());
  return {{"format", "mmgan-summary"},
          {"version", 1},
          {"status", failed ? "failed" : "ok"},
          {"config", config_echo(config)},
          {"seeds", seed_rows},
          {"aggregate",
           {{"nmi", mean_std_json(aggregate(&MetricRecord::nmi))},
            {"ari", mean_std_json(aggregate(&MetricRecord::ari))},
            {"acc", mean_std_json(aggregate(&MetricRecord::acc))}}},
          {"fallback_count", fallbacks},
          {"wall_seconds", wall_seconds},
          {"artifacts", artifact_list}};
}

fs::path resolve_output_dir(const ExperimentConfig& config) {
  const fs::path dir = config.output.dir;
  const char* root = std::getenv(kOutputRootEnv);
  if (root != nullptr && *root != '\0' && dir.is_relative()) return fs::path(root) / dir;
  return dir;
}

RunSummary run_experiment(const ExperimentConfig& config) { return run_experiment(config, resolve_output_dir(config)); }

RunSummary run_experiment(const ExperimentConfig& config, const fs::path& out_dir) {
  using Clock = std::chrono::steady_clock;
  config.train.validate();
  if (config.repeat < 1) throw InvalidArgument("repeat must be at least 1");
  const auto start = Clock::now();
  fs::create_directories(out_dir);

  RunSummary summary;
  summary.config = config;
  summary.directory = out_dir;
  const Dataset data = build_dataset(config.data);

  for (int run = 0; run < config.repeat; ++run) {
    const auto run_start = Clock::now();
    TrainConfig tc = config.train;
    tc.seed = config.train.seed + static_cast<std::uint64_t>(run);
    const fs::path run_name = "run_" + std::to_string(run);
    const fs::path run_dir = out_dir / run_name;
    fs::create_directories(run_dir);

    SeedResult result;
    result.run_index = run;
    result.seed = tc.seed;
    result.directory = run_dir;

    Trainer trainer(tc, data);
    try {
      trainer.run();
    } catch (const TrainingAborted& e) {
      result.ok = false;
      result.error = e.what();
      summary.failed = true;
    }

    std::vector<std::string> files = {"iterations.csv", "metrics.csv", "latent.csv", "checkpoint.json"};
    write_iterations_csv(run_dir / "iterations.csv", trainer.log());
    write_metrics_csv(run_dir / "metrics.csv", trainer.log());
    write_latent_csv(run_dir / "latent.csv", trainer.model().latent);
    save_checkpoint(run_dir / "checkpoint.json", Checkpoint::capture(trainer));
    if (run == 0) {
      const auto& held_out = data.test_indices.empty() ? data.train_indices : data.test_indices;
      write_samples_csv(out_dir / "test_data.csv", data.rows(held_out),
                        data.labels ? std::optional<Labels>(data.labels_at(held_out)) : std::nullopt);
      summary.artifacts.emplace_back("test_data.csv");
    }
    if (config.output.plots && result.ok)
      for (auto& f : write_plots(run_dir, trainer)) files.push_back(std::move(f));
    for (const auto& f : files) summary.artifacts.push_back(run_name / f);

    result.final_metrics = trainer.log().metrics.empty() ? trainer.evaluate() : trainer.log().metrics.back();
    result.final_d_loss = trainer.log().iterations.empty() ? 0.0 : trainer.log().iterations.back().d_loss;
    result.fallback_count = trainer.log().fallback_count;
    result.wall_seconds = std::chrono::duration<double>(Clock::now() - run_start).count();
    summary.seeds.push_back(std::move(result));
  }

  summary.artifacts.emplace_back("seeds.csv");
  summary.artifacts.emplace_back("summary.json");
  write_seeds_csv(out_dir / "seeds.csv", summary.seeds);
  summary.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  write_text(out_dir / "summary.json", summary.to_json().dump(2) + "\n");
  return summary;
}

}  // namespace mmgan
