#pragma once

#include "mmgan/adam.hpp"
#include "mmgan/data.hpp"
#include "mmgan/dense_net.hpp"
#include "mmgan/latent.hpp"
#include "mmgan/losses.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mmgan {

/// How B1 fakes get their cluster: the encoder's choice for the paired real sample, or a
/// fresh Cat(K, 1/K) draw (the no-pairing ablation).
enum class Pairing { kPaired, kRandom };
/// Soft feeds the encoder's probability row into the latent embedding (differentiable);
/// hard feeds its argmax one-hot.
enum class EncoderPath { kSoft, kHard };

std::string to_string(Pairing p);
std::string to_string(EncoderPath p);
Pairing pairing_from_string(const std::string& s);
EncoderPath encoder_path_from_string(const std::string& s);

struct TrainConfig {
  Eigen::Index clusters = 2;
  Eigen::Index latent_dim = 2;
  Eigen::Index batch_size = 64;
  std::int64_t train_iter = 2000;
  double alpha = 1.0;
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.99;
  double sigma_init = 0.5;
  double sigma_floor = 0.1;
  double leak = 0.2;
  std::vector<Eigen::Index> hidden = {128, 128};
  LossKind loss = LossKind::kRsgan;
  Pairing pairing = Pairing::kPaired;
  EncoderPath encoder_path = EncoderPath::kSoft;
  std::uint64_t seed = 0;
  std::int64_t eval_every = 100;

  /// Throws InvalidArgument / CapacityError naming the violated constraint.
  void validate() const;
};

/// Generator d -> p (ReLU hidden, linear out), discriminator p -> 1 raw critic and
/// encoder p -> K softmax (LeakyReLU hidden), plus the mixture latent.
struct MmganModel {
  DenseNet<double> generator;
  DenseNet<double> discriminator;
  DenseNet<double> encoder;
  GmmLatent<double> latent;

  static MmganModel create(const TrainConfig& config, Eigen::Index data_dim, Rng& rng);
  Eigen::Index data_dim() const { return discriminator.input_dim(); }
  void validate() const;

  /// Generator, encoder and latent parameters in that order: the block updated jointly.
  Eigen::VectorXd ge_parameters() const;
  void set_ge_parameters(const Eigen::VectorXd& flat);
};

/// Paired real/fake batch with everything backward needs.
struct B1Batch {
  Eigen::MatrixXd x_real;
  Eigen::MatrixXd x_fake;
  Eigen::MatrixXd real_probs;  // encoder output on x_real
  Eigen::MatrixXd codes;       // latent codes that produced x_fake
  Eigen::MatrixXd z;
  Labels real_clusters;  // argmax of real_probs
  Labels fake_clusters;
  ForwardRecord<double> encoder_record;
  ForwardRecord<double> generator_record;
};

struct B1Options {
  Pairing pairing = Pairing::kPaired;
  EncoderPath encoder_path = EncoderPath::kSoft;
  Labels random_clusters;  // used when pairing == kRandom
};

B1Batch build_b1(const MmganModel& model, const Eigen::MatrixXd& x_real, const Eigen::MatrixXd& z,
                 const B1Options& options);

/// Cluster-labeled fakes x_f^p = G(mu_y + sigma_y z) with hard one-hot codes.
struct B2Batch {
  Eigen::MatrixXd x_fake;
  Labels clusters;
  Eigen::MatrixXd codes;
  Eigen::MatrixXd z;
  ForwardRecord<double> generator_record;
};

B2Batch build_b2(const MmganModel& model, const Labels& clusters, const Eigen::MatrixXd& z);
B2Batch build_b2(const MmganModel& model, Eigen::Index m, Rng& rng);

Labels argmax_rows(const Eigen::MatrixXd& probs);
Eigen::Index predict_cluster(const MmganModel& model, const Eigen::RowVectorXd& x);
Labels predict_clusters(const MmganModel& model, const Eigen::MatrixXd& x);

/// All random draws of one iteration, so a step can be replayed or differentiated numerically.
struct StepInputs {
  Eigen::MatrixXd x_real;
  Labels prior_clusters;  // y^p
  Eigen::MatrixXd z;      // shared by B1 and B2
  Labels random_clusters; // only drawn in the no-pairing mode
};

StepInputs sample_step_inputs(const TrainConfig& config, const Dataset& data, Rng& rng);

struct StepLosses {
  double d_loss = 0;
  double g_loss = 0;
  double ce_loss = 0;
  double ge_objective() const { return g_loss + ce_loss; }
};

struct StepGradients {
  StepLosses losses;
  Eigen::VectorXd discriminator;  // d l_D / d theta_D
  Eigen::VectorXd ge;             // d l_{G,E} / d (theta_G, theta_E, latent)
  std::size_t fallback_count = 0;
  std::size_t ce_clamped = 0;
};

/// Both gradients of one iteration, evaluated at the current parameters.
StepGradients compute_step_gradients(const MmganModel& model, const TrainConfig& config,
                                     const StepInputs& inputs);

/// Forward-only losses for the same inputs.
StepLosses evaluate_step_losses(const MmganModel& model, const TrainConfig& config,
                                const StepInputs& inputs);

struct IterationRecord {
  std::int64_t iter = 0;
  double d_loss = 0;
  double g_loss = 0;
  double ce_loss = 0;
};

struct MetricRecord {
  std::int64_t iter = 0;
  double nmi = 0;
  double ari = 0;
  double acc = 0;
  std::vector<double> sigmas;
};

/// NMI/ARI/ACC of the encoder's argmax clusters on `x` against `truth` (iter left 0).
MetricRecord evaluate_clustering(const MmganModel& model, const Eigen::MatrixXd& x, const Labels& truth);

struct RunLog {
  std::vector<IterationRecord> iterations;
  std::vector<MetricRecord> metrics;
  std::size_t fallback_count = 0;
  std::size_t ce_clamped = 0;
};

/// Stateful training loop: model, both optimizers, the random stream and the log.
class Trainer {
 public:
  Trainer(TrainConfig config, Dataset data);

  /// One iteration: gradients at the current parameters, then the discriminator Adam update
  /// and the joint generator/encoder/latent Adam update.
  StepLosses step();
  /// Steps until `config().train_iter` iterations have run.
  void run();
  MetricRecord evaluate() const;

  const TrainConfig& config() const { return config_; }
  const Dataset& data() const { return data_; }
  const MmganModel& model() const { return model_; }
  MmganModel& model() { return model_; }
  const RunLog& log() const { return log_; }
  std::int64_t iteration() const { return iteration_; }
  const AdamState<double>& d_optimizer() const { return d_opt_; }
  const AdamState<double>& ge_optimizer() const { return ge_opt_; }
  AdamState<double>& d_optimizer() { return d_opt_; }
  AdamState<double>& ge_optimizer() { return ge_opt_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

  /// Restores a saved state (see checkpoint.hpp).
  void restore(MmganModel model, AdamState<double> d_opt, AdamState<double> ge_opt, Rng rng,
               RunLog log, std::int64_t iteration);

 private:
  TrainConfig config_;
  Dataset data_;
  Rng rng_;
  MmganModel model_;
  AdamState<double> d_opt_;
  AdamState<double> ge_opt_;
  RunLog log_;
  std::int64_t iteration_ = 0;
};

struct TrainResult {
  MmganModel model;
  RunLog log;
};

TrainResult train(const TrainConfig& config, const Dataset& data);

}  // namespace mmgan
