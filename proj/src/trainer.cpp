#include "mmgan/trainer.hpp"

#include "mmgan/errors.hpp"
#include "mmgan/metrics.hpp"

#include <cmath>
#include <sstream>

namespace mmgan {

std::string to_string(Pairing p) { return p == Pairing::kPaired ? "paired" : "random"; }
std::string to_string(EncoderPath p) { return p == EncoderPath::kSoft ? "soft" : "hard"; }

Pairing pairing_from_string(const std::string& s) {
  if (s == "paired") return Pairing::kPaired;
  if (s == "random") return Pairing::kRandom;
  throw InvalidArgument("unknown pairing mode '" + s + "'");
}

EncoderPath encoder_path_from_string(const std::string& s) {
  if (s == "soft") return EncoderPath::kSoft;
  if (s == "hard") return EncoderPath::kHard;
  throw InvalidArgument("unknown encoder path '" + s + "'");
}

void TrainConfig::validate() const {
  if (clusters < 1) throw InvalidArgument("K must be >= 1");
  if (latent_dim < 1) throw InvalidArgument("d must be >= 1");
  if (latent_dim < 63 && static_cast<std::uint64_t>(clusters) > (std::uint64_t{1} << latent_dim))
    throw CapacityError("K must satisfy K <= 2^d");
  if (batch_size < 2) throw InvalidArgument("m must be >= 2");
  if (train_iter < 0) throw InvalidArgument("train_iter must be >= 0");
  if (!(alpha > 0)) throw InvalidArgument("alpha must satisfy alpha > 0");
  if (!(lr >= 0)) throw InvalidArgument("lr must be >= 0");
  if (!(beta1 > 0 && beta1 < 1) || !(beta2 > 0 && beta2 < 1))
    throw InvalidArgument("beta1 and beta2 must lie in (0, 1)");
  if (!(sigma_floor > 0)) throw InvalidArgument("sigma_floor must be > 0");
  if (!(sigma_init > sigma_floor && sigma_init <= 1.0))
    throw InvalidArgument("sigma_init must lie in (sigma_floor, 1]");
  if (!(leak > 0)) throw InvalidArgument("leak must be > 0");
  if (hidden.empty()) throw InvalidArgument("hidden must list at least one layer width");
  for (auto h : hidden)
    if (h < 1) throw InvalidArgument("hidden layer widths must be positive");
  if (eval_every < 1) throw InvalidArgument("eval_every must be >= 1");
}

MmganModel MmganModel::create(const TrainConfig& config, Eigen::Index data_dim, Rng& rng) {
  config.validate();
  if (data_dim < 1) throw InvalidArgument("data dimension must be positive");
  auto stack = [&](Activation hidden_act, Eigen::Index out, Activation out_act) {
    std::vector<LayerSpec> specs;
    for (auto h : config.hidden) specs.push_back({h, hidden_act, config.leak});
    specs.push_back({out, out_act, config.leak});
    return specs;
  };
  MmganModel model;
  model.latent = GmmLatent<double>::initialize(config.clusters, config.latent_dim, config.sigma_init,
                                               rng, config.sigma_floor);
  model.generator = DenseNet<double>::create(
      config.latent_dim, stack(Activation::kRelu, data_dim, Activation::kLinear), rng);
  model.discriminator = DenseNet<double>::create(
      data_dim, stack(Activation::kLeakyRelu, 1, Activation::kLinear), rng);
  model.encoder = DenseNet<double>::create(
      data_dim, stack(Activation::kLeakyRelu, config.clusters, Activation::kSoftmax), rng);
  return model;
}

void MmganModel::validate() const {
  if (encoder.output_dim() != latent.clusters())
    throw InvalidArgument("encoder output length must equal K");
  if (generator.input_dim() != latent.dim())
    throw InvalidArgument("generator input dimension must equal d");
  if (discriminator.output_dim() != 1) throw InvalidArgument("discriminator must output one critic");
  if (generator.output_dim() != discriminator.input_dim() ||
      encoder.input_dim() != discriminator.input_dim())
    throw InvalidArgument("networks disagree on the data dimension");
  if (encoder.layers().back().activation != Activation::kSoftmax)
    throw InvalidArgument("encoder must end in softmax");
}

Eigen::VectorXd MmganModel::ge_parameters() const {
  Eigen::VectorXd flat(generator.parameter_count() + encoder.parameter_count() +
                       latent.parameter_count());
  flat << generator.parameters(), encoder.parameters(), latent.parameters();
  return flat;
}

void MmganModel::set_ge_parameters(const Eigen::VectorXd& flat) {
  const Eigen::Index ng = generator.parameter_count();
  const Eigen::Index ne = encoder.parameter_count();
  if (flat.size() != ng + ne + latent.parameter_count())
    throw InvalidArgument("joint parameter vector has wrong length");
  generator.set_parameters(flat.segment(0, ng));
  encoder.set_parameters(flat.segment(ng, ne));
  latent.set_parameters(flat.tail(latent.parameter_count()));
}

Labels argmax_rows(const Eigen::MatrixXd& probs) {
  Labels out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < probs.cols(); ++k)
      if (probs(i, k) > probs(i, best)) best = k;
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

Eigen::Index predict_cluster(const MmganModel& model, const Eigen::RowVectorXd& x) {
  return argmax_rows(model.encoder.forward(Eigen::MatrixXd(x))).front();
}

Labels predict_clusters(const MmganModel& model, const Eigen::MatrixXd& x) {
  return argmax_rows(model.encoder.forward(x));
}

B1Batch build_b1(const MmganModel& model, const Eigen::MatrixXd& x_real, const Eigen::MatrixXd& z,
                 const B1Options& options) {
  if (x_real.rows() != z.rows()) throw InvalidArgument("build_b1: x_real and z differ in batch size");
  if (z.cols() != model.latent.dim()) throw InvalidArgument("build_b1: z has wrong dimension");
  B1Batch b;
  b.x_real = x_real;
  b.z = z;
  b.real_probs = model.encoder.forward(x_real, b.encoder_record);
  b.real_clusters = argmax_rows(b.real_probs);
  const Eigen::Index k = model.latent.clusters();
  if (options.pairing == Pairing::kRandom) {
    if (static_cast<Eigen::Index>(options.random_clusters.size()) != x_real.rows())
      throw InvalidArgument("build_b1: random pairing needs one cluster per sample");
    b.fake_clusters = options.random_clusters;
    b.codes = one_hot<double>(b.fake_clusters, k);
  } else if (options.encoder_path == EncoderPath::kSoft) {
    b.fake_clusters = b.real_clusters;
    b.codes = b.real_probs;
  } else {
    b.fake_clusters = b.real_clusters;
    b.codes = one_hot<double>(b.fake_clusters, k);
  }
  const Eigen::MatrixXd z_tilde = reparameterize(embed_batch(model.latent, b.codes), z);
  b.x_fake = model.generator.forward(z_tilde, b.generator_record);
  return b;
}

B2Batch build_b2(const MmganModel& model, const Labels& clusters, const Eigen::MatrixXd& z) {
  if (static_cast<Eigen::Index>(clusters.size()) != z.rows())
    throw InvalidArgument("build_b2: label count differs from noise rows");
  if (z.cols() != model.latent.dim()) throw InvalidArgument("build_b2: z has wrong dimension");
  B2Batch b;
  b.clusters = clusters;
  b.z = z;
  b.codes = one_hot<double>(clusters, model.latent.clusters());
  const Eigen::MatrixXd z_tilde = reparameterize(embed_batch(model.latent, b.codes), z);
  b.x_fake = model.generator.forward(z_tilde, b.generator_record);
  return b;
}

B2Batch build_b2(const MmganModel& model, Eigen::Index m, Rng& rng) {
  if (m < 1) throw InvalidArgument("build_b2: m must be positive");
  std::uniform_int_distribution<Eigen::Index> cat(0, model.latent.clusters() - 1);
  Labels y(static_cast<std::size_t>(m));
  for (auto& v : y) v = cat(rng);
  return build_b2(model, y, standard_normal<double>(m, model.latent.dim(), rng));
}

StepInputs sample_step_inputs(const TrainConfig& config, const Dataset& data, Rng& rng) {
  if (data.train_indices.empty()) throw InvalidArgument("dataset has no training samples");
  const Eigen::Index m = config.batch_size;
  std::uniform_int_distribution<std::size_t> pick(0, data.train_indices.size() - 1);
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(m));
  for (auto& r : rows) r = data.train_indices[pick(rng)];
  StepInputs in;
  in.x_real = data.rows(rows);
  std::uniform_int_distribution<Eigen::Index> cat(0, config.clusters - 1);
  in.prior_clusters.resize(static_cast<std::size_t>(m));
  for (auto& y : in.prior_clusters) y = cat(rng);
  in.z = standard_normal<double>(m, config.latent_dim, rng);
  if (config.pairing == Pairing::kRandom) {
    in.random_clusters.resize(static_cast<std::size_t>(m));
    for (auto& y : in.random_clusters) y = cat(rng);
  }
  return in;
}

namespace {

struct ForwardPass {
  B1Batch b1;
  B2Batch b2;
  ForwardRecord<double> d_real_record, d_fake_record, e_fake_record;
  CriticBatch<double> critics;
  AdversarialLoss<double> adversarial;
  Eigen::MatrixXd b2_probs;
  CrossEntropy<double> ce;
};

ForwardPass run_forward(const MmganModel& model, const TrainConfig& config, const StepInputs& in) {
  ForwardPass f;
  f.b1 = build_b1(model, in.x_real, in.z,
                  B1Options{config.pairing, config.encoder_path, in.random_clusters});
  f.b2 = build_b2(model, in.prior_clusters, in.z);
  f.critics.c_real = model.discriminator.forward(f.b1.x_real, f.d_real_record).col(0);
  f.critics.c_fake = model.discriminator.forward(f.b1.x_fake, f.d_fake_record).col(0);
  f.critics.real_clusters = f.b1.real_clusters;
  f.critics.fake_clusters = f.b1.fake_clusters;
  f.adversarial = adversarial_losses(config.loss, f.critics);
  f.b2_probs = model.encoder.forward(f.b2.x_fake, f.e_fake_record);
  f.ce = encoder_ce(f.b2_probs, in.prior_clusters, config.alpha);
  return f;
}

Eigen::MatrixXd as_column(const Eigen::VectorXd& v) { return Eigen::MatrixXd(v); }

}  // namespace

StepLosses evaluate_step_losses(const MmganModel& model, const TrainConfig& config,
                                const StepInputs& inputs) {
  const auto f = run_forward(model, config, inputs);
  return {f.adversarial.d_loss, f.adversarial.g_loss, f.ce.value};
}

StepGradients compute_step_gradients(const MmganModel& model, const TrainConfig& config,
                                     const StepInputs& inputs) {
  const auto f = run_forward(model, config, inputs);
  const auto& D = model.discriminator;
  const auto& G = model.generator;
  const auto& E = model.encoder;

  StepGradients out;
  out.losses = {f.adversarial.d_loss, f.adversarial.g_loss, f.ce.value};
  out.fallback_count = f.adversarial.fallback_count;
  out.ce_clamped = f.ce.clamped;

  // l_D: fakes are constants here
  out.discriminator = D.flatten(D.backward(f.d_real_record, as_column(f.adversarial.d_grad_real))) +
                      D.flatten(D.backward(f.d_fake_record, as_column(f.adversarial.d_grad_fake)));

  // l_{G,E}, adversarial term on B1. C(x_r) does not depend on (G, E, latent).
  const auto d_through_fake = D.backward(f.d_fake_record, as_column(f.adversarial.g_grad_fake));
  const auto g_b1 = G.backward(f.b1.generator_record, d_through_fake.input);
  const auto lat_b1 = embed_backward(model.latent, f.b1.codes, f.b1.z, g_b1.input);
  Eigen::VectorXd enc_grad = Eigen::VectorXd::Zero(E.parameter_count());
  if (config.pairing == Pairing::kPaired && config.encoder_path == EncoderPath::kSoft)
    enc_grad += E.flatten(E.backward(f.b1.encoder_record, lat_b1.codes));

  // alpha-weighted cross entropy on B2
  const auto e_b2 = E.backward(f.e_fake_record, f.ce.grad);
  enc_grad += E.flatten(e_b2);
  const auto g_b2 = G.backward(f.b2.generator_record, e_b2.input);
  const auto lat_b2 = embed_backward(model.latent, f.b2.codes, f.b2.z, g_b2.input);

  out.ge.resize(G.parameter_count() + E.parameter_count() + model.latent.parameter_count());
  out.ge << G.flatten(g_b1) + G.flatten(g_b2), enc_grad, lat_b1.flatten() + lat_b2.flatten();
  return out;
}

Trainer::Trainer(TrainConfig config, Dataset data)
    : config_(std::move(config)), data_(std::move(data)), rng_(config_.seed) {
  config_.validate();
  data_.validate();
  model_ = MmganModel::create(config_, data_.dim(), rng_);
  d_opt_ = AdamState<double>::zeros(model_.discriminator.parameter_count(), config_.lr,
                                    config_.beta1, config_.beta2);
  ge_opt_ = AdamState<double>::zeros(model_.ge_parameters().size(), config_.lr, config_.beta1,
                                     config_.beta2);
}

StepLosses Trainer::step() {
  const StepInputs inputs = sample_step_inputs(config_, data_, rng_);
  StepGradients grads;
  try {
    grads = compute_step_gradients(model_, config_, inputs);
  } catch (const InvalidArgument& e) {
    throw TrainingAborted("non-finite value at iteration " + std::to_string(iteration_ + 1) + ": " + e.what());
  }
  const auto& l = grads.losses;
  if (!std::isfinite(l.d_loss) || !std::isfinite(l.g_loss) || !std::isfinite(l.ce_loss) ||
      !grads.discriminator.allFinite() || !grads.ge.allFinite()) {
    std::ostringstream msg;
    msg << "non-finite loss or gradient at iteration " << iteration_ + 1 << ": d_loss=" << l.d_loss
        << " g_loss=" << l.g_loss << " ce_loss=" << l.ce_loss
        << " |theta_D|=" << model_.discriminator.parameters().norm()
        << " |theta_GE|=" << model_.ge_parameters().norm() << " sigmas=["
        << model_.latent.sigmas().transpose() << "]";
    throw TrainingAborted(msg.str());
  }

  Eigen::VectorXd d_params = model_.discriminator.parameters();
  adam_step<double>(d_params, grads.discriminator, d_opt_);
  model_.discriminator.set_parameters(d_params);

  Eigen::VectorXd ge_params = model_.ge_parameters();
  adam_step<double>(ge_params, grads.ge, ge_opt_);
  model_.set_ge_parameters(ge_params);

  ++iteration_;
  log_.iterations.push_back({iteration_, l.d_loss, l.g_loss, l.ce_loss});
  log_.fallback_count += grads.fallback_count;
  log_.ce_clamped += grads.ce_clamped;
  if (iteration_ % config_.eval_every == 0 || iteration_ == config_.train_iter)
    log_.metrics.push_back(evaluate());
  return l;
}

void Trainer::run() {
  while (iteration_ < config_.train_iter) step();
}

MetricRecord Trainer::evaluate() const {
  MetricRecord r;
  r.iter = iteration_;
  const auto sigmas = model_.latent.sigmas();
  r.sigmas.assign(sigmas.data(), sigmas.data() + sigmas.size());
  if (!data_.labels) return r;
  const auto& held_out = data_.test_indices.empty() ? data_.train_indices : data_.test_indices;
  const MetricRecord scores = evaluate_clustering(model_, data_.rows(held_out), data_.labels_at(held_out));
  r.nmi = scores.nmi;
  r.ari = scores.ari;
  r.acc = scores.acc;
  return r;
}

MetricRecord evaluate_clustering(const MmganModel& model, const Eigen::MatrixXd& x, const Labels& truth) {
  if (static_cast<Eigen::Index>(truth.size()) != x.rows())
    throw InvalidArgument("evaluate_clustering: one label per row required");
  MetricRecord r;
  const auto sigmas = model.latent.sigmas();
  r.sigmas.assign(sigmas.data(), sigmas.data() + sigmas.size());
  const Labels pred = predict_clusters(model, x);
  r.nmi = nmi(pred, truth);
  r.ari = ari(pred, truth);
  r.acc = purity_acc(pred, truth).value;
  return r;
}

void Trainer::restore(MmganModel model, AdamState<double> d_opt, AdamState<double> ge_opt, Rng rng,
                      RunLog log, std::int64_t iteration) {
  model.validate();
  if (model.data_dim() != data_.dim()) throw InvalidArgument("restored model data dimension differs");
  if (d_opt.first_moment.size() != model.discriminator.parameter_count() ||
      ge_opt.first_moment.size() != model.ge_parameters().size())
    throw InvalidArgument("restored optimizer state does not match the model");
  model_ = std::move(model);
  d_opt_ = std::move(d_opt);
  ge_opt_ = std::move(ge_opt);
  rng_ = rng;
  log_ = std::move(log);
  iteration_ = iteration;
}

TrainResult train(const TrainConfig& config, const Dataset& data) {
  if (data.size() < 1) throw InvalidArgument("train: dataset is empty");
  Trainer trainer(config, data);
  trainer.run();
  return {trainer.model(), trainer.log()};
}

}  // namespace mmgan
