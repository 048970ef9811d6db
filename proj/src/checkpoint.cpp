#include "mmgan/checkpoint.hpp"

#include "mmgan/errors.hpp"

#include <fstream>
#include <sstream>

namespace mmgan {

using nlohmann::json;

namespace {

json vector_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  // row-major value order
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) values.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"values", values}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto values = j.at("values").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != rows * cols)
    throw InvalidArgument("checkpoint matrix has wrong number of values");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = values[static_cast<std::size_t>(i * cols + k)];
  return m;
}

json net_to_json(const DenseNet<double>& net) {
  json layers = json::array();
  for (const auto& l : net.layers())
    layers.push_back({{"activation", std::string(to_string(l.activation))},
                      {"leak", l.leak},
                      {"weight", matrix_to_json(l.weight)},
                      {"bias", vector_to_json(l.bias.transpose())}});
  return {{"layers", layers}};
}

DenseNet<double> net_from_json(const json& j) {
  std::vector<DenseLayer<double>> layers;
  for (const auto& l : j.at("layers")) {
    DenseLayer<double> layer;
    layer.activation = activation_from_string(l.at("activation").get<std::string>());
    layer.leak = l.at("leak").get<double>();
    layer.weight = matrix_from_json(l.at("weight"));
    layer.bias = vector_from_json(l.at("bias")).transpose();
    layers.push_back(std::move(layer));
  }
  return DenseNet<double>(std::move(layers));
}

json adam_to_json(const AdamState<double>& s) {
  return {{"first_moment", vector_to_json(s.first_moment)},
          {"second_moment", vector_to_json(s.second_moment)},
          {"step_count", s.step_count},
          {"lr", s.lr},
          {"beta1", s.beta1},
          {"beta2", s.beta2},
          {"eps", s.eps}};
}

AdamState<double> adam_from_json(const json& j) {
  AdamState<double> s;
  s.first_moment = vector_from_json(j.at("first_moment"));
  s.second_moment = vector_from_json(j.at("second_moment"));
  s.step_count = j.at("step_count").get<std::int64_t>();
  s.lr = j.at("lr").get<double>();
  s.beta1 = j.at("beta1").get<double>();
  s.beta2 = j.at("beta2").get<double>();
  s.eps = j.at("eps").get<double>();
  if (s.first_moment.size() != s.second_moment.size())
    throw InvalidArgument("checkpoint optimizer moments differ in size");
  return s;
}

json log_to_json(const RunLog& log) {
  json iters = json::array();
  for (const auto& r : log.iterations) iters.push_back({r.iter, r.d_loss, r.g_loss, r.ce_loss});
  json metrics = json::array();
  for (const auto& r : log.metrics)
    metrics.push_back({{"iter", r.iter}, {"nmi", r.nmi}, {"ari", r.ari}, {"acc", r.acc}, {"sigmas", r.sigmas}});
  return {{"iterations", iters},
          {"metrics", metrics},
          {"fallback_count", log.fallback_count},
          {"ce_clamped", log.ce_clamped}};
}

RunLog log_from_json(const json& j) {
  RunLog log;
  for (const auto& r : j.at("iterations"))
    log.iterations.push_back({r.at(0).get<std::int64_t>(), r.at(1).get<double>(), r.at(2).get<double>(),
                              r.at(3).get<double>()});
  for (const auto& r : j.at("metrics"))
    log.metrics.push_back({r.at("iter").get<std::int64_t>(), r.at("nmi").get<double>(),
                           r.at("ari").get<double>(), r.at("acc").get<double>(),
                           r.at("sigmas").get<std::vector<double>>()});
  log.fallback_count = j.at("fallback_count").get<std::size_t>();
  log.ce_clamped = j.at("ce_clamped").get<std::size_t>();
  return log;
}

}  // namespace

json train_config_to_json(const TrainConfig& c) {
  return {{"K", c.clusters},
          {"d", c.latent_dim},
          {"m", c.batch_size},
          {"train_iter", c.train_iter},
          {"alpha", c.alpha},
          {"lr", c.lr},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"sigma_init", c.sigma_init},
          {"sigma_floor", c.sigma_floor},
          {"leak", c.leak},
          {"hidden", c.hidden},
          {"loss", std::string(to_string(c.loss))},
          {"pairing", to_string(c.pairing)},
          {"encoder_path", to_string(c.encoder_path)},
          {"seed", c.seed},
          {"eval_every", c.eval_every}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.clusters = j.at("K").get<Eigen::Index>();
  c.latent_dim = j.at("d").get<Eigen::Index>();
  c.batch_size = j.at("m").get<Eigen::Index>();
  c.train_iter = j.at("train_iter").get<std::int64_t>();
  c.alpha = j.at("alpha").get<double>();
  c.lr = j.at("lr").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.sigma_init = j.at("sigma_init").get<double>();
  c.sigma_floor = j.at("sigma_floor").get<double>();
  c.leak = j.at("leak").get<double>();
  c.hidden = j.at("hidden").get<std::vector<Eigen::Index>>();
  c.loss = loss_kind_from_string(j.at("loss").get<std::string>());
  c.pairing = pairing_from_string(j.at("pairing").get<std::string>());
  c.encoder_path = encoder_path_from_string(j.at("encoder_path").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  c.eval_every = j.at("eval_every").get<std::int64_t>();
  c.validate();
  return c;
}

json model_to_json(const MmganModel& m) {
  return {{"generator", net_to_json(m.generator)},
          {"discriminator", net_to_json(m.discriminator)},
          {"encoder", net_to_json(m.encoder)},
          {"latent",
           {{"means", matrix_to_json(m.latent.means)},
            {"raw_sigmas", vector_to_json(m.latent.raw_sigmas)},
            {"sigma_floor", m.latent.sigma_floor}}}};
}

MmganModel model_from_json(const json& j) {
  MmganModel m;
  m.generator = net_from_json(j.at("generator"));
  m.discriminator = net_from_json(j.at("discriminator"));
  m.encoder = net_from_json(j.at("encoder"));
  const auto& lat = j.at("latent");
  m.latent.means = matrix_from_json(lat.at("means"));
  m.latent.raw_sigmas = vector_from_json(lat.at("raw_sigmas"));
  m.latent.sigma_floor = lat.at("sigma_floor").get<double>();
  if (m.latent.raw_sigmas.size() != m.latent.means.rows())
    throw InvalidArgument("checkpoint latent sigmas do not match the means");
  m.validate();
  return m;
}

Checkpoint Checkpoint::capture(const Trainer& trainer) {
  std::ostringstream rng;
  rng << trainer.rng();
  return {trainer.config(),    trainer.model(), trainer.d_optimizer(), trainer.ge_optimizer(),
          rng.str(),           trainer.log(),   trainer.iteration()};
}

void Checkpoint::restore_into(Trainer& trainer) const {
  Rng rng;
  std::istringstream in(rng_state);
  in >> rng;
  if (!in) throw InvalidArgument("checkpoint random state is malformed");
  trainer.restore(model, d_optimizer, ge_optimizer, rng, log, iteration);
}

std::string checkpoint_to_string(const Checkpoint& c) {
  const json j = {{"format", "mmgan-checkpoint"},
                  {"version", kCheckpointVersion},
                  {"config", train_config_to_json(c.config)},
                  {"iteration", c.iteration},
                  {"model", model_to_json(c.model)},
                  {"optimizers", {{"discriminator", adam_to_json(c.d_optimizer)},
                                  {"generator_encoder", adam_to_json(c.ge_optimizer)}}},
                  {"rng", c.rng_state},
                  {"log", log_to_json(c.log)}};
  return j.dump() + "\n";
}

Checkpoint checkpoint_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format") != "mmgan-checkpoint") throw InvalidArgument("not an mmgan checkpoint");
    if (j.at("version") != kCheckpointVersion)
      throw InvalidArgument("unsupported checkpoint version " + j.at("version").dump());
    Checkpoint c;
    c.config = train_config_from_json(j.at("config"));
    c.iteration = j.at("iteration").get<std::int64_t>();
    c.model = model_from_json(j.at("model"));
    c.d_optimizer = adam_from_json(j.at("optimizers").at("discriminator"));
    c.ge_optimizer = adam_from_json(j.at("optimizers").at("generator_encoder"));
    c.rng_state = j.at("rng").get<std::string>();
    c.log = log_from_json(j.at("log"));
    return c;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write checkpoint " + path.string());
  out << checkpoint_to_string(ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open checkpoint " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_string(buf.str());
}

}  // namespace mmgan
