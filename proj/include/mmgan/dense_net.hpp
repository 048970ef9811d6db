#pragma once

#include "mmgan/errors.hpp"
#include "mmgan/types.hpp"

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace mmgan {

enum class Activation { kRelu, kLeakyRelu, kSigmoid, kLinear, kSoftmax };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kLeakyRelu: return "leaky_relu";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kLinear: return "linear";
    case Activation::kSoftmax: return "softmax";
  }
  return "?";
}

inline Activation activation_from_string(std::string_view s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "leaky_relu") return Activation::kLeakyRelu;
  if (s == "sigmoid") return Activation::kSigmoid;
  if (s == "linear") return Activation::kLinear;
  if (s == "softmax") return Activation::kSoftmax;
  throw InvalidArgument("unknown activation '" + std::string(s) + "'");
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

/// log(1 + exp(x)) without overflow.
template <typename Scalar>
Scalar softplus(Scalar x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

/// Row-wise activation, in place.
template <typename Scalar>
void apply_activation(MatrixX<Scalar>& z, Activation act, Scalar leak) {
  switch (act) {
    case Activation::kRelu: z = z.cwiseMax(Scalar(0)); break;
    case Activation::kLeakyRelu:
      z = z.unaryExpr([leak](Scalar v) { return v > 0 ? v : leak * v; });
      break;
    case Activation::kSigmoid: z = z.unaryExpr([](Scalar v) { return sigmoid(v); }); break;
    case Activation::kLinear: break;
    case Activation::kSoftmax:
      for (Eigen::Index i = 0; i < z.rows(); ++i) {
        auto row = z.row(i);
        row.array() -= row.maxCoeff();
        row = row.array().exp().matrix();
        row /= row.sum();
      }
      break;
  }
}

/// Given activation outputs and dL/d(output), return dL/d(pre-activation).
template <typename Scalar>
MatrixX<Scalar> activation_backward(const MatrixX<Scalar>& out, const MatrixX<Scalar>& upstream,
                                    Activation act, Scalar leak) {
  switch (act) {
    case Activation::kRelu:
      return (out.array() > 0).select(upstream, MatrixX<Scalar>::Zero(out.rows(), out.cols()));
    case Activation::kLeakyRelu:
      // leak > 0, so the output sign equals the pre-activation sign
      return (out.array() > 0).select(upstream, leak * upstream);
    case Activation::kSigmoid:
      return (upstream.array() * out.array() * (Scalar(1) - out.array())).matrix();
    case Activation::kLinear: return upstream;
    case Activation::kSoftmax: {
      const VectorX<Scalar> dots = (upstream.array() * out.array()).rowwise().sum();
      return (out.array() * (upstream.colwise() - dots).array()).matrix();
    }
  }
  return upstream;
}

struct LayerSpec {
  Eigen::Index units;
  Activation activation;
  double leak = 0.2;
};

template <typename Scalar>
struct DenseLayer {
  MatrixX<Scalar> weight;  // fan_in x fan_out
  RowVectorX<Scalar> bias;
  Activation activation = Activation::kLinear;
  Scalar leak = Scalar(0.2);

  Eigen::Index input_dim() const { return weight.rows(); }
  Eigen::Index output_dim() const { return weight.cols(); }
};

/// Intermediates of one forward pass: the network input and every layer output.
template <typename Scalar>
struct ForwardRecord {
  std::vector<MatrixX<Scalar>> activations;

  bool empty() const { return activations.empty(); }
  const MatrixX<Scalar>& output() const { return activations.back(); }
};

template <typename Scalar>
struct NetGradients {
  std::vector<MatrixX<Scalar>> weight;
  std::vector<RowVectorX<Scalar>> bias;
  MatrixX<Scalar> input;
};

/// Fully connected feed-forward network over row-major batches (one sample per row).
template <typename Scalar>
class DenseNet {
 public:
  DenseNet() = default;

  explicit DenseNet(std::vector<DenseLayer<Scalar>> layers) : layers_(std::move(layers)) {
    validate();
  }

  /// Glorot-uniform weights, zero biases.
  static DenseNet create(Eigen::Index input_dim, const std::vector<LayerSpec>& specs, Rng& rng) {
    std::vector<DenseLayer<Scalar>> layers;
    Eigen::Index fan_in = input_dim;
    for (const auto& spec : specs) {
      DenseLayer<Scalar> layer;
      const Scalar limit = std::sqrt(Scalar(6) / Scalar(fan_in + spec.units));
      std::uniform_real_distribution<Scalar> uniform(-limit, limit);
      layer.weight.resize(fan_in, spec.units);
      for (Eigen::Index i = 0; i < fan_in; ++i)
        for (Eigen::Index j = 0; j < spec.units; ++j) layer.weight(i, j) = uniform(rng);
      layer.bias = RowVectorX<Scalar>::Zero(spec.units);
      layer.activation = spec.activation;
      layer.leak = static_cast<Scalar>(spec.leak);
      layers.push_back(std::move(layer));
      fan_in = spec.units;
    }
    return DenseNet(std::move(layers));
  }

  Eigen::Index input_dim() const { return layers_.front().input_dim(); }
  Eigen::Index output_dim() const { return layers_.back().output_dim(); }
  const std::vector<DenseLayer<Scalar>>& layers() const { return layers_; }
  std::vector<DenseLayer<Scalar>>& layers() { return layers_; }

  MatrixX<Scalar> forward(const MatrixX<Scalar>& x) const {
    check_input(x);
    MatrixX<Scalar> h = x;
    for (const auto& layer : layers_) {
      MatrixX<Scalar> z = h * layer.weight;
      z.rowwise() += layer.bias;
      apply_activation(z, layer.activation, layer.leak);
      h = std::move(z);
    }
    return h;
  }

  MatrixX<Scalar> forward(const MatrixX<Scalar>& x, ForwardRecord<Scalar>& record) const {
    check_input(x);
    record.activations.clear();
    record.activations.reserve(layers_.size() + 1);
    record.activations.push_back(x);
    for (const auto& layer : layers_) {
      MatrixX<Scalar> z = record.activations.back() * layer.weight;
      z.rowwise() += layer.bias;
      apply_activation(z, layer.activation, layer.leak);
      record.activations.push_back(std::move(z));
    }
    return record.output();
  }

  NetGradients<Scalar> backward(const ForwardRecord<Scalar>& record,
                                const MatrixX<Scalar>& upstream) const {
    if (record.activations.size() != layers_.size() + 1)
      throw StateError("backward called without a recorded forward pass for this network");
    if (upstream.rows() != record.output().rows() || upstream.cols() != output_dim())
      throw InvalidArgument("upstream gradient shape does not match network output");
    NetGradients<Scalar> grads;
    grads.weight.resize(layers_.size());
    grads.bias.resize(layers_.size());
    MatrixX<Scalar> delta = upstream;
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const auto& layer = layers_[l];
      const MatrixX<Scalar> dz =
          activation_backward(record.activations[l + 1], delta, layer.activation, layer.leak);
      grads.weight[l] = record.activations[l].transpose() * dz;
      grads.bias[l] = dz.colwise().sum();
      delta = dz * layer.weight.transpose();
    }
    grads.input = std::move(delta);
    return grads;
  }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
    return n;
  }

  /// Weights then bias per layer, each weight in column-major order.
  VectorX<Scalar> parameters() const {
    VectorX<Scalar> flat(parameter_count());
    Eigen::Index at = 0;
    for (const auto& layer : layers_) {
      flat.segment(at, layer.weight.size()) = layer.weight.reshaped();
      at += layer.weight.size();
      flat.segment(at, layer.bias.size()) = layer.bias.transpose();
      at += layer.bias.size();
    }
    return flat;
  }

  void set_parameters(const Eigen::Ref<const VectorX<Scalar>>& flat) {
    if (flat.size() != parameter_count())
      throw InvalidArgument("parameter vector length does not match network");
    Eigen::Index at = 0;
    for (auto& layer : layers_) {
      layer.weight.reshaped() = flat.segment(at, layer.weight.size());
      at += layer.weight.size();
      layer.bias = flat.segment(at, layer.bias.size()).transpose();
      at += layer.bias.size();
    }
  }

  /// Same layout as parameters().
  VectorX<Scalar> flatten(const NetGradients<Scalar>& grads) const {
    VectorX<Scalar> flat(parameter_count());
    Eigen::Index at = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      flat.segment(at, grads.weight[l].size()) = grads.weight[l].reshaped();
      at += grads.weight[l].size();
      flat.segment(at, grads.bias[l].size()) = grads.bias[l].transpose();
      at += grads.bias[l].size();
    }
    return flat;
  }

 private:
  void validate() const {
    if (layers_.empty()) throw InvalidArgument("network needs at least one layer");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& layer = layers_[l];
      if (layer.weight.rows() < 1 || layer.weight.cols() < 1)
        throw InvalidArgument("layer dimensions must be positive");
      if (layer.bias.size() != layer.weight.cols())
        throw InvalidArgument("bias length must equal layer output dimension");
      if (l + 1 < layers_.size() && layer.weight.cols() != layers_[l + 1].weight.rows())
        throw InvalidArgument("consecutive layer dimensions do not chain");
      if (layer.activation == Activation::kSoftmax && l + 1 != layers_.size())
        throw InvalidArgument("softmax is only allowed as the final activation");
      if (layer.activation == Activation::kLeakyRelu && !(layer.leak > 0))
        throw InvalidArgument("leaky_relu slope must be positive");
    }
  }

  void check_input(const MatrixX<Scalar>& x) const {
    if (x.cols() != input_dim())
      throw InvalidArgument("input has " + std::to_string(x.cols()) + " columns, network expects " +
                            std::to_string(input_dim()));
  }

  std::vector<DenseLayer<Scalar>> layers_;
};

}  // namespace mmgan
