#include "mmgan/adam.hpp"
#include "mmgan/dense_net.hpp"
#include "mmgan/tensor.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace mmgan;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::Index;

namespace {

DenseNet<double> random_net(Index input, const std::vector<LayerSpec>& specs, std::uint64_t seed) {
  Rng rng(seed);
  auto net = DenseNet<double>::create(input, specs, rng);
  // nonzero biases so every path is exercised
  std::normal_distribution<double> normal(0.0, 0.3);
  for (auto& layer : net.layers())
    for (Index j = 0; j < layer.bias.size(); ++j) layer.bias(j) = normal(rng);
  return net;
}

// Scalar objective sum(W .* forward(x)) for a fixed random weighting W.
double weighted_output(const DenseNet<double>& net, const MatrixXd& x, const MatrixXd& w) {
  return (net.forward(x).array() * w.array()).sum();
}

}  // namespace

TEST_CASE("tensor validates shape against values") {
  Tensor t({2, 3}, std::vector<double>(6, 1.0));
  CHECK(t.rank() == 2);
  CHECK(t.element_count() == 6);
  CHECK(t.all_finite());
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5, 1.0)), InvalidArgument);
  CHECK_THROWS_AS(Tensor({2, 0}, {}), InvalidArgument);
  Tensor bad({1}, {std::nan("")});
  CHECK_FALSE(bad.all_finite());
}

TEST_CASE("identity weights with linear activation pass inputs through") {
  DenseLayer<double> layer{MatrixXd::Identity(3, 3), Eigen::RowVectorXd::Zero(3), Activation::kLinear, 0.2};
  DenseNet<double> net({layer});
  MatrixXd x(2, 3);
  x << 1, -2, 3, 0.5, 0, -7;
  CHECK(net.forward(x) == x);
}

TEST_CASE("relu clips negatives") {
  DenseLayer<double> layer{MatrixXd::Identity(3, 3), Eigen::RowVectorXd::Zero(3), Activation::kRelu, 0.2};
  DenseNet<double> net({layer});
  MatrixXd x(1, 3);
  x << -1, 0, 2;
  const MatrixXd y = net.forward(x);
  CHECK(y(0, 0) == 0);
  CHECK(y(0, 1) == 0);
  CHECK(y(0, 2) == 2);
}

TEST_CASE("hand matrix multiply") {
  // y = x W with W = [[1,2],[3,4]] acting on the column vector convention W x
  MatrixXd w(2, 2);
  w << 1, 3, 2, 4;  // fan_in x fan_out, so y_j = sum_i x_i w_ij
  DenseNet<double> net({DenseLayer<double>{w, Eigen::RowVectorXd::Zero(2), Activation::kLinear, 0.2}});
  MatrixXd x(1, 2);
  x << 1, 1;
  const MatrixXd y = net.forward(x);
  CHECK(y(0, 0) == doctest::Approx(3));
  CHECK(y(0, 1) == doctest::Approx(7));
}

TEST_CASE("activation derivatives at known points") {
  MatrixXd out(1, 1), up(1, 1);
  up(0, 0) = 1;
  out(0, 0) = sigmoid(0.0);
  CHECK(activation_backward<double>(out, up, Activation::kSigmoid, 0.2)(0, 0) == doctest::Approx(0.25));
  out(0, 0) = 1;
  CHECK(activation_backward<double>(out, up, Activation::kRelu, 0.2)(0, 0) == 1);
  out(0, 0) = -0.4;
  CHECK(activation_backward<double>(out, up, Activation::kLeakyRelu, 0.2)(0, 0) == doctest::Approx(0.2));
}

TEST_CASE("stable sigmoid and softplus at extremes") {
  CHECK(sigmoid(-800.0) >= 0);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(std::isfinite(softplus(800.0)));
  CHECK(softplus(800.0) == doctest::Approx(800.0));
  CHECK(softplus(-800.0) >= 0);
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("softmax rows are distributions") {
  auto net = random_net(4, {{7, Activation::kLeakyRelu}, {5, Activation::kSoftmax}}, 3);
  Rng rng(9);
  const MatrixXd x = 50 * standard_normal<double>(20, 4, rng);
  const MatrixXd p = net.forward(x);
  CHECK((p.array() >= 0).all());
  for (Index i = 0; i < p.rows(); ++i) CHECK(std::abs(p.row(i).sum() - 1.0) < 1e-12);
}

TEST_CASE("dimension mismatch and invalid structures are rejected") {
  auto net = random_net(3, {{4, Activation::kRelu}, {2, Activation::kLinear}}, 1);
  CHECK_THROWS_AS(net.forward(MatrixXd::Zero(2, 4)), InvalidArgument);

  DenseLayer<double> a{MatrixXd::Zero(3, 4), Eigen::RowVectorXd::Zero(4), Activation::kRelu, 0.2};
  DenseLayer<double> b{MatrixXd::Zero(5, 2), Eigen::RowVectorXd::Zero(2), Activation::kLinear, 0.2};
  CHECK_THROWS_AS(DenseNet<double>({a, b}), InvalidArgument);

  DenseLayer<double> soft{MatrixXd::Zero(3, 4), Eigen::RowVectorXd::Zero(4), Activation::kSoftmax, 0.2};
  DenseLayer<double> tail{MatrixXd::Zero(4, 2), Eigen::RowVectorXd::Zero(2), Activation::kLinear, 0.2};
  CHECK_THROWS_AS(DenseNet<double>({soft, tail}), InvalidArgument);
}

TEST_CASE("backward without a recorded forward is a state error") {
  auto net = random_net(3, {{4, Activation::kRelu}, {2, Activation::kLinear}}, 1);
  ForwardRecord<double> empty;
  CHECK_THROWS_AS(net.backward(empty, MatrixXd::Ones(1, 2)), StateError);
}

TEST_CASE("analytic gradients match central differences for every activation") {
  const std::vector<Activation> hidden = {Activation::kRelu, Activation::kLeakyRelu, Activation::kSigmoid,
                                          Activation::kLinear};
  const std::vector<Activation> last = {Activation::kLinear, Activation::kSigmoid, Activation::kSoftmax};
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    for (auto h : hidden)
      for (auto o : last) {
        const auto net = random_net(3, {{5, h}, {4, h}, {3, o}}, seed);
        Rng rng(100 + seed);
        const MatrixXd x = standard_normal<double>(6, 3, rng);
        const MatrixXd w = standard_normal<double>(6, 3, rng);

        ForwardRecord<double> record;
        net.forward(x, record);
        const auto grads = net.backward(record, w);
        const VectorXd analytic = net.flatten(grads);
        const auto objective = [&](const VectorXd& p) {
          auto copy = net;
          copy.set_parameters(p);
          return weighted_output(copy, x, w);
        };
        worst = std::max(worst, oracle::max_relative_error(analytic,
                                                           oracle::central_difference(objective, net.parameters())));

        const auto input_objective = [&](const VectorXd& flat) {
          const MatrixXd xi = Eigen::Map<const MatrixXd>(flat.data(), x.rows(), x.cols());
          return weighted_output(net, xi, w);
        };
        const VectorXd flat_x = Eigen::Map<const VectorXd>(x.data(), x.size());
        const VectorXd analytic_x = Eigen::Map<const VectorXd>(grads.input.data(), grads.input.size());
        worst = std::max(worst, oracle::max_relative_error(analytic_x,
                                                           oracle::central_difference(input_objective, flat_x)));
      }
  CHECK(worst < 1e-4);
}

TEST_CASE("parameters round-trip through the flat layout") {
  auto net = random_net(3, {{4, Activation::kRelu}, {2, Activation::kLinear}}, 5);
  VectorXd p = net.parameters();
  CHECK(p.size() == net.parameter_count());
  CHECK(p.size() == 3 * 4 + 4 + 4 * 2 + 2);
  p.setLinSpaced(p.size(), -1, 1);
  net.set_parameters(p);
  CHECK(net.parameters() == p);
  CHECK_THROWS_AS(net.set_parameters(VectorXd::Zero(p.size() + 1)), InvalidArgument);
}

TEST_CASE("forward and backward are deterministic") {
  const auto a = random_net(2, {{8, Activation::kLeakyRelu}, {1, Activation::kLinear}}, 42);
  const auto b = random_net(2, {{8, Activation::kLeakyRelu}, {1, Activation::kLinear}}, 42);
  CHECK(a.parameters() == b.parameters());
  Rng rng(1);
  const MatrixXd x = standard_normal<double>(10, 2, rng);
  ForwardRecord<double> ra, rb;
  CHECK(a.forward(x, ra) == b.forward(x, rb));
  CHECK(a.flatten(a.backward(ra, MatrixXd::Ones(10, 1))) == b.flatten(b.backward(rb, MatrixXd::Ones(10, 1))));
}

TEST_CASE("glorot initialization bounds and zero biases") {
  Rng rng(3);
  const auto net = DenseNet<double>::create(2, {{128, Activation::kRelu}, {128, Activation::kRelu}, {2, Activation::kLinear}}, rng);
  Index fan_in = 2;
  for (const auto& layer : net.layers()) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + layer.output_dim()));
    CHECK(layer.weight.cwiseAbs().maxCoeff() <= limit);
    CHECK(layer.bias.isZero(0));
    fan_in = layer.output_dim();
  }
}

TEST_CASE("adam: zero gradient leaves parameters and counts the step") {
  VectorXd p(3);
  p << 1, -2, 3;
  const VectorXd before = p;
  auto state = AdamState<double>::zeros(3, 1e-3);
  adam_step<double>(p, VectorXd::Zero(3), state);
  CHECK(p == before);
  CHECK(state.step_count == 1);
}

TEST_CASE("adam: first step matches the closed form") {
  const double lr = 2e-4, b1 = 0.5, b2 = 0.99, eps = 1e-8;
  for (double g : {3.0, -0.25, 1e-6}) {
    VectorXd p = VectorXd::Constant(1, 0.7);
    auto state = AdamState<double>::zeros(1, lr, b1, b2, eps);
    adam_step<double>(p, VectorXd::Constant(1, g), state);
    // m_hat = g, v_hat = g^2 after bias correction
    const double expected = 0.7 - lr * g / (std::abs(g) + eps);
    CHECK(p(0) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("adam: two steps with a constant gradient follow the unrolled recurrence") {
  const double lr = 1e-2, b1 = 0.5, b2 = 0.99, eps = 1e-8, g = 0.3;
  VectorXd p = VectorXd::Constant(1, 1.0);
  auto state = AdamState<double>::zeros(1, lr, b1, b2, eps);
  adam_step<double>(p, VectorXd::Constant(1, g), state);
  adam_step<double>(p, VectorXd::Constant(1, g), state);
  double x = 1.0, m = 0, v = 0;
  for (int t = 1; t <= 2; ++t) {
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t)), vh = v / (1 - std::pow(b2, t));
    x -= lr * mh / (std::sqrt(vh) + eps);
  }
  CHECK(p(0) == doctest::Approx(x).epsilon(1e-14));
  CHECK(state.step_count == 2);
}

TEST_CASE("adam: size mismatch rejected") {
  VectorXd p = VectorXd::Zero(3);
  auto state = AdamState<double>::zeros(3, 1e-3);
  CHECK_THROWS_AS(adam_step<double>(p, VectorXd::Zero(2), state), InvalidArgument);
  auto small = AdamState<double>::zeros(2, 1e-3);
  CHECK_THROWS_AS(adam_step<double>(p, VectorXd::Zero(3), small), InvalidArgument);
}
