#pragma once

#include "mmgan/dense_net.hpp"
#include "mmgan/errors.hpp"
#include "mmgan/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <variant>
#include <vector>

namespace mmgan {

/// K distinct vertices of the cube [-1,1]^d, chosen uniformly at random, one per row.
template <typename Scalar>
MatrixX<Scalar> init_means(Eigen::Index clusters, Eigen::Index dim, Rng& rng) {
  if (clusters < 1 || dim < 1) throw InvalidArgument("init_means: K and d must be positive");
  if (dim < 63 && static_cast<std::uint64_t>(clusters) > (std::uint64_t{1} << dim))
    throw CapacityError("init_means: K=" + std::to_string(clusters) + " exceeds 2^d=" +
                        std::to_string(std::uint64_t{1} << dim) + " cube vertices");
  MatrixX<Scalar> means(clusters, dim);
  auto write_vertex = [&](Eigen::Index row, auto bit) {
    for (Eigen::Index j = 0; j < dim; ++j) means(row, j) = bit(j) ? Scalar(1) : Scalar(-1);
  };
  if (dim <= 20) {
    // partial Fisher-Yates over vertex indices
    std::vector<std::uint32_t> ids(std::size_t{1} << dim);
    std::iota(ids.begin(), ids.end(), 0u);
    for (Eigen::Index k = 0; k < clusters; ++k) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(k), ids.size() - 1);
      std::swap(ids[static_cast<std::size_t>(k)], ids[pick(rng)]);
      const std::uint32_t id = ids[static_cast<std::size_t>(k)];
      write_vertex(k, [id](Eigen::Index j) { return (id >> j) & 1u; });
    }
    return means;
  }
  std::set<std::vector<bool>> seen;
  std::bernoulli_distribution coin(0.5);
  for (Eigen::Index k = 0; k < clusters;) {
    std::vector<bool> bits(static_cast<std::size_t>(dim));
    for (auto&& b : bits) b = coin(rng);
    if (!seen.insert(bits).second) continue;
    write_vertex(k, [&bits](Eigen::Index j) { return bits[static_cast<std::size_t>(j)]; });
    ++k;
  }
  return means;
}

/// Gaussian-mixture latent space with learnable means and per-cluster scalar sigmas.
/// Effective sigma is sigma_floor + softplus(raw_sigma), so it never drops below the floor.
template <typename Scalar>
struct GmmLatent {
  MatrixX<Scalar> means;       // K x d
  VectorX<Scalar> raw_sigmas;  // K
  Scalar sigma_floor = Scalar(0.1);

  Eigen::Index clusters() const { return means.rows(); }
  Eigen::Index dim() const { return means.cols(); }

  static GmmLatent initialize(Eigen::Index clusters, Eigen::Index dim, Scalar sigma_init, Rng& rng,
                              Scalar sigma_floor = Scalar(0.1)) {
    if (!(sigma_init > sigma_floor) || sigma_init > Scalar(1))
      throw InvalidArgument("initial sigma must lie in (sigma_floor, 1]");
    GmmLatent latent;
    latent.means = init_means<Scalar>(clusters, dim, rng);
    latent.raw_sigmas =
        VectorX<Scalar>::Constant(clusters, std::log(std::expm1(sigma_init - sigma_floor)));
    latent.sigma_floor = sigma_floor;
    return latent;
  }

  Scalar sigma(Eigen::Index k) const { return sigma_floor + softplus(raw_sigmas(k)); }

  VectorX<Scalar> sigmas() const {
    return raw_sigmas.unaryExpr([this](Scalar r) { return sigma_floor + softplus(r); });
  }

  Eigen::Index parameter_count() const { return means.size() + raw_sigmas.size(); }

  VectorX<Scalar> parameters() const {
    VectorX<Scalar> flat(parameter_count());
    flat << means.reshaped(), raw_sigmas;
    return flat;
  }

  void set_parameters(const Eigen::Ref<const VectorX<Scalar>>& flat) {
    if (flat.size() != parameter_count())
      throw InvalidArgument("latent parameter vector has wrong length");
    means.reshaped() = flat.head(means.size());
    raw_sigmas = flat.tail(raw_sigmas.size());
  }
};

/// Hard cluster index or a soft probability vector over clusters.
template <typename Scalar>
using ClusterCode = std::variant<Eigen::Index, VectorX<Scalar>>;

template <typename Scalar>
void validate_code_row(const Eigen::Ref<const RowVectorX<Scalar>>& row, Eigen::Index clusters) {
  if (row.size() != clusters) throw InvalidArgument("cluster code length differs from K");
  if ((row.array() < 0).any() || !row.allFinite())
    throw InvalidArgument("cluster code has negative or non-finite entries");
  if (std::abs(row.sum() - Scalar(1)) > Scalar(1e-9))
    throw InvalidArgument("soft cluster code must sum to 1");
}

template <typename Scalar>
MatrixX<Scalar> one_hot(const std::vector<Eigen::Index>& labels, Eigen::Index clusters) {
  MatrixX<Scalar> codes = MatrixX<Scalar>::Zero(static_cast<Eigen::Index>(labels.size()), clusters);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= clusters) throw InvalidArgument("label out of range");
    codes(static_cast<Eigen::Index>(i), labels[i]) = Scalar(1);
  }
  return codes;
}

template <typename Scalar>
struct Embedding {
  VectorX<Scalar> mean;
  Scalar sigma;
};

template <typename Scalar>
Embedding<Scalar> embed(const GmmLatent<Scalar>& latent, const ClusterCode<Scalar>& code) {
  if (const auto* k = std::get_if<Eigen::Index>(&code)) {
    if (*k < 0 || *k >= latent.clusters()) throw InvalidArgument("hard cluster code out of range");
    return {latent.means.row(*k).transpose(), latent.sigma(*k)};
  }
  const auto& w = std::get<VectorX<Scalar>>(code);
  validate_code_row<Scalar>(w.transpose(), latent.clusters());
  return {latent.means.transpose() * w, latent.sigmas().dot(w)};
}

/// Batch embedding: each row of `codes` is a (soft or one-hot) code.
template <typename Scalar>
struct BatchEmbedding {
  MatrixX<Scalar> mean;   // m x d
  VectorX<Scalar> sigma;  // m
};

template <typename Scalar>
BatchEmbedding<Scalar> embed_batch(const GmmLatent<Scalar>& latent, const MatrixX<Scalar>& codes) {
  for (Eigen::Index i = 0; i < codes.rows(); ++i)
    validate_code_row<Scalar>(codes.row(i), latent.clusters());
  return {codes * latent.means, codes * latent.sigmas()};
}

/// z_tilde = mu + sigma * z, row by row.
template <typename Scalar>
MatrixX<Scalar> reparameterize(const BatchEmbedding<Scalar>& e, const MatrixX<Scalar>& z) {
  if (z.rows() != e.mean.rows() || z.cols() != e.mean.cols())
    throw InvalidArgument("noise shape does not match embedding");
  return e.mean + e.sigma.asDiagonal() * z;
}

template <typename Scalar>
struct LatentGradients {
  MatrixX<Scalar> means;       // K x d
  VectorX<Scalar> raw_sigmas;  // K
  MatrixX<Scalar> codes;       // m x K

  VectorX<Scalar> flatten() const {
    VectorX<Scalar> flat(means.size() + raw_sigmas.size());
    flat << means.reshaped(), raw_sigmas;
    return flat;
  }
};

/// Gradients of a loss through z_tilde = codes*means + (codes*sigmas) .* z.
template <typename Scalar>
LatentGradients<Scalar> embed_backward(const GmmLatent<Scalar>& latent, const MatrixX<Scalar>& codes,
                                       const MatrixX<Scalar>& z, const MatrixX<Scalar>& d_ztilde) {
  const VectorX<Scalar> d_sigma = (d_ztilde.array() * z.array()).rowwise().sum();
  const VectorX<Scalar> d_sigma_eff = codes.transpose() * d_sigma;
  LatentGradients<Scalar> g;
  g.means = codes.transpose() * d_ztilde;
  g.raw_sigmas =
      d_sigma_eff.cwiseProduct(latent.raw_sigmas.unaryExpr([](Scalar r) { return sigmoid(r); }));
  g.codes = d_ztilde * latent.means.transpose() + d_sigma * latent.sigmas().transpose();
  return g;
}

template <typename Scalar>
struct PriorSample {
  std::vector<Eigen::Index> labels;
  MatrixX<Scalar> z;
  MatrixX<Scalar> z_tilde;
};

/// y ~ Cat(K, 1/K), z ~ N(0, I_d), z_tilde = mu_y + sigma_y z.
template <typename Scalar>
PriorSample<Scalar> sample_prior(const GmmLatent<Scalar>& latent, Eigen::Index m, Rng& rng) {
  if (m < 1) throw InvalidArgument("sample_prior: m must be positive");
  PriorSample<Scalar> s;
  std::uniform_int_distribution<Eigen::Index> cat(0, latent.clusters() - 1);
  s.labels.resize(static_cast<std::size_t>(m));
  for (auto& y : s.labels) y = cat(rng);
  s.z = standard_normal<Scalar>(m, latent.dim(), rng);
  s.z_tilde = reparameterize(embed_batch(latent, one_hot<Scalar>(s.labels, latent.clusters())), s.z);
  return s;
}

/// Density of N(mean, sigma^2 I) at z.
template <typename Scalar>
Scalar isotropic_normal_pdf(const VectorX<Scalar>& z, const VectorX<Scalar>& mean, Scalar sigma) {
  const auto d = static_cast<Scalar>(z.size());
  const Scalar sq = (z - mean).squaredNorm() / (sigma * sigma);
  return std::exp(-Scalar(0.5) * sq - d * std::log(sigma) -
                  Scalar(0.5) * d * std::log(Scalar(2) * std::numbers::pi_v<Scalar>));
}

/// p(z|x) = sum_k p_E(k|x) N(z | mu_k, sigma_k^2 I).
template <typename Scalar>
Scalar posterior_density(const GmmLatent<Scalar>& latent, const VectorX<Scalar>& z,
                         const VectorX<Scalar>& encoder_probs) {
  validate_code_row<Scalar>(encoder_probs.transpose(), latent.clusters());
  if (z.size() != latent.dim()) throw InvalidArgument("posterior_density: z has wrong dimension");
  Scalar p = 0;
  for (Eigen::Index k = 0; k < latent.clusters(); ++k)
    p += encoder_probs(k) * isotropic_normal_pdf<Scalar>(z, latent.means.row(k).transpose(),
                                                         latent.sigma(k));
  return p;
}

/// Upper bound on the standard-Gaussian mass outside the annulus sqrt(d) +- delta.
inline double annulus_bound(double delta) {
  return 4.0 / (delta * delta) * std::exp(-delta * delta / 4.0);
}

/// Fraction of n standard-normal draws in R^d whose norm falls outside [sqrt(d)-delta, sqrt(d)+delta].
inline double annulus_mass_check(Eigen::Index dim, double delta, std::int64_t n, Rng& rng) {
  if (dim < 1 || n < 1) throw InvalidArgument("annulus_mass_check: d and n must be positive");
  const double root = std::sqrt(static_cast<double>(dim));
  if (!(delta > 0) || !(delta < root))
    throw InvalidArgument("annulus_mass_check: delta must lie in (0, sqrt(d))");
  const double lo = root - delta;
  const double hi = root + delta;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::int64_t outside = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    double sq = 0;
    for (Eigen::Index j = 0; j < dim; ++j) {
      const double v = normal(rng);
      sq += v * v;
    }
    const double r = std::sqrt(sq);
    if (r < lo || r > hi) ++outside;
  }
  return static_cast<double>(outside) / static_cast<double>(n);
}

}  // namespace mmgan
