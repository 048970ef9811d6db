#pragma once

#include "mmgan/dense_net.hpp"
#include "mmgan/errors.hpp"
#include "mmgan/types.hpp"

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace mmgan {

enum class LossKind { kSgan, kRsgan, kCrasgan };

inline std::string_view to_string(LossKind k) {
  switch (k) {
    case LossKind::kSgan: return "sgan";
    case LossKind::kRsgan: return "rsgan";
    case LossKind::kCrasgan: return "crasgan";
  }
  return "?";
}

inline LossKind loss_kind_from_string(std::string_view s) {
  if (s == "sgan") return LossKind::kSgan;
  if (s == "rsgan") return LossKind::kRsgan;
  if (s == "crasgan") return LossKind::kCrasgan;
  throw InvalidArgument("unknown loss kind '" + std::string(s) + "'");
}

/// Raw critic values C(x) = logit(D(x)) for a real and a fake batch, with cluster labels.
template <typename Scalar>
struct CriticBatch {
  VectorX<Scalar> c_real;
  VectorX<Scalar> c_fake;
  std::vector<Eigen::Index> real_clusters;
  std::vector<Eigen::Index> fake_clusters;
};

/// Discriminator and generator losses plus their gradients w.r.t. both critic vectors.
template <typename Scalar>
struct AdversarialLoss {
  Scalar d_loss = 0;
  Scalar g_loss = 0;
  VectorX<Scalar> d_grad_real, d_grad_fake;
  VectorX<Scalar> g_grad_real, g_grad_fake;
  std::size_t fallback_count = 0;
};

template <typename Scalar>
struct LossPair {
  Scalar d_loss;
  Scalar g_loss;
};

/// Standard GAN losses from probabilities D(x). Generator uses -log D(x_f).
template <typename Scalar>
LossPair<Scalar> sgan_losses(const VectorX<Scalar>& d_real_probs, const VectorX<Scalar>& d_fake_probs) {
  auto in_open_unit = [](const VectorX<Scalar>& p) {
    return p.size() > 0 && (p.array() > 0).all() && (p.array() < 1).all();
  };
  if (!in_open_unit(d_real_probs) || !in_open_unit(d_fake_probs))
    throw InvalidArgument("sgan_losses: probabilities must lie in (0,1)");
  const Scalar d = -d_real_probs.array().log().mean() - (Scalar(1) - d_fake_probs.array()).log().mean();
  const Scalar g = -d_fake_probs.array().log().mean();
  return {d, g};
}

namespace detail {

template <typename Scalar>
void check_batch(const CriticBatch<Scalar>& b, bool paired) {
  if (b.c_real.size() == 0 || b.c_fake.size() == 0) throw InvalidArgument("empty critic batch");
  if (paired && b.c_real.size() != b.c_fake.size())
    throw InvalidArgument("paired critic batch has mismatched lengths");
}

template <typename Scalar>
void check_labels(const CriticBatch<Scalar>& b) {
  if (static_cast<Eigen::Index>(b.real_clusters.size()) != b.c_real.size() ||
      static_cast<Eigen::Index>(b.fake_clusters.size()) != b.c_fake.size())
    throw InvalidArgument("cluster label count differs from critic count");
  for (auto k : b.real_clusters)
    if (k < 0) throw InvalidArgument("negative cluster label");
  for (auto k : b.fake_clusters)
    if (k < 0) throw InvalidArgument("negative cluster label");
}

/// Shared tail of the relativistic-average losses once the centered critics are known.
/// a_i = c_r[i] - ref_fake(i), b_j = c_f[j] - ref_real(j).
template <typename Scalar>
void average_losses(const VectorX<Scalar>& a, const VectorX<Scalar>& b, AdversarialLoss<Scalar>& out,
                    VectorX<Scalar>& d_da, VectorX<Scalar>& d_db, VectorX<Scalar>& g_da,
                    VectorX<Scalar>& g_db) {
  const auto nr = static_cast<Scalar>(a.size());
  const auto nf = static_cast<Scalar>(b.size());
  Scalar d_real = 0, d_fake = 0, g_fake = 0, g_real = 0;
  d_da.resize(a.size());
  g_da.resize(a.size());
  d_db.resize(b.size());
  g_db.resize(b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    d_real += softplus(-a(i));
    g_real += softplus(a(i));
    d_da(i) = -sigmoid(-a(i)) / nr;
    g_da(i) = sigmoid(a(i)) / nr;
  }
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    d_fake += softplus(b(j));
    g_fake += softplus(-b(j));
    d_db(j) = sigmoid(b(j)) / nf;
    g_db(j) = -sigmoid(-b(j)) / nf;
  }
  out.d_loss = d_real / nr + d_fake / nf;
  out.g_loss = g_fake / nf + g_real / nr;
}

}  // namespace detail

/// SGAN from critics: -log s(c) = softplus(-c), -log(1 - s(c)) = softplus(c).
template <typename Scalar>
AdversarialLoss<Scalar> sgan_critic_losses(const CriticBatch<Scalar>& b) {
  detail::check_batch(b, false);
  const auto nr = static_cast<Scalar>(b.c_real.size());
  const auto nf = static_cast<Scalar>(b.c_fake.size());
  AdversarialLoss<Scalar> out;
  Scalar dr = 0, df = 0, g = 0;
  out.d_grad_real.resize(b.c_real.size());
  out.g_grad_real = VectorX<Scalar>::Zero(b.c_real.size());
  out.d_grad_fake.resize(b.c_fake.size());
  out.g_grad_fake.resize(b.c_fake.size());
  for (Eigen::Index i = 0; i < b.c_real.size(); ++i) {
    dr += softplus(-b.c_real(i));
    out.d_grad_real(i) = -sigmoid(-b.c_real(i)) / nr;
  }
  for (Eigen::Index j = 0; j < b.c_fake.size(); ++j) {
    df += softplus(b.c_fake(j));
    g += softplus(-b.c_fake(j));
    out.d_grad_fake(j) = sigmoid(b.c_fake(j)) / nf;
    out.g_grad_fake(j) = -sigmoid(-b.c_fake(j)) / nf;
  }
  out.d_loss = dr / nr + df / nf;
  out.g_loss = g / nf;
  return out;
}

template <typename Scalar>
Scalar rsgan_d_loss(const CriticBatch<Scalar>& b) {
  detail::check_batch(b, true);
  Scalar s = 0;
  for (Eigen::Index i = 0; i < b.c_real.size(); ++i) s += softplus(-(b.c_real(i) - b.c_fake(i)));
  return s / static_cast<Scalar>(b.c_real.size());
}

template <typename Scalar>
Scalar rsgan_g_loss(const CriticBatch<Scalar>& b) {
  detail::check_batch(b, true);
  Scalar s = 0;
  for (Eigen::Index i = 0; i < b.c_real.size(); ++i) s += softplus(-(b.c_fake(i) - b.c_real(i)));
  return s / static_cast<Scalar>(b.c_real.size());
}

/// Paired relativistic losses over critic differences c_r[i] - c_f[i].
template <typename Scalar>
AdversarialLoss<Scalar> rsgan_losses(const CriticBatch<Scalar>& b) {
  AdversarialLoss<Scalar> out;
  out.d_loss = rsgan_d_loss(b);
  out.g_loss = rsgan_g_loss(b);
  const auto m = static_cast<Scalar>(b.c_real.size());
  const VectorX<Scalar> diff = b.c_real - b.c_fake;
  out.d_grad_real = diff.unaryExpr([m](Scalar v) { return -sigmoid(-v) / m; });
  out.d_grad_fake = -out.d_grad_real;
  out.g_grad_fake = diff.unaryExpr([m](Scalar v) { return -sigmoid(v) / m; });
  out.g_grad_real = -out.g_grad_fake;
  return out;
}

/// Relativistic-average losses: each sample against the opposite side's batch mean critic.
template <typename Scalar>
AdversarialLoss<Scalar> rasgan_losses(const CriticBatch<Scalar>& b) {
  detail::check_batch(b, false);
  const Eigen::Index nr = b.c_real.size(), nf = b.c_fake.size();
  Scalar sum_real = 0, sum_fake = 0;
  for (Eigen::Index i = 0; i < nr; ++i) sum_real += b.c_real(i);
  for (Eigen::Index j = 0; j < nf; ++j) sum_fake += b.c_fake(j);
  const Scalar mean_real = sum_real / static_cast<Scalar>(nr);
  const Scalar mean_fake = sum_fake / static_cast<Scalar>(nf);
  VectorX<Scalar> a(nr), c(nf);
  for (Eigen::Index i = 0; i < nr; ++i) a(i) = b.c_real(i) - mean_fake;
  for (Eigen::Index j = 0; j < nf; ++j) c(j) = b.c_fake(j) - mean_real;

  AdversarialLoss<Scalar> out;
  VectorX<Scalar> d_da, d_db, g_da, g_db;
  detail::average_losses(a, c, out, d_da, d_db, g_da, g_db);
  auto chain = [&](const VectorX<Scalar>& da, const VectorX<Scalar>& db, VectorX<Scalar>& gr,
                   VectorX<Scalar>& gf) {
    Scalar pull_fake = 0, pull_real = 0;
    for (Eigen::Index i = 0; i < nr; ++i) pull_fake += da(i) / static_cast<Scalar>(nf);
    for (Eigen::Index j = 0; j < nf; ++j) pull_real += db(j) / static_cast<Scalar>(nr);
    gr = da.array() - pull_real;
    gf = db.array() - pull_fake;
  };
  chain(d_da, d_db, out.d_grad_real, out.d_grad_fake);
  chain(g_da, g_db, out.g_grad_real, out.g_grad_fake);
  return out;
}

/// Cluster-conditional relativistic-average losses. A real sample is compared with the
/// mean critic of fakes carrying its encoder cluster; a fake with the mean critic of reals
/// the encoder put in its cluster. If that group is empty the whole opposite batch mean is
/// used and fallback_count is incremented.
template <typename Scalar>
AdversarialLoss<Scalar> crasgan_losses(const CriticBatch<Scalar>& b) {
  detail::check_batch(b, false);
  detail::check_labels(b);
  const Eigen::Index nr = b.c_real.size(), nf = b.c_fake.size();
  Eigen::Index clusters = 0;
  for (auto k : b.real_clusters) clusters = std::max(clusters, k + 1);
  for (auto k : b.fake_clusters) clusters = std::max(clusters, k + 1);

  // group index `clusters` is the unconditional group
  std::vector<Scalar> real_sum(clusters + 1, 0), fake_sum(clusters + 1, 0);
  std::vector<Eigen::Index> real_n(clusters + 1, 0), fake_n(clusters + 1, 0);
  for (Eigen::Index i = 0; i < nr; ++i) {
    real_sum[b.real_clusters[i]] += b.c_real(i);
    ++real_n[b.real_clusters[i]];
  }
  for (Eigen::Index j = 0; j < nf; ++j) {
    fake_sum[b.fake_clusters[j]] += b.c_fake(j);
    ++fake_n[b.fake_clusters[j]];
  }
  {
    Scalar s = 0;
    for (Eigen::Index i = 0; i < nr; ++i) s += b.c_real(i);
    real_sum[clusters] = s;
    real_n[clusters] = nr;
    s = 0;
    for (Eigen::Index j = 0; j < nf; ++j) s += b.c_fake(j);
    fake_sum[clusters] = s;
    fake_n[clusters] = nf;
  }

  AdversarialLoss<Scalar> out;
  std::vector<Eigen::Index> real_ref(nr), fake_ref(nf);
  VectorX<Scalar> a(nr), c(nf);
  for (Eigen::Index i = 0; i < nr; ++i) {
    Eigen::Index g = b.real_clusters[i];
    if (fake_n[g] == 0) {
      g = clusters;
      ++out.fallback_count;
    }
    real_ref[i] = g;
    a(i) = b.c_real(i) - fake_sum[g] / static_cast<Scalar>(fake_n[g]);
  }
  for (Eigen::Index j = 0; j < nf; ++j) {
    Eigen::Index g = b.fake_clusters[j];
    if (real_n[g] == 0) {
      g = clusters;
      ++out.fallback_count;
    }
    fake_ref[j] = g;
    c(j) = b.c_fake(j) - real_sum[g] / static_cast<Scalar>(real_n[g]);
  }

  VectorX<Scalar> d_da, d_db, g_da, g_db;
  detail::average_losses(a, c, out, d_da, d_db, g_da, g_db);

  auto chain = [&](const VectorX<Scalar>& da, const VectorX<Scalar>& db, VectorX<Scalar>& gr,
                   VectorX<Scalar>& gf) {
    // per-group sums of upstream gradient divided by group size
    std::vector<Scalar> pull_fake(clusters + 1, 0), pull_real(clusters + 1, 0);
    for (Eigen::Index i = 0; i < nr; ++i)
      pull_fake[real_ref[i]] += da(i) / static_cast<Scalar>(fake_n[real_ref[i]]);
    for (Eigen::Index j = 0; j < nf; ++j)
      pull_real[fake_ref[j]] += db(j) / static_cast<Scalar>(real_n[fake_ref[j]]);
    gr = da;
    gf = db;
    for (Eigen::Index i = 0; i < nr; ++i)
      gr(i) -= pull_real[b.real_clusters[i]] + pull_real[clusters];
    for (Eigen::Index j = 0; j < nf; ++j)
      gf(j) -= pull_fake[b.fake_clusters[j]] + pull_fake[clusters];
  };
  chain(d_da, d_db, out.d_grad_real, out.d_grad_fake);
  chain(g_da, g_db, out.g_grad_real, out.g_grad_fake);
  return out;
}

template <typename Scalar>
AdversarialLoss<Scalar> adversarial_losses(LossKind kind, const CriticBatch<Scalar>& b) {
  switch (kind) {
    case LossKind::kSgan: return sgan_critic_losses(b);
    case LossKind::kRsgan: return rsgan_losses(b);
    case LossKind::kCrasgan: return crasgan_losses(b);
  }
  throw InvalidArgument("unknown loss kind");
}

template <typename Scalar>
struct CrossEntropy {
  Scalar value = 0;
  MatrixX<Scalar> grad;  // d value / d probs
  std::size_t clamped = 0;
};

/// alpha * mean_i(-log probs(i, target_i)); probabilities below 1e-12 are clamped.
template <typename Scalar>
CrossEntropy<Scalar> encoder_ce(const MatrixX<Scalar>& probs, const std::vector<Eigen::Index>& targets,
                                Scalar alpha) {
  constexpr Scalar kClamp = Scalar(1e-12);
  if (static_cast<Eigen::Index>(targets.size()) != probs.rows() || probs.rows() == 0)
    throw InvalidArgument("encoder_ce: target count differs from probability rows");
  const auto m = static_cast<Scalar>(probs.rows());
  CrossEntropy<Scalar> out;
  out.grad = MatrixX<Scalar>::Zero(probs.rows(), probs.cols());
  Scalar sum = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const auto t = targets[static_cast<std::size_t>(i)];
    if (t < 0 || t >= probs.cols()) throw InvalidArgument("encoder_ce: target out of range");
    const Scalar p = probs(i, t);
    if (p < kClamp) {
      ++out.clamped;
      sum -= std::log(kClamp);
    } else {
      sum -= std::log(p);
      out.grad(i, t) = -alpha / (m * p);
    }
  }
  out.value = alpha * sum / m;
  return out;
}

}  // namespace mmgan
