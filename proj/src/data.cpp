#include "mmgan/data.hpp"

#include "mmgan/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace mmgan {

Labels Dataset::labels_at(const std::vector<Eigen::Index>& idx) const {
  if (!labels) throw InvalidArgument("dataset '" + name + "' has no labels");
  Labels out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back((*labels)[static_cast<std::size_t>(i)]);
  return out;
}

void Dataset::validate() const {
  if (size() < 1 || dim() < 1) throw InvalidArgument("dataset '" + name + "' is empty");
  if (labels && static_cast<Eigen::Index>(labels->size()) != size())
    throw InvalidArgument("dataset '" + name + "' label count differs from sample count");
  std::vector<char> seen(static_cast<std::size_t>(size()), 0);
  for (const auto* part : {&train_indices, &test_indices})
    for (auto i : *part) {
      if (i < 0 || i >= size()) throw InvalidArgument("split index out of range");
      if (seen[static_cast<std::size_t>(i)]++) throw InvalidArgument("split indices overlap");
    }
  if (train_indices.size() + test_indices.size() != static_cast<std::size_t>(size()))
    throw InvalidArgument("split does not cover the dataset");
}

void assign_split(Dataset& data, double test_fraction, Rng& rng) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw InvalidArgument("test fraction must lie in [0, 1)");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(order.size())));
  data.test_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  data.train_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(data.test_indices.begin(), data.test_indices.end());
  std::sort(data.train_indices.begin(), data.train_indices.end());
}

namespace {

void shuffle_rows(Dataset& data, Rng& rng) {
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(data.size()));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  data.samples = Eigen::MatrixXd(data.samples(perm, Eigen::all));
  if (data.labels) {
    Labels shuffled;
    shuffled.reserve(perm.size());
    for (auto i : perm) shuffled.push_back((*data.labels)[static_cast<std::size_t>(i)]);
    data.labels = std::move(shuffled);
  }
}

}  // namespace

Dataset make_moons(Eigen::Index n, double noise_std, Rng& rng, double test_fraction) {
  if (n < 2) throw InvalidArgument("make_moons: n must be at least 2");
  if (!(noise_std >= 0)) throw InvalidArgument("make_moons: noise_std must be non-negative");
  const Eigen::Index n_upper = n / 2;
  const Eigen::Index n_lower = n - n_upper;
  Dataset data;
  data.name = "moons";
  data.samples.resize(n, 2);
  data.labels = Labels(static_cast<std::size_t>(n));
  auto angle = [](Eigen::Index i, Eigen::Index count) {
    return count > 1 ? std::numbers::pi * static_cast<double>(i) / static_cast<double>(count - 1) : 0.0;
  };
  for (Eigen::Index i = 0; i < n_upper; ++i) {
    const double t = angle(i, n_upper);
    data.samples.row(i) << std::cos(t), std::sin(t);
    (*data.labels)[static_cast<std::size_t>(i)] = 0;
  }
  for (Eigen::Index i = 0; i < n_lower; ++i) {
    const double t = angle(i, n_lower);
    data.samples.row(n_upper + i) << 1.0 - std::cos(t), 0.5 - std::sin(t);
    (*data.labels)[static_cast<std::size_t>(n_upper + i)] = 1;
  }
  if (noise_std > 0) data.samples += noise_std * standard_normal<double>(n, 2, rng);
  shuffle_rows(data, rng);
  assign_split(data, test_fraction, rng);
  return data;
}

Dataset make_blobs(Eigen::Index n, const std::vector<BlobCenter>& centers, Rng& rng,
                   double test_fraction) {
  if (centers.empty()) throw InvalidArgument("make_blobs: at least one center required");
  if (n < 1) throw InvalidArgument("make_blobs: n must be positive");
  const Eigen::Index p = centers.front().mean.size();
  for (const auto& c : centers) {
    if (c.mean.size() != p || p < 1) throw InvalidArgument("make_blobs: centers differ in dimension");
    if (!(c.std >= 0)) throw InvalidArgument("make_blobs: std must be non-negative");
  }
  const auto k = static_cast<Eigen::Index>(centers.size());
  Dataset data;
  data.name = "blobs";
  data.samples.resize(n, p);
  data.labels = Labels(static_cast<std::size_t>(n));
  Eigen::Index row = 0;
  for (Eigen::Index c = 0; c < k; ++c) {
    const Eigen::Index count = n / k + (c < n % k ? 1 : 0);
    const auto& center = centers[static_cast<std::size_t>(c)];
    for (Eigen::Index i = 0; i < count; ++i, ++row) {
      data.samples.row(row) =
          center.mean.transpose() + center.std * standard_normal<double>(1, p, rng);
      (*data.labels)[static_cast<std::size_t>(row)] = c;
    }
  }
  shuffle_rows(data, rng);
  assign_split(data, test_fraction, rng);
  return data;
}

NormalizeMode normalize_mode_from_string(const std::string& s) {
  if (s == "minus1to1") return NormalizeMode::kMinus1To1;
  if (s == "zero1") return NormalizeMode::kZero1;
  if (s == "standardize") return NormalizeMode::kStandardize;
  throw InvalidArgument("unknown normalization mode '" + s + "'");
}

std::string to_string(NormalizeMode mode) {
  switch (mode) {
    case NormalizeMode::kMinus1To1: return "minus1to1";
    case NormalizeMode::kZero1: return "zero1";
    case NormalizeMode::kStandardize: return "standardize";
  }
  return "?";
}

Eigen::MatrixXd Normalization::apply(const Eigen::MatrixXd& x) const {
  if (x.cols() != offset.size()) throw InvalidArgument("normalization feature count mismatch");
  return ((x.rowwise() - offset).array().rowwise() / scale.array()).matrix();
}

Eigen::MatrixXd Normalization::invert(const Eigen::MatrixXd& y) const {
  if (y.cols() != offset.size()) throw InvalidArgument("normalization feature count mismatch");
  return ((y.array().rowwise() * scale.array()).matrix().rowwise() + offset);
}

Normalization fit_normalization(const Eigen::MatrixXd& x, NormalizeMode mode,
                                std::optional<std::pair<double, double>> fixed_range) {
  if (x.rows() < 1 || x.cols() < 1) throw InvalidArgument("cannot normalize an empty matrix");
  Normalization n;
  n.mode = mode;
  const Eigen::Index p = x.cols();
  n.offset.resize(p);
  n.scale.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double offset = 0, scale = 0;
    if (mode == NormalizeMode::kStandardize) {
      offset = x.col(j).mean();
      scale = std::sqrt((x.col(j).array() - offset).square().mean());
    } else {
      const double lo = fixed_range ? fixed_range->first : x.col(j).minCoeff();
      const double hi = fixed_range ? fixed_range->second : x.col(j).maxCoeff();
      if (mode == NormalizeMode::kZero1) {
        offset = lo;
        scale = hi - lo;
      } else {
        offset = 0.5 * (lo + hi);
        scale = 0.5 * (hi - lo);
      }
    }
    if (!(scale > 0)) {
      // constant feature: keep the offset so invert() restores it exactly
      if (mode != NormalizeMode::kStandardize && !fixed_range) offset = x(0, j);
      scale = 1.0;
      n.flagged.push_back(j);
    }
    n.offset(j) = offset;
    n.scale(j) = scale;
  }
  return n;
}

NormalizedDataset normalize(const Dataset& data, NormalizeMode mode,
                            std::optional<std::pair<double, double>> fixed_range) {
  NormalizedDataset out{data, fit_normalization(data.samples, mode, fixed_range)};
  out.data.samples = out.params.apply(data.samples);
  return out;
}

}  // namespace mmgan
