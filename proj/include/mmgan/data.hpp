#pragma once

#include "mmgan/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mmgan {

using Labels = std::vector<Eigen::Index>;

/// n x p samples, optional ground-truth labels and a disjoint train/test split.
struct Dataset {
  std::string name;
  Eigen::MatrixXd samples;
  std::optional<Labels> labels;
  std::vector<Eigen::Index> train_indices;
  std::vector<Eigen::Index> test_indices;

  Eigen::Index size() const { return samples.rows(); }
  Eigen::Index dim() const { return samples.cols(); }

  Eigen::MatrixXd rows(const std::vector<Eigen::Index>& idx) const { return samples(idx, Eigen::all); }
  Labels labels_at(const std::vector<Eigen::Index>& idx) const;

  /// Throws InvalidArgument unless the split is disjoint and covering and labels match n.
  void validate() const;
};

/// Random disjoint split; the first round(test_fraction * n) shuffled indices become test.
void assign_split(Dataset& data, double test_fraction, Rng& rng);

/// Two interleaving half circles. Class 0: (cos t, sin t); class 1: (1 - cos t, 0.5 - sin t),
/// t evenly spaced on [0, pi]; then isotropic noise. Rows are shuffled.
Dataset make_moons(Eigen::Index n, double noise_std, Rng& rng, double test_fraction = 0.2);

struct BlobCenter {
  Eigen::VectorXd mean;
  double std = 1.0;
};

/// Isotropic Gaussian blobs with equal shares per center (remainder to the first centers).
Dataset make_blobs(Eigen::Index n, const std::vector<BlobCenter>& centers, Rng& rng,
                   double test_fraction = 0.2);

enum class NormalizeMode { kMinus1To1, kZero1, kStandardize };

NormalizeMode normalize_mode_from_string(const std::string& s);
std::string to_string(NormalizeMode mode);

/// Per-feature affine map y = (x - offset) / scale. Zero-range features get scale 1 so they
/// map to 0; their column indices are listed in `flagged`. Standardize divides by the
/// population standard deviation.
struct Normalization {
  NormalizeMode mode = NormalizeMode::kStandardize;
  Eigen::RowVectorXd offset;
  Eigen::RowVectorXd scale;
  std::vector<Eigen::Index> flagged;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd invert(const Eigen::MatrixXd& y) const;
};

/// Fits the map on all samples. With `fixed_range` every feature uses that (min, max)
/// instead of its own, as for pixel intensities.
Normalization fit_normalization(const Eigen::MatrixXd& x, NormalizeMode mode,
                                std::optional<std::pair<double, double>> fixed_range = std::nullopt);

struct NormalizedDataset {
  Dataset data;
  Normalization params;
};

NormalizedDataset normalize(const Dataset& data, NormalizeMode mode,
                            std::optional<std::pair<double, double>> fixed_range = std::nullopt);

}  // namespace mmgan
