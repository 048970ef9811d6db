#pragma once

#include "mmgan/data.hpp"
#include "mmgan/types.hpp"

#include <functional>
#include <string_view>
#include <utility>
#include <vector>

namespace mmgan {

/// Co-occurrence counts of two labelings over the same n items.
struct ContingencyTable {
  Eigen::MatrixXd counts;  // R x C, integral values
  Eigen::VectorXd row_sums;
  Eigen::RowVectorXd col_sums;
  double total = 0;
  Labels row_labels;  // distinct values of the first labeling, ascending
  Labels col_labels;

  static ContingencyTable build(const Labels& a, const Labels& b);
};

/// Mutual information over the geometric mean of entropies. 1 if both entropies are 0,
/// 0 if exactly one is.
double nmi(const Labels& a, const Labels& b);

/// Adjusted Rand index from pair counts.
double ari(const Labels& a, const Labels& b);

enum class AccMode { kOptimalAssignment, kMajorityPurity };
std::string_view to_string(AccMode mode);

struct AccResult {
  double value = 0;
  AccMode mode = AccMode::kOptimalAssignment;
};

/// Optimal one-to-one cluster/class matching when both have the same number of distinct
/// labels, majority-vote purity otherwise.
AccResult purity_acc(const Labels& pred, const Labels& truth);

/// Maximum-weight perfect matching on a square matrix (Hungarian method).
/// Returns col[i] assigned to row i.
std::vector<Eigen::Index> max_weight_assignment(const Eigen::MatrixXd& weights);

/// Pairwise cosine similarity of the rows of `means`. Rows with zero norm make their
/// entries NaN and are listed in `undefined`.
struct CosineMatrix {
  Eigen::MatrixXd values;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> undefined;

  Eigen::MatrixXd one_minus() const { return (1.0 - values.array()).matrix(); }
};

CosineMatrix cosine_matrix(const Eigen::MatrixXd& means);

using PointMetric = std::function<double(const Eigen::RowVectorXd&, const Eigen::RowVectorXd&)>;

/// Exact Hausdorff distance between two finite point clouds (rows), O(n*m).
double hausdorff(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);
double hausdorff(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const PointMetric& metric);

}  // namespace mmgan
