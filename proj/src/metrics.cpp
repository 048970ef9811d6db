#include "mmgan/metrics.hpp"

#include "mmgan/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace mmgan {

namespace {

void check_pair(const Labels& a, const Labels& b) {
  if (a.size() != b.size()) throw InvalidArgument("labelings differ in length");
  if (a.empty()) throw InvalidArgument("labelings are empty");
  for (const auto* l : {&a, &b})
    for (auto v : *l)
      if (v < 0) throw InvalidArgument("labels must be non-negative");
}

Labels distinct(const Labels& l) {
  Labels d(l);
  std::sort(d.begin(), d.end());
  d.erase(std::unique(d.begin(), d.end()), d.end());
  return d;
}

double choose2(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

ContingencyTable ContingencyTable::build(const Labels& a, const Labels& b) {
  check_pair(a, b);
  ContingencyTable t;
  t.row_labels = distinct(a);
  t.col_labels = distinct(b);
  std::map<Eigen::Index, Eigen::Index> row_of, col_of;
  for (std::size_t i = 0; i < t.row_labels.size(); ++i) row_of[t.row_labels[i]] = static_cast<Eigen::Index>(i);
  for (std::size_t j = 0; j < t.col_labels.size(); ++j) col_of[t.col_labels[j]] = static_cast<Eigen::Index>(j);
  t.counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(t.row_labels.size()),
                                   static_cast<Eigen::Index>(t.col_labels.size()));
  for (std::size_t i = 0; i < a.size(); ++i) t.counts(row_of[a[i]], col_of[b[i]]) += 1.0;
  t.row_sums = t.counts.rowwise().sum();
  t.col_sums = t.counts.colwise().sum();
  t.total = static_cast<double>(a.size());
  return t;
}

double nmi(const Labels& a, const Labels& b) {
  const auto t = ContingencyTable::build(a, b);
  const double n = t.total;
  auto entropy = [n](const auto& sums) {
    double h = 0;
    for (Eigen::Index i = 0; i < sums.size(); ++i)
      if (sums(i) > 0) h -= sums(i) / n * std::log(sums(i) / n);
    return h;
  };
  const double ha = entropy(t.row_sums);
  const double hb = entropy(t.col_sums);
  if (ha == 0.0 && hb == 0.0) return 1.0;
  if (ha == 0.0 || hb == 0.0) return 0.0;
  double mi = 0;
  for (Eigen::Index i = 0; i < t.counts.rows(); ++i)
    for (Eigen::Index j = 0; j < t.counts.cols(); ++j) {
      const double c = t.counts(i, j);
      if (c > 0) mi += c / n * std::log(c * n / (t.row_sums(i) * t.col_sums(j)));
    }
  return std::clamp(mi / std::sqrt(ha * hb), 0.0, 1.0);
}

double ari(const Labels& a, const Labels& b) {
  const auto t = ContingencyTable::build(a, b);
  double sum_cells = 0, sum_rows = 0, sum_cols = 0;
  for (Eigen::Index i = 0; i < t.counts.rows(); ++i)
    for (Eigen::Index j = 0; j < t.counts.cols(); ++j) sum_cells += choose2(t.counts(i, j));
  for (Eigen::Index i = 0; i < t.row_sums.size(); ++i) sum_rows += choose2(t.row_sums(i));
  for (Eigen::Index j = 0; j < t.col_sums.size(); ++j) sum_cols += choose2(t.col_sums(j));
  const double total_pairs = choose2(t.total);
  const double expected = total_pairs > 0 ? sum_rows * sum_cols / total_pairs : 0.0;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  // both partitions trivial in the same way (all singletons or one block): identical
  if (max_index == expected) return 1.0;
  return (sum_cells - expected) / (max_index - expected);
}

std::string_view to_string(AccMode mode) {
  return mode == AccMode::kOptimalAssignment ? "optimal_assignment" : "majority_purity";
}

std::vector<Eigen::Index> max_weight_assignment(const Eigen::MatrixXd& weights) {
  const Eigen::Index n = weights.rows();
  if (n != weights.cols()) throw InvalidArgument("assignment matrix must be square");
  if (n == 0) return {};
  // Potentials formulation on costs = -weights, 1-based with a virtual column 0.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<Eigen::Index> match(n + 1, 0), way(n + 1, 0);
  for (Eigen::Index row = 1; row <= n; ++row) {
    match[0] = row;
    Eigen::Index col0 = 0;
    std::vector<double> min_v(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[col0] = 1;
      const Eigen::Index r = match[col0];
      double delta = inf;
      Eigen::Index col1 = 0;
      for (Eigen::Index c = 1; c <= n; ++c) {
        if (used[c]) continue;
        const double cur = -weights(r - 1, c - 1) - u[r] - v[c];
        if (cur < min_v[c]) {
          min_v[c] = cur;
          way[c] = col0;
        }
        if (min_v[c] < delta) {
          delta = min_v[c];
          col1 = c;
        }
      }
      for (Eigen::Index c = 0; c <= n; ++c) {
        if (used[c]) {
          u[match[c]] += delta;
          v[c] -= delta;
        } else {
          min_v[c] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      const Eigen::Index col1 = way[col0];
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<Eigen::Index> assignment(n);
  for (Eigen::Index c = 1; c <= n; ++c) assignment[match[c] - 1] = c - 1;
  return assignment;
}

AccResult purity_acc(const Labels& pred, const Labels& truth) {
  const auto t = ContingencyTable::build(pred, truth);
  AccResult r;
  if (t.counts.rows() == t.counts.cols()) {
    r.mode = AccMode::kOptimalAssignment;
    const auto assignment = max_weight_assignment(t.counts);
    double hit = 0;
    for (Eigen::Index i = 0; i < t.counts.rows(); ++i) hit += t.counts(i, assignment[i]);
    r.value = hit / t.total;
  } else {
    r.mode = AccMode::kMajorityPurity;
    r.value = t.counts.rowwise().maxCoeff().sum() / t.total;
  }
  return r;
}

CosineMatrix cosine_matrix(const Eigen::MatrixXd& means) {
  const Eigen::Index k = means.rows();
  const Eigen::VectorXd norms = means.rowwise().norm();
  CosineMatrix out;
  out.values.resize(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) {
      if (norms(i) == 0.0 || norms(j) == 0.0) {
        out.values(i, j) = std::numeric_limits<double>::quiet_NaN();
        out.undefined.emplace_back(i, j);
      } else if (i == j) {
        out.values(i, j) = 1.0;
      } else {
        out.values(i, j) = std::clamp(means.row(i).dot(means.row(j)) / (norms(i) * norms(j)), -1.0, 1.0);
      }
    }
  return out;
}

double hausdorff(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const PointMetric& metric) {
  if (x.rows() == 0 || y.rows() == 0) throw InvalidArgument("hausdorff: point clouds must be non-empty");
  if (x.cols() != y.cols()) throw InvalidArgument("hausdorff: point clouds differ in dimension");
  auto directed = [&metric](const Eigen::MatrixXd& from, const Eigen::MatrixXd& to) {
    double worst = 0;
    for (Eigen::Index i = 0; i < from.rows(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < to.rows() && best > worst; ++j)
        best = std::min(best, metric(from.row(i), to.row(j)));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(x, y), directed(y, x));
}

double hausdorff(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  return hausdorff(x, y, [](const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
    return (a - b).norm();
  });
}

}  // namespace mmgan
