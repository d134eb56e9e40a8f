#pragma once

#include "riloss/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace riloss {

/// Ascending ranks with averaged ties; the smallest value gets rank 1.
inline Vector average_ranks(const Vector& values) {
  const auto n = values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return values(a) < values(b); });
  Vector ranks(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && values(order[j + 1]) == values(order[i])) ++j;
    const double shared = 0.5 * static_cast<double>(i + j) + 1.0;  // mean of ranks i+1..j+1
    for (Eigen::Index q = i; q <= j; ++q) ranks(order[q]) = shared;
    i = j + 1;
  }
  return ranks;
}

struct FriedmanResult {
  double tau_chi2 = 0.0;
  double tau_f = 0.0;
  Vector avg_ranks;  // one per method; lower is better
  long settings = 0;
  int methods = 0;
};

/// Friedman rank statistics over an N x k metric table (rows: settings,
/// columns: methods, lower metric = better). The F-form statistic follows an
/// F distribution with (k-1, (k-1)(N-1)) degrees of freedom.
inline FriedmanResult friedman_test(const Matrix& metrics) {
  const auto n = metrics.rows();
  const auto k = metrics.cols();
  if (n < 2 || k < 2)
    throw DataError("friedman_test: need at least 2 settings and 2 methods, got " +
                    std::to_string(n) + " x " + std::to_string(k));

  Vector avg = Vector::Zero(k);
  for (Eigen::Index row = 0; row < n; ++row)
    avg += average_ranks(metrics.row(row).transpose());
  avg /= static_cast<double>(n);

  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  const double tau_chi2 =
      12.0 * nd / (kd * (kd + 1.0)) * (avg.squaredNorm() - kd * (kd + 1.0) * (kd + 1.0) / 4.0);
  const double denom = nd * (kd - 1.0) - tau_chi2;
  if (!(denom > 0.0))
    throw DataError("friedman_test: degenerate rank table (identical rankings in every row)");

  FriedmanResult res;
  res.tau_chi2 = tau_chi2;
  res.tau_f = (nd - 1.0) * tau_chi2 / denom;
  res.avg_ranks = avg;
  res.settings = n;
  res.methods = static_cast<int>(k);
  return res;
}

/// Nemenyi critical distance: q_alpha * sqrt(k (k+1) / (6 N)).
inline double nemenyi_cd(int k, long n, double q_alpha) {
  if (k < 2 || n < 1) throw DomainError("nemenyi_cd: need k >= 2 and N >= 1");
  if (!(q_alpha > 0.0)) throw DomainError("nemenyi_cd: q_alpha must be positive");
  const double kd = static_cast<double>(k);
  return q_alpha * std::sqrt(kd * (kd + 1.0) / (6.0 * static_cast<double>(n)));
}

/// Spearman rank correlation (Pearson correlation of the averaged ranks).
inline double spearman_rho(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("spearman_rho: length mismatch");
  return pearson(average_ranks(a), average_ranks(b));
}

}  // namespace riloss
