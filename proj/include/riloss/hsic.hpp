#pragma once

#include "riloss/kernels.hpp"

namespace riloss {

enum class HsicEstimator { plugin, ustat };

struct HsicConfig {
  HsicEstimator estimator = HsicEstimator::plugin;
  KernelSpec kernel_r;
  KernelSpec kernel_s;
};

struct HsicEstimate {
  double value = 0.0;
  Eigen::Index n = 0;
  HsicEstimator estimator = HsicEstimator::plugin;
};

namespace detail {

inline void check_paired(const SampleSet& r, const SampleSet& s) {
  if (r.size() != s.size())
    throw DimensionError("hsic: sample sets differ in length (" + std::to_string(r.size()) +
                         " vs " + std::to_string(s.size()) + ")");
}

}  // namespace detail

/// Plug-in estimator: (1/(n-1)^2) tr(Kc Lc) with Kc, Lc the doubly centered
/// Gram matrices. Non-negative; biased O(1/n); differentiable in the samples.
inline HsicEstimate hsic_plugin(const SampleSet& r, const SampleSet& s, const HsicConfig& cfg) {
  detail::check_paired(r, s);
  const auto n = static_cast<Eigen::Index>(r.size());
  if (n < 2) throw DomainError("hsic_plugin: need at least 2 samples");
  Matrix kc = gram(r, cfg.kernel_r).values;
  detail::center_in_place(kc);
  Matrix lc = gram(s, cfg.kernel_s).values;
  detail::center_in_place(lc);
  const double denom = static_cast<double>(n - 1) * static_cast<double>(n - 1);
  double value = kc.cwiseProduct(lc).sum() / denom;
  if (value < 0.0) value = 0.0;  // trace of a product of PSD matrices; clip roundoff
  return HsicEstimate{value, n, HsicEstimator::plugin};
}

/// Unbiased estimator: the three distinct-tuple averages (pairs, quadruples,
/// triples) evaluated through an O(n^2) rearrangement over Gram matrices with
/// zeroed diagonals. May be slightly negative for weak dependence.
inline HsicEstimate hsic_ustat(const SampleSet& r, const SampleSet& s, const HsicConfig& cfg) {
  detail::check_paired(r, s);
  const auto n = static_cast<Eigen::Index>(r.size());
  if (n < 4)
    throw DomainError("hsic_ustat: the u-statistic needs at least 4 samples, got " +
                      std::to_string(n));
  Matrix k = gram(r, cfg.kernel_r).values;
  Matrix l = gram(s, cfg.kernel_s).values;
  k.diagonal().setZero();
  l.diagonal().setZero();

  const double nn = static_cast<double>(n);
  const double p2 = nn * (nn - 1.0);
  const double p3 = p2 * (nn - 2.0);
  const double p4 = p3 * (nn - 3.0);

  const double pair_sum = k.cwiseProduct(l).sum();  // sum_{i!=j} k_ij l_ij
  const Vector k_rows = k.rowwise().sum();
  const Vector l_rows = l.rowwise().sum();
  const double triple_sum = k_rows.dot(l_rows) - pair_sum;  // distinct (i,j,q): k_ij l_iq
  const double quad_sum =                                   // all four indices distinct
      k_rows.sum() * l_rows.sum() - 4.0 * triple_sum - 2.0 * pair_sum;

  const double value = pair_sum / p2 + quad_sum / p4 - 2.0 * triple_sum / p3;
  return HsicEstimate{value, n, HsicEstimator::ustat};
}

/// Literal enumeration of the distinct-tuple sums behind hsic_ustat.
/// Combinatorial cost limits it to 4 <= n <= 10; intended as a cross-check.
inline double hsic_oracle(const SampleSet& r, const SampleSet& s, const HsicConfig& cfg) {
  detail::check_paired(r, s);
  const auto n = static_cast<Eigen::Index>(r.size());
  if (n < 4 || n > 10)
    throw DomainError("hsic_oracle: n must lie in [4, 10], got " + std::to_string(n));
  const Matrix k = gram(r, cfg.kernel_r).values;
  const Matrix l = gram(s, cfg.kernel_s).values;

  const double nn = static_cast<double>(n);
  double pair_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) pair_sum += k(i, j) * l(i, j);

  double triple_sum = 0.0;  // shared first index between the k-pair and the l-pair
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      for (Eigen::Index q = 0; q < n; ++q) {
        if (q == i || q == j) continue;
        triple_sum += k(i, j) * l(i, q);
      }
    }

  double quad_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      for (Eigen::Index q = 0; q < n; ++q) {
        if (q == i || q == j) continue;
        for (Eigen::Index w = 0; w < n; ++w) {
          if (w == i || w == j || w == q) continue;
          quad_sum += k(i, j) * l(q, w);
        }
      }
    }

  const double p2 = nn * (nn - 1.0);
  const double p3 = p2 * (nn - 2.0);
  const double p4 = p3 * (nn - 3.0);
  return pair_sum / p2 + quad_sum / p4 - 2.0 * triple_sum / p3;
}

/// d hsic_plugin / d r_i for every sample of the first argument. Uses
/// d k_ij / d r_i = k_ij * (-2 / (c h^2)) (r_i - r_j) for the Gaussian kernel.
/// The gradient with respect to the second sample set is not produced: the
/// noise side is never optimized.
inline SampleSet hsic_gradient(const SampleSet& r, const SampleSet& s, const HsicConfig& cfg) {
  if (cfg.estimator != HsicEstimator::plugin)
    throw DomainError("hsic_gradient: only the plug-in estimator is differentiable");
  detail::check_paired(r, s);
  const auto n = static_cast<Eigen::Index>(r.size());
  if (n < 2) throw DomainError("hsic_gradient: need at least 2 samples");

  const Matrix k = gram(r, cfg.kernel_r).values;
  Matrix lc = gram(s, cfg.kernel_s).values;
  detail::center_in_place(lc);

  // hsic = (1/(n-1)^2) sum_ij k_ij lc_ij, so with w = k .* lc:
  //   g_m = coef * sum_j w_mj (r_m - r_j),  coef = -4 / ((n-1)^2 c h^2).
  const Matrix w = k.cwiseProduct(lc);
  const Vector w_rows = w.rowwise().sum();
  const double denom = static_cast<double>(n - 1) * static_cast<double>(n - 1);
  const double coef = -4.0 / (denom * cfg.kernel_r.squared_scale());

  const Eigen::Index dim = r[0].size();
  Matrix x(dim, n);
  for (Eigen::Index i = 0; i < n; ++i) x.col(i) = r[i];
  Matrix g = coef * (x * (Matrix(w_rows.asDiagonal()) - w));

  SampleSet out(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) out[i] = g.col(i);
  return out;
}

}  // namespace riloss
