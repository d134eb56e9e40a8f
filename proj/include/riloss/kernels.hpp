#pragma once

#include "riloss/common.hpp"

#include <cmath>

namespace riloss {

enum class KernelFamily { gaussian };

/// half: k(u,v) = exp(-||u-v||^2 / (2 h^2))   (the standard Gaussian kernel)
/// unit: k(u,v) = exp(-||u-v||^2 / h^2)
enum class ScaleConvention { half, unit };

struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double bandwidth = 1.0;
  ScaleConvention scale = ScaleConvention::half;

  /// Divisor applied to the squared distance inside the exponential.
  double squared_scale() const {
    return (scale == ScaleConvention::half ? 2.0 : 1.0) * bandwidth * bandwidth;
  }

  void validate() const {
    if (!(bandwidth > 0.0)) throw DomainError("kernel bandwidth must be positive");
  }
};

/// Pairwise kernel evaluations over a sample set. Symmetric, unit diagonal,
/// entries in (0, 1] for the Gaussian family.
struct GramMatrix {
  Matrix values;
  Eigen::Index size() const { return values.rows(); }
};

/// Empirical Hoeffding decomposition of a symmetric kernel over a sample:
///   k(x_i, x_j) = grand_mean + f1[i] + f1[j] + f2(i, j)   for i != j,
/// with sum(f1) = 0, zero off-diagonal row sums of f2, and f2 diagonal 0.
struct HoeffdingComponents {
  Vector f1;
  Matrix f2;
  double grand_mean = 0.0;
};

inline double kernel_eval(const Vector& u, const Vector& v, const KernelSpec& spec) {
  spec.validate();
  if (u.size() != v.size())
    throw DimensionError("kernel_eval: dimension mismatch (" + std::to_string(u.size()) +
                         " vs " + std::to_string(v.size()) + ")");
  return std::exp(-(u - v).squaredNorm() / spec.squared_scale());
}

inline GramMatrix gram(const SampleSet& samples, const KernelSpec& spec) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(samples.size());
  if (n == 0) throw DimensionError("gram: empty sample set");
  const Eigen::Index dim = samples[0].size();
  for (Eigen::Index i = 1; i < n; ++i) {
    if (samples[i].size() != dim)
      throw DimensionError("gram: sample " + std::to_string(i) + " has dimension " +
                           std::to_string(samples[i].size()) + ", expected " +
                           std::to_string(dim));
  }
  const double scale = spec.squared_scale();
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 0.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double d2 = (samples[i] - samples[j]).squaredNorm();
      k(i, j) = d2;
      k(j, i) = d2;
    }
  }
  // one vectorized exponential over the whole distance matrix
  k = (-k / scale).array().exp();
  return GramMatrix{std::move(k)};
}

namespace detail {

/// K <- H K H with H = I - (1/n) 11^T, assuming K symmetric.
inline void center_in_place(Matrix& k) {
  const Vector row_mean = k.rowwise().mean();
  const double grand = row_mean.mean();
  k.colwise() -= row_mean;
  k.rowwise() -= row_mean.transpose();
  k.array() += grand;
}

}  // namespace detail

/// Double centering H K H. Row and column sums of the result vanish.
inline GramMatrix center(const GramMatrix& g) {
  if (g.size() < 1) throw DimensionError("center: empty gram matrix");
  Matrix c = g.values;
  detail::center_in_place(c);
  return GramMatrix{std::move(c)};
}

/// Empirical first/second order projections of the kernel over the sample.
/// f1 is the leave-one-out row mean minus the grand mean, rescaled by
/// (n-1)/(n-2) so the remainder f2 carries no per-row mass: off-diagonal row
/// sums of f2 are exactly zero and sum(f1) = 0.
inline HoeffdingComponents hoeffding_components(const SampleSet& samples,
                                                const KernelSpec& spec) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  if (n < 2) throw DomainError("hoeffding_components: need at least 2 samples");
  const GramMatrix g = gram(samples, spec);
  const double nn = static_cast<double>(n);

  const Vector off_sum = g.values.rowwise().sum() - g.values.diagonal();
  const double grand = off_sum.sum() / (nn * (nn - 1.0));

  Vector f1 = Vector::Zero(n);
  if (n > 2) f1 = (off_sum.array() - (nn - 1.0) * grand) / (nn - 2.0);

  Matrix f2(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    f2(i, i) = 0.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = g.values(i, j) - f1(i) - f1(j) - grand;
      f2(i, j) = v;
      f2(j, i) = v;
    }
  }
  return HoeffdingComponents{std::move(f1), std::move(f2), grand};
}

}  // namespace riloss
