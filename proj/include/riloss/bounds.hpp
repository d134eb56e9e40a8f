#pragma once

#include "riloss/hsic.hpp"

#include <cmath>

namespace riloss {

/// Monte-Carlo estimates of the first/second-order Rademacher quantities of
/// the empirical Hoeffding components, for a fixed kernel (the function class
/// is a singleton, so suprema over it collapse to plain evaluation).
struct RademacherEstimates {
  double r_sigma = 0.0;        // E (1/n) |sum_i s_i f1(x_i)|
  double w_sigma_sigma = 0.0;  // E |s' f2 s| / n^2
  double w_sigma_alpha = 0.0;  // E ||f2 s||_2 / n^2  (sup over ||alpha||_2 <= 1 attained)
  double w_sigma = 0.0;        // E max_k |(f2 s)_k| / n
  double f_sup = 0.0;          // max_{i != j} |f2(i, j)|
  double se_r_sigma = 0.0;
  double se_w_sigma_sigma = 0.0;
  double se_w_sigma_alpha = 0.0;
  double se_w_sigma = 0.0;
  long draws = 0;
  bool exhaustive = false;
};

/// Sign-vector averages over mc_draws Rademacher draws (or all 2^n vectors in
/// exhaustive mode, where the standard errors are exactly zero).
inline RademacherEstimates estimate_rademacher(const SampleSet& samples,
                                               const KernelSpec& spec, long mc_draws,
                                               std::uint64_t seed, bool exhaustive = false) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  if (n < 2) throw DomainError("estimate_rademacher: need at least 2 samples");
  if (exhaustive && n > 16)
    throw DomainError("estimate_rademacher: exhaustive enumeration limited to n <= 16");
  if (!exhaustive && mc_draws < 100)
    throw DomainError("estimate_rademacher: need at least 100 draws");

  const HoeffdingComponents hc = hoeffding_components(samples, spec);
  const double nn = static_cast<double>(n);

  double sums[4] = {0, 0, 0, 0};
  double sq[4] = {0, 0, 0, 0};
  Vector sigma(n);

  auto accumulate = [&]() {
    const Vector v = hc.f2 * sigma;
    const double t[4] = {std::abs(sigma.dot(hc.f1)) / nn,
                         std::abs(sigma.dot(v)) / (nn * nn), v.norm() / (nn * nn),
                         v.cwiseAbs().maxCoeff() / nn};
    for (int q = 0; q < 4; ++q) {
      sums[q] += t[q];
      sq[q] += t[q] * t[q];
    }
  };

  long draws = 0;
  if (exhaustive) {
    const long total = 1L << n;
    for (long mask = 0; mask < total; ++mask) {
      for (Eigen::Index i = 0; i < n; ++i) sigma(i) = (mask >> i) & 1 ? 1.0 : -1.0;
      accumulate();
    }
    draws = total;
  } else {
    Rng rng = make_rng(seed);
    std::bernoulli_distribution coin(0.5);
    for (long t = 0; t < mc_draws; ++t) {
      for (Eigen::Index i = 0; i < n; ++i) sigma(i) = coin(rng) ? 1.0 : -1.0;
      accumulate();
    }
    draws = mc_draws;
  }

  const double dn = static_cast<double>(draws);
  auto stderr_of = [&](int q) {
    if (exhaustive || draws < 2) return 0.0;
    const double mean = sums[q] / dn;
    const double var = std::max(0.0, sq[q] / dn - mean * mean) * dn / (dn - 1.0);
    return std::sqrt(var / dn);
  };

  RademacherEstimates est;
  est.r_sigma = sums[0] / dn;
  est.w_sigma_sigma = sums[1] / dn;
  est.w_sigma_alpha = sums[2] / dn;
  est.w_sigma = sums[3] / dn;
  est.se_r_sigma = stderr_of(0);
  est.se_w_sigma_sigma = stderr_of(1);
  est.se_w_sigma_alpha = stderr_of(2);
  est.se_w_sigma = stderr_of(3);
  est.draws = draws;
  est.exhaustive = exhaustive;

  double fmax = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) fmax = std::max(fmax, std::abs(hc.f2(i, j)));
  est.f_sup = fmax;
  return est;
}

/// The three deviation terms of the HSIC concentration bound plus their
/// combined total. c1 and c2 bound the kernel (0 and 1 for the Gaussian
/// family); c0 stands in for the universal constant of the moment bound and
/// is reported, never asserted against.
struct BoundReport {
  long n = 0;
  double delta = 0.0;
  double c1 = 0.0;
  double c2 = 1.0;
  double c0 = 1.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double gamma3 = 0.0;
  double total = 0.0;  // 3 * sum over both kernels of c2 * (gamma1+gamma2+gamma3)
};

/// Evaluates the closed forms
///   gamma1 = 10 (c2 - c1) / n * ln(2/delta)
///   gamma2 = 2 (c2 - c1) sqrt(2 ln(2/delta) (R_sigma / (2n) + ln(2/delta) / n^2))
///   gamma3 = 4 sqrt(ln(2/delta) (C0/(n-1) (W_ss + sqrt(2) W_sa
///                + 2 (W_s + F)/n + sqrt(8) F sqrt(n)/n^2 + 4 F / n^2)
///                + ln(2/delta)/n^2))
/// with the Monte-Carlo expectations substituted. The total assumes the same
/// kernel (hence the same estimates) on both spaces, so the two-kernel sum
/// collapses to twice the single-kernel contribution.
inline BoundReport gamma_terms(long n, double delta, const RademacherEstimates& est,
                               double c1, double c2, double c0) {
  if (n < 2) throw DomainError("gamma_terms: need n >= 2");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("gamma_terms: delta must lie in (0, 1)");
  if (!(c2 > c1)) throw DomainError("gamma_terms: requires c2 > c1");
  if (!(c0 > 0.0)) throw DomainError("gamma_terms: c0 must be positive");

  const double nn = static_cast<double>(n);
  const double range = c2 - c1;
  const double log_term = std::log(2.0 / delta);

  BoundReport rep;
  rep.n = n;
  rep.delta = delta;
  rep.c1 = c1;
  rep.c2 = c2;
  rep.c0 = c0;
  rep.gamma1 = 10.0 * range / nn * log_term;
  rep.gamma2 =
      2.0 * range * std::sqrt(2.0 * log_term * (est.r_sigma / (2.0 * nn) + log_term / (nn * nn)));
  const double inner = c0 / (nn - 1.0) *
                           (est.w_sigma_sigma + std::sqrt(2.0) * est.w_sigma_alpha +
                            2.0 * (est.w_sigma + est.f_sup) / nn +
                            std::sqrt(8.0) * est.f_sup * std::sqrt(nn) / (nn * nn) +
                            4.0 * est.f_sup / (nn * nn)) +
                       log_term / (nn * nn);
  rep.gamma3 = 4.0 * std::sqrt(log_term * inner);
  rep.total = 3.0 * 2.0 * c2 * (rep.gamma1 + rep.gamma2 + rep.gamma3);
  return rep;
}

enum class Dependence { independent, linear, quadratic };

struct ConvergencePoint {
  long n = 0;
  double mean_deviation = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double gamma3 = 0.0;
  double bound_total = 0.0;
};

struct ConvergenceStudy {
  double reference_value = 0.0;
  long reference_n = 0;
  std::vector<ConvergencePoint> points;
};

namespace detail {

inline std::pair<SampleSet, SampleSet> draw_dependent(Dependence dep, long n, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  SampleSet r(static_cast<std::size_t>(n)), s(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    const double x = gauss(rng);
    double y = 0.0;
    switch (dep) {
      case Dependence::independent:
        y = gauss(rng);
        break;
      case Dependence::linear:
        y = x + 0.5 * gauss(rng);
        break;
      case Dependence::quadratic:
        y = x * x - 1.0 + 0.3 * gauss(rng);
        break;
    }
    r[static_cast<std::size_t>(i)] = Vector::Constant(1, x);
    s[static_cast<std::size_t>(i)] = Vector::Constant(1, y);
  }
  return {std::move(r), std::move(s)};
}

}  // namespace detail

/// For each grid size, draws replicate samples from the chosen joint
/// distribution, measures |hsic_ustat - reference| (reference: plug-in at
/// reference_n, standing in for the population value), and evaluates the
/// bound terms alongside. The bound total sums the per-kernel contributions
/// of the residual-side and noise-side sample sets.
inline ConvergenceStudy convergence_study(Dependence dep, const std::vector<long>& n_grid,
                                          int replicates, long reference_n,
                                          std::uint64_t seed, double c0 = 1.0,
                                          double delta = 0.05) {
  if (n_grid.empty()) throw DomainError("convergence_study: empty grid");
  long max_n = 0;
  for (long n : n_grid) {
    if (n < 4) throw DomainError("convergence_study: grid sizes must be >= 4");
    max_n = std::max(max_n, n);
  }
  if (replicates < 20) throw DomainError("convergence_study: need at least 20 replicates");
  if (reference_n < 10 * max_n)
    throw DomainError("convergence_study: reference_n must be at least 10x the largest grid size");

  const HsicConfig hsic_cfg;
  const KernelSpec kernel;

  ConvergenceStudy study;
  study.reference_n = reference_n;
  {
    Rng rng = make_rng(seed, 0);
    const auto [r, s] = detail::draw_dependent(dep, reference_n, rng);
    study.reference_value = hsic_plugin(r, s, hsic_cfg).value;
  }

  const int gamma_reps = std::min(replicates, 5);
  for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
    const long n = n_grid[gi];
    ConvergencePoint point;
    point.n = n;

    double dev = 0.0;
    double g1 = 0.0, g2 = 0.0, g3 = 0.0, total = 0.0;
    for (int rep = 0; rep < replicates; ++rep) {
      Rng rng = make_rng(seed, 1 + gi * static_cast<std::size_t>(replicates) +
                                   static_cast<std::size_t>(rep));
      const auto [r, s] = detail::draw_dependent(dep, n, rng);
      dev += std::abs(hsic_ustat(r, s, hsic_cfg).value - study.reference_value);
      if (rep < gamma_reps) {
        const std::uint64_t sub = 100000 + gi * 1000 + static_cast<std::uint64_t>(rep);
        const auto est_r = estimate_rademacher(r, kernel, 200, seed + sub);
        const auto est_s = estimate_rademacher(s, kernel, 200, seed + sub + 500);
        const BoundReport rep_r = gamma_terms(n, delta, est_r, 0.0, 1.0, c0);
        const BoundReport rep_s = gamma_terms(n, delta, est_s, 0.0, 1.0, c0);
        g1 += rep_r.gamma1;
        g2 += rep_r.gamma2;
        g3 += rep_r.gamma3;
        total += 0.5 * (rep_r.total + rep_s.total);
      }
    }
    point.mean_deviation = dev / static_cast<double>(replicates);
    point.gamma1 = g1 / static_cast<double>(gamma_reps);
    point.gamma2 = g2 / static_cast<double>(gamma_reps);
    point.gamma3 = g3 / static_cast<double>(gamma_reps);
    point.bound_total = total / static_cast<double>(gamma_reps);
    study.points.push_back(point);
  }
  return study;
}

}  // namespace riloss
