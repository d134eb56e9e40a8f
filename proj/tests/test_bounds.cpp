#include "riloss/bounds.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace riloss;

namespace {

Vector scalar(double v) { return Vector::Constant(1, v); }

SampleSet random_samples(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  SampleSet out(static_cast<std::size_t>(n));
  for (auto& s : out) s = scalar(gauss(rng));
  return out;
}

}  // namespace

TEST_CASE("rademacher estimates", "[bounds]") {
  const KernelSpec kernel;

  SECTION("constant samples give all-zero estimates") {
    const SampleSet s(6, scalar(1.5));
    const auto est = estimate_rademacher(s, kernel, 200, 1);
    CHECK(est.r_sigma == 0.0);
    CHECK(est.w_sigma_sigma == 0.0);
    CHECK(est.w_sigma_alpha == 0.0);
    CHECK(est.w_sigma == 0.0);
    CHECK(est.f_sup == 0.0);
  }

  SECTION("exhaustive enumeration is the exact expectation") {
    Rng rng = make_rng(401);
    const SampleSet s = random_samples(3, rng);
    const auto exact = estimate_rademacher(s, kernel, 0, 0, true);
    CHECK(exact.draws == 8);
    CHECK(exact.se_r_sigma == 0.0);
    // a large monte-carlo run agrees within its own standard error band
    const auto mc = estimate_rademacher(s, kernel, 40000, 5);
    CHECK(std::abs(mc.r_sigma - exact.r_sigma) < 4.0 * std::max(mc.se_r_sigma, 1e-12));
    CHECK(std::abs(mc.w_sigma_sigma - exact.w_sigma_sigma) <
          4.0 * std::max(mc.se_w_sigma_sigma, 1e-12));
    CHECK(std::abs(mc.w_sigma_alpha - exact.w_sigma_alpha) <
          4.0 * std::max(mc.se_w_sigma_alpha, 1e-12));
    CHECK(std::abs(mc.w_sigma - exact.w_sigma) < 4.0 * std::max(mc.se_w_sigma, 1e-12));
  }

  SECTION("cauchy-schwarz relation between the quadratic and linear forms") {
    Rng rng = make_rng(409);
    for (int trial = 0; trial < 5; ++trial) {
      const SampleSet s = random_samples(8 + trial, rng);
      const auto est = estimate_rademacher(s, kernel, 500, 11 + static_cast<std::uint64_t>(trial));
      // |s' f2 s| <= ||s||_2 ||f2 s||_2 = sqrt(n) ||f2 s||_2 per draw
      CHECK(est.w_sigma_alpha >=
            est.w_sigma_sigma / std::sqrt(static_cast<double>(s.size())) - 1e-12);
    }
  }

  SECTION("validation") {
    Rng rng = make_rng(419);
    const SampleSet s = random_samples(5, rng);
    CHECK_THROWS_AS(estimate_rademacher({scalar(1.0)}, kernel, 200, 1), DomainError);
    CHECK_THROWS_AS(estimate_rademacher(s, kernel, 50, 1), DomainError);
    const SampleSet big = random_samples(20, rng);
    CHECK_THROWS_AS(estimate_rademacher(big, kernel, 0, 1, true), DomainError);
  }
}

TEST_CASE("gamma terms", "[bounds]") {
  RademacherEstimates est;
  est.r_sigma = 0.02;
  est.w_sigma_sigma = 0.004;
  est.w_sigma_alpha = 0.006;
  est.w_sigma = 0.05;
  est.f_sup = 0.4;

  SECTION("gamma1 closed form") {
    const BoundReport rep = gamma_terms(100, 0.05, est, 0.0, 1.0, 1.0);
    CHECK_THAT(rep.gamma1, Catch::Matchers::WithinAbs(0.1 * std::log(40.0), 1e-12));
    CHECK_THAT(rep.gamma1, Catch::Matchers::WithinAbs(0.3689, 1e-4));
  }

  SECTION("closed forms recomputed independently") {
    const long n = 64;
    const double delta = 0.1, c0 = 2.0;
    const BoundReport rep = gamma_terms(n, delta, est, 0.0, 1.0, c0);
    const double lg = std::log(2.0 / delta);
    const double g2 = 2.0 * std::sqrt(2.0 * lg * (est.r_sigma / 128.0 + lg / 4096.0));
    CHECK_THAT(rep.gamma2, Catch::Matchers::WithinAbs(g2, 1e-12));
    const double inner = c0 / 63.0 *
                             (est.w_sigma_sigma + std::sqrt(2.0) * est.w_sigma_alpha +
                              2.0 * (est.w_sigma + est.f_sup) / 64.0 +
                              std::sqrt(8.0) * est.f_sup * 8.0 / 4096.0 +
                              4.0 * est.f_sup / 4096.0) +
                         lg / 4096.0;
    CHECK_THAT(rep.gamma3, Catch::Matchers::WithinAbs(4.0 * std::sqrt(lg * inner), 1e-12));
    CHECK_THAT(rep.total,
               Catch::Matchers::WithinAbs(6.0 * (rep.gamma1 + rep.gamma2 + rep.gamma3), 1e-12));
  }

  SECTION("gamma1 and gamma2 shrink when n doubles") {
    const BoundReport small = gamma_terms(100, 0.05, est, 0.0, 1.0, 1.0);
    const BoundReport large = gamma_terms(200, 0.05, est, 0.0, 1.0, 1.0);
    CHECK(large.gamma1 < small.gamma1);
    CHECK(large.gamma2 < small.gamma2);
  }

  SECTION("gamma terms nonnegative and nondecreasing in ln(2/delta)") {
    const BoundReport loose = gamma_terms(100, 0.2, est, 0.0, 1.0, 1.0);
    const BoundReport tight = gamma_terms(100, 0.01, est, 0.0, 1.0, 1.0);
    for (const BoundReport* rep : {&loose, &tight}) {
      CHECK(rep->gamma1 >= 0.0);
      CHECK(rep->gamma2 >= 0.0);
      CHECK(rep->gamma3 >= 0.0);
      CHECK(rep->total >= 0.0);
    }
    CHECK(tight.gamma1 > loose.gamma1);
    CHECK(tight.gamma2 > loose.gamma2);
    CHECK(tight.gamma3 > loose.gamma3);
  }

  SECTION("deterministic given the same inputs") {
    const BoundReport a = gamma_terms(100, 0.05, est, 0.0, 1.0, 1.0);
    const BoundReport b = gamma_terms(100, 0.05, est, 0.0, 1.0, 1.0);
    CHECK(a.gamma1 == b.gamma1);
    CHECK(a.gamma2 == b.gamma2);
    CHECK(a.gamma3 == b.gamma3);
    CHECK(a.total == b.total);
  }

  SECTION("validation") {
    CHECK_THROWS_AS(gamma_terms(100, 0.0, est, 0.0, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(gamma_terms(100, 1.0, est, 0.0, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(gamma_terms(100, 0.05, est, 1.0, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(gamma_terms(1, 0.05, est, 0.0, 1.0, 1.0), DomainError);
  }
}

TEST_CASE("convergence study", "[bounds]") {
  SECTION("independent case: deviation shrinks from n = 50 to n = 400") {
    const auto study = convergence_study(Dependence::independent, {50, 400}, 50, 4000, 3);
    REQUIRE(study.points.size() == 2);
    CHECK(study.points[1].mean_deviation < study.points[0].mean_deviation);
  }

  SECTION("linear dependence: deviations decay roughly like 1/sqrt(n)") {
    const auto study = convergence_study(Dependence::linear, {50, 100, 200, 400}, 30, 4000, 7);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : study.points) {
      const double x = std::log(static_cast<double>(p.n));
      const double y = std::log(p.mean_deviation);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double m = static_cast<double>(study.points.size());
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    CHECK(slope > -1.1);
    CHECK(slope < -0.35);
  }

  SECTION("dependent references exceed the independent one") {
    const auto ind = convergence_study(Dependence::independent, {50}, 20, 1000, 11);
    const auto lin = convergence_study(Dependence::linear, {50}, 20, 1000, 11);
    CHECK(lin.reference_value > ind.reference_value);
  }

  SECTION("bound totals are finite and positive") {
    const auto study = convergence_study(Dependence::quadratic, {50, 100}, 20, 1000, 13);
    for (const auto& p : study.points) {
      CHECK(std::isfinite(p.bound_total));
      CHECK(p.bound_total > 0.0);
      CHECK(p.gamma1 > 0.0);
      CHECK(p.gamma2 > 0.0);
      CHECK(p.gamma3 > 0.0);
    }
  }

  SECTION("validation") {
    CHECK_THROWS_AS(convergence_study(Dependence::linear, {}, 50, 4000, 1), DomainError);
    CHECK_THROWS_AS(convergence_study(Dependence::linear, {3}, 50, 4000, 1), DomainError);
    CHECK_THROWS_AS(convergence_study(Dependence::linear, {50}, 10, 4000, 1), DomainError);
    CHECK_THROWS_AS(convergence_study(Dependence::linear, {50}, 50, 400, 1), DomainError);
  }
}
