#include "riloss/loss.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace riloss;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = gauss(rng);
  return m;
}

Batch random_batch(std::size_t b, Eigen::Index h, Eigen::Index d, Rng& rng) {
  Batch out(b);
  for (auto& m : out) m = random_matrix(h, d, rng);
  return out;
}

/// Central finite difference of a scalar loss with respect to one prediction
/// entry.
template <typename LossFn>
double fd_entry(LossFn&& loss, Batch& yhat, std::size_t b, Eigen::Index t, Eigen::Index c,
                double step = 1e-5) {
  const double saved = yhat[b](t, c);
  yhat[b](t, c) = saved + step;
  const double up = loss(yhat);
  yhat[b](t, c) = saved - step;
  const double down = loss(yhat);
  yhat[b](t, c) = saved;
  return (up - down) / (2.0 * step);
}

template <typename LossFn>
void check_gradient(LossFn&& loss, const LossReport& rep, Batch yhat, double rtol) {
  for (std::size_t b = 0; b < yhat.size(); ++b)
    for (Eigen::Index t = 0; t < yhat[b].rows(); ++t)
      for (Eigen::Index c = 0; c < yhat[b].cols(); ++c) {
        const double fd = fd_entry(loss, yhat, b, t, c);
        const double analytic = rep.grad[b](t, c);
        const double scale = std::max({std::abs(fd), std::abs(analytic), 1e-8});
        INFO("entry (" << b << "," << t << "," << c << "): fd=" << fd
                       << " analytic=" << analytic);
        CHECK(std::abs(fd - analytic) / scale < rtol);
      }
}

}  // namespace

TEST_CASE("mse", "[loss]") {
  SECTION("zero for equal inputs") {
    Matrix y(3, 2);
    y.setRandom();
    CHECK(mse(y, y) == 0.0);
  }

  SECTION("hand case H = 2, d = 1") {
    Matrix y(2, 1), yhat(2, 1);
    y << 1.0, 2.0;
    yhat << 0.0, 0.0;
    CHECK_THAT(mse(y, yhat), Catch::Matchers::WithinAbs(2.5, 1e-15));
  }

  SECTION("single window matches a scalar triple loop") {
    Rng rng = make_rng(61);
    const Matrix y = random_matrix(5, 3, rng);
    const Matrix yhat = random_matrix(5, 3, rng);
    double acc = 0.0;
    for (int t = 0; t < 5; ++t)
      for (int c = 0; c < 3; ++c) acc += (y(t, c) - yhat(t, c)) * (y(t, c) - yhat(t, c));
    CHECK_THAT(mse(y, yhat), Catch::Matchers::WithinAbs(acc / 5.0, 1e-12));
  }

  SECTION("batched form is the element mean") {
    Rng rng = make_rng(67);
    const Batch y = random_batch(3, 4, 2, rng);
    const Batch yhat = random_batch(3, 4, 2, rng);
    double acc = 0.0;
    for (int b = 0; b < 3; ++b)
      for (int t = 0; t < 4; ++t)
        for (int c = 0; c < 2; ++c) {
          const double diff = y[static_cast<std::size_t>(b)](t, c) -
                              yhat[static_cast<std::size_t>(b)](t, c);
          acc += diff * diff;
        }
    CHECK_THAT(mse(y, yhat), Catch::Matchers::WithinAbs(acc / 24.0, 1e-12));
  }

  SECTION("shape mismatch is rejected") {
    Matrix a(2, 2), b(3, 2);
    a.setZero();
    b.setZero();
    CHECK_THROWS_AS(mse(a, b), DimensionError);
  }
}

TEST_CASE("mae", "[loss]") {
  SECTION("zero for equal inputs") {
    Matrix y(4, 1);
    y.setRandom();
    CHECK(mae(y, y) == 0.0);
  }

  SECTION("hand case with signed residuals") {
    Matrix y(2, 1), yhat(2, 1);
    y << 1.0, -2.0;
    yhat << 0.0, 0.0;
    CHECK_THAT(mae(y, yhat), Catch::Matchers::WithinAbs(1.5, 1e-15));
  }

  SECTION("matches a loop oracle") {
    Rng rng = make_rng(71);
    const Matrix y = random_matrix(6, 2, rng);
    const Matrix yhat = random_matrix(6, 2, rng);
    double acc = 0.0;
    for (int t = 0; t < 6; ++t)
      for (int c = 0; c < 2; ++c) acc += std::abs(y(t, c) - yhat(t, c));
    CHECK_THAT(mae(y, yhat), Catch::Matchers::WithinAbs(acc / 6.0, 1e-12));
  }
}

TEST_CASE("pearson", "[loss]") {
  Rng rng = make_rng(73);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector r(7);
  for (int i = 0; i < 7; ++i) r(i) = gauss(rng);

  SECTION("perfectly correlated and anti-correlated") {
    CHECK_THAT(pearson(r, r), Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK_THAT(pearson(r, -r), Catch::Matchers::WithinAbs(-1.0, 1e-12));
  }

  SECTION("fixed 5-point instance matches the direct formula") {
    Vector a(5), b(5);
    a << 1.0, 2.0, 3.0, 4.0, 5.0;
    b << 2.0, 1.0, 4.0, 3.0, 6.0;
    const double am = 3.0, bm = 3.2;
    double num = 0.0, da = 0.0, db = 0.0;
    for (int i = 0; i < 5; ++i) {
      num += (a(i) - am) * (b(i) - bm);
      da += (a(i) - am) * (a(i) - am);
      db += (b(i) - bm) * (b(i) - bm);
    }
    CHECK_THAT(pearson(a, b), Catch::Matchers::WithinAbs(num / std::sqrt(da * db), 1e-12));
  }

  SECTION("constant input is rejected") {
    const Vector c = Vector::Constant(7, 2.0);
    CHECK_THROWS_AS(pearson(r, c), DomainError);
  }
}

TEST_CASE("noise sampling", "[loss]") {
  SECTION("support and determinism") {
    RiLossConfig cfg;
    cfg.seed = 91;
    const Batch a = sample_noise(2, 5, 3, cfg);
    const Batch b = sample_noise(2, 5, 3, cfg);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK((a[i].array() >= -1.0).all());
      CHECK((a[i].array() < 1.0).all());
      CHECK((a[i] - b[i]).cwiseAbs().maxCoeff() == 0.0);
    }
  }

  SECTION("sample mean is near zero") {
    Rng rng = make_rng(97);
    const Batch big = sample_noise(1, 1000, 1000, rng);
    CHECK(std::abs(big[0].mean()) < 0.005);  // ~8.7 sigma band for 1e6 draws
  }
}

TEST_CASE("ri loss", "[loss]") {
  RiLossConfig cfg;
  Rng rng = make_rng(101);

  SECTION("lambda = 0 reduces to the mse") {
    cfg.lambda = 0.0;
    const Batch y = random_batch(2, 4, 1, rng);
    const Batch yhat = random_batch(2, 4, 1, rng);
    const Batch eps = random_batch(2, 4, 1, rng);
    const LossReport rep = ri_loss(y, yhat, eps, cfg);
    CHECK(rep.total == mse(y, yhat));
    CHECK(rep.hsic_term == 0.0);
  }

  SECTION("zero residual gives hsic 0 and total lambda") {
    const Batch y = random_batch(2, 4, 1, rng);
    const Batch eps = random_batch(2, 4, 1, rng);
    const LossReport rep = ri_loss(y, y, eps, cfg);
    CHECK(rep.hsic_value == 0.0);
    CHECK_THAT(rep.total, Catch::Matchers::WithinAbs(cfg.lambda, 1e-15));
  }

  SECTION("report identity and term range") {
    const Batch y = random_batch(2, 6, 2, rng);
    const Batch yhat = random_batch(2, 6, 2, rng);
    Rng noise_rng = make_rng(102);
    const Batch eps = sample_noise(2, 6, 2, noise_rng);
    const LossReport rep = ri_loss(y, yhat, eps, cfg);
    CHECK_THAT(rep.total,
               Catch::Matchers::WithinAbs(rep.mse_component + rep.hsic_term, 1e-12));
    CHECK(rep.hsic_term > 0.0);
    CHECK(rep.hsic_term <= cfg.lambda);
  }

  SECTION("gradient matches finite differences (time points axis)") {
    const Batch y = random_batch(2, 8, 1, rng);
    Batch yhat = random_batch(2, 8, 1, rng);
    Rng noise_rng = make_rng(104);
    const Batch eps = sample_noise(2, 8, 1, noise_rng);
    const LossReport rep = ri_loss(y, yhat, eps, cfg);
    check_gradient([&](const Batch& yh) { return ri_loss(y, yh, eps, cfg).total; }, rep,
                   yhat, 1e-5);
  }

  SECTION("gradient matches finite differences (whole window axis)") {
    cfg.sample_axis = SampleAxis::whole_window;
    const Batch y = random_batch(5, 4, 2, rng);
    Batch yhat = random_batch(5, 4, 2, rng);
    Rng noise_rng = make_rng(105);
    const Batch eps = sample_noise(5, 4, 2, noise_rng);
    const LossReport rep = ri_loss(y, yhat, eps, cfg);
    check_gradient([&](const Batch& yh) { return ri_loss(y, yh, eps, cfg).total; }, rep,
                   yhat, 1e-5);
  }

  SECTION("shape mismatches are rejected") {
    const Batch y = random_batch(2, 4, 1, rng);
    const Batch bad = random_batch(2, 5, 1, rng);
    CHECK_THROWS_AS(ri_loss(y, bad, y, cfg), DimensionError);
    CHECK_THROWS_AS(ri_loss(y, y, bad, cfg), DimensionError);
  }
}

TEST_CASE("pearson + mse ablation loss", "[loss]") {
  RiLossConfig cfg;
  Rng rng = make_rng(103);

  SECTION("lambda = 0 reduces to the mse") {
    cfg.lambda = 0.0;
    const Batch y = random_batch(1, 6, 1, rng);
    const Batch yhat = random_batch(1, 6, 1, rng);
    Rng noise_rng = make_rng(106);
    const Batch eps = sample_noise(1, 6, 1, noise_rng);
    CHECK(pearson_mse_loss(y, yhat, eps, cfg).total == mse(y, yhat));
  }

  SECTION("residual equal to the noise gives correlation 1") {
    Rng noise_rng = make_rng(107);
    const Batch eps = sample_noise(2, 5, 1, noise_rng);
    Batch y = random_batch(2, 5, 1, rng);
    Batch yhat(2);
    for (int b = 0; b < 2; ++b)
      yhat[static_cast<std::size_t>(b)] =
          y[static_cast<std::size_t>(b)] - eps[static_cast<std::size_t>(b)];
    const LossReport rep = pearson_mse_loss(y, yhat, eps, cfg);
    CHECK_THAT(rep.hsic_value, Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK_THAT(rep.hsic_term,
               Catch::Matchers::WithinAbs(cfg.lambda * std::exp(-cfg.tau), 1e-10));
    CHECK_FALSE(rep.degenerate_correlation);
  }

  SECTION("constant residual falls back to correlation 0 with a flag") {
    const Batch y = random_batch(1, 5, 1, rng);
    Rng noise_rng = make_rng(108);
    const Batch eps = sample_noise(1, 5, 1, noise_rng);
    const LossReport rep = pearson_mse_loss(y, y, eps, cfg);
    CHECK(rep.degenerate_correlation);
    CHECK(rep.hsic_value == 0.0);
    CHECK_THAT(rep.hsic_term, Catch::Matchers::WithinAbs(cfg.lambda, 1e-15));
  }

  SECTION("gradient matches finite differences") {
    const Batch y = random_batch(2, 6, 2, rng);
    Batch yhat = random_batch(2, 6, 2, rng);
    Rng noise_rng = make_rng(109);
    const Batch eps = sample_noise(2, 6, 2, noise_rng);
    const LossReport rep = pearson_mse_loss(y, yhat, eps, cfg);
    check_gradient([&](const Batch& yh) { return pearson_mse_loss(y, yh, eps, cfg).total; },
                   rep, yhat, 1e-5);
  }
}

TEST_CASE("loss gradient suite across shapes", "[loss]") {
  const int shapes[3][3] = {{1, 4, 1}, {2, 8, 3}, {4, 16, 2}};
  for (const auto& shape : shapes) {
    for (std::uint64_t seed = 1; seed <= 2; ++seed) {
      Rng rng = make_rng(1000 + seed * 17 + static_cast<std::uint64_t>(shape[1]));
      RiLossConfig cfg;
      const auto b = static_cast<std::size_t>(shape[0]);
      const Batch y = random_batch(b, shape[1], shape[2], rng);
      Batch yhat = random_batch(b, shape[1], shape[2], rng);
      const Batch eps = sample_noise(b, shape[1], shape[2], rng);

      const LossReport ri = ri_loss(y, yhat, eps, cfg);
      check_gradient([&](const Batch& yh) { return ri_loss(y, yh, eps, cfg).total; }, ri,
                     yhat, 1e-5);

      const LossReport pc = pearson_mse_loss(y, yhat, eps, cfg);
      check_gradient(
          [&](const Batch& yh) { return pearson_mse_loss(y, yh, eps, cfg).total; }, pc,
          yhat, 1e-5);
    }
  }
}

TEST_CASE("observed/true mse decomposition identity", "[loss]") {
  Rng rng = make_rng(107);
  for (int trial = 0; trial < 50; ++trial) {
    const auto h = 1 + static_cast<Eigen::Index>(trial % 6);
    const auto d = 1 + static_cast<Eigen::Index>(trial % 3);
    const Matrix y = random_matrix(h, d, rng);
    const Matrix yhat = random_matrix(h, d, rng);
    const Matrix eps = random_matrix(h, d, rng);
    const double hd = static_cast<double>(h);
    const double lhs = ((y - eps) - yhat).squaredNorm() / hd;
    const double cross = ((y - yhat).array() * eps.array()).sum();
    const double rhs = mse(y, yhat) - 2.0 / hd * cross + eps.squaredNorm() / hd;
    CHECK_THAT(lhs, Catch::Matchers::WithinAbs(rhs, 1e-10));
  }
}

TEST_CASE("exponential dependence term is monotone", "[loss]") {
  const double lambda = 10.0, tau = 1.0;
  double prev = lambda * std::exp(-tau * 0.0);
  for (double h : {0.1, 0.5, 1.0, 2.0, 5.0}) {
    const double term = lambda * std::exp(-tau * h);
    CHECK(term < prev);
    prev = term;
  }
}

TEST_CASE("tradeoff curve", "[loss]") {
  SECTION("endpoints: overfitted prediction vs full noise power") {
    const auto curve = tradeoff_curve({50.0}, {0.0, 1.0}, 400, 5);
    REQUIRE(curve.size() == 2);
    CHECK(curve[0].mse == 0.0);  // prediction reproduces the observations
    // all noise left in the residual: mse is the empirical noise power ~ 1
    CHECK(std::abs(curve[1].mse - 1.0) < 0.2);
  }

  SECTION("mse grows with rho and ri dips in the interior") {
    std::vector<double> rhos;
    for (int i = 0; i <= 20; ++i) rhos.push_back(i / 20.0);
    const auto curve = tradeoff_curve({50.0}, rhos, 400, 5);
    std::size_t argmin = 0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
      CHECK(curve[i].mse >= curve[i - 1].mse - 0.05);  // statistically nondecreasing
      if (curve[i].ri < curve[argmin].ri) argmin = i;
    }
    CHECK(curve[argmin].rho > 0.0);
    CHECK(curve[argmin].rho < 1.0);
  }

  SECTION("validation") {
    CHECK_THROWS_AS(tradeoff_curve({50.0}, {0.5}, 50, 1), DomainError);
    CHECK_THROWS_AS(tradeoff_curve({50.0}, {1.5}, 400, 1), DomainError);
    CHECK_THROWS_AS(tradeoff_curve({}, {0.5}, 400, 1), DomainError);
  }
}

TEST_CASE("cross-term monte carlo", "[loss]") {
  SECTION("identity projection gives exact zero") {
    const auto res = crossterm_mc(Matrix::Identity(6, 6), 1.0, 10000, 3);
    CHECK(res.analytic == 0.0);
    CHECK(res.empirical == 0.0);
    CHECK(res.stderror == 0.0);
  }

  SECTION("zero projection recovers sigma^2") {
    const auto res = crossterm_mc(Matrix::Zero(4, 4), 0.5, 20000, 5);
    CHECK_THAT(res.analytic, Catch::Matchers::WithinAbs(0.25, 1e-15));
    CHECK(std::abs(res.empirical - res.analytic) < 3.0 * res.stderror);
  }

  SECTION("random projection matches the trace formula within 3 standard errors") {
    Rng rng = make_rng(113);
    const Matrix p = random_matrix(8, 8, rng) / std::sqrt(8.0);
    const auto res = crossterm_mc(p, 1.0, 100000, 7);
    const double expected = (Matrix::Identity(8, 8) - p).trace() / 8.0;
    CHECK_THAT(res.analytic, Catch::Matchers::WithinAbs(expected, 1e-12));
    CHECK(std::abs(res.empirical - res.analytic) < 3.0 * res.stderror);
  }

  SECTION("validation") {
    CHECK_THROWS_AS(crossterm_mc(Matrix::Zero(2, 3), 1.0, 10000, 1), DimensionError);
    CHECK_THROWS_AS(crossterm_mc(Matrix::Zero(2, 2), 0.0, 10000, 1), DomainError);
    CHECK_THROWS_AS(crossterm_mc(Matrix::Zero(2, 2), 1.0, 100, 1), DomainError);
  }
}
