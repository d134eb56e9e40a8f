#pragma once

#include "riloss/data.hpp"
#include "riloss/loss.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>

namespace riloss {

struct DecompositionSpec {
  int kernel_size = 25;  // moving-average length; must be odd

  void validate() const {
    if (kernel_size < 1 || kernel_size % 2 == 0)
      throw DomainError("decompose: kernel_size must be a positive odd integer");
  }
};

/// Centered moving average with edge-replication padding; the seasonal part is
/// the remainder, so trend + seasonal reconstructs the input exactly.
inline std::pair<Matrix, Matrix> decompose(const Matrix& x, const DecompositionSpec& spec) {
  spec.validate();
  const Eigen::Index w = x.rows();
  if (w < 1) throw DimensionError("decompose: empty input");
  const int pad = (spec.kernel_size - 1) / 2;
  Matrix trend(w, x.cols());
  for (Eigen::Index t = 0; t < w; ++t) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(x.cols());
    for (int o = -pad; o <= pad; ++o) {
      const Eigen::Index idx = std::clamp<Eigen::Index>(t + o, 0, w - 1);
      acc += x.row(idx);
    }
    trend.row(t) = acc / static_cast<double>(spec.kernel_size);
  }
  return {trend, x - trend};
}

/// Channel-independent linear forecaster with trend/seasonal decomposition:
/// one H x w map per branch, shared across channels.
struct LinearForecaster {
  int w = 0;
  int horizon = 0;
  int channels = 0;
  Matrix weights_trend;     // H x w
  Matrix weights_seasonal;  // H x w
  Vector bias_trend;        // H
  Vector bias_seasonal;     // H
  DecompositionSpec decomposition;
  bool channel_independent = true;

  static LinearForecaster zeros(int w, int horizon, int channels, DecompositionSpec spec) {
    spec.validate();
    if (w < 1 || horizon < 1 || channels < 1)
      throw DomainError("forecaster: w, horizon, channels must be positive");
    LinearForecaster m;
    m.w = w;
    m.horizon = horizon;
    m.channels = channels;
    m.weights_trend = Matrix::Zero(horizon, w);
    m.weights_seasonal = Matrix::Zero(horizon, w);
    m.bias_trend = Vector::Zero(horizon);
    m.bias_seasonal = Vector::Zero(horizon);
    m.decomposition = spec;
    return m;
  }
};

inline Matrix forward_parts(const LinearForecaster& m, const Matrix& trend,
                            const Matrix& seasonal) {
  Matrix out = m.weights_trend * trend + m.weights_seasonal * seasonal;
  out.colwise() += m.bias_trend + m.bias_seasonal;
  return out;
}

inline Matrix forward(const LinearForecaster& m, const Matrix& x) {
  if (x.rows() != m.w || x.cols() != m.channels)
    throw DimensionError("forward: expected a " + std::to_string(m.w) + " x " +
                         std::to_string(m.channels) + " input, got " +
                         std::to_string(x.rows()) + " x " + std::to_string(x.cols()));
  const auto [trend, seasonal] = decompose(x, m.decomposition);
  return forward_parts(m, trend, seasonal);
}

struct ParamGrads {
  Matrix weights_trend;
  Matrix weights_seasonal;
  Vector bias_trend;
  Vector bias_seasonal;

  static ParamGrads zeros_like(const LinearForecaster& m) {
    ParamGrads g;
    g.weights_trend = Matrix::Zero(m.horizon, m.w);
    g.weights_seasonal = Matrix::Zero(m.horizon, m.w);
    g.bias_trend = Vector::Zero(m.horizon);
    g.bias_seasonal = Vector::Zero(m.horizon);
    return g;
  }
};

/// Accumulates exact parameter gradients for one window given the upstream
/// d loss / d yhat. The model is linear in its parameters, so these are outer
/// products of grad_out with the decomposed inputs.
inline void accumulate_backward(ParamGrads& g, const Matrix& trend, const Matrix& seasonal,
                                const Matrix& grad_out) {
  g.weights_trend.noalias() += grad_out * trend.transpose();
  g.weights_seasonal.noalias() += grad_out * seasonal.transpose();
  const Vector row_sums = grad_out.rowwise().sum();
  g.bias_trend += row_sums;
  g.bias_seasonal += row_sums;
}

inline ParamGrads backward(const LinearForecaster& m, const Matrix& x, const Matrix& grad_out) {
  if (grad_out.rows() != m.horizon || grad_out.cols() != m.channels)
    throw DimensionError("backward: grad_out shape mismatch");
  const auto [trend, seasonal] = decompose(x, m.decomposition);
  ParamGrads g = ParamGrads::zeros_like(m);
  accumulate_backward(g, trend, seasonal, grad_out);
  return g;
}

struct TrainConfig {
  double learning_rate = 0.005;
  int epochs = 10;
  int batch_size = 32;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  LossKind loss_kind = LossKind::mse;

  void validate() const {
    if (!(learning_rate > 0.0)) throw DomainError("train: learning_rate must be positive");
    if (epochs < 0) throw DomainError("train: epochs must be non-negative");
    if (batch_size < 1) throw DomainError("train: batch_size must be positive");
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0 && adam_beta2 > 0.0 && adam_beta2 < 1.0))
      throw DomainError("train: adam betas must lie in (0, 1)");
  }
};

struct AdamState {
  ParamGrads m;  // first moments
  ParamGrads v;  // second moments

  static AdamState zeros_like(const LinearForecaster& model) {
    return AdamState{ParamGrads::zeros_like(model), ParamGrads::zeros_like(model)};
  }
};

/// One bias-corrected Adam update. `step` counts from 1.
inline void adam_step(LinearForecaster& model, const ParamGrads& grads, AdamState& state,
                      const TrainConfig& cfg, long step) {
  cfg.validate();
  if (step < 1) throw DomainError("adam_step: step counts from 1");
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * grad;
    v = cfg.adam_beta2 * v.array().matrix() +
        (1.0 - cfg.adam_beta2) * grad.array().square().matrix();
    param.array() -=
        cfg.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.adam_eps);
  };
  update(model.weights_trend, grads.weights_trend, state.m.weights_trend,
         state.v.weights_trend);
  update(model.weights_seasonal, grads.weights_seasonal, state.m.weights_seasonal,
         state.v.weights_seasonal);
  update(model.bias_trend, grads.bias_trend, state.m.bias_trend, state.v.bias_trend);
  update(model.bias_seasonal, grads.bias_seasonal, state.m.bias_seasonal,
         state.v.bias_seasonal);
}

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
  double mean_hsic = 0.0;  // mean per-batch dependence value; 0 for mse/mae
};

struct TrainResult {
  LinearForecaster model;  // best-validation snapshot
  std::vector<EpochStats> history;
  double ms_per_iter = 0.0;
  long iterations = 0;
};

namespace detail {

struct DecomposedWindow {
  Matrix trend;
  Matrix seasonal;
};

inline LossReport batch_loss(LossKind kind, const Batch& ys, const Batch& yhats,
                             const RiLossConfig& loss_cfg, Rng& noise_rng) {
  switch (kind) {
    case LossKind::mse:
      return mse_loss(ys, yhats);
    case LossKind::mae:
      return mae_loss(ys, yhats);
    case LossKind::ri: {
      const Batch eps = sample_noise(ys.size(), ys[0].rows(), ys[0].cols(), noise_rng);
      return ri_loss(ys, yhats, eps, loss_cfg);
    }
    case LossKind::pearson_mse: {
      const Batch eps = sample_noise(ys.size(), ys[0].rows(), ys[0].cols(), noise_rng);
      return pearson_mse_loss(ys, yhats, eps, loss_cfg);
    }
  }
  throw DomainError("batch_loss: unknown loss kind");
}

inline double dataset_loss(const LinearForecaster& model, const WindowDataset& ds,
                           LossKind kind, const RiLossConfig& loss_cfg, int batch_size,
                           Rng& noise_rng) {
  double acc = 0.0;
  std::size_t counted = 0;
  for (std::size_t start = 0; start < ds.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t stop = std::min(ds.size(), start + static_cast<std::size_t>(batch_size));
    Batch ys, yhats;
    ys.reserve(stop - start);
    yhats.reserve(stop - start);
    for (std::size_t i = start; i < stop; ++i) {
      ys.push_back(ds.pairs[i].second);
      yhats.push_back(forward(model, ds.pairs[i].first));
    }
    const LossReport rep = batch_loss(kind, ys, yhats, loss_cfg, noise_rng);
    acc += rep.total * static_cast<double>(stop - start);
    counted += stop - start;
  }
  return counted > 0 ? acc / static_cast<double>(counted) : 0.0;
}

}  // namespace detail

/// Runs the training loop: shuffled mini-batches per epoch, forward pass,
/// fresh noise per batch for the dependence losses, analytic gradients, Adam
/// updates, and best-validation-snapshot selection. Fully deterministic per
/// seed. ms_per_iter times the optimizer loop only (no data loading or
/// validation passes).
inline TrainResult train(const LinearForecaster& init, const WindowDataset& train_set,
                         const WindowDataset& val_set, const RiLossConfig& loss_cfg,
                         const TrainConfig& cfg) {
  cfg.validate();
  loss_cfg.validate();
  if (train_set.size() == 0) throw DataError("train: empty training dataset");
  if (val_set.size() == 0) throw DataError("train: empty validation dataset");

  LinearForecaster model = init;
  AdamState adam = AdamState::zeros_like(model);
  Rng shuffle_rng = make_rng(cfg.seed, 1);
  Rng noise_rng = make_rng(cfg.seed, 2);

  // Input decompositions are fixed by the data; compute them once.
  std::vector<detail::DecomposedWindow> parts(train_set.size());
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    auto [trend, seasonal] = decompose(train_set.pairs[i].first, model.decomposition);
    parts[i] = {std::move(trend), std::move(seasonal)};
  }

  TrainResult result;
  result.model = model;
  double best_val = std::numeric_limits<double>::infinity();
  long step = 0;
  std::chrono::nanoseconds loop_time{0};

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const bool needs_noise =
      cfg.loss_kind == LossKind::ri || cfg.loss_kind == LossKind::pearson_mse;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_in_place(order, shuffle_rng);
    double epoch_loss = 0.0;
    double epoch_hsic = 0.0;
    long batches = 0;

    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const auto t0 = std::chrono::steady_clock::now();

      Batch ys, yhats;
      ys.reserve(stop - start);
      yhats.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        const auto idx = order[i];
        ys.push_back(train_set.pairs[idx].second);
        yhats.push_back(forward_parts(model, parts[idx].trend, parts[idx].seasonal));
      }

      const LossReport rep = detail::batch_loss(cfg.loss_kind, ys, yhats, loss_cfg, noise_rng);

      ParamGrads grads = ParamGrads::zeros_like(model);
      for (std::size_t i = start; i < stop; ++i) {
        const auto idx = order[i];
        accumulate_backward(grads, parts[idx].trend, parts[idx].seasonal,
                            rep.grad[i - start]);
      }
      adam_step(model, grads, adam, cfg, ++step);

      loop_time += std::chrono::steady_clock::now() - t0;
      epoch_loss += rep.total;
      epoch_hsic += rep.hsic_value;
      ++batches;
    }

    EpochStats stats;
    stats.train_loss = batches > 0 ? epoch_loss / static_cast<double>(batches) : 0.0;
    stats.mean_hsic = batches > 0 && needs_noise ? epoch_hsic / static_cast<double>(batches) : 0.0;
    // one fixed validation noise draw per run, so epochs are compared on
    // identical terms and snapshot selection is not driven by draw noise
    Rng val_rng = make_rng(cfg.seed, 1000);
    stats.val_loss = detail::dataset_loss(model, val_set, cfg.loss_kind, loss_cfg,
                                          cfg.batch_size, val_rng);
    result.history.push_back(stats);

    if (stats.val_loss < best_val) {
      best_val = stats.val_loss;
      result.model = model;
    }
  }

  result.iterations = step;
  result.ms_per_iter =
      step > 0 ? std::chrono::duration<double, std::milli>(loop_time).count() /
                     static_cast<double>(step)
               : 0.0;
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints: a versioned text container. Line 1 is the format tag, line 2
// the shape header "w H d kernel_size channel_independent", then one line per
// parameter tensor ("<name> <count> <values...>", row-major, %.17g so values
// round-trip exactly).
// ---------------------------------------------------------------------------

namespace detail {

inline void write_tensor(std::ostream& out, const char* name, const double* data,
                         Eigen::Index count) {
  out << name << ' ' << count;
  char buf[32];
  for (Eigen::Index i = 0; i < count; ++i) {
    std::snprintf(buf, sizeof(buf), " %.17g", data[i]);
    out << buf;
  }
  out << '\n';
}

inline void read_tensor(std::istream& in, const std::string& expected_name, double* data,
                        Eigen::Index count, const std::string& path) {
  std::string name;
  Eigen::Index stored = 0;
  if (!(in >> name >> stored) || name != expected_name || stored != count)
    throw DataError(path + ": malformed checkpoint tensor '" + expected_name + "'");
  for (Eigen::Index i = 0; i < count; ++i)
    if (!(in >> data[i]))
      throw DataError(path + ": truncated checkpoint tensor '" + expected_name + "'");
}

}  // namespace detail

inline constexpr const char* kCheckpointTag = "riloss-linear v1";

inline void save_checkpoint(const LinearForecaster& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << kCheckpointTag << '\n';
  out << m.w << ' ' << m.horizon << ' ' << m.channels << ' ' << m.decomposition.kernel_size
      << ' ' << (m.channel_independent ? 1 : 0) << '\n';
  // Row-major on disk regardless of in-memory layout.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> wt =
      m.weights_trend;
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> ws =
      m.weights_seasonal;
  detail::write_tensor(out, "weights_trend", wt.data(), wt.size());
  detail::write_tensor(out, "bias_trend", m.bias_trend.data(), m.bias_trend.size());
  detail::write_tensor(out, "weights_seasonal", ws.data(), ws.size());
  detail::write_tensor(out, "bias_seasonal", m.bias_seasonal.data(), m.bias_seasonal.size());
  if (!out) throw IoError("failed writing checkpoint to '" + path + "'");
}

inline LinearForecaster load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string tag;
  std::getline(in, tag);
  if (tag != kCheckpointTag)
    throw DataError(path + ": unsupported checkpoint format '" + tag + "'");
  int w = 0, horizon = 0, channels = 0, kernel = 0, ci = 1;
  if (!(in >> w >> horizon >> channels >> kernel >> ci))
    throw DataError(path + ": malformed checkpoint shape header");
  LinearForecaster m = LinearForecaster::zeros(w, horizon, channels, DecompositionSpec{kernel});
  m.channel_independent = ci != 0;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> wt(horizon, w);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> ws(horizon, w);
  detail::read_tensor(in, "weights_trend", wt.data(), wt.size(), path);
  detail::read_tensor(in, "bias_trend", m.bias_trend.data(), m.bias_trend.size(), path);
  detail::read_tensor(in, "weights_seasonal", ws.data(), ws.size(), path);
  detail::read_tensor(in, "bias_seasonal", m.bias_seasonal.data(), m.bias_seasonal.size(),
                      path);
  m.weights_trend = wt;
  m.weights_seasonal = ws;
  return m;
}

}  // namespace riloss
