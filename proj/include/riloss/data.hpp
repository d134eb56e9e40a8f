#pragma once

#include "riloss/common.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <string>
#include <string_view>

namespace riloss {

/// A multivariate series: T x d values plus timestamps and column names.
struct SeriesFrame {
  std::vector<std::string> timestamps;
  Matrix values;  // T x d
  std::vector<std::string> columns;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Loads a CSV with a header row whose first column holds timestamps and whose
/// remaining columns are numeric. Row order is preserved.
inline SeriesFrame load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");

  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": missing header row");
  auto header = detail::split_fields(detail::trim(line));
  if (header.size() < 2)
    throw DataError(path + ": header must contain a timestamp column plus data columns");

  SeriesFrame frame;
  for (std::size_t c = 1; c < header.size(); ++c)
    frame.columns.emplace_back(detail::trim(header[c]));
  const std::size_t width = header.size();

  std::vector<double> cells;
  long row = 0;
  while (std::getline(in, line)) {
    const std::string_view sv = detail::trim(line);
    if (sv.empty()) continue;  // ignore trailing blank lines
    ++row;
    auto fields = detail::split_fields(sv);
    if (fields.size() != width)
      throw DataError(path + ": row " + std::to_string(row) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(width));
    frame.timestamps.emplace_back(detail::trim(fields[0]));
    for (std::size_t c = 1; c < width; ++c) {
      const std::string_view cell = detail::trim(fields[c]);
      const std::string& name = frame.columns[c - 1];
      if (cell.empty())
        throw DataError(path + ": row " + std::to_string(row) + ", column '" + name +
                        "': empty cell");
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (ec != std::errc{} || ptr != cell.data() + cell.size())
        throw DataError(path + ": row " + std::to_string(row) + ", column '" + name +
                        "': cannot parse '" + std::string(cell) + "' as a number");
      if (!std::isfinite(value))
        throw DataError(path + ": row " + std::to_string(row) + ", column '" + name +
                        "': non-finite value");
      cells.push_back(value);
    }
  }
  if (row == 0) throw DataError(path + ": no data rows");

  const auto d = static_cast<Eigen::Index>(width - 1);
  frame.values.resize(row, d);
  for (long r = 0; r < row; ++r)
    for (Eigen::Index c = 0; c < d; ++c)
      frame.values(r, c) =
          cells[static_cast<std::size_t>(r) * (width - 1) + static_cast<std::size_t>(c)];
  return frame;
}

enum class SplitMode { ratio, ett_hourly, ett_minute };

struct SplitSpec {
  SplitMode mode = SplitMode::ratio;
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;

  void validate() const {
    if (mode != SplitMode::ratio) return;
    if (!(train > 0.0) || !(val > 0.0) || !(test > 0.0))
      throw DomainError("split: all ratio components must be positive");
    if (std::abs(train + val + test - 1.0) > 1e-9)
      throw DomainError("split: ratios must sum to 1");
  }
};

/// Target-region borders: train is [0, train_end), val [train_end, val_end),
/// test [val_end, test_end).
struct SplitBorders {
  long train_end = 0;
  long val_end = 0;
  long test_end = 0;
};

struct SplitResult {
  SeriesFrame train;
  SeriesFrame val;
  SeriesFrame test;
  SplitBorders borders;
};

namespace detail {

inline SeriesFrame slice_frame(const SeriesFrame& f, long begin, long end) {
  SeriesFrame out;
  out.columns = f.columns;
  out.values = f.values.middleRows(begin, end - begin);
  out.timestamps.assign(f.timestamps.begin() + begin, f.timestamps.begin() + end);
  return out;
}

}  // namespace detail

/// Splits a frame into train/val/test. The target regions are disjoint; the
/// val and test frames additionally carry `lookback_overlap` rows of history
/// in front so the first windows of each region have full inputs.
inline SplitResult split(const SeriesFrame& frame, const SplitSpec& spec,
                         int lookback_overlap) {
  spec.validate();
  if (lookback_overlap < 0) throw DomainError("split: negative lookback overlap");
  const long t = frame.rows();

  SplitBorders b;
  if (spec.mode == SplitMode::ratio) {
    b.train_end = static_cast<long>(std::floor(spec.train * static_cast<double>(t)));
    b.val_end = b.train_end + static_cast<long>(std::floor(spec.val * static_cast<double>(t)));
    b.test_end = t;
  } else {
    const long unit = spec.mode == SplitMode::ett_hourly ? 30 * 24 : 30 * 24 * 4;
    b.train_end = 12 * unit;
    b.val_end = 16 * unit;
    b.test_end = std::min<long>(t, 20 * unit);
  }
  if (b.train_end <= lookback_overlap || b.val_end <= b.train_end || b.test_end <= b.val_end)
    throw DataError("split: frame too short (" + std::to_string(t) +
                    " rows) for the requested borders");

  SplitResult out;
  out.borders = b;
  out.train = detail::slice_frame(frame, 0, b.train_end);
  out.val = detail::slice_frame(frame, b.train_end - lookback_overlap, b.val_end);
  out.test = detail::slice_frame(frame, b.val_end - lookback_overlap, b.test_end);
  return out;
}

struct Standardization {
  Vector mean;
  Vector stddev;
};

/// Scales all three frames in place by the train split's per-column mean and
/// standard deviation. Statistics come from the train frame only.
inline Standardization standardize(SeriesFrame& train, SeriesFrame& val, SeriesFrame& test) {
  if (train.rows() < 1) throw DataError("standardize: empty train frame");
  const Eigen::Index d = train.cols();
  Standardization st;
  st.mean = train.values.colwise().mean();
  st.stddev.resize(d);
  for (Eigen::Index c = 0; c < d; ++c) {
    const double var =
        (train.values.col(c).array() - st.mean(c)).square().mean();
    st.stddev(c) = std::sqrt(var);
    if (!(st.stddev(c) > 0.0))
      throw DataError("standardize: column '" +
                      (c < static_cast<Eigen::Index>(train.columns.size())
                           ? train.columns[static_cast<std::size_t>(c)]
                           : std::to_string(c)) +
                      "' has zero variance in the train split");
  }
  for (SeriesFrame* f : {&train, &val, &test}) {
    f->values.rowwise() -= st.mean.transpose();
    f->values.array().rowwise() /= st.stddev.transpose().array();
  }
  return st;
}

inline void invert_standardization(SeriesFrame& frame, const Standardization& st) {
  frame.values.array().rowwise() *= st.stddev.transpose().array();
  frame.values.rowwise() += st.mean.transpose();
}

/// Sliding-window pairs: inputs of w rows followed by targets of H rows.
struct WindowDataset {
  int w = 0;
  int horizon = 0;
  int stride = 1;
  std::vector<std::pair<Matrix, Matrix>> pairs;  // (x: w x d, y: H x d)

  std::size_t size() const { return pairs.size(); }
};

/// Windows cut from two aligned frames: inputs from `x_source`, targets from
/// `y_source`. The frames must have identical shape (e.g. a noise-injected
/// copy paired against the clean original).
inline WindowDataset windows(const SeriesFrame& x_source, const SeriesFrame& y_source, int w,
                             int horizon, int stride) {
  if (w < 1 || horizon < 1 || stride < 1)
    throw DomainError("windows: w, horizon and stride must be positive");
  if (x_source.rows() != y_source.rows() || x_source.cols() != y_source.cols())
    throw DimensionError("windows: input and target frames differ in shape");
  const long t = x_source.rows();
  if (t < w + horizon)
    throw DataError("windows: frame has " + std::to_string(t) + " rows, need at least " +
                    std::to_string(w + horizon));
  WindowDataset ds;
  ds.w = w;
  ds.horizon = horizon;
  ds.stride = stride;
  const long count = (t - w - horizon) / stride + 1;
  ds.pairs.reserve(static_cast<std::size_t>(count));
  for (long o = 0; o + w + horizon <= t; o += stride)
    ds.pairs.emplace_back(x_source.values.middleRows(o, w),
                          y_source.values.middleRows(o + w, horizon));
  return ds;
}

inline WindowDataset windows(const SeriesFrame& frame, int w, int horizon, int stride) {
  return windows(frame, frame, w, horizon, stride);
}

/// Adds zero-mean Gaussian noise per column, scaled so that
/// 10 log10(signal power / noise power) = snr_db, with the signal power taken
/// as the column's mean square. Deterministic per seed.
inline SeriesFrame inject_noise_snr(const SeriesFrame& frame, double snr_db,
                                    std::uint64_t seed) {
  if (frame.rows() < 1) throw DataError("inject_noise_snr: empty frame");
  SeriesFrame out = frame;
  Rng rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index c = 0; c < frame.cols(); ++c) {
    const double power = frame.values.col(c).array().square().mean();
    const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
    for (Eigen::Index r = 0; r < frame.rows(); ++r) out.values(r, c) += sigma * gauss(rng);
  }
  return out;
}

/// Synthetic seasonal benchmark series: two superposed sinusoids per channel
/// (periods 24 and 96 rows) plus Gaussian observation noise. `drift` modulates
/// the seasonal amplitude over one slow cycle spanning the series, giving the
/// mild nonstationarity real benchmark data shows (train and test regions see
/// different amplitude levels); 0 keeps the series stationary.
inline SeriesFrame make_sinusoid_frame(long t, int d, double noise_std, std::uint64_t seed,
                                       double drift = 0.0) {
  if (t < 1 || d < 1) throw DomainError("make_sinusoid_frame: invalid shape");
  SeriesFrame frame;
  frame.values.resize(t, d);
  frame.timestamps.resize(static_cast<std::size_t>(t));
  Rng rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int c = 0; c < d; ++c) frame.columns.push_back("s" + std::to_string(c));
  for (long r = 0; r < t; ++r) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "t%07ld", r);
    frame.timestamps[static_cast<std::size_t>(r)] = buf;
  }
  const double two_pi = 2.0 * std::numbers::pi;
  for (Eigen::Index c = 0; c < d; ++c) {
    const double phase = 0.37 * static_cast<double>(c);
    for (long r = 0; r < t; ++r) {
      const double x = static_cast<double>(r);
      const double amplitude =
          1.0 + drift * std::sin(two_pi * (x / (1.1 * static_cast<double>(t)) + 0.2 + phase));
      frame.values(r, c) = amplitude * (std::sin(two_pi * (x / 24.0 + phase)) +
                                        0.5 * std::sin(two_pi * (x / 96.0 + 0.11 + phase))) +
                           noise_std * gauss(rng);
    }
  }
  return frame;
}

}  // namespace riloss
