#pragma once

#include "riloss/bounds.hpp"
#include "riloss/forecaster.hpp"
#include "riloss/friedman.hpp"

#include <json.hpp>

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace riloss {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Run configuration: a flat "key = value" file with [section] headers,
// echoed verbatim into every report for provenance.
// ---------------------------------------------------------------------------

struct RunConfig {
  // [data]
  std::string source = "csv";  // csv | synthetic
  std::string path;
  SplitSpec split_spec;
  bool standardize_data = true;
  long synthetic_length = 2000;
  int synthetic_channels = 1;
  double synthetic_noise = 0.25;
  double synthetic_drift = 0.0;
  std::uint64_t data_seed = 7;
  std::optional<double> snr_db;

  // [window]
  int lookback = 96;
  int horizon = 96;
  int stride = 1;
  std::vector<int> horizons;  // grid for ablation/robustness; defaults to {horizon}

  // [model]
  int kernel_size = 25;

  // [train]
  TrainConfig train;

  // [loss]
  RiLossConfig loss;

  // [run]
  std::string out_dir = ".";
  int seed_runs = 1;  // >1 averages over consecutive seeds

  std::string raw;  // verbatim config text

  std::vector<int> horizon_grid() const {
    return horizons.empty() ? std::vector<int>{horizon} : horizons;
  }
};

namespace detail {

struct KvConfig {
  std::map<std::string, std::string> entries;  // "section.key" -> value

  const std::string* find(const std::string& key) const {
    const auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
  }
};

inline KvConfig parse_kv(const std::string& text) {
  KvConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    if (sv.front() == '[') {
      if (sv.back() != ']')
        throw ConfigError("config line " + std::to_string(line_no) + ": malformed section");
      section = std::string(trim(sv.substr(1, sv.size() - 2)));
      continue;
    }
    const auto eq = sv.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(trim(sv.substr(0, eq)));
    const std::string value(trim(sv.substr(eq + 1)));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    cfg.entries[section.empty() ? key : section + "." + key] = value;
  }
  return cfg;
}

inline double to_double(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

inline long to_long(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const long d = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
  }
}

inline bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

inline std::vector<std::string> split_ws(const std::string& v) {
  std::vector<std::string> out;
  std::istringstream in(v);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline LossKind parse_loss_kind(const std::string& v, const std::string& key) {
  if (v == "mse") return LossKind::mse;
  if (v == "mae") return LossKind::mae;
  if (v == "ri") return LossKind::ri;
  if (v == "pearson_mse") return LossKind::pearson_mse;
  throw ConfigError("config key '" + key + "': unknown loss '" + v + "'");
}

inline const char* loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::mse: return "mse";
    case LossKind::mae: return "mae";
    case LossKind::ri: return "ri";
    case LossKind::pearson_mse: return "pearson_mse";
  }
  return "?";
}

}  // namespace detail

inline RunConfig parse_config_text(const std::string& text) {
  const detail::KvConfig kv = detail::parse_kv(text);
  RunConfig cfg;
  cfg.raw = text;

  auto str = [&](const char* key, std::string& out) {
    if (const auto* v = kv.find(key)) out = *v;
  };
  auto num = [&](const char* key, auto& out) {
    if (const auto* v = kv.find(key))
      out = static_cast<std::decay_t<decltype(out)>>(detail::to_double(*v, key));
  };
  auto integer = [&](const char* key, auto& out) {
    if (const auto* v = kv.find(key))
      out = static_cast<std::decay_t<decltype(out)>>(detail::to_long(*v, key));
  };

  str("data.source", cfg.source);
  if (cfg.source != "csv" && cfg.source != "synthetic")
    throw ConfigError("config key 'data.source': expected csv or synthetic");
  str("data.path", cfg.path);
  if (const auto* v = kv.find("data.split")) {
    const auto parts = detail::split_ws(*v);
    if (parts.empty()) throw ConfigError("config key 'data.split': empty value");
    if (parts[0] == "ett_hourly") {
      cfg.split_spec.mode = SplitMode::ett_hourly;
    } else if (parts[0] == "ett_minute") {
      cfg.split_spec.mode = SplitMode::ett_minute;
    } else if (parts[0] == "ratio") {
      if (parts.size() != 4)
        throw ConfigError("config key 'data.split': expected 'ratio TRAIN VAL TEST'");
      cfg.split_spec.mode = SplitMode::ratio;
      cfg.split_spec.train = detail::to_double(parts[1], "data.split");
      cfg.split_spec.val = detail::to_double(parts[2], "data.split");
      cfg.split_spec.test = detail::to_double(parts[3], "data.split");
    } else {
      throw ConfigError("config key 'data.split': unknown mode '" + parts[0] + "'");
    }
  }
  if (const auto* v = kv.find("data.standardize"))
    cfg.standardize_data = detail::to_bool(*v, "data.standardize");
  integer("data.synthetic_length", cfg.synthetic_length);
  integer("data.synthetic_channels", cfg.synthetic_channels);
  num("data.synthetic_noise", cfg.synthetic_noise);
  num("data.synthetic_drift", cfg.synthetic_drift);
  integer("data.seed", cfg.data_seed);
  if (const auto* v = kv.find("data.snr_db"))
    if (!v->empty()) cfg.snr_db = detail::to_double(*v, "data.snr_db");

  integer("window.lookback", cfg.lookback);
  integer("window.horizon", cfg.horizon);
  integer("window.stride", cfg.stride);
  if (const auto* v = kv.find("window.horizons")) {
    for (const auto& tok : detail::split_ws(*v))
      cfg.horizons.push_back(static_cast<int>(detail::to_long(tok, "window.horizons")));
  }

  integer("model.kernel_size", cfg.kernel_size);

  num("train.learning_rate", cfg.train.learning_rate);
  integer("train.epochs", cfg.train.epochs);
  integer("train.batch_size", cfg.train.batch_size);
  num("train.adam_beta1", cfg.train.adam_beta1);
  num("train.adam_beta2", cfg.train.adam_beta2);
  num("train.adam_eps", cfg.train.adam_eps);
  integer("train.seed", cfg.train.seed);
  if (const auto* v = kv.find("train.loss"))
    cfg.train.loss_kind = detail::parse_loss_kind(*v, "train.loss");

  num("loss.lambda", cfg.loss.lambda);
  num("loss.tau", cfg.loss.tau);
  if (const auto* v = kv.find("loss.bandwidth")) {
    const double h = detail::to_double(*v, "loss.bandwidth");
    cfg.loss.hsic.kernel_r.bandwidth = h;
    cfg.loss.hsic.kernel_s.bandwidth = h;
  }
  if (const auto* v = kv.find("loss.scale")) {
    ScaleConvention sc;
    if (*v == "half") sc = ScaleConvention::half;
    else if (*v == "unit") sc = ScaleConvention::unit;
    else throw ConfigError("config key 'loss.scale': expected half or unit");
    cfg.loss.hsic.kernel_r.scale = sc;
    cfg.loss.hsic.kernel_s.scale = sc;
  }
  if (const auto* v = kv.find("loss.sample_axis")) {
    if (*v == "time_points") cfg.loss.sample_axis = SampleAxis::time_points;
    else if (*v == "whole_window") cfg.loss.sample_axis = SampleAxis::whole_window;
    else throw ConfigError("config key 'loss.sample_axis': expected time_points or whole_window");
  }

  str("run.out", cfg.out_dir);
  integer("run.seed_runs", cfg.seed_runs);
  if (cfg.seed_runs < 1) throw ConfigError("config key 'run.seed_runs': must be >= 1");
  return cfg;
}

inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

struct EvalMetrics {
  double mse = 0.0;
  double mae = 0.0;
};

/// Plain element-mean MSE/MAE of the model on a window dataset. Test metrics
/// are always computed this way, independent of the training loss and of any
/// noise stream.
inline EvalMetrics evaluate(const LinearForecaster& model, const WindowDataset& ds) {
  if (ds.size() == 0) throw DataError("evaluate: empty dataset");
  double se = 0.0, ae = 0.0;
  double elements = 0.0;
  for (const auto& [x, y] : ds.pairs) {
    const Matrix err = forward(model, x) - y;
    se += err.squaredNorm();
    ae += err.cwiseAbs().sum();
    elements += static_cast<double>(err.size());
  }
  return EvalMetrics{se / elements, ae / elements};
}

struct RunOutcome {
  EvalMetrics test;
  std::vector<EpochStats> history;
  double ms_per_iter = 0.0;
  long iterations = 0;
  SplitBorders borders;
  Standardization stats;
  std::vector<std::string> columns;
  LinearForecaster model;
};

namespace detail {

inline SeriesFrame load_source(const RunConfig& cfg) {
  if (cfg.source == "synthetic")
    return make_sinusoid_frame(cfg.synthetic_length, cfg.synthetic_channels,
                               cfg.synthetic_noise, cfg.data_seed, cfg.synthetic_drift);
  if (cfg.path.empty()) throw ConfigError("config key 'data.path': required for csv source");
  return load_csv(cfg.path);
}

}  // namespace detail

/// Full pipeline: load -> split -> standardize -> (optional input-noise
/// injection) -> window -> train -> evaluate on the untouched test targets.
/// Noise injection corrupts only the input side of each window; targets stay
/// clean so metrics remain comparable across SNR levels.
inline RunOutcome run_train(const RunConfig& cfg) {
  const SeriesFrame frame = detail::load_source(cfg);
  SplitResult sp = split(frame, cfg.split_spec, cfg.lookback);

  RunOutcome out;
  out.borders = sp.borders;
  out.columns = sp.train.columns;
  if (cfg.standardize_data) {
    out.stats = standardize(sp.train, sp.val, sp.test);
  } else {
    out.stats.mean = Vector::Zero(sp.train.cols());
    out.stats.stddev = Vector::Ones(sp.train.cols());
  }

  WindowDataset train_ds, val_ds, test_ds;
  if (cfg.snr_db) {
    const SeriesFrame train_x = inject_noise_snr(sp.train, *cfg.snr_db, cfg.data_seed + 11);
    const SeriesFrame val_x = inject_noise_snr(sp.val, *cfg.snr_db, cfg.data_seed + 12);
    const SeriesFrame test_x = inject_noise_snr(sp.test, *cfg.snr_db, cfg.data_seed + 13);
    train_ds = windows(train_x, sp.train, cfg.lookback, cfg.horizon, cfg.stride);
    val_ds = windows(val_x, sp.val, cfg.lookback, cfg.horizon, cfg.stride);
    test_ds = windows(test_x, sp.test, cfg.lookback, cfg.horizon, cfg.stride);
  } else {
    train_ds = windows(sp.train, cfg.lookback, cfg.horizon, cfg.stride);
    val_ds = windows(sp.val, cfg.lookback, cfg.horizon, cfg.stride);
    test_ds = windows(sp.test, cfg.lookback, cfg.horizon, cfg.stride);
  }

  RiLossConfig loss_cfg = cfg.loss;
  loss_cfg.seed = cfg.train.seed;
  const LinearForecaster init = LinearForecaster::zeros(
      cfg.lookback, cfg.horizon, static_cast<int>(frame.cols()),
      DecompositionSpec{cfg.kernel_size});
  TrainResult tr = train(init, train_ds, val_ds, loss_cfg, cfg.train);

  out.test = evaluate(tr.model, test_ds);
  out.history = std::move(tr.history);
  out.ms_per_iter = tr.ms_per_iter;
  out.iterations = tr.iterations;
  out.model = std::move(tr.model);
  return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline Json dataset_stats_json(const RunOutcome& out) {
  Json stats;
  Json cols = Json::array();
  for (std::size_t c = 0; c < out.columns.size(); ++c) {
    cols.push_back(Json{{"name", out.columns[c]},
                        {"mean", out.stats.mean(static_cast<Eigen::Index>(c))},
                        {"std", out.stats.stddev(static_cast<Eigen::Index>(c))}});
  }
  stats["columns"] = cols;
  stats["borders"] = Json{{"train_end", out.borders.train_end},
                          {"val_end", out.borders.val_end},
                          {"test_end", out.borders.test_end}};
  return stats;
}

inline Json run_report_body(const RunConfig& cfg, const RunOutcome& out) {
  Json body;
  body["command"] = "train";
  body["loss"] = detail::loss_kind_name(cfg.train.loss_kind);
  body["seed"] = cfg.train.seed;
  body["lookback"] = cfg.lookback;
  body["horizon"] = cfg.horizon;
  body["results"] = Json{{"test_mse", out.test.mse}, {"test_mae", out.test.mae}};
  Json hist = Json::array();
  for (std::size_t e = 0; e < out.history.size(); ++e) {
    Json h{{"epoch", e + 1},
           {"train_loss", out.history[e].train_loss},
           {"val_loss", out.history[e].val_loss}};
    if (cfg.train.loss_kind == LossKind::ri || cfg.train.loss_kind == LossKind::pearson_mse)
      h["hsic_value"] = out.history[e].mean_hsic;
    hist.push_back(h);
  }
  body["history"] = hist;
  body["iterations"] = out.iterations;
  body["dataset"] = dataset_stats_json(out);
  body["config"] = cfg.raw;
  return body;
}

inline std::string iso_timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

/// Writes a report whose volatile fields (timestamp, wall-clock timing) are
/// isolated to a single line; everything below is byte-identical across runs
/// with the same config and seed.
inline void write_report(const std::string& path, const Json& body, double ms_per_iter) {
  Json vol{{"timestamp", iso_timestamp()}, {"ms_per_iter", ms_per_iter}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "{\n\"volatile\": " << vol.dump() << ",\n\"report\": " << body.dump(1) << "\n}\n";
  if (!out) throw IoError("failed writing report '" + path + "'");
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::string csv_table(const std::vector<std::string>& header,
                             const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  for (std::size_t c = 0; c < header.size(); ++c)
    out << header[c] << (c + 1 < header.size() ? "," : "\n");
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw Error("csv_table: ragged row");
    for (std::size_t c = 0; c < row.size(); ++c)
      out << row[c] << (c + 1 < row.size() ? "," : "\n");
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Multi-run commands
// ---------------------------------------------------------------------------

struct AblationRow {
  LossKind loss = LossKind::mse;
  int horizon = 0;
  EvalMetrics test;
};

/// Four training runs per horizon ({ri, mae, mse, pearson_mse}) sharing the
/// seed and the data pipeline.
inline std::vector<AblationRow> run_ablation(const RunConfig& cfg) {
  static constexpr LossKind kinds[] = {LossKind::ri, LossKind::mae, LossKind::mse,
                                       LossKind::pearson_mse};
  std::vector<AblationRow> rows;
  for (int horizon : cfg.horizon_grid()) {
    for (LossKind kind : kinds) {
      RunConfig variant = cfg;
      variant.horizon = horizon;
      variant.horizons.clear();
      variant.train.loss_kind = kind;
      const RunOutcome out = run_train(variant);
      rows.push_back(AblationRow{kind, horizon, out.test});
    }
  }
  return rows;
}

struct RobustnessRow {
  double snr_db = 0.0;
  LossKind loss = LossKind::mse;
  EvalMetrics test;
};

/// Noise-robustness table: for each SNR, paired mse and ri runs on the same
/// corrupted inputs.
inline std::vector<RobustnessRow> run_robustness(const RunConfig& cfg,
                                                 const std::vector<double>& snr_list) {
  if (snr_list.empty()) throw DomainError("robustness: empty snr list");
  std::vector<RobustnessRow> rows;
  for (double snr : snr_list) {
    for (LossKind kind : {LossKind::mse, LossKind::ri}) {
      RunConfig variant = cfg;
      variant.snr_db = snr;
      variant.train.loss_kind = kind;
      const RunOutcome out = run_train(variant);
      rows.push_back(RobustnessRow{snr, kind, out.test});
    }
  }
  return rows;
}

struct SweepRow {
  std::uint64_t seed = 0;
  EvalMetrics test;
};

struct SweepResult {
  std::vector<SweepRow> runs;
  EvalMetrics mean;
  EvalMetrics stddev;
};

/// Repeats the configured run over consecutive seeds and aggregates.
inline SweepResult run_sweep(const RunConfig& cfg, int seeds) {
  if (seeds < 1) throw DomainError("sweep: need at least one seed");
  SweepResult res;
  double m2_mse = 0.0, m2_mae = 0.0;
  for (int i = 0; i < seeds; ++i) {
    RunConfig variant = cfg;
    variant.train.seed = cfg.train.seed + static_cast<std::uint64_t>(i);
    const RunOutcome out = run_train(variant);
    res.runs.push_back(SweepRow{variant.train.seed, out.test});
  }
  const double n = static_cast<double>(seeds);
  for (const auto& row : res.runs) {
    res.mean.mse += row.test.mse / n;
    res.mean.mae += row.test.mae / n;
  }
  for (const auto& row : res.runs) {
    m2_mse += (row.test.mse - res.mean.mse) * (row.test.mse - res.mean.mse);
    m2_mae += (row.test.mae - res.mean.mae) * (row.test.mae - res.mean.mae);
  }
  res.stddev.mse = seeds > 1 ? std::sqrt(m2_mse / (n - 1.0)) : 0.0;
  res.stddev.mae = seeds > 1 ? std::sqrt(m2_mae / (n - 1.0)) : 0.0;
  return res;
}

}  // namespace riloss
