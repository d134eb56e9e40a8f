// Command-line front end: training runs, ablations, robustness sweeps,
// Friedman statistics, and the desk-scale studies, all emitting CSV/JSON
// reports under --out.

#include "riloss/riloss.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using riloss::Json;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool acknowledge_datasets = false;
};

riloss::RunConfig load_run_config(const CommonFlags& flags) {
  riloss::RunConfig cfg = riloss::parse_config_file(flags.config_path);
  if (flags.seed) cfg.train.seed = *flags.seed;
  if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
  if (cfg.source == "csv" && !flags.acknowledge_datasets)
    std::cerr << "note: training on a local csv dataset; pass --acknowledge-datasets to "
                 "record that the benchmark data was downloaded manually\n";
  return cfg;
}

std::string out_path(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  return (fs::path(dir) / name).string();
}

std::string fmt(double v) { return riloss::format_double(v); }

void emit_train_outputs(const riloss::RunConfig& cfg, const riloss::RunOutcome& out,
                        const std::string& stem) {
  const std::string report_path = out_path(cfg.out_dir, stem + "_report.json");
  riloss::write_report(report_path, riloss::run_report_body(cfg, out), out.ms_per_iter);
  riloss::save_checkpoint(out.model, out_path(cfg.out_dir, stem + "_model.txt"));
  riloss::write_text(out_path(cfg.out_dir, stem + "_dataset.json"),
                     riloss::dataset_stats_json(out).dump(1) + "\n");
  std::cout << report_path << "\n";
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::string token;
  std::istringstream in(csv);
  while (std::getline(in, token, ',')) {
    if (token.empty()) continue;
    out.push_back(std::stod(token));
  }
  return out;
}

int cmd_train(const CommonFlags& flags) {
  const riloss::RunConfig cfg = load_run_config(flags);
  if (cfg.seed_runs > 1) {
    const riloss::SweepResult sweep = riloss::run_sweep(cfg, cfg.seed_runs);
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : sweep.runs)
      rows.push_back({std::to_string(r.seed), fmt(r.test.mse), fmt(r.test.mae)});
    rows.push_back({"mean", fmt(sweep.mean.mse), fmt(sweep.mean.mae)});
    rows.push_back({"std", fmt(sweep.stddev.mse), fmt(sweep.stddev.mae)});
    const std::string path = out_path(cfg.out_dir, "train_seeds.csv");
    riloss::write_text(path, riloss::csv_table({"seed", "test_mse", "test_mae"}, rows));
    std::cout << path << "\n";
    return 0;
  }
  emit_train_outputs(cfg, riloss::run_train(cfg), "train");
  return 0;
}

int cmd_ablation(const CommonFlags& flags) {
  const riloss::RunConfig cfg = load_run_config(flags);
  const auto rows = riloss::run_ablation(cfg);
  std::vector<std::vector<std::string>> table;
  for (const auto& r : rows)
    table.push_back({riloss::detail::loss_kind_name(r.loss), std::to_string(r.horizon),
                     fmt(r.test.mse), fmt(r.test.mae)});
  const std::string path = out_path(cfg.out_dir, "ablation.csv");
  riloss::write_text(path, riloss::csv_table({"loss", "horizon", "test_mse", "test_mae"}, table));
  std::cout << path << "\n";
  return 0;
}

int cmd_robustness(const CommonFlags& flags, const std::string& snr_csv) {
  const riloss::RunConfig cfg = load_run_config(flags);
  const auto snrs = parse_double_list(snr_csv);
  const auto rows = riloss::run_robustness(cfg, snrs);
  std::vector<std::vector<std::string>> table;
  for (const auto& r : rows)
    table.push_back({fmt(r.snr_db), riloss::detail::loss_kind_name(r.loss), fmt(r.test.mse),
                     fmt(r.test.mae)});
  const std::string path = out_path(cfg.out_dir, "robustness.csv");
  riloss::write_text(path,
                     riloss::csv_table({"snr_db", "loss", "test_mse", "test_mae"}, table));
  std::cout << path << "\n";
  return 0;
}

int cmd_friedman(const std::string& table_path, double q_alpha, double alpha,
                 const std::string& out_dir) {
  const riloss::SeriesFrame table = riloss::load_csv(table_path);
  const riloss::FriedmanResult res = riloss::friedman_test(table.values);
  const double cd = riloss::nemenyi_cd(res.methods, res.settings, q_alpha);
  Json body;
  body["settings"] = res.settings;
  body["methods"] = res.methods;
  body["tau_chi2"] = res.tau_chi2;
  body["tau_F"] = res.tau_f;
  body["alpha"] = alpha;
  body["q_alpha"] = q_alpha;
  body["critical_difference"] = cd;
  Json ranks = Json::array();
  for (Eigen::Index i = 0; i < res.avg_ranks.size(); ++i)
    ranks.push_back(Json{{"method", table.columns[static_cast<std::size_t>(i)]},
                         {"avg_rank", res.avg_ranks(i)}});
  body["avg_ranks"] = ranks;
  const std::string path = out_path(out_dir, "friedman.json");
  riloss::write_text(path, body.dump(1) + "\n");
  std::cout << path << "\n";
  return 0;
}

int cmd_tradeoff(const std::string& tau_csv, int steps, int points, std::uint64_t seed,
                 const std::string& out_dir) {
  const auto taus = parse_double_list(tau_csv);
  std::vector<double> rhos(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i)
    rhos[static_cast<std::size_t>(i)] = static_cast<double>(i) / (steps - 1);
  const auto curve = riloss::tradeoff_curve(taus, rhos, points, seed);
  std::vector<std::vector<std::string>> table;
  for (const auto& p : curve)
    table.push_back({fmt(p.tau), fmt(p.rho), fmt(p.mse), fmt(p.ri)});
  const std::string path = out_path(out_dir, "tradeoff.csv");
  riloss::write_text(path, riloss::csv_table({"tau", "rho", "mse", "ri"}, table));
  std::cout << path << "\n";
  return 0;
}

int cmd_crossterm(int dim, double sigma, long trials, std::uint64_t seed, bool identity,
                  const std::string& out_dir) {
  riloss::Matrix proj;
  if (identity) {
    proj = riloss::Matrix::Identity(dim, dim);
  } else {
    riloss::Rng rng = riloss::make_rng(seed, 99);
    std::normal_distribution<double> gauss(0.0, 1.0);
    proj.resize(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
      for (Eigen::Index j = 0; j < dim; ++j)
        proj(i, j) = gauss(rng) / std::sqrt(static_cast<double>(dim));
  }
  const auto res = riloss::crossterm_mc(proj, sigma, trials, seed);
  std::vector<std::vector<std::string>> table{{fmt(sigma), std::to_string(res.trials),
                                               fmt(res.empirical), fmt(res.analytic),
                                               fmt(res.stderror)}};
  const std::string path = out_path(out_dir, "crossterm.csv");
  riloss::write_text(
      path, riloss::csv_table({"sigma", "trials", "empirical", "analytic", "stderr"}, table));
  std::cout << path << "\n";
  return 0;
}

int cmd_bounds(const std::string& dependence, const std::string& grid_csv, int replicates,
               long reference_n, std::uint64_t seed, double c0, double delta,
               const std::string& out_dir) {
  riloss::Dependence dep;
  if (dependence == "independent") dep = riloss::Dependence::independent;
  else if (dependence == "linear") dep = riloss::Dependence::linear;
  else if (dependence == "quadratic") dep = riloss::Dependence::quadratic;
  else throw riloss::ConfigError("bounds: unknown dependence '" + dependence + "'");

  std::vector<long> grid;
  for (double v : parse_double_list(grid_csv)) grid.push_back(static_cast<long>(v));
  const auto study = riloss::convergence_study(dep, grid, replicates, reference_n, seed, c0, delta);

  std::vector<std::vector<std::string>> table;
  for (const auto& p : study.points)
    table.push_back({std::to_string(p.n), fmt(p.mean_deviation), fmt(p.gamma1), fmt(p.gamma2),
                     fmt(p.gamma3), fmt(p.bound_total)});
  const std::string csv_path = out_path(out_dir, "convergence.csv");
  riloss::write_text(csv_path,
                     riloss::csv_table({"n", "mean_abs_deviation", "gamma1", "gamma2", "gamma3",
                                        "bound_total"},
                                       table));

  // Full bound report at the largest grid size.
  const long n_max = *std::max_element(grid.begin(), grid.end());
  riloss::Rng rng = riloss::make_rng(seed, 424242);
  const auto [r, s] = riloss::detail::draw_dependent(dep, n_max, rng);
  const auto est = riloss::estimate_rademacher(r, riloss::KernelSpec{}, 500, seed + 1);
  const auto rep = riloss::gamma_terms(n_max, delta, est, 0.0, 1.0, c0);
  Json body;
  body["n"] = rep.n;
  body["delta"] = rep.delta;
  body["c1"] = rep.c1;
  body["c2"] = rep.c2;
  body["c0"] = rep.c0;
  body["gamma1"] = rep.gamma1;
  body["gamma2"] = rep.gamma2;
  body["gamma3"] = rep.gamma3;
  body["total"] = rep.total;
  body["rademacher"] =
      Json{{"r_sigma", est.r_sigma},          {"w_sigma_sigma", est.w_sigma_sigma},
           {"w_sigma_alpha", est.w_sigma_alpha}, {"w_sigma", est.w_sigma},
           {"f_sup", est.f_sup},              {"draws", est.draws}};
  body["reference"] = Json{{"n", study.reference_n}, {"hsic", study.reference_value}};
  const std::string json_path = out_path(out_dir, "bound_report.json");
  riloss::write_text(json_path, body.dump(1) + "\n");
  std::cout << csv_path << "\n" << json_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Residual-informed forecasting toolkit"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string snr_csv = "-3,0,3,10";
  std::string table_path;
  double q_alpha = 3.164;
  double alpha = 0.05;
  std::string tau_csv = "50,100";
  int steps = 51;
  int points = 1000;
  std::uint64_t study_seed = 1;
  int dim = 8;
  double sigma = 1.0;
  long trials = 100000;
  bool identity = false;
  std::string dependence = "linear";
  std::string grid_csv = "50,100,200,400";
  int replicates = 50;
  long reference_n = 4000;
  double c0 = 1.0;
  double delta = 0.05;
  std::string out_dir = "out";
  int sweep_seeds = 5;

  auto add_config_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", flags.config_path, "configuration file")->required();
    cmd->add_option("--seed", flags.seed, "override the training seed");
    cmd->add_option("--out", flags.out_dir, "override the output directory");
    cmd->add_flag("--acknowledge-datasets", flags.acknowledge_datasets,
                  "acknowledge that benchmark csv data was downloaded manually");
  };

  auto* train = app.add_subcommand("train", "run the training pipeline once");
  add_config_flags(train);

  auto* sweep = app.add_subcommand("sweep", "repeat training over consecutive seeds");
  add_config_flags(sweep);
  sweep->add_option("--seeds", sweep_seeds, "number of consecutive seeds");

  auto* ablation = app.add_subcommand("ablation", "compare ri/mae/mse/pearson_mse losses");
  add_config_flags(ablation);

  auto* robustness = app.add_subcommand("robustness", "paired mse/ri runs across SNR levels");
  add_config_flags(robustness);
  robustness->add_option("--snr", snr_csv, "comma-separated SNR list in dB");

  auto* friedman = app.add_subcommand("friedman", "rank statistics over a metrics table");
  friedman->add_option("--table", table_path, "csv: first column setting, then one per method")
      ->required();
  friedman->add_option("--q-alpha", q_alpha, "studentized range critical value");
  friedman->add_option("--alpha", alpha, "significance level (recorded in the report)");
  friedman->add_option("--out", out_dir, "output directory");

  auto* tradeoff = app.add_subcommand("tradeoff", "noise-ratio trade-off curve");
  tradeoff->add_option("--tau", tau_csv, "comma-separated tau values");
  tradeoff->add_option("--rho-steps", steps, "number of rho grid steps");
  tradeoff->add_option("--points", points, "series length");
  tradeoff->add_option("--seed", study_seed, "seed");
  tradeoff->add_option("--out", out_dir, "output directory");

  auto* crossterm = app.add_subcommand("crossterm", "cross-term Monte-Carlo check");
  crossterm->add_option("--dim", dim, "horizon dimension H");
  crossterm->add_option("--sigma", sigma, "noise standard deviation");
  crossterm->add_option("--trials", trials, "Monte-Carlo trials");
  crossterm->add_option("--seed", study_seed, "seed");
  crossterm->add_flag("--identity", identity, "use the identity projection (analytic zero)");
  crossterm->add_option("--out", out_dir, "output directory");

  auto* bounds = app.add_subcommand("bounds", "HSIC convergence study and bound report");
  bounds->add_option("--dependence", dependence, "independent | linear | quadratic");
  bounds->add_option("--grid", grid_csv, "comma-separated sample sizes");
  bounds->add_option("--replicates", replicates, "replicates per grid size");
  bounds->add_option("--reference-n", reference_n, "plug-in reference sample size");
  bounds->add_option("--seed", study_seed, "seed");
  bounds->add_option("--c0", c0, "universal-constant stand-in");
  bounds->add_option("--delta", delta, "confidence parameter");
  bounds->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(flags);
    if (sweep->parsed()) {
      riloss::RunConfig cfg = load_run_config(flags);
      cfg.seed_runs = sweep_seeds;
      const riloss::SweepResult res = riloss::run_sweep(cfg, cfg.seed_runs);
      std::vector<std::vector<std::string>> rows;
      for (const auto& r : res.runs)
        rows.push_back({std::to_string(r.seed), fmt(r.test.mse), fmt(r.test.mae)});
      rows.push_back({"mean", fmt(res.mean.mse), fmt(res.mean.mae)});
      rows.push_back({"std", fmt(res.stddev.mse), fmt(res.stddev.mae)});
      const std::string path = out_path(cfg.out_dir, "sweep.csv");
      riloss::write_text(path, riloss::csv_table({"seed", "test_mse", "test_mae"}, rows));
      std::cout << path << "\n";
      return 0;
    }
    if (ablation->parsed()) return cmd_ablation(flags);
    if (robustness->parsed()) return cmd_robustness(flags, snr_csv);
    if (friedman->parsed()) return cmd_friedman(table_path, q_alpha, alpha, out_dir);
    if (tradeoff->parsed()) return cmd_tradeoff(tau_csv, steps, points, study_seed, out_dir);
    if (crossterm->parsed())
      return cmd_crossterm(dim, sigma, trials, study_seed, identity, out_dir);
    if (bounds->parsed())
      return cmd_bounds(dependence, grid_csv, replicates, reference_n, study_seed, c0, delta,
                        out_dir);
  } catch (const riloss::Error& e) {
    std::cerr << Json{{"error", {{"kind", e.kind()}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << Json{{"error", {{"kind", "internal"}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  }
  return 0;
}
