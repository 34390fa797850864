// Command-line front end: training, coding against a saved dictionary,
// weight-matrix inspection, the synthetic benchmarks, and the
// generalization-bound calculator.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ssc/ssc.hpp"

namespace fs = std::filesystem;
using namespace ssc;

namespace {

struct BenchSettings {
  MixtureSpec mixture;
  SpeedBenchConfig speed;
  ScalingBenchConfig scaling;
  DownstreamBenchConfig downstream;
  int downstream_seeds = 5;
  std::string output_dir = ".";
};

BenchSettings load_bench_config(const std::string& path) {
  config::Reader reader(config::parse_file(path));
  BenchSettings s;
  s.output_dir = reader.get_string("output_dir", ".");
  s.mixture.dim = static_cast<int>(reader.get_long("mixture.dim", 100));
  s.mixture.separation = reader.get_double("mixture.separation", 3.0);
  s.mixture.n_per_class =
      static_cast<int>(reader.get_long("mixture.n_per_class", 1000));
  s.mixture.seed = static_cast<std::uint64_t>(reader.get_long("mixture.seed", 0));

  s.speed.K = static_cast<int>(reader.get_long("speed.K", 1024));
  s.speed.lambda = reader.get_double("speed.lambda", 650.0);
  s.speed.kappa = reader.get_double("speed.kappa", 0.0);
  s.speed.eta = reader.get_double("speed.eta", 0.0);
  s.speed.target_rel_err = reader.get_double("speed.target_rel_err", 0.10);
  s.speed.repeats = static_cast<int>(reader.get_long("speed.repeats", 3));
  s.speed.max_outer_iters =
      static_cast<int>(reader.get_long("speed.max_outer_iters", 25));
  s.speed.lasso_tol = reader.get_double("speed.lasso_tol", 1e-5);
  s.speed.lasso_max_iter =
      static_cast<int>(reader.get_long("speed.lasso_max_iter", 3000));
  s.speed.bandwidth_scale = reader.get_double("speed.bandwidth_scale", 0.82);
  s.speed.kernel_family = kernel_family_from_string(
      reader.get_string("speed.kernel_family", "tricube"));

  std::vector<long> ks = reader.get_long_list("scaling.K", {128, 256, 512, 1024});
  s.scaling.dictionary_sizes.assign(ks.begin(), ks.end());
  s.scaling.lambda = reader.get_double("scaling.lambda", 40.0);
  s.scaling.lasso_tol = reader.get_double("scaling.lasso_tol", 1e-5);
  s.scaling.lasso_max_iter =
      static_cast<int>(reader.get_long("scaling.lasso_max_iter", 3000));
  s.scaling.repeats = static_cast<int>(reader.get_long("scaling.repeats", 2));

  s.downstream.K = static_cast<int>(reader.get_long("downstream.K", 48));
  s.downstream.lambda = reader.get_double("downstream.lambda", 8.0);
  s.downstream.kappa = reader.get_double("downstream.kappa", 0.1);
  s.downstream.eta = reader.get_double("downstream.eta", 0.1);
  s.downstream.max_outer_iters =
      static_cast<int>(reader.get_long("downstream.max_outer_iters", 20));
  s.downstream.bandwidth_scale =
      reader.get_double("downstream.bandwidth_scale", 1.0);
  s.downstream.pool_group_size =
      static_cast<int>(reader.get_long("downstream.pool_group_size", 2));
  s.downstream.classifier_reg =
      reader.get_double("downstream.classifier_reg", 1.0);
  s.downstream.fisher_bins =
      static_cast<int>(reader.get_long("downstream.fisher_bins", 40));
  s.downstream.fisher_hist_max =
      reader.get_double("downstream.fisher_hist_max", 4.0);
  s.downstream_seeds =
      static_cast<int>(reader.get_long("downstream.seeds", 5));
  reader.finish();
  return s;
}

Vector load_timestamps(const std::string& path, Index n) {
  const Matrix m = read_matrix(path);
  Vector t;
  if (m.cols() == 1)
    t = m.col(0);
  else if (m.rows() == 1)
    t = m.row(0).transpose();
  else
    throw IoError("timestamps file must be a single row or column");
  if (t.size() != n)
    throw IoError("expected " + std::to_string(n) + " timestamps, got " +
                  std::to_string(t.size()));
  return t;
}

WeightsResult build_weights(const SampleMatrix& X, const RunConfig& cfg) {
  switch (cfg.train.smoothing) {
    case Smoothing::none: {
      WeightsResult r;
      r.weights = Matrix::Identity(X.cols(), X.cols());
      return r;
    }
    case Smoothing::feature:
      return compute_weights(X, cfg.train.kernel);
    case Smoothing::spatiotemporal:
    case Smoothing::temporal_only: {
      if (cfg.timestamps_path.empty())
        throw IoError("temporal smoothing needs a 'timestamps' file");
      const Vector t = load_timestamps(cfg.timestamps_path, X.cols());
      return compute_spatiotemporal_weights(X, t, cfg.train.kernel);
    }
  }
  throw std::logic_error("unreachable smoothing mode");
}

std::string out_path(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  return (fs::path(dir) / name).string();
}

void write_train_outputs(const std::string& dir, const TrainResult& result) {
  write_matrix_csv(out_path(dir, "dictionary.csv"), result.dictionary);
  write_matrix_bin(out_path(dir, "dictionary.bin"), result.dictionary);
  write_matrix_csv(out_path(dir, "codes.csv"), result.codes);
  write_codes_sparse(out_path(dir, "codes.spc"), result.codes);
  std::ofstream history(out_path(dir, "history.csv"));
  result.history.write_csv(history);
}

void print_train_summary(const TrainResult& result, const RunConfig& cfg) {
  const auto& h = result.history;
  std::printf("stop: %s after %zu iterations\n", to_string(h.stop),
              h.records.size());
  if (!h.records.empty()) {
    const auto& last = h.records.back();
    std::printf("rel_err: %.6g  objective: %.6g  incoherence: %.6g\n",
                last.rel_err, last.objective, last.incoherence);
  }
  std::printf("code_time_s: %.3f  dict_time_s: %.3f\n", h.total_code_time(),
              h.total_dict_time());
  if (h.unused_atom_replacements > 0)
    std::printf("replaced %d unused atoms\n", h.unused_atom_replacements);
  if (h.lasso_unconverged > 0)
    std::printf("warning: %lld lasso columns hit the iteration cap\n",
                static_cast<long long>(h.lasso_unconverged));
  if (cfg.train.gamma_monitor > 0.0 && h.gamma_exceeded)
    std::printf("warning: incoherence exceeded gamma_monitor = %.6g\n",
                cfg.train.gamma_monitor);
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream parts(text);
  std::string part;
  while (std::getline(parts, part, ','))
    if (!part.empty()) out.push_back(std::stod(part));
  return out;
}

int cmd_train(const std::string& config_path, std::optional<long> seed,
              bool dump_weights, const std::string& grid_lambda,
              const std::string& grid_h1) {
  RunConfig cfg = load_config(config_path);
  if (seed) cfg.train.seed = static_cast<std::uint64_t>(*seed);
  const SampleMatrix X = read_matrix(cfg.data_path);

  std::vector<double> lambdas = parse_grid(grid_lambda);
  std::vector<double> bandwidths = parse_grid(grid_h1);
  if (lambdas.empty()) lambdas = {cfg.train.lambda};
  if (bandwidths.empty()) bandwidths = {cfg.train.kernel.bandwidth_h1};
  const bool grid_mode = lambdas.size() > 1 || bandwidths.size() > 1;

  std::optional<TrainResult> best;
  RunConfig best_cfg = cfg;
  double best_err = std::numeric_limits<double>::infinity();
  std::ofstream grid_csv;
  if (grid_mode) {
    grid_csv.open(out_path(cfg.output_dir, "grid.csv"));
    grid_csv << "lambda,h1,rel_err,objective,stop\n";
  }

  for (double h1 : bandwidths) {
    RunConfig run = cfg;
    run.train.kernel.bandwidth_h1 = h1;
    const WeightsResult weights = build_weights(X, run);
    if (weights.degenerate_rows > 0)
      std::fprintf(stderr, "warning: %lld degenerate weight rows fell back to self-weight\n",
                   static_cast<long long>(weights.degenerate_rows));
    if (dump_weights && h1 == bandwidths.front())
      write_matrix_csv(out_path(cfg.output_dir, "weights.csv"), weights.weights);
    for (double lambda : lambdas) {
      run.train.lambda = lambda;
      const TrainResult result = train(X, weights.weights, run.train);
      const double err = result.history.records.empty()
                             ? 1.0
                             : result.history.records.back().rel_err;
      if (grid_mode) {
        grid_csv << lambda << ',' << h1 << ',' << err << ','
                 << (result.history.records.empty()
                         ? 0.0
                         : result.history.records.back().objective)
                 << ',' << to_string(result.history.stop) << '\n';
        std::printf("grid lambda=%.6g h1=%.6g -> rel_err=%.6g (%s)\n", lambda,
                    h1, err, to_string(result.history.stop));
      }
      if (err < best_err) {
        best_err = err;
        best = result;
        best_cfg = run;
      }
    }
  }

  write_train_outputs(cfg.output_dir, *best);
  if (grid_mode)
    std::printf("best: lambda=%.6g h1=%.6g\n", best_cfg.train.lambda,
                best_cfg.train.kernel.bandwidth_h1);
  print_train_summary(*best, best_cfg);
  return 0;
}

int cmd_code(const std::string& config_path, const std::string& dict_path,
             std::string out_name) {
  const RunConfig cfg = load_config(config_path);
  const SampleMatrix X = read_matrix(cfg.data_path);
  const Matrix D = read_matrix(dict_path);
  if (D.rows() != X.rows())
    throw IoError("dictionary rows do not match the data dimension");
  const WeightsResult weights = build_weights(X, cfg);
  const Matrix smoothed = X * weights.weights.transpose();

  CodeMatrix codes;
  if (cfg.train.coder == Coder::marginal) {
    codes = code_all_mr_smoothed(smoothed, D, cfg.train.lambda);
  } else {
    const LassoResult lasso =
        code_all_lasso_smoothed(smoothed, D, cfg.train.lambda,
                                cfg.train.lasso_tol, cfg.train.lasso_max_iter);
    if (lasso.unconverged > 0)
      std::fprintf(stderr, "warning: %lld lasso columns hit the iteration cap\n",
                   static_cast<long long>(lasso.unconverged));
    codes = lasso.codes;
  }
  if (out_name.empty()) out_name = "codes";
  write_matrix_csv(out_path(cfg.output_dir, out_name + ".csv"), codes);
  write_codes_sparse(out_path(cfg.output_dir, out_name + ".spc"), codes);
  std::printf("coded %lld samples against %lld atoms\n",
              static_cast<long long>(X.cols()), static_cast<long long>(D.cols()));
  std::printf("rel_err: %.6g\n", relative_reconstruction_error(X, D, codes));
  return 0;
}

int cmd_weights(const std::string& config_path, std::string out_name) {
  const RunConfig cfg = load_config(config_path);
  const SampleMatrix X = read_matrix(cfg.data_path);
  const WeightsResult weights = build_weights(X, cfg);
  if (weights.degenerate_rows > 0)
    std::fprintf(stderr, "warning: %lld degenerate weight rows\n",
                 static_cast<long long>(weights.degenerate_rows));
  if (out_name.empty()) out_name = "weights.csv";
  write_matrix_csv(out_path(cfg.output_dir, out_name), weights.weights);
  std::printf("wrote %s (%lld x %lld)\n",
              out_path(cfg.output_dir, out_name).c_str(),
              static_cast<long long>(X.cols()), static_cast<long long>(X.cols()));
  return 0;
}

int cmd_bench_speed(const std::string& config_path, std::optional<long> seed) {
  BenchSettings s = load_bench_config(config_path);
  if (seed) s.mixture.seed = static_cast<std::uint64_t>(*seed);
  const BenchReport report = run_speed_bench(s.mixture, s.speed);
  std::ofstream csv(out_path(s.output_dir, "speed_bench.csv"));
  report.write_csv(csv);
  report.write_csv(std::cout);
  for (const auto& m : report.methods)
    if (m.dnf)
      std::fprintf(stderr, "DNF: %s did not reach rel_err %.3g\n",
                   m.name.c_str(), s.speed.target_rel_err);
  return report.any_dnf() ? 2 : 0;
}

int cmd_bench_scaling(const std::string& config_path, std::optional<long> seed) {
  BenchSettings s = load_bench_config(config_path);
  if (seed) s.mixture.seed = static_cast<std::uint64_t>(*seed);
  const ScalingReport report = run_scaling_bench(s.mixture, s.scaling);
  std::ofstream csv(out_path(s.output_dir, "scaling_bench.csv"));
  report.write_csv(csv);
  report.write_csv(std::cout);
  std::printf("mr_exponent=%.3f lasso_exponent=%.3f\n", report.mr_exponent,
              report.lasso_exponent);
  return 0;
}

int cmd_bench_accuracy(const std::string& config_path, std::optional<long> seed,
                       bool fisher_only) {
  BenchSettings s = load_bench_config(config_path);
  if (seed) s.mixture.seed = static_cast<std::uint64_t>(*seed);
  std::ofstream csv(out_path(s.output_dir, fisher_only ? "fisher_bench.csv"
                                                       : "accuracy_bench.csv"));
  csv << "seed,accuracy_sc,accuracy_ssc,fisher_median,fisher_skipped\n";
  std::vector<double> medians;
  for (int i = 0; i < s.downstream_seeds; ++i) {
    MixtureSpec spec = s.mixture;
    spec.seed = s.mixture.seed + static_cast<std::uint64_t>(i);
    const DownstreamResult r = run_downstream_bench(spec, s.downstream);
    csv << spec.seed << ',' << r.accuracy_sc << ',' << r.accuracy_ssc << ','
        << r.fisher_median << ',' << r.fisher.skipped << '\n';
    std::printf("seed=%llu accuracy_sc=%.4f accuracy_ssc=%.4f fisher_median=%.4f\n",
                static_cast<unsigned long long>(spec.seed), r.accuracy_sc,
                r.accuracy_ssc, r.fisher_median);
    if (i == 0)
      write_histogram_csv(out_path(s.output_dir, "fisher_histogram.csv"),
                          r.fisher_histogram);
    medians.push_back(r.fisher_median);
  }
  return 0;
}

int cmd_bound(int d, int K, long n, double lambda, double gamma,
              double kernel_l1, double t, double eps, bool squared_loss) {
  BoundParams p;
  p.d = d;
  p.K = K;
  p.n = n;
  p.lambda = lambda;
  p.gamma = gamma;
  p.kernel_l1 = kernel_l1;
  p.t = t;
  p.squared_loss = squared_loss;
  const double covering = covering_log_cardinality(p, eps);
  const SlowRateBound slow = generalization_gap_slow(p);
  const FastRateBound fast = generalization_gap_fast(p);
  std::printf("covering_log_cardinality=%.12g\n", covering);
  std::printf("generalization_gap_slow=%.12g\n", slow.gap);
  std::printf("slow_log_argument_above_one=%s\n",
              slow.log_argument_above_one ? "true" : "false");
  std::printf("fast_multiplier=%.12g\n", fast.multiplier);
  std::printf("fast_additive=%.12g\n", fast.additive);
  std::printf("fast_preconditions_met=%s\n",
              fast.preconditions_met ? "true" : "false");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smooth sparse coding via marginal regression"};
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads,
                 "thread budget for per-sample parallel loops (0 = auto)");

  std::string config_path;
  std::optional<long> seed;

  auto* train_cmd = app.add_subcommand("train", "train a dictionary");
  bool dump_weights = false;
  std::string grid_lambda, grid_h1;
  train_cmd->add_option("--config", config_path, "run configuration file")
      ->required();
  train_cmd->add_option("--seed", seed, "override the configured seed");
  train_cmd->add_flag("--dump-weights", dump_weights,
                      "write the weight matrix CSV");
  train_cmd->add_option("--grid-lambda", grid_lambda,
                        "comma-separated lambda grid");
  train_cmd->add_option("--grid-h1", grid_h1, "comma-separated h1 grid");

  auto* code_cmd = app.add_subcommand("code", "code data with a saved dictionary");
  std::string dict_path, out_name;
  code_cmd->add_option("--config", config_path, "run configuration file")
      ->required();
  code_cmd->add_option("--dict", dict_path, "dictionary file (csv or bin)")
      ->required();
  code_cmd->add_option("--out", out_name, "output stem (default: codes)");

  auto* weights_cmd =
      app.add_subcommand("weights", "write the smoothing weight matrix");
  weights_cmd->add_option("--config", config_path, "run configuration file")
      ->required();
  weights_cmd->add_option("--out", out_name, "output file name");

  auto* bench_cmd = app.add_subcommand("bench", "synthetic benchmarks");
  bench_cmd->require_subcommand(1);
  auto* speed_cmd = bench_cmd->add_subcommand("speed", "four-way timing comparison");
  speed_cmd->add_option("--config", config_path, "bench configuration file")
      ->required();
  speed_cmd->add_option("--seed", seed, "override the configured seed");
  auto* scaling_cmd =
      bench_cmd->add_subcommand("scaling", "coding cost vs dictionary size");
  scaling_cmd->add_option("--config", config_path, "bench configuration file")
      ->required();
  scaling_cmd->add_option("--seed", seed, "override the configured seed");
  auto* accuracy_cmd =
      bench_cmd->add_subcommand("accuracy", "downstream classification comparison");
  accuracy_cmd->add_option("--config", config_path, "bench configuration file")
      ->required();
  accuracy_cmd->add_option("--seed", seed, "override the configured seed");

  auto* fisher_cmd =
      app.add_subcommand("fisher", "Fisher score ratio experiment");
  fisher_cmd->add_option("--config", config_path, "bench configuration file")
      ->required();
  fisher_cmd->add_option("--seed", seed, "override the configured seed");

  auto* bound_cmd =
      app.add_subcommand("bound", "generalization bound calculators");
  int b_d = 1, b_K = 1;
  long b_n = 1;
  double b_lambda = 1.0, b_gamma = 0.0, b_kernel_l1 = 1.0, b_t = 1.0,
         b_eps = 0.5;
  bool b_squared = false;
  bound_cmd->add_option("--d", b_d, "ambient dimension")->required();
  bound_cmd->add_option("--K", b_K, "dictionary size")->required();
  bound_cmd->add_option("--n", b_n, "sample count")->required();
  bound_cmd->add_option("--lambda", b_lambda, "L1 code budget")->required();
  bound_cmd->add_option("--gamma", b_gamma, "incoherence level in [0,1)");
  bound_cmd->add_option("--kernel-l1", b_kernel_l1, "|K_h1|_1 estimate")
      ->required();
  bound_cmd->add_option("--t", b_t, "confidence parameter");
  bound_cmd->add_option("--eps", b_eps, "covering radius");
  bound_cmd->add_flag("--squared-loss", b_squared,
                      "add ln 2 inside the logarithms");

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) threading::set_max_threads(threads);

  try {
    if (*train_cmd)
      return cmd_train(config_path, seed, dump_weights, grid_lambda, grid_h1);
    if (*code_cmd) return cmd_code(config_path, dict_path, out_name);
    if (*weights_cmd) return cmd_weights(config_path, out_name);
    if (*speed_cmd) return cmd_bench_speed(config_path, seed);
    if (*scaling_cmd) return cmd_bench_scaling(config_path, seed);
    if (*accuracy_cmd) return cmd_bench_accuracy(config_path, seed, false);
    if (*fisher_cmd) return cmd_bench_accuracy(config_path, seed, true);
    if (*bound_cmd)
      return cmd_bound(b_d, b_K, b_n, b_lambda, b_gamma, b_kernel_l1, b_t,
                       b_eps, b_squared);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
