#pragma once

// Synthetic-data benchmark harness: a seeded two-Gaussian mixture generator,
// the four-way (smoothing x coder) coefficient-learning speed comparison, a
// dictionary-size scaling study, and the downstream accuracy / Fisher-score
// experiments run end to end on mixtures.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "ssc/features.hpp"
#include "ssc/kernels.hpp"
#include "ssc/trainer.hpp"

namespace ssc {

struct MixtureSpec {
  int dim = 100;
  double separation = 3.0;  // ||mu_1 - mu_2||_2
  int n_per_class = 1000;
  std::uint64_t seed = 0;

  void validate() const {
    require(dim >= 1, "mixture dimension must be at least 1");
    require(separation >= 0.0, "separation must be non-negative");
    require(n_per_class >= 1, "need at least one sample per class");
  }
};

struct MixtureData {
  SampleMatrix X;           // dim x (2 * n_per_class), class blocks
  std::vector<int> labels;  // 0 for the first block, 1 for the second
};

// Two Gaussians with identity covariance and means +/- (separation/2) e_1.
// Deterministic given the seed.
inline MixtureData gen_mixture(const MixtureSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> unit;
  const Index n = 2 * static_cast<Index>(spec.n_per_class);
  MixtureData data;
  data.X.resize(spec.dim, n);
  data.labels.resize(static_cast<size_t>(n));
  for (Index j = 0; j < n; ++j) {
    const int label = j < spec.n_per_class ? 0 : 1;
    data.labels[static_cast<size_t>(j)] = label;
    for (Index i = 0; i < spec.dim; ++i) data.X(i, j) = unit(rng);
    data.X(0, j) += (label == 0 ? 0.5 : -0.5) * spec.separation;
  }
  return data;
}

inline double median_pairwise_distance(const SampleMatrix& X) {
  const Matrix d = detail::pairwise_euclidean(X);
  std::vector<double> upper;
  upper.reserve(static_cast<size_t>(X.cols() * (X.cols() - 1) / 2));
  for (Index i = 0; i < X.cols(); ++i)
    for (Index j = i + 1; j < X.cols(); ++j) upper.push_back(d(i, j));
  require(!upper.empty(), "need at least two samples");
  const size_t mid = upper.size() / 2;
  std::nth_element(upper.begin(), upper.begin() + mid, upper.end());
  return upper[mid];
}

// ---------------------------------------------------------------------------
// Speed comparison

struct SpeedBenchConfig {
  int K = 1024;
  double target_rel_err = 0.10;
  int repeats = 3;
  double lambda = 650.0;
  double kappa = 0.0;
  double eta = 0.0;
  int max_outer_iters = 25;
  double lasso_tol = 1e-5;
  int lasso_max_iter = 3000;
  KernelFamily kernel_family = KernelFamily::tricube;
  // Feature bandwidth = scale * median pairwise distance. Kept below 1 by
  // default: the convergence target is measured against the raw samples, so
  // the smoothed targets must stay close enough to them for the kernel
  // methods to reach it. Pairwise distances concentrate hard in high
  // dimension, which makes the self-weight very sensitive to this scale.
  double bandwidth_scale = 0.82;
};

struct MethodTiming {
  std::string name;
  bool dnf = false;              // some repeat failed to reach the target
  double code_time_mean = 0.0;   // coefficient-learning seconds per run
  double code_time_std = 0.0;
  double dict_time_mean = 0.0;
  double total_time_mean = 0.0;  // full training wall time
  double rel_err_mean = 0.0;
  double iters_mean = 0.0;
};

struct BenchReport {
  std::vector<MethodTiming> methods;
  double bandwidth_h1 = 0.0;

  const MethodTiming& method(const std::string& name) const {
    for (const auto& m : methods)
      if (m.name == name) return m;
    throw std::invalid_argument("no benched method named " + name);
  }
  bool any_dnf() const {
    for (const auto& m : methods)
      if (m.dnf) return true;
    return false;
  }
  void write_csv(std::ostream& out) const {
    out << "method,dnf,code_time_mean_s,code_time_std_s,dict_time_mean_s,"
           "total_time_mean_s,rel_err_mean,iters_mean\n";
    for (const auto& m : methods) {
      char line[320];
      std::snprintf(line, sizeof(line), "%s,%d,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g\n",
                    m.name.c_str(), m.dnf ? 1 : 0, m.code_time_mean,
                    m.code_time_std, m.dict_time_mean, m.total_time_mean,
                    m.rel_err_mean, m.iters_mean);
      out << line;
    }
  }
};

namespace detail {

struct RunStats {
  bool dnf = false;
  double code_time = 0.0;
  double dict_time = 0.0;
  double total_time = 0.0;
  double rel_err = 0.0;
  double iters = 0.0;
};

inline MethodTiming summarize(const std::string& name,
                              const std::vector<RunStats>& runs) {
  MethodTiming m;
  m.name = name;
  const double count = static_cast<double>(runs.size());
  for (const auto& r : runs) {
    m.dnf = m.dnf || r.dnf;
    m.code_time_mean += r.code_time / count;
    m.dict_time_mean += r.dict_time / count;
    m.total_time_mean += r.total_time / count;
    m.rel_err_mean += r.rel_err / count;
    m.iters_mean += r.iters / count;
  }
  double var = 0.0;
  for (const auto& r : runs) {
    const double dev = r.code_time - m.code_time_mean;
    var += dev * dev / count;
  }
  m.code_time_std = std::sqrt(var);
  return m;
}

}  // namespace detail

// Train all four method combinations to the same relative-error target on
// identical data and identical initial dictionaries, repeat, and report
// coefficient-learning times. Weight-matrix construction and smoothing
// precomputation are excluded from the coding times, mirroring how the
// comparison is framed.
inline BenchReport run_speed_bench(const MixtureSpec& spec,
                                   const SpeedBenchConfig& cfg) {
  spec.validate();
  require(cfg.repeats >= 1, "repeats must be at least 1");

  struct MethodDef {
    const char* name;
    Coder coder;
    bool smoothing;
  };
  const MethodDef defs[4] = {{"sc_lasso", Coder::lasso, false},
                             {"sc_mr", Coder::marginal, false},
                             {"ssc_lasso", Coder::lasso, true},
                             {"ssc_mr", Coder::marginal, true}};
  std::vector<std::vector<detail::RunStats>> stats(4);

  BenchReport report;
  for (int rep = 0; rep < cfg.repeats; ++rep) {
    MixtureSpec rep_spec = spec;
    rep_spec.seed = spec.seed + static_cast<std::uint64_t>(rep);
    const MixtureData data = gen_mixture(rep_spec);

    KernelSpec kernel;
    kernel.family = cfg.kernel_family;
    kernel.bandwidth_h1 =
        cfg.bandwidth_scale * median_pairwise_distance(data.X);
    report.bandwidth_h1 = kernel.bandwidth_h1;
    const WeightMatrix W = compute_weights(data.X, kernel).weights;

    for (int m = 0; m < 4; ++m) {
      TrainConfig train_cfg;
      train_cfg.K = cfg.K;
      train_cfg.lambda = cfg.lambda;
      train_cfg.kappa = cfg.kappa;
      train_cfg.eta = cfg.eta;
      train_cfg.max_outer_iters = cfg.max_outer_iters;
      train_cfg.rel_err_tol = cfg.target_rel_err;
      train_cfg.coder = defs[m].coder;
      train_cfg.smoothing =
          defs[m].smoothing ? Smoothing::feature : Smoothing::none;
      train_cfg.kernel = kernel;
      train_cfg.lasso_tol = cfg.lasso_tol;
      train_cfg.lasso_max_iter = cfg.lasso_max_iter;
      train_cfg.seed = rep_spec.seed;  // same X, same seed -> same D0

      const auto t0 = std::chrono::steady_clock::now();
      const TrainResult result = train(data.X, W, train_cfg);
      const auto t1 = std::chrono::steady_clock::now();

      detail::RunStats run;
      run.dnf = result.history.stop != StopReason::converged;
      run.code_time = result.history.total_code_time();
      run.dict_time = result.history.total_dict_time();
      run.total_time = std::chrono::duration<double>(t1 - t0).count();
      run.rel_err = result.history.records.empty()
                        ? 1.0
                        : result.history.records.back().rel_err;
      run.iters = static_cast<double>(result.history.records.size());
      stats[static_cast<size_t>(m)].push_back(run);
    }
  }
  for (int m = 0; m < 4; ++m)
    report.methods.push_back(
        detail::summarize(defs[m].name, stats[static_cast<size_t>(m)]));
  return report;
}

// ---------------------------------------------------------------------------
// Coding-cost scaling in the dictionary size

struct ScalingBenchConfig {
  std::vector<int> dictionary_sizes = {128, 256, 512, 1024};
  // Small enough that the L1 budget binds at every size; a slack budget
  // turns the small-K lasso into unconstrained least squares and muddies
  // the fit.
  double lambda = 40.0;
  double lasso_tol = 1e-5;
  int lasso_max_iter = 6000;
  int repeats = 2;
};

struct ScalingReport {
  std::vector<int> dictionary_sizes;
  std::vector<double> mr_seconds;     // best of repeats, one coding pass
  std::vector<double> lasso_seconds;  // best of repeats, one coding pass
  double mr_exponent = 0.0;           // log-log least-squares slope
  double lasso_exponent = 0.0;

  void write_csv(std::ostream& out) const {
    out << "K,mr_seconds,lasso_seconds\n";
    for (size_t i = 0; i < dictionary_sizes.size(); ++i)
      out << dictionary_sizes[i] << ',' << mr_seconds[i] << ','
          << lasso_seconds[i] << '\n';
    out << "# mr_exponent=" << mr_exponent
        << " lasso_exponent=" << lasso_exponent << '\n';
  }
};

namespace detail {

inline double loglog_slope(const std::vector<int>& x,
                           const std::vector<double>& y) {
  const size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    const double lx = std::log(static_cast<double>(x[i]));
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  require(denom > 0.0, "need at least two distinct sizes for a slope fit");
  return (n * sxy - sx * sy) / denom;
}

}  // namespace detail

// Time a single cold coding pass per coder per dictionary size on fixed data
// and fit the log-log growth exponents.
inline ScalingReport run_scaling_bench(const MixtureSpec& spec,
                                       const ScalingBenchConfig& cfg) {
  spec.validate();
  require(cfg.dictionary_sizes.size() >= 2, "need at least two sizes");
  require(cfg.repeats >= 1, "repeats must be at least 1");
  const MixtureData data = gen_mixture(spec);

  ScalingReport report;
  report.dictionary_sizes = cfg.dictionary_sizes;
  for (const int K : cfg.dictionary_sizes) {
    const Matrix D = init_dictionary(data.X, K, spec.seed);
    double best_mr = std::numeric_limits<double>::infinity();
    double best_lasso = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < cfg.repeats; ++rep) {
      auto t0 = std::chrono::steady_clock::now();
      const CodeMatrix mr = code_all_mr_smoothed(data.X, D, cfg.lambda);
      auto t1 = std::chrono::steady_clock::now();
      best_mr =
          std::min(best_mr, std::chrono::duration<double>(t1 - t0).count());
      require(mr.allFinite(), "marginal codes must be finite");

      t0 = std::chrono::steady_clock::now();
      const LassoResult lasso = code_all_lasso_smoothed(
          data.X, D, cfg.lambda, cfg.lasso_tol, cfg.lasso_max_iter);
      t1 = std::chrono::steady_clock::now();
      best_lasso =
          std::min(best_lasso, std::chrono::duration<double>(t1 - t0).count());
      require(lasso.codes.allFinite(), "lasso codes must be finite");
    }
    report.mr_seconds.push_back(best_mr);
    report.lasso_seconds.push_back(best_lasso);
  }
  report.mr_exponent =
      detail::loglog_slope(report.dictionary_sizes, report.mr_seconds);
  report.lasso_exponent =
      detail::loglog_slope(report.dictionary_sizes, report.lasso_seconds);
  return report;
}

// ---------------------------------------------------------------------------
// Downstream accuracy and Fisher-score comparison

struct DownstreamBenchConfig {
  int K = 48;
  double lambda = 8.0;
  double kappa = 0.1;
  double eta = 0.1;
  int max_outer_iters = 20;
  double rel_err_tol = 0.02;
  double bandwidth_scale = 1.0;  // median pairwise distance
  int pool_group_size = 2;
  double classifier_reg = 1.0;
  int fisher_bins = 40;
  double fisher_hist_max = 4.0;
};

struct DownstreamResult {
  double accuracy_sc = 0.0;
  double accuracy_ssc = 0.0;
  FisherRatioResult fisher;           // SSC score over SC score per dimension
  double fisher_median = 0.0;         // over usable dimensions
  std::vector<HistogramBin> fisher_histogram;
};

namespace detail {

struct Split {
  SampleMatrix train, test;
  std::vector<int> train_labels, test_labels;
};

// First half of each class block trains, second half tests.
inline Split split_mixture(const MixtureData& data, int n_per_class) {
  const Index half = n_per_class / 2;
  const Index train_n = 2 * half;
  const Index test_n = 2 * (n_per_class - half);
  Split s;
  s.train.resize(data.X.rows(), train_n);
  s.test.resize(data.X.rows(), test_n);
  Index tr = 0, te = 0;
  for (int c = 0; c < 2; ++c) {
    const Index base = static_cast<Index>(c) * n_per_class;
    for (Index j = 0; j < n_per_class; ++j) {
      if (j < half) {
        s.train.col(tr++) = data.X.col(base + j);
        s.train_labels.push_back(c);
      } else {
        s.test.col(te++) = data.X.col(base + j);
        s.test_labels.push_back(c);
      }
    }
  }
  return s;
}

// Contiguous same-class groups of at most `size` columns.
inline std::vector<std::vector<Index>> contiguous_groups(
    const std::vector<int>& labels, int size) {
  std::vector<std::vector<Index>> groups;
  Index i = 0;
  const Index n = static_cast<Index>(labels.size());
  while (i < n) {
    std::vector<Index> group;
    const int label = labels[static_cast<size_t>(i)];
    while (i < n && labels[static_cast<size_t>(i)] == label &&
           static_cast<int>(group.size()) < size)
      group.push_back(i++);
    groups.push_back(std::move(group));
  }
  return groups;
}

inline std::vector<int> group_labels(
    const std::vector<int>& labels,
    const std::vector<std::vector<Index>>& groups) {
  std::vector<int> out;
  out.reserve(groups.size());
  for (const auto& g : groups)
    out.push_back(labels[static_cast<size_t>(g.front())]);
  return out;
}

}  // namespace detail

// Train an SC and an SSC pipeline on the same split of a mixture, pool the
// codes, classify the held-out pooled features, and compare per-dimension
// Fisher scores of the pooled representations.
inline DownstreamResult run_downstream_bench(const MixtureSpec& spec,
                                             const DownstreamBenchConfig& cfg) {
  spec.validate();
  const MixtureData data = gen_mixture(spec);
  const auto split = detail::split_mixture(data, spec.n_per_class);

  TrainConfig base;
  base.K = cfg.K;
  base.lambda = cfg.lambda;
  base.kappa = cfg.kappa;
  base.eta = cfg.eta;
  base.max_outer_iters = cfg.max_outer_iters;
  base.rel_err_tol = cfg.rel_err_tol;
  base.coder = Coder::marginal;
  base.seed = spec.seed;

  const auto pooled_sets = [&](bool smoothing)
      -> std::pair<LabeledSet, LabeledSet> {  // train, test
    TrainConfig cfg_run = base;
    WeightMatrix W_train, W_test;
    Matrix smoothed_test;
    if (smoothing) {
      KernelSpec kernel;
      kernel.bandwidth_h1 =
          cfg.bandwidth_scale * median_pairwise_distance(split.train);
      cfg_run.smoothing = Smoothing::feature;
      cfg_run.kernel = kernel;
      W_train = compute_weights(split.train, kernel).weights;
      W_test = compute_weights(split.test, kernel).weights;
      smoothed_test = split.test * W_test.transpose();
    } else {
      cfg_run.smoothing = Smoothing::none;
      smoothed_test = split.test;
    }
    const TrainResult trained = train(split.train, W_train, cfg_run);
    const CodeMatrix test_codes =
        code_all_mr_smoothed(smoothed_test, trained.dictionary, cfg.lambda);

    const auto train_groups =
        detail::contiguous_groups(split.train_labels, cfg.pool_group_size);
    const auto test_groups =
        detail::contiguous_groups(split.test_labels, cfg.pool_group_size);
    LabeledSet train_set{max_pool(trained.codes, train_groups),
                         detail::group_labels(split.train_labels, train_groups)};
    LabeledSet test_set{max_pool(test_codes, test_groups),
                        detail::group_labels(split.test_labels, test_groups)};
    return {std::move(train_set), std::move(test_set)};
  };

  const auto [sc_train, sc_test] = pooled_sets(false);
  const auto [ssc_train, ssc_test] = pooled_sets(true);

  DownstreamResult out;
  {
    const ClassifierModel sc_model =
        train_linear_classifier(sc_train, cfg.classifier_reg);
    out.accuracy_sc =
        accuracy(classify(sc_model, sc_test.features), sc_test.labels);
    const ClassifierModel ssc_model =
        train_linear_classifier(ssc_train, cfg.classifier_reg);
    out.accuracy_ssc =
        accuracy(classify(ssc_model, ssc_test.features), ssc_test.labels);
  }

  const auto stack = [](const LabeledSet& a, const LabeledSet& b) {
    LabeledSet all;
    all.features.resize(a.features.rows() + b.features.rows(),
                        a.features.cols());
    all.features << a.features, b.features;
    all.labels = a.labels;
    all.labels.insert(all.labels.end(), b.labels.begin(), b.labels.end());
    return all;
  };
  const Vector sc_scores = fisher_scores(stack(sc_train, sc_test));
  const Vector ssc_scores = fisher_scores(stack(ssc_train, ssc_test));
  out.fisher = fisher_ratio(ssc_scores, sc_scores);

  std::vector<double> usable;
  for (Index d = 0; d < out.fisher.ratios.size(); ++d)
    if (std::isfinite(out.fisher.ratios(d)))
      usable.push_back(out.fisher.ratios(d));
  require(!usable.empty(), "no usable Fisher-ratio dimensions");
  const size_t mid = usable.size() / 2;
  std::nth_element(usable.begin(), usable.begin() + mid, usable.end());
  out.fisher_median = usable[mid];
  out.fisher_histogram =
      histogram(out.fisher.ratios, cfg.fisher_bins, 0.0, cfg.fisher_hist_max);
  return out;
}

struct AccuracyResult {
  double accuracy_sc = 0.0;
  double accuracy_ssc = 0.0;
};

inline AccuracyResult run_accuracy_bench(const MixtureSpec& spec,
                                         const DownstreamBenchConfig& cfg) {
  const DownstreamResult r = run_downstream_bench(spec, cfg);
  return {r.accuracy_sc, r.accuracy_ssc};
}

inline DownstreamResult run_fisher_bench(const MixtureSpec& spec,
                                         const DownstreamBenchConfig& cfg) {
  return run_downstream_bench(spec, cfg);
}

}  // namespace ssc
