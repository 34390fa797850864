// End-to-end acceptance suite. Each criterion prints a single PASS/FAIL line
// with the measured numbers; the exit code is the number of failed criteria.

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <numeric>
#include <random>
#include <vector>

#include "ssc/ssc.hpp"

using namespace ssc;

namespace {

std::mt19937& rng() {
  static std::mt19937 gen(20250809);
  return gen;
}

Matrix randn(Index rows, Index cols) {
  std::normal_distribution<double> g;
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = g(rng());
  return m;
}

WeightMatrix random_row_stochastic(Index n) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Matrix W(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) W(i, j) = u(rng());
    W.row(i) /= W.row(i).sum();
  }
  return W;
}

double median(std::vector<double> values) {
  const size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  return values[mid];
}

void report(int number, const char* name, bool pass, const std::string& details) {
  std::printf("[%d] %-28s %s  %s\n", number, name, pass ? "PASS" : "FAIL",
              details.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* format, ...) {
  char buffer[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buffer, sizeof(buffer), format, args);
  va_end(args);
  return buffer;
}

MixtureSpec bench_mixture() {
  MixtureSpec spec;
  spec.dim = 100;
  spec.separation = 3.0;
  spec.n_per_class = 1000;  // n = 2000
  spec.seed = 0;
  return spec;
}

// ---------------------------------------------------------------------------

bool criterion1_speed_ordering() {
  SpeedBenchConfig cfg;  // calibrated defaults: K=1024, target 0.10, 3 repeats
  const BenchReport report_data = run_speed_bench(bench_mixture(), cfg);
  const auto& sc_mr = report_data.method("sc_mr");
  const auto& sc_lasso = report_data.method("sc_lasso");
  const auto& ssc_mr = report_data.method("ssc_mr");
  const auto& ssc_lasso = report_data.method("ssc_lasso");
  const double sc_ratio = sc_lasso.code_time_mean / sc_mr.code_time_mean;
  const double ssc_ratio = ssc_lasso.code_time_mean / ssc_mr.code_time_mean;
  const bool pass = !report_data.any_dnf() &&
                    ssc_mr.code_time_mean < ssc_lasso.code_time_mean &&
                    sc_mr.code_time_mean < sc_lasso.code_time_mean &&
                    sc_ratio >= 2.0 && ssc_ratio >= 2.0;
  report(1, "speed ordering (paired)", pass,
         fmt("sc: mr %.2fs vs lasso %.2fs (%.1fx); ssc: mr %.2fs vs lasso %.2fs "
             "(%.1fx); dnf=%d",
             sc_mr.code_time_mean, sc_lasso.code_time_mean, sc_ratio,
             ssc_mr.code_time_mean, ssc_lasso.code_time_mean, ssc_ratio,
             report_data.any_dnf() ? 1 : 0));
  return pass;
}

bool criterion2_complexity_scaling() {
  ScalingBenchConfig cfg;  // K in {128,256,512,1024}
  MixtureSpec spec = bench_mixture();
  spec.seed = 1;
  const ScalingReport report_data = run_scaling_bench(spec, cfg);
  const double gap = report_data.lasso_exponent - report_data.mr_exponent;
  const bool pass = report_data.mr_exponent <= 1.3 && gap >= 0.4;
  report(2, "complexity scaling in K", pass,
         fmt("mr exponent %.3f (<= 1.3), lasso exponent %.3f, gap %.3f (>= 0.4)",
             report_data.mr_exponent, report_data.lasso_exponent, gap));
  return pass;
}

// Naive marginal-regression reference, straight from the definition.
Vector naive_marginal(Index i, const Matrix& X, const Matrix& D,
                      const Matrix& W) {
  Vector alphas(D.cols());
  for (Index k = 0; k < D.cols(); ++k) {
    double sum = 0.0;
    for (Index j = 0; j < X.cols(); ++j) {
      double dot = 0.0;
      for (Index r = 0; r < X.rows(); ++r) dot += D(r, k) * X(r, j);
      sum += W(i, j) * dot;
    }
    alphas(k) = sum / D.col(k).norm();
  }
  return alphas;
}

Vector naive_top_s(const Vector& alphas, double lambda) {
  std::vector<Index> order(static_cast<size_t>(alphas.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return std::abs(alphas(a)) > std::abs(alphas(b));
  });
  Vector beta = Vector::Zero(alphas.size());
  double used = 0.0;
  for (Index k : order) {
    if (used + std::abs(alphas(k)) > lambda) break;
    used += std::abs(alphas(k));
    beta(k) = alphas(k);
  }
  return beta;
}

double babel_exhaustive(const Matrix& D, int s) {
  const Index K = D.cols();
  const Matrix gram = (D.transpose() * D).cwiseAbs();
  double best = 0.0;
  for (Index i = 0; i < K; ++i) {
    std::vector<Index> others;
    for (Index j = 0; j < K; ++j)
      if (j != i) others.push_back(j);
    std::vector<int> mask(others.size(), 0);
    std::fill(mask.end() - s, mask.end(), 1);
    do {
      double total = 0.0;
      for (size_t t = 0; t < others.size(); ++t)
        if (mask[t]) total += gram(others[t], i);
      best = std::max(best, total);
    } while (std::next_permutation(mask.begin(), mask.end()));
  }
  return best;
}

double lasso_objective(const Matrix& X, const Matrix& D, const Vector& beta) {
  return (X.col(0) - D * beta).squaredNorm();
}

Vector grid_search_2d(const Matrix& X, const Matrix& D, double lambda) {
  auto objective = [&](double b0, double b1) {
    Vector beta(2);
    beta << b0, b1;
    return lasso_objective(X, D, beta);
  };
  double best0 = 0.0, best1 = 0.0, best = objective(0.0, 0.0);
  auto consider = [&](double b0, double b1) {
    if (std::abs(b0) + std::abs(b1) > lambda) return;
    const double f = objective(b0, b1);
    if (f < best) {
      best = f;
      best0 = b0;
      best1 = b1;
    }
  };
  const int boundary_steps = 4000;
  for (int s = 0; s <= boundary_steps; ++s) {
    const double t = lambda * s / boundary_steps;
    consider(t, lambda - t);
    consider(t, -(lambda - t));
    consider(-t, lambda - t);
    consider(-t, -(lambda - t));
  }
  double center0 = 0.0, center1 = 0.0, radius = lambda;
  for (int stage = 0; stage < 4; ++stage) {
    const int steps = 160;
    for (int a = -steps; a <= steps; ++a)
      for (int b = -steps; b <= steps; ++b)
        consider(center0 + radius * a / steps, center1 + radius * b / steps);
    center0 = best0;
    center1 = best1;
    radius /= steps / 4;
  }
  Vector out(2);
  out << best0, best1;
  return out;
}

bool criterion3_oracle_equivalence() {
  // a) marginal-regression codes vs the naive double-loop reference.
  std::uniform_int_distribution<int> nd(2, 20), Kd(2, 16), dd(2, 10);
  std::uniform_real_distribution<double> lam(0.3, 5.0);
  int support_mismatches = 0;
  double max_value_dev = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const Index n = nd(rng()), K = Kd(rng()), d = dd(rng());
    const Matrix X = randn(d, n);
    const Matrix D = randn(d, K);
    const Matrix W = random_row_stochastic(n);
    const double lambda = lam(rng());
    const CodeMatrix B = code_all_mr(X, D, W, lambda);
    for (Index i = 0; i < n; ++i) {
      const Vector ref = naive_top_s(naive_marginal(i, X, D, W), lambda);
      for (Index k = 0; k < K; ++k) {
        if ((ref(k) == 0.0) != (B(k, i) == 0.0)) ++support_mismatches;
        max_value_dev = std::max(max_value_dev, std::abs(ref(k) - B(k, i)));
      }
    }
  }
  const bool mr_ok = support_mismatches == 0 && max_value_dev <= 1e-12;

  // b) babel vs exhaustive subset enumeration.
  bool babel_ok = true;
  for (int K = 3; K <= 6; ++K) {
    Matrix D = randn(4, K);
    for (Index j = 0; j < K; ++j) D.col(j) /= D.col(j).norm();
    for (int s = 1; s <= std::min(4, K - 1); ++s)
      babel_ok = babel_ok && babel(D, s) == babel_exhaustive(D, s);
  }

  // c) lasso objective vs the dense 2-D grid-search oracle.
  double max_gap = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix D = randn(2, 2);
    const Matrix X = randn(2, 1);
    const LassoResult result =
        code_all_lasso(X, D, Matrix::Identity(1, 1), 0.5, 1e-12, 50000);
    const double f_solver = lasso_objective(X, D, result.codes.col(0));
    const double f_grid = lasso_objective(X, D, grid_search_2d(X, D, 0.5));
    max_gap = std::max(max_gap, std::abs(f_solver - f_grid));
  }
  const bool lasso_ok = max_gap <= 1e-6;

  const bool pass = mr_ok && babel_ok && lasso_ok;
  report(3, "oracle equivalence", pass,
         fmt("mr: %d support mismatches, max value dev %.1e; babel exact: %s; "
             "lasso vs grid max gap %.1e (<= 1e-6)",
             support_mismatches, max_value_dev, babel_ok ? "yes" : "no",
             max_gap));
  return pass;
}

bool criterion4_dictionary_update() {
  // Residual orthogonality at kappa = eta = 0.
  double worst_orth = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix X = randn(6, 40);
    const Matrix B = randn(8, 40);
    const Matrix D0 = randn(6, 8);
    const Matrix D1 = mod_update(X, B, D0, UpdatePenalties{});
    worst_orth = std::max(worst_orth, ((X - D1 * B) * B.transpose()).norm() /
                                          (X.norm() * B.norm()));
  }
  const bool orth_ok = worst_orth <= 1e-8;

  // Stationarity identity at kappa, eta > 0.
  double worst_stat = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const UpdatePenalties pens{0.4, 0.15};
    const Matrix X = randn(5, 30);
    const Matrix B = randn(7, 30);
    Matrix D0 = randn(5, 7);
    for (Index j = 0; j < 7; ++j) D0.col(j) /= D0.col(j).norm();
    const Matrix D1 = mod_update(X, B, D0, pens);
    const Matrix gram = D0.transpose() * D0;
    Matrix system = B * B.transpose() + 2.0 * pens.kappa * gram;
    system.diagonal() += 2.0 * pens.eta * gram.diagonal();
    const Matrix rhs = X * B.transpose() + 2.0 * (pens.kappa + pens.eta) * D0;
    worst_stat = std::max(worst_stat, (D1 * system - rhs).norm() / rhs.norm());
  }
  const bool stat_ok = worst_stat <= 1e-8;

  // Incoherence penalty effect over 10 seeded runs.
  std::vector<double> incoh_plain, incoh_penalized;
  for (unsigned seed = 0; seed < 10; ++seed) {
    MixtureSpec spec;
    spec.dim = 6;
    spec.separation = 3.0;
    spec.n_per_class = 30;
    spec.seed = seed;
    const MixtureData data = gen_mixture(spec);
    for (double kappa : {0.0, 1.0}) {
      TrainConfig cfg;
      cfg.K = 12;
      cfg.lambda = 2.5;
      cfg.kappa = kappa;
      cfg.smoothing = Smoothing::none;
      cfg.max_outer_iters = 25;
      cfg.rel_err_tol = 1e-8;
      cfg.seed = seed;
      const TrainResult r = train(data.X, WeightMatrix(), cfg);
      (kappa == 0.0 ? incoh_plain : incoh_penalized)
          .push_back(r.history.records.back().incoherence);
    }
  }
  const double med_plain = median(incoh_plain);
  const double med_penalized = median(incoh_penalized);
  const bool incoh_ok = med_penalized < med_plain;

  const bool pass = orth_ok && stat_ok && incoh_ok;
  report(4, "dictionary update", pass,
         fmt("orthogonality %.1e (<= 1e-8); stationarity %.1e (<= 1e-8); "
             "median incoherence kappa=1 %.2f < kappa=0 %.2f: %s",
             worst_orth, worst_stat, med_penalized, med_plain,
             incoh_ok ? "yes" : "no"));
  return pass;
}

bool criterion5_invariants() {
  // Weight rows sum to one.
  double worst_row = 0.0;
  for (unsigned seed = 40; seed < 43; ++seed) {
    std::mt19937 local(seed);
    std::normal_distribution<double> g;
    Matrix X(7, 60);
    for (Index j = 0; j < X.cols(); ++j)
      for (Index i = 0; i < X.rows(); ++i) X(i, j) = g(local);
    for (KernelFamily f : {KernelFamily::tricube, KernelFamily::gaussian,
                           KernelFamily::triangular, KernelFamily::uniform}) {
      KernelSpec spec;
      spec.family = f;
      spec.bandwidth_h1 = 2.5;
      const auto result = compute_weights(X, spec);
      for (Index i = 0; i < X.cols(); ++i)
        worst_row =
            std::max(worst_row, std::abs(result.weights.row(i).sum() - 1.0));
    }
  }
  const bool rows_ok = worst_row <= 1e-12;

  // Budget and column-norm constraints plus lasso objective monotonicity.
  Matrix X = randn(6, 40);
  for (Index j = 0; j < X.cols(); ++j) X.col(j) *= 0.9 / X.col(j).norm();
  const Matrix W = random_row_stochastic(40);

  double worst_budget = 0.0, worst_col = 0.0;
  for (Coder coder : {Coder::marginal, Coder::lasso}) {
    TrainConfig cfg;
    cfg.K = 8;
    cfg.lambda = 2.5;
    cfg.coder = coder;
    cfg.smoothing = Smoothing::feature;
    cfg.max_outer_iters = 12;
    cfg.rel_err_tol = 1e-9;
    cfg.lasso_tol = 1e-10;
    cfg.lasso_max_iter = 5000;
    const TrainResult r = train(X, W, cfg);
    for (Index i = 0; i < r.codes.cols(); ++i)
      worst_budget =
          std::max(worst_budget, r.codes.col(i).lpNorm<1>() - cfg.lambda);
    for (Index j = 0; j < r.dictionary.cols(); ++j)
      worst_col = std::max(worst_col, r.dictionary.col(j).norm() - 1.0);
  }

  bool monotone_ok = true;
  double worst_increase = 0.0;
  {
    TrainConfig cfg;
    cfg.K = 8;
    cfg.lambda = 2.5;
    cfg.coder = Coder::lasso;
    cfg.smoothing = Smoothing::none;
    cfg.max_outer_iters = 12;
    cfg.rel_err_tol = 1e-9;
    cfg.lasso_tol = 1e-10;
    cfg.lasso_max_iter = 5000;
    const TrainResult r = train(X, WeightMatrix(), cfg);
    const auto& recs = r.history.records;
    const double slack = 1e-8 * recs.front().objective;
    for (size_t i = 1; i < recs.size(); ++i) {
      worst_increase =
          std::max(worst_increase, recs[i].objective - recs[i - 1].objective);
      if (recs[i].objective > recs[i - 1].objective + slack)
        monotone_ok = false;
    }
  }
  const bool pass =
      rows_ok && worst_budget <= 1e-12 && worst_col <= 1e-12 && monotone_ok;
  report(5, "invariant suite", pass,
         fmt("row-sum dev %.1e; budget excess %.1e; column excess %.1e; "
             "lasso objective increase %.1e (within tolerance: %s)",
             worst_row, worst_budget, worst_col, worst_increase,
             monotone_ok ? "yes" : "no"));
  return pass;
}

bool criterion6_reductions() {
  const Matrix X = randn(5, 25);
  bool bitwise_ok = true;
  for (Coder coder : {Coder::marginal, Coder::lasso}) {
    TrainConfig cfg;
    cfg.K = 6;
    cfg.lambda = 2.0;
    cfg.coder = coder;
    cfg.smoothing = Smoothing::none;
    cfg.max_outer_iters = 5;
    cfg.rel_err_tol = 1e-9;
    TrainConfig ident = cfg;
    ident.smoothing = Smoothing::feature;
    const TrainResult none = train(X, WeightMatrix(), cfg);
    const TrainResult with_identity = train(X, Matrix::Identity(25, 25), ident);
    bitwise_ok = bitwise_ok && none.codes == with_identity.codes &&
                 none.dictionary == with_identity.dictionary;
  }

  // Tricube bandwidth below the smallest pairwise distance.
  const Matrix Y = randn(4, 12);
  double min_dist = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < Y.cols(); ++i)
    for (Index j = i + 1; j < Y.cols(); ++j)
      min_dist = std::min(min_dist, (Y.col(i) - Y.col(j)).norm());
  KernelSpec spec;
  spec.bandwidth_h1 = 0.9 * min_dist;
  const auto result = compute_weights(Y, spec);
  const bool identity_ok = result.weights == Matrix::Identity(12, 12);

  const bool pass = bitwise_ok && identity_ok;
  report(6, "smoothing reductions", pass,
         fmt("smoothing=none bit-identical to identity W: %s; sub-distance "
             "tricube bandwidth gives the identity: %s",
             bitwise_ok ? "yes" : "no", identity_ok ? "yes" : "no"));
  return pass;
}

bool criterion7_theory_calculators() {
  bool monotone_ok = true;
  double prev = std::numeric_limits<double>::infinity();
  for (long n : {2000L, 8000L, 40000L, 200000L}) {
    BoundParams p;
    p.d = 3;
    p.K = 6;
    p.n = n;
    p.lambda = 2.0;
    p.gamma = 0.4;
    p.kernel_l1 = 1.2;
    p.t = 2.0;
    const double gap = generalization_gap_slow(p).gap;
    monotone_ok = monotone_ok && gap < prev;
    prev = gap;
  }
  for (int knob = 0; knob < 3; ++knob) {
    double prior_slow = 0.0, prior_fast = 0.0;
    for (double value : {0.5, 1.0, 2.0, 4.0}) {
      BoundParams p;
      p.d = 3;
      p.K = 6;
      p.n = 9000;
      p.lambda = knob == 1 ? value + 1.0 : 2.0;
      p.gamma = knob == 2 ? value / 5.0 : 0.4;
      p.kernel_l1 = knob == 0 ? value : 1.2;
      p.t = 2.0;
      const double slow = generalization_gap_slow(p).gap;
      const double fast = generalization_gap_fast(p).additive;
      monotone_ok = monotone_ok && slow > prior_slow && fast > prior_fast;
      prior_slow = slow;
      prior_fast = fast;
    }
  }

  // Hand-substituted values.
  BoundParams cover;
  cover.d = 3;
  cover.K = 4;
  cover.n = 100;
  cover.lambda = 1.0;
  cover.kernel_l1 = 1.0;
  const double cover_dev =
      std::abs(covering_log_cardinality(cover, 0.5) - 12.0 * std::log(8.0));

  BoundParams slow_p;
  slow_p.d = 2;
  slow_p.K = 4;
  slow_p.n = 10000;
  slow_p.lambda = 1.0;
  slow_p.gamma = 0.5;
  slow_p.kernel_l1 = 1.0;
  slow_p.t = 1.0;
  const double slow_expected = std::sqrt(8.0 * std::log(800.0) / 20000.0) +
                               std::sqrt(1.0 / 20000.0) +
                               std::sqrt(4.0 / 10000.0);
  const double slow_dev =
      std::abs(generalization_gap_slow(slow_p).gap - slow_expected);

  BoundParams fast_p;
  fast_p.d = 5;
  fast_p.K = 8;
  fast_p.n = 5000;
  fast_p.lambda = 1.0;
  fast_p.kernel_l1 = 1.0;
  fast_p.t = 2.0;
  const double fast_expected = 9.0 * (40.0 * std::log(20000.0) + 2.0) / 5000.0;
  const double fast_dev =
      std::abs(generalization_gap_fast(fast_p).additive - fast_expected);

  const bool hands_ok =
      cover_dev <= 1e-12 && slow_dev <= 1e-12 && fast_dev <= 1e-12;
  const bool pass = monotone_ok && hands_ok;
  report(7, "theory calculators", pass,
         fmt("monotone grids: %s; hand-value deviations %.1e / %.1e / %.1e "
             "(<= 1e-12)",
             monotone_ok ? "yes" : "no", cover_dev, slow_dev, fast_dev));
  return pass;
}

bool criterion8_downstream_direction() {
  DownstreamBenchConfig cfg;  // K=48, lambda=8, pooling groups of 2
  std::vector<double> acc_sc, acc_ssc, fisher_medians;
  for (unsigned seed = 0; seed < 5; ++seed) {
    MixtureSpec spec;
    spec.dim = 20;
    spec.separation = 3.0;
    spec.n_per_class = 200;
    spec.seed = seed;
    const DownstreamResult r = run_downstream_bench(spec, cfg);
    acc_sc.push_back(r.accuracy_sc);
    acc_ssc.push_back(r.accuracy_ssc);
    fisher_medians.push_back(r.fisher_median);
  }
  const double med_sc = median(acc_sc);
  const double med_ssc = median(acc_ssc);
  const double med_fisher = median(fisher_medians);
  const bool pass = med_ssc >= med_sc - 0.02 && med_fisher >= 1.0;
  report(8, "downstream direction", pass,
         fmt("median accuracy ssc %.3f vs sc %.3f (need >= sc - 0.02); median "
             "Fisher ratio %.2f (>= 1.0)",
             med_ssc, med_sc, med_fisher));
  return pass;
}

}  // namespace

int main() {
  std::printf("acceptance suite: smooth sparse coding\n");
  int failures = 0;
  failures += criterion1_speed_ordering() ? 0 : 1;
  failures += criterion2_complexity_scaling() ? 0 : 1;
  failures += criterion3_oracle_equivalence() ? 0 : 1;
  failures += criterion4_dictionary_update() ? 0 : 1;
  failures += criterion5_invariants() ? 0 : 1;
  failures += criterion6_reductions() ? 0 : 1;
  failures += criterion7_theory_calculators() ? 0 : 1;
  failures += criterion8_downstream_direction() ? 0 : 1;
  if (failures == 0)
    std::printf("all 8 criteria passed\n");
  else
    std::printf("%d criteria FAILED\n", failures);
  return failures;
}
