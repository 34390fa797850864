#pragma once

// Alternating minimization: coding step (marginal regression or lasso)
// against the current dictionary, then the penalized MOD dictionary step,
// until the relative reconstruction error target is met or iterations run
// out. Smoothing enters only through the precomputed weight matrix; with
// smoothing disabled the loop reproduces standard sparse coding.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "ssc/coding.hpp"
#include "ssc/dictionary.hpp"
#include "ssc/kernels.hpp"

namespace ssc {

enum class Coder { marginal, lasso };
enum class Smoothing { none, feature, spatiotemporal, temporal_only };
enum class MrThreshold { l1_budget, hard };

inline const char* to_string(Coder c) {
  return c == Coder::marginal ? "marginal" : "lasso";
}
inline const char* to_string(Smoothing s) {
  switch (s) {
    case Smoothing::none: return "none";
    case Smoothing::feature: return "feature";
    case Smoothing::spatiotemporal: return "spatiotemporal";
    case Smoothing::temporal_only: return "temporal_only";
  }
  return "?";
}

struct TrainConfig {
  int K = 0;
  double lambda = 0.0;
  double kappa = 0.0;
  double eta = 0.0;
  // Incoherence budget gamma from the constraint set; monitored against the
  // recorded ||D^T D - I||_F^2 values, never projected. 0 disables the check.
  double gamma_monitor = 0.0;
  int max_outer_iters = 100;
  double rel_err_tol = 1e-2;
  Coder coder = Coder::marginal;
  Smoothing smoothing = Smoothing::feature;
  KernelSpec kernel;
  MrThreshold mr_threshold = MrThreshold::l1_budget;
  double hard_level = 0.0;  // used by MrThreshold::hard
  double lasso_tol = 1e-8;
  int lasso_max_iter = 2000;
  std::uint64_t seed = 0;

  void validate() const {
    require(K >= 1, "K must be at least 1");
    require(lambda > 0.0, "lambda must be positive");
    require(kappa >= 0.0 && eta >= 0.0, "kappa and eta must be non-negative");
    require(gamma_monitor >= 0.0, "gamma_monitor must be non-negative");
    require(max_outer_iters >= 0, "max_outer_iters must be non-negative");
    require(rel_err_tol > 0.0 && rel_err_tol < 1.0,
            "rel_err_tol must lie in (0,1)");
    require(lasso_tol > 0.0, "lasso_tol must be positive");
    require(lasso_max_iter >= 1, "lasso_max_iter must be at least 1");
    require(hard_level >= 0.0, "hard_level must be non-negative");
    kernel.validate();
  }
};

struct IterationRecord {
  int iter = 0;
  double rel_err = 0.0;
  double objective = 0.0;    // smoothed objective at the post-projection iterate
  double incoherence = 0.0;  // ||D^T D - I||_F^2
  double code_time_s = 0.0;
  double dict_time_s = 0.0;
};

enum class StopReason { converged, max_iters, stalled };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::converged: return "converged";
    case StopReason::max_iters: return "max_iters";
    case StopReason::stalled: return "stalled";
  }
  return "?";
}

struct TrainHistory {
  std::vector<IterationRecord> records;
  StopReason stop = StopReason::max_iters;
  int unused_atom_replacements = 0;
  Index lasso_unconverged = 0;  // accumulated over coding passes
  bool gamma_exceeded = false;  // any iterate above gamma_monitor

  double total_code_time() const {
    double t = 0.0;
    for (const auto& r : records) t += r.code_time_s;
    return t;
  }
  double total_dict_time() const {
    double t = 0.0;
    for (const auto& r : records) t += r.dict_time_s;
    return t;
  }

  void write_csv(std::ostream& out) const {
    out << "iter,rel_err,objective,incoherence,code_time_s,dict_time_s\n";
    char line[256];
    for (const auto& r : records) {
      std::snprintf(line, sizeof(line),
                    "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.iter, r.rel_err,
                    r.objective, r.incoherence, r.code_time_s, r.dict_time_s);
      out << line;
    }
  }
};

struct TrainResult {
  Matrix dictionary;
  CodeMatrix codes;
  TrainHistory history;
};

// ||X - D B||_F / ||X||_F.
inline double relative_reconstruction_error(const SampleMatrix& X,
                                            const Matrix& D,
                                            const CodeMatrix& B) {
  const double xnorm = X.norm();
  require(xnorm > 0.0, "relative error undefined for a zero data matrix");
  return (X - D * B).norm() / xnorm;
}

// The smoothed objective sum_i sum_j W(i,j) ||x_j - D beta_i||_2^2, expanded
// so no n^2 reconstruction pass is needed:
//   sum_j (col-sum_j of W) ||x_j||^2 - 2 <X W^T, D B> + ||D B||_F^2.
inline double smooth_objective(const SampleMatrix& X, const WeightMatrix& W,
                               const Matrix& D, const CodeMatrix& B) {
  require(W.rows() == X.cols() && W.cols() == X.cols(),
          "weight matrix must be n x n");
  require(B.cols() == X.cols(), "one code per sample required");
  const Vector col_mass = W.colwise().sum();
  const Vector row_mass = W.rowwise().sum();
  const Vector sample_sq = X.colwise().squaredNorm();
  const Matrix recon = D * B;
  const Matrix smoothed = X * W.transpose();
  return col_mass.dot(sample_sq) - 2.0 * smoothed.cwiseProduct(recon).sum() +
         row_mass.dot(recon.colwise().squaredNorm().eval());
}

namespace detail {

struct SmoothObjectiveParts {
  double const_term = 0.0;  // sum_j (col-sum_j of W) ||x_j||^2
};

inline double objective_from_parts(const SmoothObjectiveParts& parts,
                                   const Matrix& smoothed, const Matrix& recon) {
  return parts.const_term - 2.0 * smoothed.cwiseProduct(recon).sum() +
         recon.squaredNorm();
}

}  // namespace detail

// Run the alternating loop. W must be row-stochastic with one row per sample;
// it is ignored (treated as identity) when cfg.smoothing == Smoothing::none.
// Deterministic given cfg.seed.
inline TrainResult train(const SampleMatrix& X, const WeightMatrix& W,
                         const TrainConfig& cfg) {
  using clock = std::chrono::steady_clock;
  cfg.validate();
  require(X.size() > 0, "data matrix must be non-empty");
  if (!X.allFinite())
    throw std::invalid_argument("train: data matrix contains non-finite values");
  const bool smoothing = cfg.smoothing != Smoothing::none;
  if (smoothing) {
    require(W.rows() == X.cols() && W.cols() == X.cols(),
            "weight matrix must be n x n");
    for (Index i = 0; i < W.rows(); ++i) {
      require(std::abs(W.row(i).sum() - 1.0) <= 1e-9,
              "weight matrix row " + std::to_string(i) + " does not sum to 1");
      require((W.row(i).array() >= 0.0).all(),
              "weight matrix has negative entries in row " + std::to_string(i));
    }
  }
  const double xnorm = X.norm();
  require(xnorm > 0.0, "data matrix must be non-zero");

  // Smoothed samples are fixed across the loop; compute them once.
  const Matrix smoothed = smoothing ? Matrix(X * W.transpose()) : X;
  detail::SmoothObjectiveParts parts;
  parts.const_term =
      smoothing
          ? W.colwise().sum().dot(X.colwise().squaredNorm().eval())
          : X.squaredNorm();

  TrainResult result;
  result.dictionary = init_dictionary(X, cfg.K, cfg.seed);
  const UpdatePenalties pens{cfg.kappa, cfg.eta};

  auto run_coder = [&](const CodeMatrix* warm) -> CodeMatrix {
    if (cfg.coder == Coder::marginal) {
      if (cfg.mr_threshold == MrThreshold::hard) {
        const Matrix Dn = detail::normalize_columns(result.dictionary);
        const Matrix alphas = Dn.transpose() * smoothed;
        CodeMatrix codes(cfg.K, X.cols());
        for (Index i = 0; i < alphas.cols(); ++i)
          codes.col(i) = threshold_hard(alphas.col(i), cfg.hard_level);
        return codes;
      }
      return code_all_mr_smoothed(smoothed, result.dictionary, cfg.lambda);
    }
    LassoResult lasso = code_all_lasso_smoothed(
        smoothed, result.dictionary, cfg.lambda, cfg.lasso_tol,
        cfg.lasso_max_iter, warm);
    result.history.lasso_unconverged += lasso.unconverged;
    return std::move(lasso.codes);
  };

  if (cfg.max_outer_iters == 0) {
    result.codes = run_coder(nullptr);
    result.history.stop = StopReason::max_iters;
    return result;
  }

  bool have_codes = false;

  for (int iter = 1; iter <= cfg.max_outer_iters; ++iter) {
    const auto t0 = clock::now();
    result.codes = run_coder(have_codes ? &result.codes : nullptr);
    have_codes = true;
    const auto t1 = clock::now();

    bool ridged = false;
    result.dictionary =
        dictionary_update(X, result.codes, result.dictionary, pens, &ridged);
    result.history.unused_atom_replacements +=
        replace_unused_atoms(result.dictionary, X, result.codes);
    const auto t2 = clock::now();

    const Matrix recon = result.dictionary * result.codes;
    IterationRecord rec;
    rec.iter = iter;
    rec.rel_err = (X - recon).norm() / xnorm;
    rec.objective = detail::objective_from_parts(parts, smoothed, recon);
    rec.incoherence = incoherence(result.dictionary);
    rec.code_time_s = std::chrono::duration<double>(t1 - t0).count();
    rec.dict_time_s = std::chrono::duration<double>(t2 - t1).count();
    if (!std::isfinite(rec.rel_err) || !std::isfinite(rec.objective))
      throw std::runtime_error("training diverged at iteration " +
                               std::to_string(iter));
    if (cfg.gamma_monitor > 0.0 && rec.incoherence > cfg.gamma_monitor)
      result.history.gamma_exceeded = true;
    result.history.records.push_back(rec);

    if (rec.rel_err <= cfg.rel_err_tol) {
      result.history.stop = StopReason::converged;
      return result;
    }
    // Stagnation guard: under 1e-6 absolute improvement across a 10-iteration
    // window means we are grinding without progress.
    const auto& recs = result.history.records;
    if (recs.size() > 10 &&
        recs[recs.size() - 11].rel_err - rec.rel_err < 1e-6) {
      result.history.stop = StopReason::stalled;
      return result;
    }
  }
  result.history.stop = StopReason::max_iters;
  return result;
}

}  // namespace ssc
