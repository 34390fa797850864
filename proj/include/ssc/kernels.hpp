#pragma once

// Smoothing kernels and row-stochastic weight matrices. Weights follow the
// Nadaraya-Watson pattern: raw entry (i,j) is K1(rho(x_j, x_i)/h1), optionally
// multiplied by a temporal factor K2((t_j - t_i)/h2), and each row is
// normalized to sum to one. Kernel normalizing constants cancel under that
// row normalization, so the un-normalized functional forms are used
// throughout.

#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include "ssc/core.hpp"

namespace ssc {

enum class KernelFamily { tricube, gaussian, triangular, uniform };

inline const char* to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::tricube: return "tricube";
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::triangular: return "triangular";
    case KernelFamily::uniform: return "uniform";
  }
  return "?";
}

inline KernelFamily kernel_family_from_string(const std::string& s) {
  if (s == "tricube") return KernelFamily::tricube;
  if (s == "gaussian") return KernelFamily::gaussian;
  if (s == "triangular") return KernelFamily::triangular;
  if (s == "uniform") return KernelFamily::uniform;
  throw std::invalid_argument(
      "unknown kernel family '" + s +
      "' (expected tricube, gaussian, triangular or uniform)");
}

// Un-normalized kernel value K(u). Total in u; symmetric; non-negative;
// compactly supported families are exactly zero for |u| > 1.
inline double eval_kernel(KernelFamily family, double u) {
  const double a = std::abs(u);
  switch (family) {
    case KernelFamily::tricube: {
      if (a > 1.0) return 0.0;
      const double w = 1.0 - a * a * a;
      return w * w * w;
    }
    case KernelFamily::gaussian:
      return std::exp(-0.5 * u * u);
    case KernelFamily::triangular:
      return a > 1.0 ? 0.0 : 1.0 - a;
    case KernelFamily::uniform:
      return a > 1.0 ? 0.0 : 1.0;
  }
  return 0.0;
}

struct TemporalKernel {
  KernelFamily family = KernelFamily::tricube;
  double bandwidth_h2 = 1.0;
};

struct KernelSpec {
  KernelFamily family = KernelFamily::tricube;
  double bandwidth_h1 = 1.0;
  std::optional<TemporalKernel> temporal;
  // Drop the feature-distance factor and smooth on timestamps alone.
  bool temporal_only = false;

  void validate() const {
    require(bandwidth_h1 > 0.0, "kernel bandwidth h1 must be positive");
    if (temporal)
      require(temporal->bandwidth_h2 > 0.0,
              "temporal bandwidth h2 must be positive");
  }
};

// Distance between two samples. Empty function = Euclidean.
using DistanceFn = std::function<double(const Eigen::Ref<const Vector>&,
                                        const Eigen::Ref<const Vector>&)>;

struct WeightsResult {
  WeightMatrix weights;
  // Rows whose raw kernel mass was entirely zero and that fell back to a
  // unit self-weight. Cannot happen when rho(x,x)=0, since K(0) > 0 for
  // every family; reported for custom distances.
  Index degenerate_rows = 0;
};

namespace detail {

// All pairwise Euclidean distances via the Gram-matrix identity, clamped at
// zero against cancellation. Exactly symmetric with a zero diagonal.
inline Matrix pairwise_euclidean(const SampleMatrix& X) {
  const Index n = X.cols();
  const Matrix gram = X.transpose() * X;
  Matrix dist(n, n);
  for (Index i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (Index j = i + 1; j < n; ++j) {
      const double sq = gram(i, i) + gram(j, j) - 2.0 * gram(i, j);
      dist(i, j) = std::sqrt(std::max(sq, 0.0));
      dist(j, i) = dist(i, j);
    }
  }
  return dist;
}

inline Matrix pairwise_distances(const SampleMatrix& X, const DistanceFn& fn) {
  if (!fn) return pairwise_euclidean(X);
  const Index n = X.cols();
  Matrix d(n, n);
  for (Index i = 0; i < n; ++i) {
    d(i, i) = fn(X.col(i), X.col(i));
    for (Index j = i + 1; j < n; ++j) {
      d(i, j) = fn(X.col(i), X.col(j));
      d(j, i) = d(i, j);
    }
  }
  return d;
}

inline WeightsResult normalize_rows(Matrix raw) {
  const Index n = raw.rows();
  Index degenerate = 0;
  for (Index i = 0; i < n; ++i) {
    const double s = raw.row(i).sum();
    if (s > 0.0 && std::isfinite(s)) {
      raw.row(i) /= s;
    } else {
      raw.row(i).setZero();
      raw(i, i) = 1.0;
      ++degenerate;
    }
  }
  return {std::move(raw), degenerate};
}

}  // namespace detail

// Raw (pre-normalization) kernel matrix: entry (i,j) = K1(rho(x_j,x_i)/h1).
// Symmetric whenever the distance is.
inline Matrix raw_kernel_matrix(const SampleMatrix& X, const KernelSpec& spec,
                                const DistanceFn& distance = {}) {
  spec.validate();
  require(X.cols() >= 1, "need at least one sample");
  Matrix raw = detail::pairwise_distances(X, distance);
  const double h1 = spec.bandwidth_h1;
  for (Index j = 0; j < raw.cols(); ++j)
    for (Index i = 0; i < raw.rows(); ++i)
      raw(i, j) = eval_kernel(spec.family, raw(i, j) / h1);
  return raw;
}

// Row-stochastic feature-similarity weights. Self-weight (j = i) is included.
inline WeightsResult compute_weights(const SampleMatrix& X,
                                     const KernelSpec& spec,
                                     const DistanceFn& distance = {}) {
  return detail::normalize_rows(raw_kernel_matrix(X, spec, distance));
}

// Row-stochastic spatio-temporal weights: the feature factor above times
// K2((t_j - t_i)/h2), or the temporal factor alone when spec.temporal_only.
inline WeightsResult compute_spatiotemporal_weights(
    const SampleMatrix& X, const Vector& timestamps, const KernelSpec& spec,
    const DistanceFn& distance = {}) {
  spec.validate();
  require(spec.temporal.has_value(),
          "spatio-temporal weights need a temporal kernel in the spec");
  require(timestamps.size() == X.cols(),
          "one timestamp per sample required");
  const Index n = X.cols();
  Matrix raw;
  if (spec.temporal_only) {
    raw = Matrix::Ones(n, n);
  } else {
    raw = raw_kernel_matrix(X, spec, distance);
  }
  const auto& tk = *spec.temporal;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      raw(i, j) *= eval_kernel(tk.family,
                               (timestamps(j) - timestamps(i)) / tk.bandwidth_h2);
  return detail::normalize_rows(std::move(raw));
}

// Empirical Monte-Carlo estimate of |K_h1|_1 = integral of (1/h1) K1(rho/h1)
// against the sample distribution: the mean of (1/h1) K1(rho(x_i,x_j)/h1)
// over all ordered sample pairs. Feeds the generalization-bound calculators.
inline double kernel_l1_norm_estimate(const KernelSpec& spec,
                                      const SampleMatrix& X,
                                      const DistanceFn& distance = {}) {
  const Matrix raw = raw_kernel_matrix(X, spec, distance);
  const double n = static_cast<double>(X.cols());
  return raw.sum() / (n * n * spec.bandwidth_h1);
}

}  // namespace ssc
