#pragma once

// Downstream representation utilities: max pooling of code columns into
// item-level features, per-dimension Fisher discriminant scores, score
// ratios, a one-vs-all ridge classifier for desk-scale accuracy checks, and
// a histogram helper for exporting score-ratio distributions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "ssc/core.hpp"

namespace ssc {

struct LabeledSet {
  Matrix features;          // one item per row
  std::vector<int> labels;  // class ids in [0, C)
};

// Coordinate-wise maximum over each group of code columns; one pooled row
// per group. Groups must be non-empty and disjoint.
inline Matrix max_pool(const CodeMatrix& B,
                       const std::vector<std::vector<Index>>& groups) {
  require(!groups.empty(), "need at least one pooling group");
  std::vector<char> seen(static_cast<size_t>(B.cols()), 0);
  Matrix pooled(static_cast<Index>(groups.size()), B.rows());
  for (size_t g = 0; g < groups.size(); ++g) {
    const auto& group = groups[g];
    require(!group.empty(), "pooling group " + std::to_string(g) + " is empty");
    Vector acc;
    for (Index col : group) {
      require(col >= 0 && col < B.cols(), "pooling index out of range");
      require(!seen[static_cast<size_t>(col)],
              "pooling groups must be disjoint");
      seen[static_cast<size_t>(col)] = 1;
      if (acc.size() == 0)
        acc = B.col(col);
      else
        acc = acc.cwiseMax(B.col(col));
    }
    pooled.row(static_cast<Index>(g)) = acc.transpose();
  }
  return pooled;
}

namespace detail {

struct ClassStats {
  std::vector<Index> counts;
  Matrix means;      // C x K
  Matrix variances;  // C x K, biased (divide by class count)
};

inline ClassStats per_class_stats(const LabeledSet& data, int num_classes) {
  const Index m = data.features.rows();
  const Index dims = data.features.cols();
  ClassStats st;
  st.counts.assign(static_cast<size_t>(num_classes), 0);
  st.means = Matrix::Zero(num_classes, dims);
  st.variances = Matrix::Zero(num_classes, dims);
  for (Index i = 0; i < m; ++i)
    ++st.counts[static_cast<size_t>(data.labels[static_cast<size_t>(i)])];
  for (Index i = 0; i < m; ++i)
    st.means.row(data.labels[static_cast<size_t>(i)]) += data.features.row(i);
  for (int c = 0; c < num_classes; ++c)
    st.means.row(c) /= static_cast<double>(st.counts[static_cast<size_t>(c)]);
  for (Index i = 0; i < m; ++i) {
    const int c = data.labels[static_cast<size_t>(i)];
    st.variances.row(c) +=
        (data.features.row(i) - st.means.row(c)).array().square().matrix();
  }
  for (int c = 0; c < num_classes; ++c)
    st.variances.row(c) /= static_cast<double>(st.counts[static_cast<size_t>(c)]);
  return st;
}

inline int validated_class_count(const LabeledSet& data, Index min_per_class) {
  require(data.features.rows() == static_cast<Index>(data.labels.size()),
          "one label per feature row required");
  require(!data.labels.empty(), "labeled set is empty");
  int num_classes = 0;
  for (int label : data.labels) {
    require(label >= 0, "labels must be non-negative");
    num_classes = std::max(num_classes, label + 1);
  }
  require(num_classes >= 2, "need at least two classes");
  std::vector<Index> counts(static_cast<size_t>(num_classes), 0);
  for (int label : data.labels) ++counts[static_cast<size_t>(label)];
  for (int c = 0; c < num_classes; ++c)
    require(counts[static_cast<size_t>(c)] >= min_per_class,
            "class " + std::to_string(c) + " has fewer than " +
                std::to_string(min_per_class) + " items");
  return num_classes;
}

}  // namespace detail

// Per-dimension Fisher discriminant score, between-class over within-class
// variance:
//   between_d = sum_c (m_c/m) (mu_{c,d} - mu_d)^2
//   within_d  = sum_c (m_c/m) var_{c,d}
// A zero within-class variance yields a +infinity sentinel.
inline Vector fisher_scores(const LabeledSet& data) {
  const int num_classes = detail::validated_class_count(data, 2);
  const Index m = data.features.rows();
  const Index dims = data.features.cols();
  const auto st = detail::per_class_stats(data, num_classes);

  const Vector overall =
      (data.features.colwise().sum() / static_cast<double>(m)).transpose();
  Vector between = Vector::Zero(dims);
  Vector within = Vector::Zero(dims);
  for (int c = 0; c < num_classes; ++c) {
    const double frac = static_cast<double>(st.counts[static_cast<size_t>(c)]) /
                        static_cast<double>(m);
    between += frac * (st.means.row(c).transpose() - overall)
                          .array()
                          .square()
                          .matrix();
    within += frac * st.variances.row(c).transpose();
  }
  Vector scores(dims);
  for (Index d = 0; d < dims; ++d)
    scores(d) = within(d) > 0.0
                    ? between(d) / within(d)
                    : std::numeric_limits<double>::infinity();
  return scores;
}

struct FisherRatioResult {
  Vector ratios;      // NaN where skipped
  Index skipped = 0;  // non-positive or non-finite denominators/numerators
};

// Element-wise ratio scores_a / scores_b; dimensions with unusable
// denominators (or non-finite scores) are skipped and counted.
inline FisherRatioResult fisher_ratio(const Vector& scores_a,
                                      const Vector& scores_b) {
  require(scores_a.size() == scores_b.size(),
          "score vectors must have equal length");
  FisherRatioResult out;
  out.ratios = Vector::Constant(scores_a.size(),
                                std::numeric_limits<double>::quiet_NaN());
  for (Index d = 0; d < scores_a.size(); ++d) {
    if (std::isfinite(scores_a(d)) && std::isfinite(scores_b(d)) &&
        scores_b(d) > 0.0) {
      out.ratios(d) = scores_a(d) / scores_b(d);
    } else {
      ++out.skipped;
    }
  }
  return out;
}

struct ClassifierModel {
  Matrix weights;  // (K+1) x C, last row is the intercept
};

// One-vs-all ridge regression onto class indicators. If the normal equations
// come out singular, the ridge is grown until the solve succeeds (flagged).
inline ClassifierModel train_linear_classifier(const LabeledSet& train,
                                               double reg,
                                               bool* bumped_ridge = nullptr) {
  require(reg > 0.0, "classifier ridge must be positive");
  const int num_classes = detail::validated_class_count(train, 1);
  const Index m = train.features.rows();
  const Index dims = train.features.cols();
  if (bumped_ridge) *bumped_ridge = false;

  Matrix design(m, dims + 1);
  design.leftCols(dims) = train.features;
  design.col(dims).setOnes();
  Matrix indicators = Matrix::Zero(m, num_classes);
  for (Index i = 0; i < m; ++i)
    indicators(i, train.labels[static_cast<size_t>(i)]) = 1.0;

  const Matrix gram = design.transpose() * design;
  const Matrix target = design.transpose() * indicators;
  double ridge = reg;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Matrix system = gram;
    system.diagonal().array() += ridge;
    Eigen::LDLT<Matrix> ldlt(system);
    if (ldlt.info() == Eigen::Success) {
      const Vector dvec = ldlt.vectorD();
      if (dvec.minCoeff() > dvec.cwiseAbs().maxCoeff() * 1e-14) {
        Matrix weights = ldlt.solve(target);
        if (weights.allFinite()) return {std::move(weights)};
      }
    }
    ridge *= 10.0;
    if (bumped_ridge) *bumped_ridge = true;
  }
  throw std::runtime_error("classifier normal equations remained singular");
}

// Argmax class score per feature row; ties go to the lower class id.
inline std::vector<int> classify(const ClassifierModel& model,
                                 const Matrix& features) {
  const Index dims = model.weights.rows() - 1;
  require(features.cols() == dims, "feature dimension mismatch");
  const Matrix scores = features * model.weights.topRows(dims) +
                        Vector::Ones(features.rows()) *
                            model.weights.row(dims);
  std::vector<int> labels(static_cast<size_t>(features.rows()));
  for (Index i = 0; i < scores.rows(); ++i) {
    Index best = 0;
    for (Index c = 1; c < scores.cols(); ++c)
      if (scores(i, c) > scores(i, best)) best = c;
    labels[static_cast<size_t>(i)] = static_cast<int>(best);
  }
  return labels;
}

inline double accuracy(const std::vector<int>& predicted,
                       const std::vector<int>& actual) {
  require(predicted.size() == actual.size() && !actual.empty(),
          "label vectors must be non-empty and equal length");
  size_t hits = 0;
  for (size_t i = 0; i < actual.size(); ++i)
    if (predicted[i] == actual[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(actual.size());
}

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  std::int64_t count = 0;
};

// Fixed-width histogram over [lo, hi); finite values outside the range are
// clamped into the edge bins, non-finite values are dropped.
inline std::vector<HistogramBin> histogram(const Vector& values, int bins,
                                           double lo, double hi) {
  require(bins >= 1, "need at least one bin");
  require(hi > lo, "histogram range must be non-empty");
  std::vector<HistogramBin> out(static_cast<size_t>(bins));
  const double width = (hi - lo) / bins;
  for (int b = 0; b < bins; ++b) {
    out[static_cast<size_t>(b)].left = lo + b * width;
    out[static_cast<size_t>(b)].right = lo + (b + 1) * width;
  }
  for (Index i = 0; i < values.size(); ++i) {
    const double v = values(i);
    if (!std::isfinite(v)) continue;
    int b = static_cast<int>(std::floor((v - lo) / width));
    b = std::clamp(b, 0, bins - 1);
    ++out[static_cast<size_t>(b)].count;
  }
  return out;
}

}  // namespace ssc
