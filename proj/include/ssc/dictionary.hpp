#pragma once

// Dictionary handling: data-driven initialization, the incoherence-penalized
// method-of-optimal-directions update, unit-ball column projection, and the
// babel / Gram-departure coherence diagnostics.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "ssc/core.hpp"

namespace ssc {

struct UpdatePenalties {
  double kappa = 0.0;  // weight on ||D^T D - I||_F^2
  double eta = 0.0;    // weight on the column-normalization penalty

  void validate() const {
    require(kappa >= 0.0 && eta >= 0.0, "penalties must be non-negative");
  }
};

// K dictionary columns drawn uniformly without replacement from the data
// columns (with replacement when K exceeds the number of non-zero columns),
// each normalized to unit L2 norm. Deterministic given the seed.
inline Matrix init_dictionary(const SampleMatrix& X, int K, std::uint64_t seed) {
  require(K >= 1, "dictionary size K must be at least 1");
  require(X.cols() >= 1 && X.rows() >= 1, "data matrix must be non-empty");
  std::vector<Index> usable;
  usable.reserve(static_cast<size_t>(X.cols()));
  for (Index j = 0; j < X.cols(); ++j)
    if (X.col(j).norm() > 0.0) usable.push_back(j);
  if (usable.empty())
    throw std::invalid_argument("all data columns are zero; cannot initialize");

  std::mt19937_64 rng(seed);
  std::vector<Index> picks;
  picks.reserve(static_cast<size_t>(K));
  if (static_cast<size_t>(K) <= usable.size()) {
    std::vector<Index> pool = usable;
    std::shuffle(pool.begin(), pool.end(), rng);
    picks.assign(pool.begin(), pool.begin() + K);
  } else {
    std::uniform_int_distribution<size_t> pick(0, usable.size() - 1);
    for (int k = 0; k < K; ++k) picks.push_back(usable[pick(rng)]);
  }

  Matrix D(X.rows(), K);
  for (int k = 0; k < K; ++k) {
    const Vector col = X.col(picks[static_cast<size_t>(k)]);
    D.col(k) = col / col.norm();
  }
  return D;
}

// Babel function mu_s(D): per column i, the sum of the s largest |d_j^T d_i|
// over j != i, maximized over i. The top-s set is summed in index order so
// the value matches subset enumeration exactly.
inline double babel(const Matrix& D, int s) {
  const Index K = D.cols();
  require(s >= 1 && s <= K - 1, "babel order s must lie in [1, K-1]");
  const Matrix gram = (D.transpose() * D).cwiseAbs();
  double worst = 0.0;
  std::vector<Index> order(static_cast<size_t>(K - 1));
  for (Index i = 0; i < K; ++i) {
    order.clear();
    for (Index j = 0; j < K; ++j)
      if (j != i) order.push_back(j);
    std::nth_element(order.begin(), order.begin() + (s - 1), order.end(),
                     [&](Index a, Index b) { return gram(a, i) > gram(b, i); });
    std::sort(order.begin(), order.begin() + s);
    double total = 0.0;
    for (int k = 0; k < s; ++k) total += gram(order[static_cast<size_t>(k)], i);
    worst = std::max(worst, total);
  }
  return worst;
}

// Departure of the Gram matrix from identity: ||D^T D - I||_F^2.
inline double incoherence(const Matrix& D) {
  Matrix G = D.transpose() * D;
  G.diagonal().array() -= 1.0;
  return G.squaredNorm();
}

// Rescale columns with norm above one back to the unit sphere.
inline Matrix project_columns(Matrix D) {
  for (Index j = 0; j < D.cols(); ++j) {
    const double norm = D.col(j).norm();
    if (norm > 1.0) D.col(j) /= norm;
  }
  return D;
}

// Method-of-optimal-directions update with incoherence and normalization
// penalties, before column projection:
//   D+ = (X B^T + 2(kappa+eta) Dt) (B B^T + 2 kappa Dt^T Dt
//         + 2 eta diag(Dt^T Dt))^{-1}
// With kappa = eta = 0 this is the plain least-squares update X B^T (B B^T)^-1.
// A near-singular system is re-solved with ridge 1e-10 I and flagged.
inline Matrix mod_update(const SampleMatrix& X, const CodeMatrix& B,
                         const Matrix& Dt, const UpdatePenalties& pens,
                         bool* used_ridge = nullptr) {
  pens.validate();
  require(X.cols() == B.cols(), "X and B must agree on the sample count");
  require(Dt.rows() == X.rows() && Dt.cols() == B.rows(),
          "dictionary shape must be d x K");
  if (!X.allFinite() || !B.allFinite() || !Dt.allFinite())
    throw std::invalid_argument("mod_update: non-finite input");
  if (used_ridge) *used_ridge = false;

  const Matrix gram = Dt.transpose() * Dt;
  Matrix system = B * B.transpose();
  system += 2.0 * pens.kappa * gram;
  system.diagonal() += 2.0 * pens.eta * gram.diagonal();
  const Matrix rhs = X * B.transpose() + 2.0 * (pens.kappa + pens.eta) * Dt;

  Eigen::LDLT<Matrix> ldlt(system);
  bool degenerate = ldlt.info() != Eigen::Success;
  if (!degenerate) {
    const Vector dvec = ldlt.vectorD();
    const double dmax = dvec.cwiseAbs().maxCoeff();
    degenerate = dmax == 0.0 || !(dvec.minCoeff() > dmax * 1e-14);
  }
  Matrix next;
  if (!degenerate) {
    next = ldlt.solve(rhs.transpose()).transpose();
    degenerate = !next.allFinite();
  }
  if (degenerate) {
    Matrix ridged = system;
    ridged.diagonal().array() += 1e-10;
    next = Eigen::LDLT<Matrix>(ridged).solve(rhs.transpose()).transpose();
    if (used_ridge) *used_ridge = true;
  }
  return next;
}

// Full dictionary step: penalized MOD update followed by column projection.
inline Matrix dictionary_update(const SampleMatrix& X, const CodeMatrix& B,
                                const Matrix& Dt, const UpdatePenalties& pens,
                                bool* used_ridge = nullptr) {
  return project_columns(mod_update(X, B, Dt, pens, used_ridge));
}

// Replace atoms whose code row is identically zero with the currently
// worst-reconstructed samples (normalized). Reconstruction D*B is unchanged
// because the replaced rows of B are zero. Returns the replacement count.
inline int replace_unused_atoms(Matrix& D, const SampleMatrix& X,
                                const CodeMatrix& B) {
  std::vector<Index> unused;
  for (Index k = 0; k < B.rows(); ++k)
    if ((B.row(k).array() == 0.0).all()) unused.push_back(k);
  if (unused.empty()) return 0;

  const Vector residuals = (X - D * B).colwise().norm();
  std::vector<Index> order(static_cast<size_t>(X.cols()));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (residuals(a) != residuals(b)) return residuals(a) > residuals(b);
    return a < b;
  });

  int replaced = 0;
  size_t next_sample = 0;
  for (Index k : unused) {
    while (next_sample < order.size() &&
           X.col(order[next_sample]).norm() == 0.0)
      ++next_sample;
    if (next_sample >= order.size()) break;
    const Vector sample = X.col(order[next_sample++]);
    D.col(k) = sample / sample.norm();
    ++replaced;
  }
  return replaced;
}

}  // namespace ssc
