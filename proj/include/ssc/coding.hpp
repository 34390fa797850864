#pragma once

// Sparse-code solvers for a fixed dictionary.
//
// The primary coder is marginal regression: project the (kernel-smoothed)
// sample onto the column-normalized dictionary and keep the largest
// coefficients whose cumulative absolute sum fits in the L1 budget lambda.
// The baseline coder solves the L1-ball-constrained least-squares problem
// with an accelerated projected-gradient method.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ssc/core.hpp"

namespace ssc {

namespace detail {

inline Vector column_norms_checked(const Matrix& D) {
  Vector norms = D.colwise().norm();
  for (Index k = 0; k < norms.size(); ++k)
    if (!(norms(k) > 0.0))
      throw std::invalid_argument("dictionary column " + std::to_string(k) +
                                  " has zero norm");
  return norms;
}

inline Matrix normalize_columns(const Matrix& D) {
  const Vector norms = column_norms_checked(D);
  return D * norms.cwiseInverse().asDiagonal();
}

}  // namespace detail

// Marginal least-squares coefficients of sample i:
//   alpha^(k) = sum_j W(i,j) d_k^T x_j / ||d_k||_2
// computed in the factored order (smooth the sample first, then one
// matrix-vector product), which is what makes the coder cheap.
inline Vector marginal_coefficients(Index i, const SampleMatrix& X,
                                    const Matrix& D, const WeightMatrix& W) {
  require(i >= 0 && i < X.cols(), "sample index out of range");
  require(W.rows() == X.cols() && W.cols() == X.cols(),
          "weight matrix must be n x n");
  const Vector smoothed = X * W.row(i).transpose();
  const Vector norms = detail::column_norms_checked(D);
  return (D.transpose() * smoothed).cwiseQuotient(norms);
}

// Keep the top coefficients by |alpha|, in descending order, while their
// running L1 sum stays within lambda; ties broken toward the lower index.
// Kept entries retain their alpha values, the rest are exactly zero.
inline Vector threshold_top_s(const Vector& alphas, double lambda) {
  require(lambda > 0.0, "lambda must be positive");
  const Index K = alphas.size();
  std::vector<Index> order(static_cast<size_t>(K));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    const double aa = std::abs(alphas(a));
    const double ab = std::abs(alphas(b));
    if (aa != ab) return aa > ab;
    return a < b;
  });
  Vector beta = Vector::Zero(K);
  double budget = 0.0;
  for (Index k : order) {
    const double mag = std::abs(alphas(k));
    if (budget + mag > lambda) break;
    budget += mag;
    beta(k) = alphas(k);
  }
  return beta;
}

// Plain hard thresholding at level t: beta^(k) = alpha^(k) 1{|alpha^(k)| > t}.
inline Vector threshold_hard(const Vector& alphas, double level) {
  require(level >= 0.0, "threshold level must be non-negative");
  return (alphas.array().abs() > level).select(alphas, 0.0);
}

// Marginal-regression codes for pre-smoothed samples (one column per sample).
inline CodeMatrix code_all_mr_smoothed(const Matrix& smoothed, const Matrix& D,
                                       double lambda) {
  const Matrix Dn = detail::normalize_columns(D);
  const Matrix alphas = Dn.transpose() * smoothed;
  CodeMatrix codes(D.cols(), smoothed.cols());
  threading::parallel_for(0, smoothed.cols(), [&](Index i) {
    codes.col(i) = threshold_top_s(alphas.col(i), lambda);
  });
  return codes;
}

// Marginal-regression codes: column i is threshold_top_s of the marginal
// coefficients of sample i under W.
inline CodeMatrix code_all_mr(const SampleMatrix& X, const Matrix& D,
                              const WeightMatrix& W, double lambda) {
  require(W.rows() == X.cols() && W.cols() == X.cols(),
          "weight matrix must be n x n");
  return code_all_mr_smoothed(X * W.transpose(), D, lambda);
}

// Euclidean projection onto {u : ||u||_1 <= radius} by sort-and-shrink.
inline Vector project_l1_ball(const Vector& v, double radius) {
  require(radius > 0.0, "radius must be positive");
  if (v.lpNorm<1>() <= radius) return v;
  Vector mags = v.cwiseAbs();
  std::sort(mags.data(), mags.data() + mags.size(), std::greater<double>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Index k = 0; k < mags.size(); ++k) {
    cumulative += mags(k);
    const double candidate = (cumulative - radius) / static_cast<double>(k + 1);
    if (k + 1 == mags.size() || mags(k + 1) <= candidate) {
      theta = candidate;
      break;
    }
  }
  return v.array().sign() * (v.cwiseAbs().array() - theta).max(0.0);
}

struct LassoResult {
  CodeMatrix codes;
  Index unconverged = 0;  // columns that hit max_iter
  double lipschitz = 0.0;  // step size used is 1/lipschitz
};

namespace detail {

// Largest squared singular value of D by power iteration on D^T D.
inline double estimate_sq_spectral_norm(const Matrix& D) {
  Vector v = Vector::Ones(D.cols());
  v /= v.norm();
  double value = 0.0;
  for (int it = 0; it < 100; ++it) {
    Vector w = D.transpose() * (D * v);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    w /= nw;
    const double estimate = nw;
    if (it > 4 && std::abs(estimate - value) <= 1e-12 * estimate) {
      value = estimate;
      break;
    }
    value = estimate;
    v = std::move(w);
  }
  return value;
}

// Monotone accelerated projected gradient (FISTA with monotone acceptance)
// on 1/2 ||x - D b||^2 over the L1 ball, run on a block of columns at once so
// the gradient evaluations are matrix products. A column finishes when its
// relative objective change drops below tol AND the prox-gradient step at its
// accepted iterate passes the stationarity certificate; the second condition
// keeps a stalled momentum phase from stopping the column early.
struct BlockLassoSolver {
  const Matrix& D;
  double lambda;
  double tol;
  int max_iter;
  double L;

  double certificate_radius(const Vector& beta) const {
    return std::sqrt(tol) * (1.0 + beta.norm());
  }

  bool certificate_holds(const Vector& beta, const Vector& x) const {
    const Vector grad = D.transpose() * (D * beta - x);
    const Vector step = project_l1_ball(beta - grad / L, lambda) - beta;
    return step.norm() <= certificate_radius(beta);
  }

  // Solves for the given columns of `targets`; writes results into `codes`.
  // `init` (optional) provides warm-start columns aligned with `targets`.
  Index solve_block(const Matrix& targets, const std::vector<Index>& cols,
                    const CodeMatrix* init, CodeMatrix& codes) const {
    const Index K = D.cols();
    const Index m = static_cast<Index>(cols.size());
    Matrix X(targets.rows(), m);
    for (Index c = 0; c < m; ++c) X.col(c) = targets.col(cols[c]);

    Matrix B(K, m);
    if (init) {
      for (Index c = 0; c < m; ++c)
        B.col(c) = project_l1_ball(init->col(cols[c]), lambda);
    } else {
      B.setZero();
    }
    Matrix Y = B;
    Vector f = 0.5 * (X - D * B).colwise().squaredNorm();
    // Iterations to wait before re-running a failed certificate check.
    std::vector<int> cooldown(static_cast<size_t>(m), 0);

    std::vector<Index> active(static_cast<size_t>(m));
    std::iota(active.begin(), active.end(), Index{0});
    double t_momentum = 1.0;
    Index iterations_left = max_iter;

    while (!active.empty() && iterations_left-- > 0) {
      const Index a = static_cast<Index>(active.size());
      Matrix Ya(K, a), Xa(X.rows(), a);
      for (Index c = 0; c < a; ++c) {
        Ya.col(c) = Y.col(active[c]);
        Xa.col(c) = X.col(active[c]);
      }
      const Matrix resid = D * Ya - Xa;
      const Matrix grad = D.transpose() * resid;
      Matrix cand = Ya - grad / L;
      threading::parallel_for(0, a, [&](Index c) {
        cand.col(c) = project_l1_ball(cand.col(c), lambda);
      });
      const Vector f_cand = 0.5 * (Xa - D * cand).colwise().squaredNorm();

      const double t_next =
          0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
      std::vector<Index> still_active;
      still_active.reserve(active.size());
      for (Index c = 0; c < a; ++c) {
        const Index col = active[c];
        Vector b_new;
        double f_new;
        if (f_cand(c) <= f(col)) {
          b_new = cand.col(c);
          f_new = f_cand(c);
        } else {
          // Monotone variant: keep the incumbent, momentum still moves.
          b_new = B.col(col);
          f_new = f(col);
        }
        Y.col(col) = b_new + ((t_momentum - 1.0) / t_next) * (b_new - B.col(col)) +
                     (t_momentum / t_next) * (cand.col(c) - b_new);
        const double change = f(col) - f_new;
        B.col(col) = std::move(b_new);
        f(col) = f_new;

        bool done = false;
        if (change <= tol * std::max(f(col), 1e-300)) {
          auto& wait = cooldown[static_cast<size_t>(col)];
          if (wait > 0) {
            --wait;
          } else if (certificate_holds(B.col(col), X.col(col))) {
            done = true;
          } else {
            wait = 5;
          }
        }
        if (!done) still_active.push_back(col);
      }
      t_momentum = t_next;
      active = std::move(still_active);
    }

    for (Index c = 0; c < m; ++c) codes.col(cols[c]) = B.col(c);
    return static_cast<Index>(active.size());
  }
};

}  // namespace detail

// Lasso baseline codes for pre-smoothed samples: column i approximately
// minimizes ||s_i - D b||^2 subject to ||b||_1 <= lambda, which (up to a
// constant in b) equals the kernel-weighted objective sum_j W(i,j)
// ||x_j - D b||^2 when s_i is the smoothed sample. Optional warm start.
inline LassoResult code_all_lasso_smoothed(const Matrix& smoothed,
                                           const Matrix& D, double lambda,
                                           double tol, int max_iter,
                                           const CodeMatrix* warm_start = nullptr,
                                           Index block_size = 256) {
  require(lambda > 0.0, "lambda must be positive");
  require(tol > 0.0, "tol must be positive");
  require(max_iter >= 1, "max_iter must be at least 1");
  if (warm_start)
    require(warm_start->rows() == D.cols() &&
                warm_start->cols() == smoothed.cols(),
            "warm start shape mismatch");
  const double L = std::max(detail::estimate_sq_spectral_norm(D), 1e-300);
  detail::BlockLassoSolver solver{D, lambda, tol, max_iter, L};

  LassoResult result;
  result.codes.resize(D.cols(), smoothed.cols());
  result.lipschitz = L;
  const Index n = smoothed.cols();
  for (Index lo = 0; lo < n; lo += block_size) {
    const Index hi = std::min(n, lo + block_size);
    std::vector<Index> cols(static_cast<size_t>(hi - lo));
    std::iota(cols.begin(), cols.end(), lo);
    result.unconverged +=
        solver.solve_block(smoothed, cols, warm_start, result.codes);
  }
  return result;
}

// Lasso baseline under explicit weights W.
inline LassoResult code_all_lasso(const SampleMatrix& X, const Matrix& D,
                                  const WeightMatrix& W, double lambda,
                                  double tol, int max_iter,
                                  const CodeMatrix* warm_start = nullptr) {
  require(W.rows() == X.cols() && W.cols() == X.cols(),
          "weight matrix must be n x n");
  return code_all_lasso_smoothed(X * W.transpose(), D, lambda, tol, max_iter,
                                 warm_start);
}

}  // namespace ssc
