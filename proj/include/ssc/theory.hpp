#pragma once

// Computable diagnostics from the covering-number and generalization-bound
// analysis. These are calculators over explicitly supplied parameters (the
// kernel L1 norm in particular is an empirical estimate), not certified
// bounds for a given training run.

#include <cmath>

#include "ssc/core.hpp"

namespace ssc {

struct BoundParams {
  int d = 1;               // ambient dimension
  int K = 1;               // dictionary size
  long n = 1;              // sample count
  double lambda = 1.0;     // L1 code budget; the bounds require lambda > e/4
  double gamma = 0.0;      // incoherence level, in [0, 1)
  double kernel_l1 = 1.0;  // |K_h1|_1 estimate (see kernel_l1_norm_estimate)
  double t = 1.0;          // confidence parameter, P(failure) = e^-t
  // Adds a factor 2 inside the logarithms, accounting for the squared-loss
  // reconstruction error variant.
  bool squared_loss = false;

  void validate() const {
    require(d >= 1 && K >= 1 && n >= 1, "d, K, n must be at least 1");
    require(lambda > std::exp(1.0) / 4.0, "lambda must exceed e/4");
    require(gamma >= 0.0 && gamma < 1.0, "gamma must lie in [0, 1)");
    require(kernel_l1 > 0.0, "kernel_l1 must be positive");
    require(t > 0.0, "t must be positive");
  }

  double loss_factor() const { return squared_loss ? 2.0 : 1.0; }
};

namespace detail {

inline double checked_log(double argument, const char* what) {
  if (!(argument > 0.0))
    throw std::invalid_argument(std::string("non-positive logarithm argument in ") +
                                what);
  return std::log(argument);
}

}  // namespace detail

// Log of the covering-number bound: dK * ln(4 lambda |K_h1|_1 / (eps (1-gamma))).
inline double covering_log_cardinality(const BoundParams& p, double eps) {
  p.validate();
  require(eps > 0.0, "eps must be positive");
  const double argument = p.loss_factor() * 4.0 * p.lambda * p.kernel_l1 /
                          (eps * (1.0 - p.gamma));
  return static_cast<double>(p.d) * static_cast<double>(p.K) *
         detail::checked_log(argument, "covering_log_cardinality");
}

struct SlowRateBound {
  double gap = 0.0;  // sqrt(dK ln(4 sqrt(n) lambda |K|_1/(1-gamma)) / (2n))
                     // + sqrt(t/(2n)) + sqrt(4/n)
  bool log_argument_above_one = true;  // first term is NaN when violated
};

// Three-term O(n^{-1/2}) generalization gap. The population reconstruction
// error is bounded by the empirical one plus this gap with probability
// 1 - e^{-t}.
inline SlowRateBound generalization_gap_slow(const BoundParams& p) {
  p.validate();
  const double n = static_cast<double>(p.n);
  const double dK = static_cast<double>(p.d) * static_cast<double>(p.K);
  const double argument = p.loss_factor() * 4.0 * std::sqrt(n) * p.lambda *
                          p.kernel_l1 / (1.0 - p.gamma);
  const double log_value =
      detail::checked_log(argument, "generalization_gap_slow");
  SlowRateBound out;
  out.log_argument_above_one = argument > 1.0;
  out.gap = std::sqrt(dK * log_value / (2.0 * n)) + std::sqrt(p.t / (2.0 * n)) +
            std::sqrt(4.0 / n);
  return out;
}

struct FastRateBound {
  double multiplier = 1.1;  // on the empirical reconstruction error
  double additive = 0.0;    // 9 (dK ln(4 n lambda |K|_1/(1-gamma)) + t) / n
  bool preconditions_met = true;  // dK > 20 and n >= 5000
};

// O(n^{-1}) fast-rate bound. Precondition violations are flagged, not fatal.
inline FastRateBound generalization_gap_fast(const BoundParams& p) {
  p.validate();
  const double n = static_cast<double>(p.n);
  const double dK = static_cast<double>(p.d) * static_cast<double>(p.K);
  const double argument =
      p.loss_factor() * 4.0 * n * p.lambda * p.kernel_l1 / (1.0 - p.gamma);
  FastRateBound out;
  out.preconditions_met = dK > 20.0 && p.n >= 5000;
  out.additive =
      9.0 * (dK * detail::checked_log(argument, "generalization_gap_fast") + p.t) /
      n;
  return out;
}

}  // namespace ssc
