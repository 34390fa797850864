#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ssc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// d x n, one data sample per column.
using SampleMatrix = Matrix;
// K x n, one sparse code per column.
using CodeMatrix = Matrix;
// n x n row-stochastic smoothing weights; entry (i,j) weighs sample j in the
// neighborhood of sample i.
using WeightMatrix = Matrix;

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

namespace threading {

inline std::atomic<int>& max_threads_slot() {
  static std::atomic<int> slot{0};  // 0 = pick hardware concurrency
  return slot;
}

inline void set_max_threads(int n) { max_threads_slot().store(n); }

inline int max_threads() {
  int n = max_threads_slot().load();
  if (n > 0) return n;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Static-partition parallel loop. Bodies must not touch shared mutable
// state; results are written to disjoint slots, so the output does not
// depend on the thread count.
template <typename Fn>
void parallel_for(Index begin, Index end, Fn&& fn) {
  const Index count = end - begin;
  if (count <= 0) return;
  const int threads = static_cast<int>(std::min<Index>(max_threads(), count));
  if (threads <= 1) {
    for (Index i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const Index chunk = (count + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const Index lo = begin + chunk * t;
    const Index hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (Index i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace threading
}  // namespace ssc
