#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "hawkon/errors.hpp"

namespace hawkon {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Fork-join loop over [0, n). Work is partitioned by index block, so results
// written to per-index slots are independent of scheduling.
inline void parallel_for(long n, int threads, const std::function<void(long)>& body) {
  threads = resolve_threads(threads);
  if (threads <= 1 || n < 2) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  long nthreads = std::min<long>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nthreads));
  long chunk = (n + nthreads - 1) / nthreads;
  for (long t = 0; t < nthreads; ++t) {
    long lo = t * chunk;
    long hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (long i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

// Indexed binary min-heap over a fixed set of keys [0, n): one pending entry
// per element, priorities updatable in place. The event queue of the simulator.
class IndexedMinHeap {
 public:
  explicit IndexedMinHeap(int n) : key_(static_cast<std::size_t>(n)), pos_(static_cast<std::size_t>(n), -1) {}

  bool contains(int i) const { return pos_[static_cast<std::size_t>(i)] >= 0; }
  bool empty() const { return heap_.empty(); }
  double key(int i) const { return key_[static_cast<std::size_t>(i)]; }

  void set(int i, double k) {
    std::size_t ui = static_cast<std::size_t>(i);
    if (pos_[ui] < 0) {
      key_[ui] = k;
      pos_[ui] = static_cast<int>(heap_.size());
      heap_.push_back(i);
      sift_up(static_cast<std::size_t>(pos_[ui]));
    } else {
      double old = key_[ui];
      key_[ui] = k;
      if (k < old)
        sift_up(static_cast<std::size_t>(pos_[ui]));
      else
        sift_down(static_cast<std::size_t>(pos_[ui]));
    }
  }

  void erase(int i) {
    std::size_t ui = static_cast<std::size_t>(i);
    if (pos_[ui] < 0) return;
    std::size_t p = static_cast<std::size_t>(pos_[ui]);
    swap_nodes(p, heap_.size() - 1);
    heap_.pop_back();
    pos_[ui] = -1;
    if (p < heap_.size()) {
      sift_up(p);
      sift_down(p);
    }
  }

  int top() const { return heap_.front(); }
  double top_key() const { return key_[static_cast<std::size_t>(heap_.front())]; }

 private:
  // Ties in key are broken by element id so the processing order is total.
  bool before(int a, int b) const {
    std::size_t ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
    if (key_[ua] != key_[ub]) return key_[ua] < key_[ub];
    return a < b;
  }
  void swap_nodes(std::size_t a, std::size_t b) {
    std::swap(heap_[a], heap_[b]);
    pos_[static_cast<std::size_t>(heap_[a])] = static_cast<int>(a);
    pos_[static_cast<std::size_t>(heap_[b])] = static_cast<int>(b);
  }
  void sift_up(std::size_t p) {
    while (p > 0) {
      std::size_t parent = (p - 1) / 2;
      if (!before(heap_[p], heap_[parent])) break;
      swap_nodes(p, parent);
      p = parent;
    }
  }
  void sift_down(std::size_t p) {
    for (;;) {
      std::size_t l = 2 * p + 1, r = l + 1, best = p;
      if (l < heap_.size() && before(heap_[l], heap_[best])) best = l;
      if (r < heap_.size() && before(heap_[r], heap_[best])) best = r;
      if (best == p) break;
      swap_nodes(p, best);
      p = best;
    }
  }

  std::vector<double> key_;
  std::vector<int> pos_;   // -1 when absent
  std::vector<int> heap_;
};

// ---- small numerics shared by tests and experiments ----

// Two-sided KS statistic of `sorted` against the uniform law on [0,1].
inline double ks_statistic_uniform(const std::vector<double>& sorted) {
  double d = 0.0;
  double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    double u = sorted[i];
    d = std::max(d, std::max((static_cast<double>(i) + 1.0) / n - u,
                             u - static_cast<double>(i) / n));
  }
  return d;
}

// KS of gaps against Exp(1): map through the cdf and reuse the uniform test.
inline double ks_statistic_exp1(std::vector<double> gaps) {
  for (double& g : gaps) g = -std::expm1(-g);
  std::sort(gaps.begin(), gaps.end());
  return ks_statistic_uniform(gaps);
}

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};

// Ordinary least squares y ~ a + b x with the usual slope standard error.
inline SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("fit_slope: need >= 2 points");
  double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw InvalidArgument("fit_slope: degenerate abscissae");
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double ss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double r = y[i] - (f.intercept + f.slope * x[i]);
      ss += r * r;
    }
    f.slope_se = std::sqrt(ss / (n - 2.0) / sxx);
  }
  return f;
}

// Canonical shortest-round-trip double formatting; every writer uses this so
// reruns are byte-identical.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace hawkon
