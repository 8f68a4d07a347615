#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "hawkon/rng.hpp"
#include "hawkon/util.hpp"

using namespace hawkon;

TEST_CASE("rng stream is deterministic across instances") {
  RngStream a(42, 7);
  RngStream b(42, 7);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("rng streams with different ids decorrelate") {
  RngStream a(42, 0);
  RngStream b(42, 1);
  int agree = 0;
  for (int i = 0; i < 4096; ++i) agree += (a.next_u64() == b.next_u64());
  CHECK(agree == 0);
}

TEST_CASE("uniform01 lies in [0,1) and fills the unit interval") {
  RngStream g(1, 0);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double u = g.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  CHECK(lo < 1e-4);
  CHECK(hi > 1.0 - 1e-4);
  // mean of n uniforms: 1/2 with sd 1/sqrt(12 n); allow 5 sigma
  CHECK(std::abs(sum / n - 0.5) < 5.0 / std::sqrt(12.0 * n));
}

TEST_CASE("exponential has the requested rate") {
  RngStream g(3, 5);
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += g.exponential(2.0);
  // mean 1/2, sd 1/2; 5 sigma band on the sample mean
  CHECK(std::abs(sum / n - 0.5) < 5.0 * 0.5 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("derive_seed separates tags and indices") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t tag = 0; tag < 4; ++tag)
    for (std::uint64_t idx = 0; idx < 64; ++idx) seen.insert(derive_seed(9, tag, idx));
  CHECK(seen.size() == 4 * 64);
  CHECK(derive_seed(9, 1, 2) == derive_seed(9, 1, 2));
  CHECK(derive_seed(9, 1, 2) != derive_seed(10, 1, 2));
}

TEST_CASE("uniform ks statistic accepts uniforms and rejects a skewed sample") {
  RngStream g(11, 0);
  std::vector<double> u(2000), skew(2000);
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = g.uniform01();
    skew[i] = u[i] * u[i];
  }
  std::sort(u.begin(), u.end());
  std::sort(skew.begin(), skew.end());
  double n = static_cast<double>(u.size());
  CHECK(ks_statistic_uniform(u) < 1.628 / std::sqrt(n));
  CHECK(ks_statistic_uniform(skew) > 1.628 / std::sqrt(n));
}

TEST_CASE("indexed min heap orders by key with id tie-break") {
  IndexedMinHeap h(5);
  h.set(3, 2.0);
  h.set(1, 1.0);
  h.set(4, 1.0);
  CHECK(h.top() == 1);  // equal keys: smaller id first
  h.erase(1);
  CHECK(h.top() == 4);
  h.set(4, 5.0);
  CHECK(h.top() == 3);
  CHECK(h.top_key() == doctest::Approx(2.0));
  h.erase(3);
  h.erase(4);
  CHECK(h.empty());
}

TEST_CASE("slope fit recovers an exact line") {
  std::vector<double> xs{0, 1, 2, 3, 4}, ys;
  for (double x : xs) ys.push_back(3.0 - 0.5 * x);
  SlopeFit fit = fit_slope(xs, ys);
  CHECK(fit.slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(fit.slope_se == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("format_double round-trips doubles") {
  for (double v : {1.0 / 3.0, 1e-17, 123456.789, 4.0 / 3.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}
