#include <doctest.h>

#include <cmath>

#include "hawkon/model.hpp"

using namespace hawkon;

TEST_CASE("linear jump rate is the exact identity") {
  auto f = JumpRate::linear();
  CHECK(f(0.3) == 0.3);  // bit-exact
  CHECK(f(7.25) == 7.25);
  CHECK(f.at_zero() == 0.0);
  CHECK(f.lipschitz_constant() == doctest::Approx(1.0));
  CHECK(f.nondecreasing());
}

TEST_CASE("lipschitz jump rate wraps a sigmoid") {
  auto f = JumpRate::lipschitz([](double x) { return 2.0 / (1.0 + std::exp(-x)); }, 0.5, true);
  CHECK(f(0.0) == doctest::Approx(1.0));
  CHECK(f(100.0) == doctest::Approx(2.0));
  CHECK(f.lipschitz_constant() == doctest::Approx(0.5));
}

TEST_CASE("lipschitz declaration is spot-checked at construction") {
  CHECK_THROWS_AS(JumpRate::lipschitz([](double x) { return 10.0 * x; }, 0.1, true), ModelError);
  CHECK_THROWS_AS(JumpRate::lipschitz([](double x) { return x - 100.0; }, 1.0, true), ModelError);
}

TEST_CASE("exponential memory kernel facts") {
  auto h = MemoryKernel::exponential(2.0);
  CHECK(h(0.0) == doctest::Approx(1.0));
  CHECK(h(1.0) == doctest::Approx(std::exp(-2.0)));
  CHECK(h.l1() == doctest::Approx(0.5));
  CHECK(h.alpha() == doctest::Approx(2.0));
  CHECK(h.nonincreasing());
  CHECK(h.laplace(0.0) == doctest::Approx(0.5));
  CHECK(h.laplace(1.0) == doctest::Approx(1.0 / 3.0));
  auto wn = h.window_norms(100.0);
  CHECK(wn.l1 == doctest::Approx(0.5));
  CHECK(wn.l2 == doctest::Approx(0.5));  // sqrt(1/4)
  auto w1 = h.window_norms(0.5);
  CHECK(w1.l1 == doctest::Approx((1.0 - std::exp(-1.0)) / 2.0));
  CHECK(w1.l1 < wn.l1);
  CHECK(h.domination_factor(5.0) == doctest::Approx(1.0));
}

TEST_CASE("polynomial decay kernel") {
  auto h = MemoryKernel::poly_decay(2.0);
  CHECK(h(0.0) == doctest::Approx(1.0));
  CHECK(h(1.0) == doctest::Approx(0.25));
  CHECK(h.l1() == doctest::Approx(1.0));
  CHECK(h.nonincreasing());
  CHECK(h.laplace(0.0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(h.laplace(1.0) < h.laplace(0.0));
  CHECK_THROWS_AS(MemoryKernel::poly_decay(1.0), InvalidArgument);
}

TEST_CASE("tabulated kernel interpolates and integrates") {
  auto h = MemoryKernel::tabulated({0.0, 1.0, 2.0}, {1.0, 0.5, 0.0});
  CHECK(h(0.5) == doctest::Approx(0.75));
  CHECK(h(3.0) == doctest::Approx(0.0));
  CHECK(h.l1() == doctest::Approx(1.0));  // trapezoid, exact for this shape
  CHECK(h.nonincreasing());
  CHECK(h.laplace(0.0) == doctest::Approx(h.l1()));
}

TEST_CASE("non-monotone tabulated kernel gets a look-ahead factor") {
  auto h = MemoryKernel::tabulated({0.0, 1.0, 2.0}, {0.5, 1.0, 0.25});
  CHECK_FALSE(h.nonincreasing());
  // h(1)/h(0) = 2, so one unit of look-ahead can double frozen history
  CHECK(h.domination_factor(1.0) >= 2.0);
  CHECK(h.domination_factor(0.1) >= 1.0);
  CHECK(h.domination_factor(1.0) >= h.domination_factor(0.1));
}

TEST_CASE("zero inside the support makes the look-ahead ratio unbounded") {
  auto h = MemoryKernel::tabulated({0.0, 1.0, 2.0}, {0.0, 1.0, 0.5});
  CHECK_THROWS_AS(h.domination_factor(0.5), NumericalError);
}

TEST_CASE("baselines") {
  auto c = Baseline::constant(1.5);
  CHECK(c(3.0, 0.2) == doctest::Approx(1.5));
  CHECK(c.abs_sup() == doctest::Approx(1.5));
  CHECK(c.longtime(0.9) == doctest::Approx(1.5));
  CHECK(c.time_constant());

  auto a = Baseline::affine(1.0, 1.0);
  CHECK(a(0.0, 0.25) == doctest::Approx(1.25));
  CHECK(a(9.0, 0.25) == doctest::Approx(1.25));
  CHECK(a.min_value() == doctest::Approx(1.0));
  CHECK(a.abs_sup() == doctest::Approx(2.0));

  auto s = Baseline::separable_exp(2.0, 0.0, 1.0);
  CHECK(s(0.0, 0.5) == doctest::Approx(1.0));
  CHECK(s(1.0, 0.5) == doctest::Approx(std::exp(-2.0)));
  CHECK(s.sup_after(1.0, 0.5) == doctest::Approx(std::exp(-2.0)));
  CHECK(s.longtime(0.5) == doctest::Approx(0.0));
  CHECK_FALSE(s.time_constant());

  auto k = Baseline::classes({1.0, 2.0}, {0.5, 0.5});
  CHECK(k(0.0, 0.3) == doctest::Approx(1.0));
  CHECK(k(0.0, 0.7) == doctest::Approx(2.0));
}

TEST_CASE("model pack rejects negative linear rates") {
  auto nu = PositionMeasure::uniform01();
  CHECK_THROWS_AS(
      HawkesModel(JumpRate::linear(), MemoryKernel::exponential(1.0), Baseline::affine(1.0, -2.0), nu),
      ModelError);
  // nonnegative baseline is fine
  HawkesModel ok(JumpRate::linear(), MemoryKernel::exponential(1.0), Baseline::affine(1.0, 1.0), nu);
  CHECK(ok.u0(0.0, 1.0) == doctest::Approx(2.0));
}
