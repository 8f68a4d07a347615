#include "hawkon/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hawkon/rng.hpp"

namespace hawkon {

// ---- JumpRate ----

JumpRate JumpRate::linear() {
  JumpRate f;
  f.kind_ = Kind::Linear;
  f.lip_ = 1.0;
  f.nondecreasing_ = true;
  return f;
}

JumpRate JumpRate::lipschitz(std::function<double(double)> fn, double lip, bool nondecreasing) {
  if (!fn) throw InvalidArgument("lipschitz jump rate: missing callable");
  if (lip <= 0) throw InvalidArgument("lipschitz jump rate: constant must be positive");
  // Spot check nonnegativity and the declared constant on random pairs; a
  // violation here is a contract bug in the caller, not a numerical accident.
  RngStream rng(99, 0);
  for (int t = 0; t < 1000; ++t) {
    double x = -50.0 + 200.0 * rng.uniform01();
    double y = -50.0 + 200.0 * rng.uniform01();
    double fx = fn(x), fy = fn(y);
    if (!(fx >= 0) || !(fy >= 0)) {
      std::ostringstream os;
      os << "jump rate must be nonnegative, got f(" << (fx >= 0 ? y : x) << ") = "
         << std::min(fx, fy);
      throw ModelError(os.str());
    }
    if (std::fabs(fx - fy) > lip * std::fabs(x - y) * (1 + 1e-9) + 1e-12) {
      std::ostringstream os;
      os << "jump rate violates declared Lipschitz constant " << lip << " between x=" << x
         << " and y=" << y;
      throw ModelError(os.str());
    }
    if (nondecreasing && ((x < y && fx > fy + 1e-12) || (y < x && fy > fx + 1e-12)))
      throw ModelError("jump rate declared nondecreasing but is not");
  }
  JumpRate f;
  f.kind_ = Kind::Lipschitz;
  f.fn_ = std::move(fn);
  f.lip_ = lip;
  f.nondecreasing_ = nondecreasing;
  return f;
}

// ---- MemoryKernel ----

MemoryKernel MemoryKernel::exponential(double alpha) {
  if (alpha <= 0) throw InvalidArgument("exponential kernel: alpha must be positive");
  MemoryKernel h;
  h.kind_ = Kind::Exponential;
  h.alpha_ = alpha;
  h.l1_ = 1.0 / alpha;
  h.nonincreasing_ = true;
  return h;
}

MemoryKernel MemoryKernel::poly_decay(double beta) {
  if (beta <= 1) throw InvalidArgument("poly_decay kernel: beta must exceed 1 for integrability");
  MemoryKernel h;
  h.kind_ = Kind::PolyDecay;
  h.beta_ = beta;
  h.l1_ = 1.0 / (beta - 1.0);
  h.nonincreasing_ = true;
  return h;
}

MemoryKernel MemoryKernel::tabulated(std::vector<double> grid, std::vector<double> values) {
  if (grid.size() < 2 || grid.size() != values.size())
    throw InvalidArgument("tabulated kernel: need matching grid/values with >= 2 points");
  if (grid.front() != 0.0) throw InvalidArgument("tabulated kernel: grid must start at 0");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] <= grid[i - 1]) throw InvalidArgument("tabulated kernel: grid must increase");
  for (double v : values)
    if (!(v >= 0)) throw ModelError("tabulated kernel: values must be nonnegative");
  MemoryKernel h;
  h.kind_ = Kind::Tabulated;
  h.grid_ = std::move(grid);
  h.values_ = std::move(values);
  // Trapezoid is exact for the linear interpolant; the kernel is 0 past the grid.
  double l1 = 0;
  for (std::size_t i = 1; i < h.grid_.size(); ++i)
    l1 += 0.5 * (h.values_[i] + h.values_[i - 1]) * (h.grid_[i] - h.grid_[i - 1]);
  h.l1_ = l1;
  h.nonincreasing_ = std::is_sorted(h.values_.rbegin(), h.values_.rend());
  return h;
}

double MemoryKernel::operator()(double t) const {
  if (t < 0) return 0.0;
  switch (kind_) {
    case Kind::Exponential:
      return std::exp(-alpha_ * t);
    case Kind::PolyDecay:
      return std::pow(1.0 + t, -beta_);
    case Kind::Tabulated: {
      if (t > grid_.back()) return 0.0;
      auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
      if (it == grid_.begin()) return values_.front();
      std::size_t i = static_cast<std::size_t>(it - grid_.begin());
      if (i >= grid_.size()) return values_.back();
      double w = (t - grid_[i - 1]) / (grid_[i] - grid_[i - 1]);
      return values_[i - 1] + w * (values_[i] - values_[i - 1]);
    }
  }
  return 0.0;
}

double MemoryKernel::alpha() const {
  if (kind_ != Kind::Exponential) throw InvalidState("alpha() requires an exponential kernel");
  return alpha_;
}

WindowNorms MemoryKernel::window_norms(double T) const {
  if (!(T > 0)) throw InvalidArgument("window_norms: T must be positive");
  WindowNorms w;
  if (kind_ == Kind::Exponential) {
    w.l1 = (1.0 - std::exp(-alpha_ * T)) / alpha_;
    w.l2 = std::sqrt((1.0 - std::exp(-2.0 * alpha_ * T)) / (2.0 * alpha_));
    return w;
  }
  // Composite midpoint, step <= 1e-3 * T.
  int n = 1000;
  double dt = T / n;
  double s1 = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    double v = (*this)((i + 0.5) * dt);
    s1 += v;
    s2 += v * v;
  }
  w.l1 = s1 * dt;
  w.l2 = std::sqrt(s2 * dt);
  if (kind_ == Kind::Tabulated && grid_.back() < T) w.truncated_tail = true;
  return w;
}

double MemoryKernel::laplace(double sigma) const {
  if (sigma < 0) throw InvalidArgument("laplace: sigma must be >= 0");
  switch (kind_) {
    case Kind::Exponential:
      return 1.0 / (alpha_ + sigma);
    case Kind::PolyDecay: {
      if (sigma == 0) return l1_;
      // Composite Simpson on [0, X] with interval doubling until both the
      // truncation tail and the refinement change are negligible.
      double X = 1.0;
      auto tail = [&](double x) { return std::pow(1.0 + x, -beta_) * std::exp(-sigma * x) / sigma; };
      while (tail(X) > 1e-14 && X < 1e8) X *= 2;
      auto integrand = [&](double t) { return std::pow(1.0 + t, -beta_) * std::exp(-sigma * t); };
      int n = 256;
      double prev = 0, cur = 0;
      for (int round = 0; round < 16; ++round, n *= 2) {
        double hstep = X / n;
        double s = integrand(0.0) + integrand(X);
        for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * integrand(i * hstep);
        cur = s * hstep / 3.0;
        if (round > 0 && std::fabs(cur - prev) < 1e-12 * (1 + std::fabs(cur))) break;
        prev = cur;
      }
      return cur;
    }
    case Kind::Tabulated: {
      // Exact transform of the linear interpolant, segment by segment.
      double total = 0;
      for (std::size_t i = 1; i < grid_.size(); ++i) {
        double a = grid_[i - 1], b = grid_[i];
        double va = values_[i - 1], vb = values_[i];
        double slope = (vb - va) / (b - a);
        if (sigma == 0) {
          total += 0.5 * (va + vb) * (b - a);
          continue;
        }
        // int_a^b (va + slope (t-a)) e^(-sigma t) dt
        double ea = std::exp(-sigma * a), eb = std::exp(-sigma * b);
        double i0 = (ea - eb) / sigma;
        double i1 = (ea * a - eb * b) / sigma + (ea - eb) / (sigma * sigma) - a * i0;
        total += va * i0 + slope * i1;
      }
      return total;
    }
  }
  return 0.0;
}

double MemoryKernel::domination_factor(double delta) const {
  if (delta < 0) throw InvalidArgument("domination_factor: delta must be >= 0");
  if (nonincreasing_) return 1.0;
  // Non-monotone tabulated kernel: scan grid nodes and midpoints for the worst
  // ratio h(u+a)/h(u), a <= delta. The 1.25 headroom covers ratios attained
  // between sample points; the simulator independently verifies domination at
  // every acceptance.
  std::vector<double> ts;
  for (std::size_t i = 0; i + 1 < grid_.size(); ++i) {
    ts.push_back(grid_[i]);
    ts.push_back(0.5 * (grid_[i] + grid_[i + 1]));
  }
  ts.push_back(grid_.back());
  double worst = 1.0;
  for (double u : ts) {
    double hu = (*this)(u);
    for (double v : ts) {
      if (v <= u || v - u > delta) continue;
      double hv = (*this)(v);
      if (hv <= hu * worst) continue;
      if (hu == 0.0)
        throw NumericalError(
            "domination_factor: kernel vanishes inside its support, look-ahead ratio unbounded");
      worst = hv / hu;
    }
  }
  return worst * 1.25;
}

// ---- Baseline ----

Baseline Baseline::constant(double c) {
  Baseline u;
  u.kind_ = Kind::Constant;
  u.b_ = c;
  return u;
}

Baseline Baseline::affine(double a, double b) {
  Baseline u;
  u.kind_ = Kind::AffineSpace;
  u.a_ = a;
  u.b_ = b;
  return u;
}

Baseline Baseline::separable_exp(double rate, double a, double b) {
  if (rate < 0) throw InvalidArgument("separable_exp baseline: rate must be >= 0");
  Baseline u;
  u.kind_ = Kind::SeparableExp;
  u.rate_ = rate;
  u.a_ = a;
  u.b_ = b;
  return u;
}

Baseline Baseline::classes(std::vector<double> values, std::vector<double> masses) {
  if (values.empty() || values.size() != masses.size())
    throw InvalidArgument("classes baseline: need matching values/masses");
  double total = 0;
  for (double m : masses) {
    if (m <= 0) throw InvalidArgument("classes baseline: masses must be positive");
    total += m;
  }
  if (std::fabs(total - 1.0) > 1e-12) throw InvalidArgument("classes baseline: masses must sum to 1");
  Baseline u;
  u.kind_ = Kind::Classes;
  u.values_ = std::move(values);
  double acc = 0;
  for (double m : masses) {
    acc += m;
    u.bounds_.push_back(acc);
  }
  u.bounds_.back() = 1.0;
  return u;
}

double Baseline::operator()(double t, double x) const {
  switch (kind_) {
    case Kind::Constant:
      return b_;
    case Kind::AffineSpace:
      return a_ * x + b_;
    case Kind::SeparableExp:
      return std::exp(-rate_ * t) * (a_ * x + b_);
    case Kind::Classes: {
      auto it = std::lower_bound(bounds_.begin(), bounds_.end(), std::min(1.0, std::max(0.0, x)));
      return values_[static_cast<std::size_t>(it - bounds_.begin())];
    }
  }
  return 0.0;
}

double Baseline::abs_sup() const {
  switch (kind_) {
    case Kind::Constant:
      return std::fabs(b_);
    case Kind::AffineSpace:
    case Kind::SeparableExp:
      return std::max(std::fabs(b_), std::fabs(a_ + b_));
    case Kind::Classes: {
      double m = 0;
      for (double v : values_) m = std::max(m, std::fabs(v));
      return m;
    }
  }
  return 0.0;
}

double Baseline::longtime(double x) const {
  if (kind_ == Kind::SeparableExp) return rate_ > 0 ? 0.0 : (*this)(0.0, x);
  return (*this)(0.0, x);
}

double Baseline::min_value() const {
  switch (kind_) {
    case Kind::Constant:
      return b_;
    case Kind::AffineSpace:
      return std::min(b_, a_ + b_);
    case Kind::SeparableExp:
      return std::min({0.0, b_, a_ + b_});
    case Kind::Classes:
      return *std::min_element(values_.begin(), values_.end());
  }
  return 0.0;
}

// ---- HawkesModel ----

HawkesModel::HawkesModel(JumpRate f_, MemoryKernel h_, Baseline u0_, PositionMeasure nu_)
    : f(std::move(f_)), h(std::move(h_)), u0(std::move(u0_)), nu(std::move(nu_)) {
  if (f.kind() == JumpRate::Kind::Linear && u0.min_value() < 0)
    throw ModelError("linear jump rate requires a nonnegative baseline");
}

}  // namespace hawkon
