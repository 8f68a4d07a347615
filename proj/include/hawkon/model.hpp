#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hawkon/errors.hpp"
#include "hawkon/graphon.hpp"

namespace hawkon {

// Firing rate x -> f(x). Linear is the identity (evaluated bit-exactly); the
// general variant is a nonnegative Lipschitz callable, spot-checked at
// construction on random pairs.
class JumpRate {
 public:
  enum class Kind { Linear, Lipschitz };

  static JumpRate linear();
  static JumpRate lipschitz(std::function<double(double)> f, double lip,
                            bool nondecreasing = false);

  double operator()(double x) const { return kind_ == Kind::Linear ? x : fn_(x); }
  Kind kind() const { return kind_; }
  double lipschitz_constant() const { return lip_; }
  bool nondecreasing() const { return nondecreasing_; }
  double at_zero() const { return kind_ == Kind::Linear ? 0.0 : fn_(0.0); }

 private:
  JumpRate() = default;
  Kind kind_ = Kind::Linear;
  std::function<double(double)> fn_;
  double lip_ = 1.0;
  bool nondecreasing_ = true;
};

struct WindowNorms {
  double l1 = 0.0;
  double l2 = 0.0;
  bool truncated_tail = false;  // tabulated kernel shorter than the window
};

// Memory kernel h >= 0 on [0, inf), integrable by construction.
class MemoryKernel {
 public:
  enum class Kind { Exponential, PolyDecay, Tabulated };

  static MemoryKernel exponential(double alpha);       // h(t) = exp(-alpha t)
  static MemoryKernel poly_decay(double beta);         // h(t) = (1+t)^-beta, beta > 1
  static MemoryKernel tabulated(std::vector<double> grid, std::vector<double> values);

  double operator()(double t) const;
  double at_zero() const { return (*this)(0.0); }
  Kind kind() const { return kind_; }
  double alpha() const;  // Exponential only

  double l1() const { return l1_; }
  bool nonincreasing() const { return nonincreasing_; }
  WindowNorms window_norms(double T) const;
  // Laplace transform at sigma >= 0; exact for Exponential and Tabulated,
  // adaptive quadrature for PolyDecay.
  double laplace(double sigma) const;

  // sup over 0 <= a <= delta of sup_u h(u+a)/h(u): the factor by which the
  // synaptic contribution of frozen history can rise over a look-ahead window.
  // 1 for nonincreasing kernels; throws NumericalError when the ratio is
  // unbounded (zero values inside the support).
  double domination_factor(double delta) const;

 private:
  MemoryKernel() = default;
  Kind kind_ = Kind::Exponential;
  double alpha_ = 1.0;
  double beta_ = 2.0;
  std::vector<double> grid_, values_;
  double l1_ = 0.0;
  bool nonincreasing_ = true;
};

// Baseline input u0(t, x). Every supported family is non-increasing in t, so
// sup over [t, inf) is the value at t.
class Baseline {
 public:
  enum class Kind { Constant, AffineSpace, SeparableExp, Classes };

  static Baseline constant(double c);
  static Baseline affine(double a, double b);  // u0 = a x + b on [0,1]
  // u0(t, x) = exp(-rate t) (a x + b), rate >= 0
  static Baseline separable_exp(double rate, double a, double b);
  static Baseline classes(std::vector<double> values, std::vector<double> masses);

  double operator()(double t, double x) const;
  double sup_after(double t, double x) const { return (*this)(t, x); }
  double abs_sup() const;
  bool time_constant() const { return kind_ != Kind::SeparableExp; }
  // Pointwise limit as t -> inf (0 for the decaying family).
  double longtime(double x) const;
  double min_value() const;  // over [0,inf) x [0,1]
  Kind kind() const { return kind_; }

 private:
  Baseline() = default;
  Kind kind_ = Kind::Constant;
  double a_ = 0.0, b_ = 0.0, rate_ = 0.0;
  std::vector<double> values_, bounds_;
};

// The model pack handed to the simulator and the solvers. Construction
// enforces the standing assumptions (nonnegative rates for the linear case).
struct HawkesModel {
  JumpRate f;
  MemoryKernel h;
  Baseline u0;
  PositionMeasure nu;

  HawkesModel(JumpRate f_, MemoryKernel h_, Baseline u0_,
              PositionMeasure nu_ = PositionMeasure::uniform01());
};

}  // namespace hawkon
