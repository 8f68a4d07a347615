#pragma once

#include <Eigen/Dense>
#include <functional>

#include "hawkon/model.hpp"

namespace hawkon {

// Shared discretization core for the fixed-point intensity equation
//   lambda(t, a) = f( u0(t, a) + sum_b A[a][b] int_0^t h(t-s) lambda(s, b) ds )
// on a uniform time grid, iterates piecewise linear in t. The grid solver and
// the finite-class reduction both run through this.
struct VolterraProblem {
  Eigen::MatrixXd A;  // cells x cells, mass factors already folded in
  std::function<double(double, int)> u0;  // (t, cell)
  const JumpRate* f = nullptr;
  const MemoryKernel* h = nullptr;
};

struct PicardOptions {
  double T = 1.0;
  double dt = 1e-3;
  double tol = 1e-8;
  int max_iter = 1000;
  bool zero_init = false;  // default initial iterate is f(u0)
  int threads = 1;
  std::function<void(int, const Eigen::MatrixXd&)> observer;
};

struct PicardInfo {
  int iterations = 0;
  double final_change = 0.0;
  double contraction_ratio = 0.0;  // last observed change ratio
  bool converged = false;
};

// Time convolution (h * g)(t_k) per column, exact for piecewise-linear g when
// h is exponential, trapezoid otherwise. Returns a knots x cells matrix.
Eigen::MatrixXd convolve_columns(const MemoryKernel& h, const Eigen::MatrixXd& g, double dt,
                                 int threads);

// u0 + A applied to the convolution: the argument of f in the fixed-point map.
Eigen::MatrixXd map_argument(const VolterraProblem& p, const Eigen::MatrixXd& g, double dt,
                             int threads);

// One full Picard step f(map_argument(.)).
Eigen::MatrixXd picard_step(const VolterraProblem& p, const Eigen::MatrixXd& g, double dt,
                            int threads);

// Iterate to the fixed point; stops when the sup change drops below tol on two
// consecutive iterations. Throws NumericalError at the iteration cap.
Eigen::MatrixXd picard_solve(const VolterraProblem& p, const PicardOptions& opt,
                             PicardInfo* info = nullptr);

}  // namespace hawkon
