#pragma once

#include <functional>
#include <optional>

#include "hawkon/intensity_field.hpp"
#include "hawkon/model.hpp"
#include "hawkon/volterra.hpp"

namespace hawkon {

struct SolveOptions {
  double T = 5.0;
  double dt = 1e-3;
  int cells = 400;
  double tol = 1e-8;
  int max_iter = 1000;
  bool zero_init = false;
  int threads = 1;
  // Apply one Picard step of the (dt/2, 2*cells) discretization to the
  // interpolated solution and report the sup change: a defect-style estimate
  // of the discretization error.
  bool estimate_defect = false;
  std::function<void(int, const Eigen::MatrixXd&)> observer;
};

struct SolveInfo {
  PicardInfo picard;
  // (f(0) + L_f ||u0||) / (1 - q) when the horizon contraction factor
  // q = L_f ||A|| ||h||_[0,T] is < 1; unset otherwise.
  std::optional<double> apriori_sup_bound;
  std::optional<double> defect;
};

// Solve the limit intensity equation for the kernel/model pair on the
// equal-mass midpoint grid. The returned field carries lambda; meta records
// grid and iteration facts.
IntensityField solve_lambda(const GraphonKernel& kernel, const HawkesModel& model,
                            const SolveOptions& opts, SolveInfo* info = nullptr);

// Fill field.u_values with the drive u(t,x) = u0 + int W int h lambda, one
// application of the linear part of the map to the solved lambda.
void macroscopic_profile(IntensityField& field, const GraphonKernel& kernel,
                         const HawkesModel& model, int threads = 1);

// Operator matrix A[a][b] = W(x_a, x_b) / M on the midpoint grid; shared by
// the solver and the spectral layer.
Eigen::MatrixXd kernel_operator_matrix(const GraphonKernel& kernel, const PositionMeasure& nu,
                                       int cells);

}  // namespace hawkon
