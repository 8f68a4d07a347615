#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>
#include <optional>

#include "hawkon/intensity_field.hpp"
#include "hawkon/model.hpp"

namespace hawkon {

// Discretized interaction operator (T_W g)(a) = sum_b A[a][b] g(b), with the
// cell masses folded into A. Grid version: A[a][b] = W(x_a, x_b)/M; class
// version: A[i][j] = m_ij alpha_j.
struct DiscreteOperator {
  Eigen::MatrixXd A;
  Eigen::VectorXd masses;
  std::vector<double> grid;  // empty for the class version

  static DiscreteOperator from_kernel(const GraphonKernel& kernel, const PositionMeasure& nu,
                                      int cells);
  static DiscreteOperator from_classes(const Eigen::MatrixXd& m, const std::vector<double>& masses);

  int cells() const { return static_cast<int>(A.rows()); }
  double row_sum_norm() const { return A.array().abs().rowwise().sum().maxCoeff(); }
  // Smallest k <= cap with A^k entrywise positive, or nullopt.
  std::optional<int> primitivity_witness(int cap = 8) const;
};

enum class Criticality { Subcritical, NearCritical, Supercritical };
const char* to_string(Criticality c);

struct SpectralReport {
  double r_inf = 0.0;
  Eigen::VectorXd h0;  // Perron direction, unit discrete L2(masses) norm
  int iterations = 0;
  bool converged = false;
  double bracket_lo = 0.0, bracket_hi = 0.0;  // Collatz-Wielandt bracket
  int cells = 0;

  double h_norm1 = 0.0;
  double product = 0.0;  // ||h||_1 * r_inf
  Criticality cls = Criticality::Subcritical;
  std::optional<double> sigma_r;
  std::optional<int> primitivity_k;

  nlohmann::json to_json() const;
};

// Power iteration with Rayleigh-quotient convergence; the error path reports
// the best Collatz-Wielandt bracket found.
SpectralReport spectral_radius(const DiscreteOperator& op, double tol = 1e-12,
                               int max_iter = 10000);

// Fill h_norm1 / product / cls; |product - 1| <= band lands in NearCritical.
void classify(SpectralReport& rep, const MemoryKernel& h, double band = 1e-3);

// Positive root of r_inf * laplace_h(sigma) = 1. Closed form r_inf - alpha for
// exponential kernels, bisection to 1e-8 otherwise. Requires product >= 1.
double growth_rate(const SpectralReport& rep, const MemoryKernel& h);

struct StationaryResult {
  Eigen::VectorXd u;
  Eigen::VectorXd ell_neumann, ell_direct;
  int neumann_terms = 0;
  double residual_neumann = 0.0, residual_direct = 0.0;
  double path_gap = 0.0;
};

// Solve ell = u + ||h||_1 A ell by truncated Neumann series and direct LU,
// cross-checked. Requires a Subcritical classification.
StationaryResult stationary_limit(const DiscreteOperator& op, const SpectralReport& rep,
                                  const MemoryKernel& h, const Eigen::VectorXd& u,
                                  double tol = 1e-10);
// Convenience: u from the baseline's long-time profile on the grid.
StationaryResult stationary_limit(const DiscreteOperator& op, const SpectralReport& rep,
                                  const HawkesModel& model, double tol = 1e-10);

// Exponential-kernel semigroup solution on the grid:
//   lambda(t) = e^{-at} e^{tA} u0 + a int_0^t e^{-av} e^{vA} u0 dv,
// matrix exponential stepping plus trapezoid accumulation of the integral.
// Independent of the fixed-point route; used to cross-check it.
IntensityField exponential_case(const DiscreteOperator& op, const HawkesModel& model, double T,
                                double dt);

// Scaling-and-squaring Pade exponential.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

struct MulticlassResult {
  SpectralReport spectral;
  Eigen::MatrixXd lambda;  // knots x P
  double dt = 0.0;
  std::optional<StationaryResult> stationary;
};

// Finite-class specialization: same spectral, Volterra, and stationary code
// paths on the class matrix.
MulticlassResult multiclass_reduce(const Eigen::MatrixXd& m, const std::vector<double>& masses,
                                   const MemoryKernel& h, const std::vector<double>& u0_values,
                                   double T, double dt, double tol = 1e-8);

// Power iteration + classification (+ growth rate and primitivity witness
// where applicable): the full report the CLI emits.
SpectralReport full_spectral_report(const DiscreteOperator& op, const MemoryKernel& h,
                                    double band = 1e-3, bool with_primitivity = true);

}  // namespace hawkon
