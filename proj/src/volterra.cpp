#include "hawkon/volterra.hpp"

#include <cmath>

#include "hawkon/errors.hpp"
#include "hawkon/util.hpp"

namespace hawkon {

Eigen::MatrixXd convolve_columns(const MemoryKernel& h, const Eigen::MatrixXd& g, double dt,
                                 int threads) {
  long k = g.rows();
  long m = g.cols();
  Eigen::MatrixXd c(k, m);
  if (k == 0) return c;
  c.row(0).setZero();

  if (h.kind() == MemoryKernel::Kind::Exponential) {
    // One-step recursion, exact for piecewise-linear g:
    //   c(t+dt) = e^{-a dt} c(t) + g(t) (i0 - i1) + g(t+dt) i1.
    double a = h.alpha();
    double theta = a * dt;
    double decay = std::exp(-theta);
    double i0 = -std::expm1(-theta) / a;
    double i1 = dt * (theta + std::expm1(-theta)) / (theta * theta);
    parallel_for(m, threads, [&](long col) {
      double acc = 0;
      c(0, col) = 0;
      for (long j = 0; j + 1 < k; ++j) {
        acc = decay * acc + g(j, col) * (i0 - i1) + g(j + 1, col) * i1;
        c(j + 1, col) = acc;
      }
    });
    return c;
  }

  // General kernel: trapezoid on the grid, h sampled at knot offsets.
  std::vector<double> hk(static_cast<std::size_t>(k));
  for (long j = 0; j < k; ++j) hk[static_cast<std::size_t>(j)] = h(j * dt);
  parallel_for(m, threads, [&](long col) {
    for (long i = 1; i < k; ++i) {
      double s = 0.5 * (hk[static_cast<std::size_t>(i)] * g(0, col) + hk[0] * g(i, col));
      for (long j = 1; j < i; ++j) s += hk[static_cast<std::size_t>(i - j)] * g(j, col);
      c(i, col) = s * dt;
    }
  });
  return c;
}

Eigen::MatrixXd map_argument(const VolterraProblem& p, const Eigen::MatrixXd& g, double dt,
                             int threads) {
  Eigen::MatrixXd conv = convolve_columns(*p.h, g, dt, threads);
  Eigen::MatrixXd arg = conv * p.A.transpose();
  long k = g.rows(), m = g.cols();
  for (long i = 0; i < k; ++i)
    for (long c = 0; c < m; ++c) arg(i, c) += p.u0(i * dt, static_cast<int>(c));
  return arg;
}

Eigen::MatrixXd picard_step(const VolterraProblem& p, const Eigen::MatrixXd& g, double dt,
                            int threads) {
  Eigen::MatrixXd arg = map_argument(p, g, dt, threads);
  if (p.f->kind() != JumpRate::Kind::Linear)
    for (long i = 0; i < arg.rows(); ++i)
      for (long c = 0; c < arg.cols(); ++c) arg(i, c) = (*p.f)(arg(i, c));
  return arg;
}

Eigen::MatrixXd picard_solve(const VolterraProblem& p, const PicardOptions& opt, PicardInfo* info) {
  if (!(opt.T > 0) || !(opt.dt > 0)) throw InvalidArgument("picard_solve: T and dt must be positive");
  if (!(opt.tol > 0)) throw InvalidArgument("picard_solve: tol must be positive");
  long k = static_cast<long>(std::llround(opt.T / opt.dt)) + 1;
  long m = p.A.rows();
  Eigen::MatrixXd g(k, m);
  if (opt.zero_init) {
    g.setZero();
  } else {
    for (long i = 0; i < k; ++i)
      for (long c = 0; c < m; ++c) g(i, c) = (*p.f)(p.u0(i * opt.dt, static_cast<int>(c)));
  }
  if (opt.observer) opt.observer(0, g);

  PicardInfo local;
  double prev_change = 0;
  int confirmations = 0;
  for (int it = 1; it <= opt.max_iter; ++it) {
    Eigen::MatrixXd next = picard_step(p, g, opt.dt, opt.threads);
    double change = (next - g).array().abs().maxCoeff();
    g.swap(next);
    local.iterations = it;
    local.final_change = change;
    if (prev_change > 0) local.contraction_ratio = change / prev_change;
    prev_change = change;
    if (opt.observer) opt.observer(it, g);
    confirmations = change < opt.tol ? confirmations + 1 : 0;
    if (confirmations >= 2) {
      local.converged = true;
      break;
    }
  }
  if (!local.converged)
    throw NumericalError("picard_solve: no convergence within " + std::to_string(opt.max_iter) +
                         " iterations (last change " + format_double(local.final_change) + ")");
  if (info) *info = local;
  return g;
}

}  // namespace hawkon
