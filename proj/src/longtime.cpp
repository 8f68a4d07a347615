#include "hawkon/longtime.hpp"

#include <cmath>

#include "hawkon/limit_solver.hpp"
#include "hawkon/util.hpp"
#include "hawkon/volterra.hpp"

namespace hawkon {

DiscreteOperator DiscreteOperator::from_kernel(const GraphonKernel& kernel,
                                               const PositionMeasure& nu, int cells) {
  DiscreteOperator op;
  op.A = kernel_operator_matrix(kernel, nu, cells);
  op.masses = Eigen::VectorXd::Constant(cells, 1.0 / cells);
  op.grid = nu.grid(cells);
  return op;
}

DiscreteOperator DiscreteOperator::from_classes(const Eigen::MatrixXd& m,
                                                const std::vector<double>& masses) {
  int p = static_cast<int>(m.rows());
  if (p == 0 || m.cols() != p) throw InvalidArgument("from_classes: matrix must be square");
  if (static_cast<int>(masses.size()) != p) throw InvalidArgument("from_classes: masses size mismatch");
  double total = 0;
  for (double a : masses) {
    if (a <= 0) throw InvalidArgument("from_classes: masses must be positive");
    total += a;
  }
  if (std::fabs(total - 1.0) > 1e-12) throw InvalidArgument("from_classes: masses must sum to 1");
  if ((m.array() < 0).any()) throw InvalidArgument("from_classes: entries must be >= 0");
  DiscreteOperator op;
  op.A.resize(p, p);
  op.masses.resize(p);
  for (int j = 0; j < p; ++j) op.masses(j) = masses[static_cast<std::size_t>(j)];
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) op.A(i, j) = m(i, j) * op.masses(j);
  return op;
}

std::optional<int> DiscreteOperator::primitivity_witness(int cap) const {
  Eigen::MatrixXd p = A;
  for (int k = 1; k <= cap; ++k) {
    if ((p.array() > 0).all()) return k;
    p = p * A;
  }
  return std::nullopt;
}

const char* to_string(Criticality c) {
  switch (c) {
    case Criticality::Subcritical:
      return "subcritical";
    case Criticality::NearCritical:
      return "near-critical";
    case Criticality::Supercritical:
      return "supercritical";
  }
  return "?";
}

nlohmann::json SpectralReport::to_json() const {
  nlohmann::json j;
  j["r_inf"] = r_inf;
  j["h_norm1"] = h_norm1;
  j["product"] = product;
  j["class"] = to_string(cls);
  if (sigma_r) j["sigma_r"] = *sigma_r;
  j["M"] = cells;
  if (primitivity_k) j["primitivity_k"] = *primitivity_k;
  return j;
}

SpectralReport spectral_radius(const DiscreteOperator& op, double tol, int max_iter) {
  if ((op.A.array() < 0).any())
    throw InvalidArgument("spectral_radius: operator must be entrywise nonnegative");
  int m = op.cells();
  SpectralReport rep;
  rep.cells = m;

  Eigen::VectorXd x = Eigen::VectorXd::Ones(m);
  double rq_prev = -1;
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::VectorXd ax = op.A * x;
    double norm = ax.norm();
    if (norm == 0) {  // nilpotent directions exhausted; radius 0
      rep.r_inf = 0;
      rep.converged = true;
      rep.iterations = it;
      rep.h0 = x;
      break;
    }
    double rq = x.dot(ax) / x.dot(x);
    // Collatz-Wielandt bracket from the positive entries of x
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (int i = 0; i < m; ++i)
      if (x(i) > 0) {
        lo = std::min(lo, ax(i) / x(i));
        hi = std::max(hi, ax(i) / x(i));
      }
    rep.bracket_lo = lo;
    rep.bracket_hi = hi;
    rep.iterations = it;
    x = ax / norm;
    if (rq_prev >= 0 && std::fabs(rq - rq_prev) <= tol * std::max(1.0, std::fabs(rq))) {
      rep.r_inf = rq;
      rep.converged = true;
      rep.h0 = x;
      break;
    }
    rq_prev = rq;
  }
  if (!rep.converged) {
    throw NumericalError("spectral_radius: Rayleigh quotient did not settle in " +
                         std::to_string(max_iter) + " iterations; best bracket [" +
                         format_double(rep.bracket_lo) + ", " + format_double(rep.bracket_hi) + "]");
  }
  // unit discrete L2(masses) normalization, nonnegative orientation
  double l2 = std::sqrt((rep.h0.array().square() * op.masses.array()).sum());
  if (l2 > 0) rep.h0 /= l2;
  if (rep.h0.sum() < 0) rep.h0 = -rep.h0;
  return rep;
}

void classify(SpectralReport& rep, const MemoryKernel& h, double band) {
  rep.h_norm1 = h.l1();
  rep.product = rep.h_norm1 * rep.r_inf;
  if (std::fabs(rep.product - 1.0) <= band)
    rep.cls = Criticality::NearCritical;
  else
    rep.cls = rep.product < 1.0 ? Criticality::Subcritical : Criticality::Supercritical;
}

double growth_rate(const SpectralReport& rep, const MemoryKernel& h) {
  if (rep.cls == Criticality::Subcritical || rep.product < 1.0)
    throw InvalidState("growth_rate: defined only for ||h||_1 r_inf >= 1");
  if (rep.product == 1.0) return 0.0;
  if (h.kind() == MemoryKernel::Kind::Exponential) return rep.r_inf - h.alpha();
  auto phi = [&](double s) { return rep.r_inf * h.laplace(s) - 1.0; };
  double hi = 1.0;
  int doublings = 0;
  while (phi(hi) > 0) {
    hi *= 2;
    if (++doublings > 60) throw NumericalError("growth_rate: no sign change found while doubling");
  }
  double lo = 0;
  while (hi - lo > 1e-8) {
    double mid = 0.5 * (lo + hi);
    (phi(mid) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

StationaryResult stationary_limit(const DiscreteOperator& op, const SpectralReport& rep,
                                  const MemoryKernel& h, const Eigen::VectorXd& u, double tol) {
  if (rep.cls != Criticality::Subcritical)
    throw InvalidState(std::string("stationary_limit: requires a subcritical model, got ") +
                       to_string(rep.cls));
  if (u.size() != op.A.rows()) throw InvalidArgument("stationary_limit: u size mismatch");

  StationaryResult res;
  res.u = u;
  double h1 = h.l1();
  double ratio = h1 * op.row_sum_norm();
  double usup = u.array().abs().maxCoeff();

  if (ratio >= 1)
    throw NumericalError(
        "stationary_limit: Neumann series not certifiable (||h||_1 ||A|| >= 1); use the direct "
        "solve");
  Eigen::VectorXd term = u, sum = u;
  int k = 0;
  while (usup * std::pow(ratio, k + 1) / (1 - ratio) >= tol) {
    term = h1 * (op.A * term);
    sum += term;
    if (++k > 1000000) throw NumericalError("stationary_limit: Neumann truncation ran away");
  }
  res.ell_neumann = sum;
  res.neumann_terms = k;

  Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(op.A.rows(), op.A.cols()) - h1 * op.A;
  res.ell_direct = lhs.partialPivLu().solve(u);

  auto residual = [&](const Eigen::VectorXd& ell) {
    return (ell - u - h1 * (op.A * ell)).array().abs().maxCoeff();
  };
  res.residual_neumann = residual(res.ell_neumann);
  res.residual_direct = residual(res.ell_direct);
  res.path_gap = (res.ell_neumann - res.ell_direct).array().abs().maxCoeff();
  double scale = std::max(1.0, res.ell_direct.array().abs().maxCoeff());
  if (res.path_gap > 10 * tol * scale)
    throw NumericalError("stationary_limit: Neumann and direct solves disagree by " +
                         format_double(res.path_gap));
  return res;
}

StationaryResult stationary_limit(const DiscreteOperator& op, const SpectralReport& rep,
                                  const HawkesModel& model, double tol) {
  if (op.grid.empty())
    throw InvalidArgument("stationary_limit: operator carries no grid; pass u explicitly");
  Eigen::VectorXd u(op.cells());
  for (int a = 0; a < op.cells(); ++a) u(a) = model.u0.longtime(op.grid[static_cast<std::size_t>(a)]);
  return stationary_limit(op, rep, model.h, u, tol);
}

Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  // Pade [6/6] with scaling and squaring.
  static const double c[7] = {1.0,      1.0 / 2,    5.0 / 44,     1.0 / 66,
                              1.0 / 792, 1.0 / 15840, 1.0 / 665280};
  double norm = a.array().abs().rowwise().sum().maxCoeff();
  int s = 0;
  if (norm > 0.5) s = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  Eigen::MatrixXd x = a / std::pow(2.0, s);
  int n = static_cast<int>(a.rows());
  Eigen::MatrixXd x2 = x * x;
  Eigen::MatrixXd even = c[0] * Eigen::MatrixXd::Identity(n, n) + c[2] * x2;
  Eigen::MatrixXd odd = c[1] * Eigen::MatrixXd::Identity(n, n) + c[3] * x2;
  Eigen::MatrixXd x4 = x2 * x2;
  even += c[4] * x4;
  odd += c[5] * x4;
  Eigen::MatrixXd x6 = x4 * x2;
  even += c[6] * x6;
  Eigen::MatrixXd oddx = x * odd;
  Eigen::MatrixXd r = (even - oddx).partialPivLu().solve(even + oddx);
  for (int i = 0; i < s; ++i) r = r * r;
  return r;
}

IntensityField exponential_case(const DiscreteOperator& op, const HawkesModel& model, double T,
                                double dt) {
  if (model.h.kind() != MemoryKernel::Kind::Exponential)
    throw InvalidArgument("exponential_case: requires an exponential kernel");
  if (!model.u0.time_constant())
    throw InvalidArgument("exponential_case: requires a time-constant baseline");
  if (op.grid.empty()) throw InvalidArgument("exponential_case: operator carries no grid");
  if (!(T > 0) || !(dt > 0)) throw InvalidArgument("exponential_case: T and dt must be positive");

  int m = op.cells();
  double alpha = model.h.alpha();
  Eigen::VectorXd u0(m);
  for (int a = 0; a < m; ++a) u0(a) = model.u0(0.0, op.grid[static_cast<std::size_t>(a)]);

  int k = static_cast<int>(std::llround(T / dt)) + 1;
  Eigen::MatrixXd e = expm(dt * op.A);
  Eigen::MatrixXd values(k, m);
  Eigen::VectorXd p = u0;                       // e^{t A} u0
  Eigen::VectorXd integral = Eigen::VectorXd::Zero(m);  // int_0^t e^{-a v} e^{v A} u0 dv
  double damp_prev = 1.0;
  values.row(0) = u0.transpose();
  for (int i = 1; i < k; ++i) {
    Eigen::VectorXd p_next = e * p;
    double damp = std::exp(-alpha * i * dt);
    integral += 0.5 * dt * (damp_prev * p + damp * p_next);
    p = p_next;
    damp_prev = damp;
    values.row(i) = (damp * p + alpha * integral).transpose();
  }

  IntensityField field;
  field.dt = dt;
  field.knots = k;
  field.xs = op.grid;
  field.values = std::move(values);
  field.meta["method"] = "semigroup";
  return field;
}

MulticlassResult multiclass_reduce(const Eigen::MatrixXd& m, const std::vector<double>& masses,
                                   const MemoryKernel& h, const std::vector<double>& u0_values,
                                   double T, double dt, double tol) {
  DiscreteOperator op = DiscreteOperator::from_classes(m, masses);
  if (static_cast<int>(u0_values.size()) != op.cells())
    throw InvalidArgument("multiclass_reduce: u0 size mismatch");
  for (double v : u0_values)
    if (!(v >= 0)) throw ModelError("multiclass_reduce: baseline must be nonnegative");

  MulticlassResult res;
  res.spectral = spectral_radius(op);
  classify(res.spectral, h);
  res.spectral.primitivity_k = op.primitivity_witness();

  JumpRate f = JumpRate::linear();
  VolterraProblem p;
  p.A = op.A;
  p.f = &f;
  p.h = &h;
  p.u0 = [&u0_values](double, int cell) { return u0_values[static_cast<std::size_t>(cell)]; };
  PicardOptions popt;
  popt.T = T;
  popt.dt = dt;
  popt.tol = tol;
  res.lambda = picard_solve(p, popt);
  res.dt = dt;

  if (res.spectral.cls == Criticality::Subcritical) {
    Eigen::VectorXd u(op.cells());
    for (int a = 0; a < op.cells(); ++a) u(a) = u0_values[static_cast<std::size_t>(a)];
    res.stationary = stationary_limit(op, res.spectral, h, u);
  } else {
    res.spectral.sigma_r = growth_rate(res.spectral, h);
  }
  return res;
}

SpectralReport full_spectral_report(const DiscreteOperator& op, const MemoryKernel& h, double band,
                                    bool with_primitivity) {
  SpectralReport rep = spectral_radius(op);
  classify(rep, h, band);
  if (with_primitivity) rep.primitivity_k = op.primitivity_witness();
  if (rep.cls == Criticality::Supercritical) rep.sigma_r = growth_rate(rep, h);
  return rep;
}

}  // namespace hawkon
