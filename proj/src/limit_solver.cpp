#include "hawkon/limit_solver.hpp"

#include <cmath>

#include "hawkon/util.hpp"

namespace hawkon {

Eigen::MatrixXd kernel_operator_matrix(const GraphonKernel& kernel, const PositionMeasure& nu,
                                       int cells) {
  auto grid = nu.grid(cells);
  Eigen::MatrixXd a(cells, cells);
  for (int i = 0; i < cells; ++i)
    for (int j = 0; j < cells; ++j)
      a(i, j) = kernel(grid[static_cast<std::size_t>(i)], grid[static_cast<std::size_t>(j)]) / cells;
  return a;
}

namespace {

VolterraProblem make_problem(const GraphonKernel& kernel, const HawkesModel& model, int cells,
                             std::vector<double>& grid_out) {
  grid_out = model.nu.grid(cells);
  VolterraProblem p;
  p.A = kernel_operator_matrix(kernel, model.nu, cells);
  p.f = &model.f;
  p.h = &model.h;
  const auto& grid = grid_out;
  const Baseline* u0 = &model.u0;
  p.u0 = [u0, &grid](double t, int cell) { return (*u0)(t, grid[static_cast<std::size_t>(cell)]); };
  return p;
}

}  // namespace

IntensityField solve_lambda(const GraphonKernel& kernel, const HawkesModel& model,
                            const SolveOptions& opts, SolveInfo* info) {
  std::vector<double> grid;
  VolterraProblem p = make_problem(kernel, model, opts.cells, grid);

  PicardOptions popt;
  popt.T = opts.T;
  popt.dt = opts.dt;
  popt.tol = opts.tol;
  popt.max_iter = opts.max_iter;
  popt.zero_init = opts.zero_init;
  popt.threads = opts.threads;
  popt.observer = opts.observer;

  SolveInfo local;
  Eigen::MatrixXd g = picard_solve(p, popt, &local.picard);

  double row_norm = p.A.array().abs().rowwise().sum().maxCoeff();
  double q = model.f.lipschitz_constant() * row_norm * model.h.window_norms(opts.T).l1;
  if (q < 1)
    local.apriori_sup_bound =
        (model.f.at_zero() + model.f.lipschitz_constant() * model.u0.abs_sup()) / (1 - q);

  IntensityField field;
  field.dt = opts.dt;
  field.knots = static_cast<int>(g.rows());
  field.xs = grid;
  field.nu = model.nu;
  field.values = std::move(g);
  field.meta["iterations"] = local.picard.iterations;
  field.meta["final_change"] = local.picard.final_change;
  field.meta["tol"] = opts.tol;
  field.meta["converged"] = local.picard.converged;

  if (opts.estimate_defect) {
    std::vector<double> fine_grid;
    VolterraProblem fp = make_problem(kernel, model, 2 * opts.cells, fine_grid);
    double fdt = opts.dt / 2;
    long fk = 2L * (field.knots - 1) + 1;
    Eigen::MatrixXd fg(fk, 2 * opts.cells);
    for (long i = 0; i < fk; ++i)
      for (int c = 0; c < 2 * opts.cells; ++c)
        fg(i, c) = field.at_cell(i * fdt, c / 2);
    Eigen::MatrixXd stepped = picard_step(fp, fg, fdt, opts.threads);
    local.defect = (stepped - fg).array().abs().maxCoeff();
    field.meta["defect"] = *local.defect;
  }

  if (info) *info = local;
  return field;
}

void macroscopic_profile(IntensityField& field, const GraphonKernel& kernel,
                         const HawkesModel& model, int threads) {
  if (field.knots == 0) throw InvalidState("macroscopic_profile: empty field");
  std::vector<double> grid;
  VolterraProblem p = make_problem(kernel, model, field.cells(), grid);
  field.u_values = map_argument(p, field.values, field.dt, threads);
}

}  // namespace hawkon
