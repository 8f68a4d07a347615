#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "hawkon/graphon.hpp"

namespace hawkon {

// Space-time intensity on a uniform time grid and an equal-mass cell grid:
// linear interpolation in t, piecewise constant in x over the cells.
struct IntensityField {
  double dt = 0.0;
  int knots = 0;  // values.rows(); t_k = k dt
  std::vector<double> xs;
  PositionMeasure nu = PositionMeasure::uniform01();
  Eigen::MatrixXd values;                   // knots x cells
  std::optional<Eigen::MatrixXd> u_values;  // drive field on the same grid
  nlohmann::json meta;

  int cells() const { return static_cast<int>(xs.size()); }
  double horizon() const { return dt * (knots - 1); }
  int cell_of(double x) const { return nu.cell_of(x, cells()); }

  double at_cell(double t, int cell) const;
  double at(double t, double x) const { return at_cell(t, cell_of(x)); }
  // sup of the interpolant over [a, b] within one cell
  double sup_cell(double a, double b, int cell) const;
  double sup() const { return values.size() ? values.maxCoeff() : 0.0; }
  // discrete L2(nu) norm of lambda(t, .)
  double l2_at(double t) const;

  void write_csv(const std::string& path) const;
  void write_sidecar(const std::string& path) const;
};

}  // namespace hawkon
