#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hawkon/graphon.hpp"
#include "hawkon/hawkes_sim.hpp"
#include "hawkon/limit_solver.hpp"
#include "hawkon/model.hpp"
#include "hawkon/util.hpp"

namespace hawkon {

// A named, fully specified scenario: kernel + model + sampling scheme plus the
// closed-form stationary profile used as a plot overlay. `ell_published` is
// set when an externally published reference value exists and differs from
// the fixed-point formula; `note` explains the discrepancy.
struct FigureSetup {
  std::string id;
  GraphonKernel kernel;
  HawkesModel model;
  DilutionSchedule dilution;
  PositionScheme positions;
  int n = 0;
  double T = 0.0;
  std::function<double(double)> ell_formula;
  std::function<double(double)> ell_published;  // null when it matches the formula
  std::string note;
};

// Presets: fig1 (homogeneous graph, affine baseline), fig2 (homogeneous graph,
// constant baseline), fig3 (circle neighborhood graph), fig4 (product kernel),
// plus "null" (no interaction, for trivial cross-checks).
FigureSetup figure_setup(const std::string& id);

struct ExperimentPlan {
  std::string scenario = "fig2";
  std::vector<int> n_values;
  int replicas = 20;
  double T = 5.0;
  double dt = 1e-3;
  int cells = 400;
  int profile_knots = 101;
  double tol = 1e-8;
  std::uint64_t seed = 0;
  std::string out_dir;  // empty: nothing written
  int threads = 1;
  std::optional<int> n_override;     // figure runs only
  std::optional<double> t_override;  // figure runs only
};

struct FigureOutputs {
  std::string id;
  int n = 0;
  double T = 0.0;
  long edges = 0;
  double window = 0.0;
  std::vector<double> positions;
  std::vector<double> empirical_rate;  // trailing-window rate per neuron
  std::vector<double> ell_at_neuron;   // stationary profile at x_i (empty if not subcritical)
  IntensityField field;
  SpikeRecord record;
  nlohmann::json plan;
};

FigureOutputs run_figure(const ExperimentPlan& plan);

struct ConvergenceRow {
  int n = 0;
  double mean_error = 0.0;  // across-replica average of the per-graph mean sup gap
  double max_error = 0.0;   // worst per-neuron sup gap seen at this size
  double std_error = 0.0;
  int replicas = 0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  std::vector<std::vector<double>> replica_means;  // [n-index][replica]
  SlopeFit slope;  // log mean_error vs log n over positive entries
  bool decreasing = false;
  nlohmann::json plan;
};

// Coupled-run error sweep over population sizes: fresh graph and noise per
// replica, one shared limit field per scenario.
ConvergenceTable convergence_sweep(const ExperimentPlan& plan);

struct ProfileErrorRow {
  int n = 0;
  double mean_error = 0.0;
  double std_error = 0.0;
  int replicas = 0;
};

struct ProfileErrorTable {
  std::vector<ProfileErrorRow> rows;
  std::vector<std::vector<double>> replica_errors;
  bool decreasing = false;
  nlohmann::json plan;
};

// Space-time L1 distance between the per-neuron drive field and the solved
// macroscopic drive, per population size. Requires the regular-grid scheme.
ProfileErrorTable profile_error_curve(const ExperimentPlan& plan);

// ---- shared estimators ----

// Events in (T - window, T] divided by window, per neuron.
std::vector<double> trailing_rates(const SpikeRecord& record, double T, double window);

struct BinnedIntensity {
  std::vector<double> t_mid;
  std::vector<double> mean;  // per-neuron rate averaged over replicas
  std::vector<double> se;    // across-replica standard error
};

// Time-binned empirical population rate from independent replicas.
BinnedIntensity binned_intensity(const std::vector<SpikeRecord>& records, int n_neurons,
                                 double T, int bins);

// Space-time L1 gap between two cell-step fields sharing the measure nu:
// exact in x (merged equal-mass partitions), trapezoid in t over the first
// field's knots. The second field contributes u_values when present.
double drive_l1_distance(const IntensityField& micro, const IntensityField& limit);

}  // namespace hawkon
