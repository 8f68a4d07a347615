#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hawkon/errors.hpp"

namespace hawkon {

// Position measure nu on an interval, carried as the (cdf, inverse cdf) pair.
// The inverse cdf is what builds equal-mass partitions and quadrature grids;
// the cdf maps a position back to its quantile (cell lookup).
struct PositionMeasure {
  std::string name = "uniform";
  std::function<double(double)> cdf;      // I -> [0,1]
  std::function<double(double)> inv_cdf;  // [0,1] -> I

  static PositionMeasure uniform01();

  // Midpoints of m cells of mass 1/m each, pushed through the inverse cdf.
  std::vector<double> grid(int m) const;
  // Index of the mass-1/m cell containing x (right-closed cells).
  int cell_of(double x, int m) const;
};

enum class KernelKind { Constant, PNearest, Separable, MultiClass, StepGrid, Custom };

struct HolderMeta {
  double theta = 1.0;
  double c = 0.0;
};

// Step kernel on P parts of mass 1/P each, in quantile coordinates.
struct StepKernel {
  Eigen::MatrixXd w;  // P x P
  int parts() const { return static_cast<int>(w.rows()); }
};

// Macroscopic interaction kernel W. Values are arbitrary nonnegative reals;
// the Bernoulli parameter used during sampling is min(1, rho * W).
class GraphonKernel {
 public:
  static GraphonKernel constant(double rho);
  // Indicator of circle distance < r on [0,1); evaluates to 1/2 exactly on the
  // jump so that midpoint grids with r*M integer keep row sums at 2r.
  static GraphonKernel p_nearest(double r);
  static GraphonKernel separable(std::function<double(double)> f,
                                 std::function<double(double)> g);
  static GraphonKernel multi_class(const Eigen::MatrixXd& m,
                                   const std::vector<double>& masses);
  static GraphonKernel step_grid(const StepKernel& s);
  static GraphonKernel custom(std::function<double(double, double)> eval, bool symmetric);

  double operator()(double x, double y) const { return eval_(x, y); }
  KernelKind kind() const { return kind_; }
  bool symmetric() const { return symmetric_; }
  const std::optional<HolderMeta>& holder() const { return holder_; }

  // Attach declared Hoelder regularity; spot-checked empirically on `pairs`
  // random position pairs, throws ModelError if any pair violates the bound.
  GraphonKernel with_holder(double theta, double c, const PositionMeasure& nu,
                            int quad_cells = 400, int pairs = 1000,
                            std::uint64_t seed = 7) const;

  // Parameters preserved for reporting / config round-trips.
  double param(const std::string& key) const;

 private:
  GraphonKernel() = default;
  KernelKind kind_ = KernelKind::Custom;
  bool symmetric_ = false;
  std::function<double(double, double)> eval_;
  std::optional<HolderMeta> holder_;
  std::vector<std::pair<std::string, double>> params_;
};

// How a finite-N sampling run dilutes the kernel: edge j -> i appears with
// probability min(1, rho * W(x_i, x_j)); kappa rescales synaptic weights.
struct DilutionSchedule {
  double rho = 1.0;
  enum class Kappa { Ones, InverseRho, DegreeNormalized } kappa = Kappa::Ones;
};

struct PositionScheme {
  enum class Scenario { IidSorted, RegularGrid } scenario = Scenario::RegularGrid;
  int dimension = 1;
  PositionMeasure nu = PositionMeasure::uniform01();
};

// RegularGrid: x_i = i/n on [0,1], seed-independent. IidSorted: n iid draws
// from nu, sorted ascending.
std::vector<double> sample_positions(const PositionScheme& scheme, int n, std::uint64_t seed);

// Directed interaction graph. Row i of the CSR structure lists the senders j
// with an edge j -> i (the inputs of neuron i). Self-loops allowed.
struct InteractionGraph {
  int n = 0;
  std::uint64_t seed = 0;
  std::vector<double> positions;
  std::vector<double> kappa;
  std::vector<long> indptr;   // size n+1
  std::vector<int> indices;   // in-edge sources, sorted within each row

  long edge_count() const { return indptr.empty() ? 0 : indptr.back(); }
  bool has_edge(int i, int j) const;  // j -> i

  // Transpose rows: receivers of each sender. Built once on demand.
  const std::vector<std::vector<int>>& out_edges() const;

  void save(const std::string& path) const;
  static InteractionGraph load(const std::string& path);

 private:
  mutable std::vector<std::vector<int>> out_;
};

InteractionGraph sample_graph(const GraphonKernel& kernel, const std::vector<double>& positions,
                              const DilutionSchedule& schedule, std::uint64_t seed,
                              int threads = 1);

// ---- degree and norms ----

struct DegreeField {
  std::vector<double> grid;
  std::vector<double> values;
  double sup = 0.0;
};

DegreeField degree_field(const GraphonKernel& kernel, const PositionMeasure& nu, int cells);

// sup_x of the row integral of |K|, midpoint quadrature on `cells` cells.
double norm_inf_inf(const std::function<double(double, double)>& kernel,
                    const PositionMeasure& nu, int cells);

// Evaluate a kernel at midpoint pairs of a P-part equal-mass partition.
StepKernel project_to_steps(const std::function<double(double, double)>& kernel,
                            const PositionMeasure& nu, int parts);

struct InfOneResult {
  double value = 0.0;        // exact optimum, or best value found
  bool exact = false;
  double l1 = 0.0;           // trivial upper bound ||K||_1
  double cut_lower = 0.0;    // value / 4  <= cut norm
  double cut_upper = 0.0;    // cut norm <= value
  int restarts = 0;
};

inline constexpr int kInfOneExactMaxParts = 22;

// Exact infinity->1 norm by sign-pattern enumeration (Gray-code updates).
// Refuses parts > kInfOneExactMaxParts with ResourceError.
InfOneResult norm_inf_one_exact(const StepKernel& k);

// Randomized steepest-ascent sign flips; `value` is a feasible lower
// certificate, `l1` the trivial upper bound.
InfOneResult norm_inf_one_heuristic(const StepKernel& k, int restarts = 32,
                                    std::uint64_t seed = 1);

// ---- empirical step kernels ----

// Weights kappa_i * min(1, rho * W(x_i, x_j)): the averaged sampled graphon.
StepKernel sampling_step_weights(const GraphonKernel& kernel,
                                 const std::vector<double>& positions,
                                 const DilutionSchedule& schedule,
                                 const std::vector<double>& kappa);

// Weights W(x_i, x_j): the kernel evaluated at the sampled positions.
StepKernel position_step_weights(const GraphonKernel& kernel,
                                 const std::vector<double>& positions);

// Weights kappa_i * xi_ij: the realized adjacency as a step kernel.
StepKernel adjacency_step_weights(const InteractionGraph& graph);

// ---- dilution diagnostics ----

struct DilutionRow {
  int n = 0;
  double kappa = 0.0;
  double w = 0.0;
  double ratio_cluster = 0.0;  // kappa^2 w log(n) / n, must vanish
  double ratio_degree = 0.0;   // kappa / n, must vanish
  double eps = 0.0;            // 32 kappa^2 w log(n) / n
  bool window_ok = false;      // 1/kappa <= w <= 1
};

struct DilutionReport {
  std::vector<DilutionRow> rows;
  bool window_ok = false;      // every row
  bool cluster_decreasing = false;
  bool degree_decreasing = false;
  bool ok() const { return window_ok && cluster_decreasing && degree_decreasing; }
};

DilutionReport check_dilution(const std::vector<int>& ns,
                              const std::function<double(int)>& kappa_of_n,
                              const std::function<double(int)>& w_of_n);

}  // namespace hawkon
