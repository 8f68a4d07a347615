#include "hawkon/graphon.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include "hawkon/rng.hpp"
#include "hawkon/util.hpp"

namespace hawkon {

namespace {

double clamp01(double u) { return std::min(1.0, std::max(0.0, u)); }

}  // namespace

PositionMeasure PositionMeasure::uniform01() {
  PositionMeasure nu;
  nu.name = "uniform";
  nu.cdf = [](double x) { return clamp01(x); };
  nu.inv_cdf = [](double u) { return clamp01(u); };
  return nu;
}

std::vector<double> PositionMeasure::grid(int m) const {
  if (m <= 0) throw InvalidArgument("grid: cells must be positive");
  std::vector<double> g(static_cast<std::size_t>(m));
  for (int a = 0; a < m; ++a)
    g[static_cast<std::size_t>(a)] = inv_cdf((static_cast<double>(a) + 0.5) / m);
  return g;
}

int PositionMeasure::cell_of(double x, int m) const {
  double u = clamp01(cdf(x));
  int k = static_cast<int>(std::ceil(u * m)) - 1;
  return std::min(m - 1, std::max(0, k));
}

// ---- kernels ----

GraphonKernel GraphonKernel::constant(double rho) {
  if (rho < 0) throw InvalidArgument("constant kernel: rho must be >= 0");
  GraphonKernel k;
  k.kind_ = KernelKind::Constant;
  k.symmetric_ = true;
  k.eval_ = [rho](double, double) { return rho; };
  k.params_ = {{"rho", rho}};
  return k;
}

GraphonKernel GraphonKernel::p_nearest(double r) {
  if (r <= 0 || r > 0.5) throw InvalidArgument("p_nearest: need 0 < r <= 1/2");
  GraphonKernel k;
  k.kind_ = KernelKind::PNearest;
  k.symmetric_ = true;
  k.eval_ = [r](double x, double y) {
    double d = std::fabs(x - y);
    d = std::min(d, 1.0 - d);
    if (std::fabs(d - r) <= 1e-9) return 0.5;  // midpoint value on the jump
    return d < r ? 1.0 : 0.0;
  };
  k.params_ = {{"r", r}};
  return k;
}

GraphonKernel GraphonKernel::separable(std::function<double(double)> f,
                                       std::function<double(double)> g) {
  if (!f || !g) throw InvalidArgument("separable: missing factor");
  GraphonKernel k;
  k.kind_ = KernelKind::Separable;
  k.symmetric_ = false;  // unknown in general
  k.eval_ = [f = std::move(f), g = std::move(g)](double x, double y) { return f(x) * g(y); };
  return k;
}

GraphonKernel GraphonKernel::multi_class(const Eigen::MatrixXd& m,
                                         const std::vector<double>& masses) {
  int p = static_cast<int>(m.rows());
  if (p == 0 || m.cols() != p) throw InvalidArgument("multi_class: matrix must be square");
  if (static_cast<int>(masses.size()) != p)
    throw InvalidArgument("multi_class: masses size mismatch");
  double total = 0;
  for (double a : masses) {
    if (a <= 0) throw InvalidArgument("multi_class: masses must be positive");
    total += a;
  }
  if (std::fabs(total - 1.0) > 1e-12) throw InvalidArgument("multi_class: masses must sum to 1");
  if ((m.array() < 0).any()) throw InvalidArgument("multi_class: entries must be >= 0");
  std::vector<double> bounds(static_cast<std::size_t>(p));
  double acc = 0;
  for (int j = 0; j < p; ++j) {
    acc += masses[static_cast<std::size_t>(j)];
    bounds[static_cast<std::size_t>(j)] = acc;
  }
  bounds.back() = 1.0;
  auto cls = [bounds](double x) {
    auto it = std::lower_bound(bounds.begin(), bounds.end(), clamp01(x));
    return static_cast<int>(it - bounds.begin());
  };
  GraphonKernel k;
  k.kind_ = KernelKind::MultiClass;
  k.symmetric_ = m.isApprox(m.transpose());
  k.eval_ = [m, cls](double x, double y) { return m(cls(x), cls(y)); };
  return k;
}

GraphonKernel GraphonKernel::step_grid(const StepKernel& s) {
  int p = s.parts();
  if (p == 0) throw InvalidArgument("step_grid: empty kernel");
  GraphonKernel k;
  k.kind_ = KernelKind::StepGrid;
  k.symmetric_ = s.w.isApprox(s.w.transpose());
  k.eval_ = [w = s.w, p](double x, double y) {
    auto cell = [p](double v) {
      int c = static_cast<int>(std::ceil(clamp01(v) * p)) - 1;
      return std::min(p - 1, std::max(0, c));
    };
    return w(cell(x), cell(y));
  };
  return k;
}

GraphonKernel GraphonKernel::custom(std::function<double(double, double)> eval, bool symmetric) {
  if (!eval) throw InvalidArgument("custom kernel: missing evaluator");
  GraphonKernel k;
  k.kind_ = KernelKind::Custom;
  k.symmetric_ = symmetric;
  k.eval_ = std::move(eval);
  return k;
}

double GraphonKernel::param(const std::string& key) const {
  for (const auto& [k, v] : params_)
    if (k == key) return v;
  throw InvalidArgument("kernel has no parameter '" + key + "'");
}

GraphonKernel GraphonKernel::with_holder(double theta, double c, const PositionMeasure& nu,
                                         int quad_cells, int pairs, std::uint64_t seed) const {
  if (theta <= 0 || theta > 1 || c < 0) throw InvalidArgument("with_holder: bad exponent or constant");
  GraphonKernel k = *this;
  k.holder_ = HolderMeta{theta, c};
  // Spot check on random pairs: row L1 distance by midpoint quadrature, with
  // an O(1/M) allowance for the quadrature of discontinuous rows.
  auto grid = nu.grid(quad_cells);
  RngStream rng(seed, 0);
  double slack = 4.0 / quad_cells + 1e-9;
  for (int t = 0; t < pairs; ++t) {
    double x = nu.inv_cdf(rng.uniform01());
    double xp = nu.inv_cdf(rng.uniform01());
    double dist = 0;
    for (double y : grid) dist += std::fabs(eval_(x, y) - eval_(xp, y));
    dist /= quad_cells;
    double allowed = c * std::pow(std::fabs(x - xp), theta) + slack;
    if (dist > allowed) {
      std::ostringstream os;
      os << "declared Hoelder bound violated at x=" << x << ", x'=" << xp << ": row distance "
         << dist << " > " << allowed;
      throw ModelError(os.str());
    }
  }
  return k;
}

// ---- positions ----

std::vector<double> sample_positions(const PositionScheme& scheme, int n, std::uint64_t seed) {
  if (n <= 0) throw InvalidArgument("sample_positions: n must be positive");
  if (scheme.dimension != 1)
    throw InvalidArgument("sample_positions: only dimension 1 is supported");
  std::vector<double> xs(static_cast<std::size_t>(n));
  if (scheme.scenario == PositionScheme::Scenario::RegularGrid) {
    for (int i = 0; i < n; ++i)
      xs[static_cast<std::size_t>(i)] = static_cast<double>(i + 1) / n;
    return xs;
  }
  RngStream rng(seed, 0);
  for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = scheme.nu.inv_cdf(rng.uniform01());
  std::sort(xs.begin(), xs.end());
  return xs;
}

// ---- graph sampling ----

bool InteractionGraph::has_edge(int i, int j) const {
  auto lo = indices.begin() + indptr[static_cast<std::size_t>(i)];
  auto hi = indices.begin() + indptr[static_cast<std::size_t>(i) + 1];
  return std::binary_search(lo, hi, j);
}

const std::vector<std::vector<int>>& InteractionGraph::out_edges() const {
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  if (out_.empty() && n > 0) {
    out_.assign(static_cast<std::size_t>(n), {});
    for (int i = 0; i < n; ++i)
      for (long e = indptr[static_cast<std::size_t>(i)]; e < indptr[static_cast<std::size_t>(i) + 1]; ++e)
        out_[static_cast<std::size_t>(indices[static_cast<std::size_t>(e)])].push_back(i);
  }
  return out_;
}

InteractionGraph sample_graph(const GraphonKernel& kernel, const std::vector<double>& positions,
                              const DilutionSchedule& schedule, std::uint64_t seed, int threads) {
  int n = static_cast<int>(positions.size());
  if (n == 0) throw InvalidArgument("sample_graph: empty positions");
  if (schedule.rho <= 0) throw InvalidArgument("sample_graph: rho must be positive");

  std::vector<std::vector<int>> rows(static_cast<std::size_t>(n));
  std::vector<double> prob_row_sum(static_cast<std::size_t>(n), 0.0);
  std::vector<std::pair<int, int>> bad(1, {-1, -1});
  std::mutex bad_mu;

  parallel_for(n, threads, [&](long li) {
    int i = static_cast<int>(li);
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    auto& row = rows[static_cast<std::size_t>(i)];
    double xi = positions[static_cast<std::size_t>(i)];
    double sum = 0;
    for (int j = 0; j < n; ++j) {
      double w = kernel(xi, positions[static_cast<std::size_t>(j)]);
      if (!(w >= 0)) {
        std::lock_guard<std::mutex> lock(bad_mu);
        if (bad[0].first < 0) bad[0] = {i, j};
        return;
      }
      double p = std::min(1.0, schedule.rho * w);
      sum += p;
      if (rng.uniform01() < p) row.push_back(j);
    }
    prob_row_sum[static_cast<std::size_t>(i)] = sum;
  });
  if (bad[0].first >= 0) {
    std::ostringstream os;
    os << "sample_graph: kernel value outside [0, inf) at pair (" << bad[0].first << ", "
       << bad[0].second << ")";
    throw ModelError(os.str());
  }

  InteractionGraph g;
  g.n = n;
  g.seed = seed;
  g.positions = positions;
  g.kappa.resize(static_cast<std::size_t>(n));
  switch (schedule.kappa) {
    case DilutionSchedule::Kappa::Ones:
      std::fill(g.kappa.begin(), g.kappa.end(), 1.0);
      break;
    case DilutionSchedule::Kappa::InverseRho:
      std::fill(g.kappa.begin(), g.kappa.end(), 1.0 / schedule.rho);
      break;
    case DilutionSchedule::Kappa::DegreeNormalized:
      for (int i = 0; i < n; ++i) {
        double s = prob_row_sum[static_cast<std::size_t>(i)];
        if (s <= 0) {
          std::ostringstream os;
          os << "sample_graph: degree normalization undefined, expected in-degree of node " << i
             << " is zero";
          throw ModelError(os.str());
        }
        g.kappa[static_cast<std::size_t>(i)] = static_cast<double>(n) / s;
      }
      break;
  }

  g.indptr.resize(static_cast<std::size_t>(n) + 1);
  g.indptr[0] = 0;
  for (int i = 0; i < n; ++i)
    g.indptr[static_cast<std::size_t>(i) + 1] =
        g.indptr[static_cast<std::size_t>(i)] + static_cast<long>(rows[static_cast<std::size_t>(i)].size());
  g.indices.reserve(static_cast<std::size_t>(g.indptr.back()));
  for (auto& row : rows) g.indices.insert(g.indices.end(), row.begin(), row.end());
  return g;
}

// ---- graph text format ----

void InteractionGraph::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open '" + path + "' for writing");
  out << "hawkon-graph 1\n";
  out << n << " 1 " << seed << "\n";
  out << "positions\n";
  for (double x : positions) out << format_double(x) << "\n";
  out << "adjacency\n";
  for (std::size_t i = 0; i < indptr.size(); ++i) out << (i ? " " : "") << indptr[i];
  out << "\n";
  for (int i = 0; i < n; ++i) {
    for (long e = indptr[static_cast<std::size_t>(i)]; e < indptr[static_cast<std::size_t>(i) + 1]; ++e) {
      if (e > indptr[static_cast<std::size_t>(i)]) out << " ";
      out << indices[static_cast<std::size_t>(e)];
    }
    out << "\n";
  }
  out << "kappa\n";
  for (double k : kappa) out << format_double(k) << "\n";
  out << "end\n";
  if (!out) throw InvalidArgument("write failed for '" + path + "'");
}

namespace {

std::string next_line(std::istream& in, int& lineno, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ConfigError("truncated graph file '" + path + "' at line " + std::to_string(lineno + 1),
                      lineno + 1);
  }
  ++lineno;
  return line;
}

}  // namespace

InteractionGraph InteractionGraph::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open graph file '" + path + "'");
  int lineno = 0;
  auto expect = [&](const std::string& want) {
    std::string got = next_line(in, lineno, path);
    if (got != want)
      throw ConfigError("graph file '" + path + "': expected '" + want + "' at line " +
                            std::to_string(lineno),
                        lineno);
  };
  expect("hawkon-graph 1");
  InteractionGraph g;
  {
    std::istringstream hs(next_line(in, lineno, path));
    int d = 0;
    if (!(hs >> g.n >> d >> g.seed) || g.n <= 0 || d != 1)
      throw ConfigError("graph file '" + path + "': bad header at line " + std::to_string(lineno),
                        lineno);
  }
  expect("positions");
  g.positions.resize(static_cast<std::size_t>(g.n));
  for (int i = 0; i < g.n; ++i) {
    std::istringstream ls(next_line(in, lineno, path));
    if (!(ls >> g.positions[static_cast<std::size_t>(i)]))
      throw ConfigError("graph file '" + path + "': bad position at line " + std::to_string(lineno),
                        lineno);
  }
  expect("adjacency");
  {
    std::istringstream ls(next_line(in, lineno, path));
    g.indptr.resize(static_cast<std::size_t>(g.n) + 1);
    for (std::size_t i = 0; i < g.indptr.size(); ++i)
      if (!(ls >> g.indptr[i]))
        throw ConfigError("graph file '" + path + "': bad index pointers at line " +
                              std::to_string(lineno),
                          lineno);
    if (g.indptr[0] != 0)
      throw ConfigError("graph file '" + path + "': index pointers must start at 0", lineno);
  }
  g.indices.reserve(static_cast<std::size_t>(g.indptr.back()));
  for (int i = 0; i < g.n; ++i) {
    std::istringstream ls(next_line(in, lineno, path));
    long want = g.indptr[static_cast<std::size_t>(i) + 1] - g.indptr[static_cast<std::size_t>(i)];
    int v = 0;
    long got = 0;
    while (ls >> v) {
      if (v < 0 || v >= g.n)
        throw ConfigError("graph file '" + path + "': edge source out of range at line " +
                              std::to_string(lineno),
                          lineno);
      g.indices.push_back(v);
      ++got;
    }
    if (got != want)
      throw ConfigError("graph file '" + path + "': row " + std::to_string(i) + " has " +
                            std::to_string(got) + " entries, index pointers promise " +
                            std::to_string(want) + " (line " + std::to_string(lineno) + ")",
                        lineno);
  }
  expect("kappa");
  g.kappa.resize(static_cast<std::size_t>(g.n));
  for (int i = 0; i < g.n; ++i) {
    std::istringstream ls(next_line(in, lineno, path));
    if (!(ls >> g.kappa[static_cast<std::size_t>(i)]))
      throw ConfigError("graph file '" + path + "': bad kappa at line " + std::to_string(lineno),
                        lineno);
  }
  expect("end");
  return g;
}

// ---- degree and norms ----

DegreeField degree_field(const GraphonKernel& kernel, const PositionMeasure& nu, int cells) {
  DegreeField d;
  d.grid = nu.grid(cells);
  d.values.resize(d.grid.size());
  for (std::size_t a = 0; a < d.grid.size(); ++a) {
    double s = 0;
    for (double y : d.grid) s += kernel(d.grid[a], y);
    d.values[a] = s / cells;
    d.sup = std::max(d.sup, d.values[a]);
  }
  return d;
}

double norm_inf_inf(const std::function<double(double, double)>& kernel,
                    const PositionMeasure& nu, int cells) {
  auto grid = nu.grid(cells);
  double sup = 0;
  for (double x : grid) {
    double s = 0;
    for (double y : grid) s += std::fabs(kernel(x, y));
    sup = std::max(sup, s / cells);
  }
  return sup;
}

StepKernel project_to_steps(const std::function<double(double, double)>& kernel,
                            const PositionMeasure& nu, int parts) {
  auto grid = nu.grid(parts);
  StepKernel s;
  s.w.resize(parts, parts);
  for (int a = 0; a < parts; ++a)
    for (int b = 0; b < parts; ++b) s.w(a, b) = kernel(grid[static_cast<std::size_t>(a)],
                                                       grid[static_cast<std::size_t>(b)]);
  return s;
}

namespace {

InfOneResult inf_one_base(const StepKernel& k) {
  InfOneResult r;
  int p = k.parts();
  r.l1 = k.w.array().abs().sum() / (static_cast<double>(p) * p);
  return r;
}

void finish_inf_one(InfOneResult& r) {
  r.cut_lower = r.value / 4.0;
  r.cut_upper = r.value;
}

}  // namespace

InfOneResult norm_inf_one_exact(const StepKernel& k) {
  int p = k.parts();
  if (p <= 0) throw InvalidArgument("norm_inf_one_exact: empty kernel");
  if (p > kInfOneExactMaxParts)
    throw ResourceError("norm_inf_one_exact: " + std::to_string(p) + " parts exceeds the cutoff of " +
                        std::to_string(kInfOneExactMaxParts) + "; use the heuristic mode");
  InfOneResult r = inf_one_base(k);
  // Gray-code walk of sign patterns: one sign flip per step keeps the row
  // accumulator update O(p).
  Eigen::VectorXd g = Eigen::VectorXd::Ones(p);
  Eigen::VectorXd rowsum = k.w.rowwise().sum();
  double inv = 1.0 / (static_cast<double>(p) * p);
  double best = rowsum.array().abs().sum() * inv;
  std::uint64_t total = 1ull << p;
  for (std::uint64_t step = 1; step < total; ++step) {
    int b = std::countr_zero(step);
    g(b) = -g(b);
    rowsum += 2.0 * g(b) * k.w.col(b);
    best = std::max(best, rowsum.array().abs().sum() * inv);
  }
  r.value = best;
  r.exact = true;
  finish_inf_one(r);
  return r;
}

InfOneResult norm_inf_one_heuristic(const StepKernel& k, int restarts, std::uint64_t seed) {
  int p = k.parts();
  if (p <= 0) throw InvalidArgument("norm_inf_one_heuristic: empty kernel");
  if (restarts < 1) throw InvalidArgument("norm_inf_one_heuristic: restarts must be >= 1");
  InfOneResult r = inf_one_base(k);
  double inv = 1.0 / (static_cast<double>(p) * p);
  double best = 0;
  for (int t = 0; t < restarts; ++t) {
    RngStream rng(seed, static_cast<std::uint64_t>(t));
    Eigen::VectorXd g(p);
    for (int b = 0; b < p; ++b) g(b) = rng.next_u32() & 1u ? 1.0 : -1.0;
    Eigen::VectorXd rowsum = k.w * g;
    double cur = rowsum.array().abs().sum() * inv;
    for (;;) {
      int flip = -1;
      double flip_val = cur;
      for (int b = 0; b < p; ++b) {
        double v = (rowsum - 2.0 * g(b) * k.w.col(b)).array().abs().sum() * inv;
        if (v > flip_val + 1e-15) {
          flip_val = v;
          flip = b;
        }
      }
      if (flip < 0) break;
      g(flip) = -g(flip);
      rowsum += 2.0 * g(flip) * k.w.col(flip);
      cur = flip_val;
    }
    best = std::max(best, cur);
  }
  r.value = best;
  r.exact = false;
  r.restarts = restarts;
  finish_inf_one(r);
  return r;
}

// ---- empirical step kernels ----

StepKernel sampling_step_weights(const GraphonKernel& kernel, const std::vector<double>& positions,
                                 const DilutionSchedule& schedule,
                                 const std::vector<double>& kappa) {
  int n = static_cast<int>(positions.size());
  if (static_cast<int>(kappa.size()) != n)
    throw InvalidArgument("sampling_step_weights: kappa size mismatch");
  StepKernel s;
  s.w.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      s.w(i, j) = kappa[static_cast<std::size_t>(i)] *
                  std::min(1.0, schedule.rho * kernel(positions[static_cast<std::size_t>(i)],
                                                      positions[static_cast<std::size_t>(j)]));
  return s;
}

StepKernel position_step_weights(const GraphonKernel& kernel, const std::vector<double>& positions) {
  int n = static_cast<int>(positions.size());
  StepKernel s;
  s.w.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      s.w(i, j) = kernel(positions[static_cast<std::size_t>(i)], positions[static_cast<std::size_t>(j)]);
  return s;
}

StepKernel adjacency_step_weights(const InteractionGraph& graph) {
  StepKernel s;
  s.w = Eigen::MatrixXd::Zero(graph.n, graph.n);
  for (int i = 0; i < graph.n; ++i)
    for (long e = graph.indptr[static_cast<std::size_t>(i)];
         e < graph.indptr[static_cast<std::size_t>(i) + 1]; ++e)
      s.w(i, graph.indices[static_cast<std::size_t>(e)]) = graph.kappa[static_cast<std::size_t>(i)];
  return s;
}

// ---- dilution diagnostics ----

DilutionReport check_dilution(const std::vector<int>& ns,
                              const std::function<double(int)>& kappa_of_n,
                              const std::function<double(int)>& w_of_n) {
  if (ns.size() < 2) throw InvalidArgument("check_dilution: need at least two sizes");
  DilutionReport rep;
  rep.window_ok = true;
  for (int n : ns) {
    if (n < 2) throw InvalidArgument("check_dilution: sizes must be >= 2");
    DilutionRow row;
    row.n = n;
    row.kappa = kappa_of_n(n);
    row.w = w_of_n(n);
    if (row.kappa <= 0 || row.w <= 0)
      throw InvalidArgument("check_dilution: kappa and w must be positive");
    double ln = std::log(static_cast<double>(n));
    row.ratio_cluster = row.kappa * row.kappa * row.w * ln / n;
    row.ratio_degree = row.kappa / n;
    row.eps = 32.0 * row.ratio_cluster;
    row.window_ok = (1.0 / row.kappa <= row.w * (1 + 1e-12)) && (row.w <= 1.0 + 1e-12);
    rep.window_ok = rep.window_ok && row.window_ok;
    rep.rows.push_back(row);
  }
  auto decreasing = [&](auto field) {
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
      if (field(rep.rows[i]) > field(rep.rows[i - 1]) * (1 + 1e-9)) return false;
    return field(rep.rows.back()) < field(rep.rows.front());
  };
  rep.cluster_decreasing = decreasing([](const DilutionRow& r) { return r.ratio_cluster; });
  rep.degree_decreasing = decreasing([](const DilutionRow& r) { return r.ratio_degree; });
  return rep;
}

}  // namespace hawkon
