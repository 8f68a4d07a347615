#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "hawkon/hawkes_sim.hpp"
#include "hawkon/limit_solver.hpp"
#include "hawkon/rng.hpp"

using namespace hawkon;

namespace {

InteractionGraph make_graph(const GraphonKernel& kernel, int n, std::uint64_t seed) {
  PositionScheme scheme;
  auto pos = sample_positions(scheme, n, seed);
  DilutionSchedule sched;
  return sample_graph(kernel, pos, sched, seed);
}

HawkesModel unit_model() {
  return HawkesModel(JumpRate::linear(), MemoryKernel::exponential(2.0),
                     Baseline::constant(1.0));
}

}  // namespace

TEST_CASE("no interaction reduces to independent poisson processes") {
  auto graph = make_graph(GraphonKernel::constant(0.0), 1000, 1);
  CHECK(graph.edge_count() == 0);
  SimOptions opts;
  opts.T = 2.0;
  opts.seed = 5;
  auto rec = simulate(graph, unit_model(), opts);
  double mean = 1000.0 * 2.0;
  CHECK(std::abs(static_cast<double>(rec.total()) - mean) < 4.5 * std::sqrt(mean));
  for (const auto& ts : rec.times) {
    CHECK(std::is_sorted(ts.begin(), ts.end()));
    CHECK(std::adjacent_find(ts.begin(), ts.end()) == ts.end());
    for (double t : ts) {
      CHECK(t > 0.0);
      CHECK(t <= 2.0);
    }
  }
}

TEST_CASE("simulation is reproducible and seed-sensitive") {
  auto graph = make_graph(GraphonKernel::constant(0.5), 120, 2);
  SimOptions opts;
  opts.T = 2.0;
  opts.seed = 9;
  auto a = simulate(graph, unit_model(), opts);
  auto b = simulate(graph, unit_model(), opts);
  CHECK(a.times == b.times);
  opts.seed = 10;
  auto c = simulate(graph, unit_model(), opts);
  CHECK(a.times != c.times);
}

TEST_CASE("self-excited single neuron matches the renewal mean") {
  // one neuron with a self-loop of weight 1: E N(T) = 2T - (1 - e^{-T})
  auto graph = make_graph(GraphonKernel::constant(1.0), 1, 1);
  REQUIRE(graph.edge_count() == 1);
  auto model = unit_model();
  const int reps = 1500;
  const double T = 2.0;
  double sum = 0.0, sumsq = 0.0;
  for (int r = 0; r < reps; ++r) {
    SimOptions opts;
    opts.T = T;
    opts.seed = derive_seed(400, 0, static_cast<std::uint64_t>(r));
    auto rec = simulate(graph, model, opts);
    double k = static_cast<double>(rec.total());
    sum += k;
    sumsq += k * k;
  }
  double mean = sum / reps;
  double var = (sumsq - sum * sum / reps) / (reps - 1);
  double expected = 2.0 * T - (1.0 - std::exp(-T));
  CHECK(std::abs(mean - expected) < 4.5 * std::sqrt(var / reps));
}

TEST_CASE("general-kernel path reproduces the same renewal mean") {
  // same model with h tabulated on a fine grid instead of the exact form
  std::vector<double> grid, vals;
  for (int k = 0; k <= 2000; ++k) {
    double t = 0.02 * k;
    grid.push_back(t);
    vals.push_back(std::exp(-2.0 * t));
  }
  auto model = HawkesModel(JumpRate::linear(), MemoryKernel::tabulated(grid, vals),
                           Baseline::constant(1.0));
  auto graph = make_graph(GraphonKernel::constant(1.0), 1, 1);
  const int reps = 1200;
  const double T = 2.0;
  double sum = 0.0, sumsq = 0.0;
  for (int r = 0; r < reps; ++r) {
    SimOptions opts;
    opts.T = T;
    opts.seed = derive_seed(401, 0, static_cast<std::uint64_t>(r));
    auto rec = simulate(graph, model, opts);
    double k = static_cast<double>(rec.total());
    sum += k;
    sumsq += k * k;
  }
  double mean = sum / reps;
  double var = (sumsq - sum * sum / reps) / (reps - 1);
  double expected = 2.0 * T - (1.0 - std::exp(-T));
  CHECK(std::abs(mean - expected) < 4.5 * std::sqrt(var / reps));
}

TEST_CASE("event budget aborts with an explosion error") {
  auto graph = make_graph(GraphonKernel::constant(0.0), 500, 3);
  SimOptions opts;
  opts.T = 2.0;
  opts.seed = 1;
  opts.max_events = 5;
  CHECK_THROWS_AS(simulate(graph, unit_model(), opts), ExplosionError);
  try {
    simulate(graph, unit_model(), opts);
  } catch (const ExplosionError& e) {
    CHECK(e.events == 5);
    CHECK(e.reached_time > 0.0);
    CHECK(e.reached_time <= 2.0);
  }
}

TEST_CASE("coupling against the process's own intensity is exact") {
  auto graph = make_graph(GraphonKernel::constant(0.0), 1, 1);
  IntensityField limit;
  limit.dt = 0.5;
  limit.knots = 9;  // T = 4
  limit.xs = {0.5};
  limit.values = Eigen::MatrixXd::Constant(9, 1, 1.0);
  SimOptions opts;
  opts.T = 4.0;
  opts.seed = 77;
  auto rec = simulate_coupled(graph, unit_model(), limit, opts);
  REQUIRE(rec.limit_times.has_value());
  CHECK(rec.times == *rec.limit_times);
  CHECK(rec.delta[0] == 0);
  CHECK(coupling_sup(rec)[0] == 0);
}

TEST_CASE("coupled run bounds the pathwise gap by the one-sided mismatches") {
  auto graph = make_graph(GraphonKernel::constant(0.5), 200, 4);
  auto model = unit_model();
  SolveOptions so;
  so.T = 2.0;
  so.dt = 1e-2;
  so.cells = 16;
  auto field = solve_lambda(GraphonKernel::constant(0.5), model, so);
  SimOptions opts;
  opts.T = 2.0;
  opts.seed = 6;
  auto rec = simulate_coupled(graph, model, field, opts);
  REQUIRE(rec.limit_times.has_value());
  auto sup = coupling_sup(rec);
  REQUIRE(sup.size() == 200);
  for (int i = 0; i < 200; ++i) {
    CHECK(sup[static_cast<std::size_t>(i)] <= rec.delta[static_cast<std::size_t>(i)]);
    long long endgap =
        static_cast<long long>(rec.times[static_cast<std::size_t>(i)].size()) -
        static_cast<long long>((*rec.limit_times)[static_cast<std::size_t>(i)].size());
    CHECK(std::llabs(endgap) <= sup[static_cast<std::size_t>(i)]);
  }
  CHECK(rec.total_limit() > 0);
}

TEST_CASE("uncoupled records refuse coupled-only helpers") {
  auto graph = make_graph(GraphonKernel::constant(0.0), 3, 1);
  SimOptions opts;
  opts.T = 0.5;
  auto rec = simulate(graph, unit_model(), opts);
  CHECK_THROWS_AS(coupling_sup(rec), InvalidState);
  CHECK_THROWS_AS(rec.write_summary_csv("nope.csv"), InvalidState);
}

TEST_CASE("spike csv formats") {
  auto graph = make_graph(GraphonKernel::constant(0.5), 40, 4);
  auto model = unit_model();
  SolveOptions so;
  so.T = 1.0;
  so.dt = 1e-2;
  so.cells = 8;
  auto field = solve_lambda(GraphonKernel::constant(0.5), model, so);
  SimOptions opts;
  opts.T = 1.0;
  opts.seed = 12;
  auto rec = simulate_coupled(graph, model, field, opts);
  rec.write_csv("test_spikes.csv");
  rec.write_summary_csv("test_summary.csv");
  std::ifstream sc("test_spikes.csv");
  std::string header;
  std::getline(sc, header);
  CHECK(header == "neuron_id,time,process");
  std::ifstream su("test_summary.csv");
  std::getline(su, header);
  CHECK(header == "neuron_id,count_micro,count_limit,delta");
  int lines = 0;
  std::string line;
  while (std::getline(su, line)) ++lines;
  CHECK(lines == 40);
  std::remove("test_spikes.csv");
  std::remove("test_summary.csv");
}

TEST_CASE("spatial profile without edges is the bare baseline") {
  auto graph = make_graph(GraphonKernel::constant(0.0), 50, 2);
  auto model = HawkesModel(JumpRate::linear(), MemoryKernel::exponential(2.0),
                           Baseline::affine(1.0, 1.0));
  SimOptions opts;
  opts.T = 2.0;
  opts.seed = 8;
  auto rec = simulate(graph, model, opts);
  auto prof = spatial_profile(rec, graph, model, 2.0, 21);
  CHECK(prof.knots == 21);
  CHECK(prof.cells() == 50);
  for (int k = 0; k < prof.knots; ++k)
    for (int i = 0; i < 50; ++i)
      CHECK(prof.values(k, i) ==
            doctest::Approx(graph.positions[static_cast<std::size_t>(i)] + 1.0).epsilon(1e-12));
}

TEST_CASE("exponential recursion and direct sums agree on the drive field") {
  auto graph = make_graph(GraphonKernel::constant(0.5), 60, 3);
  auto exp_model = unit_model();
  SimOptions opts;
  opts.T = 2.0;
  opts.seed = 15;
  auto rec = simulate(graph, exp_model, opts);

  std::vector<double> grid, vals;
  for (int k = 0; k <= 4000; ++k) {
    double t = 0.001 * k;
    grid.push_back(t);
    vals.push_back(std::exp(-2.0 * t));
  }
  auto tab_model = HawkesModel(JumpRate::linear(), MemoryKernel::tabulated(grid, vals),
                               Baseline::constant(1.0));
  auto a = spatial_profile(rec, graph, exp_model, 2.0, 41);
  auto b = spatial_profile(rec, graph, tab_model, 2.0, 41);
  double gap = (a.values - b.values).array().abs().maxCoeff();
  CHECK(gap < 1e-4);
}
