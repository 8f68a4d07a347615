#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hawkon/graphon.hpp"
#include "hawkon/rng.hpp"
#include "hawkon/util.hpp"

using namespace hawkon;

TEST_CASE("uniform measure grid and cell lookup") {
  PositionMeasure nu = PositionMeasure::uniform01();
  auto g = nu.grid(4);
  REQUIRE(g.size() == 4);
  CHECK(g[0] == doctest::Approx(0.125));
  CHECK(g[3] == doctest::Approx(0.875));
  CHECK(nu.cell_of(0.25, 4) == 0);  // right-closed cells
  CHECK(nu.cell_of(0.26, 4) == 1);
  CHECK(nu.cell_of(1.0, 4) == 3);
  CHECK(nu.cell_of(1e-9, 4) == 0);
}

TEST_CASE("regular grid positions are i/n and seed-independent") {
  PositionScheme scheme;
  scheme.scenario = PositionScheme::Scenario::RegularGrid;
  auto a = sample_positions(scheme, 4, 1);
  auto b = sample_positions(scheme, 4, 999);
  REQUIRE(a.size() == 4);
  CHECK(a == b);
  CHECK(a[0] == doctest::Approx(0.25));
  CHECK(a[1] == doctest::Approx(0.5));
  CHECK(a[2] == doctest::Approx(0.75));
  CHECK(a[3] == doctest::Approx(1.0));
}

TEST_CASE("iid positions are sorted and uniform") {
  PositionScheme scheme;
  scheme.scenario = PositionScheme::Scenario::IidSorted;
  auto x = sample_positions(scheme, 4000, 5);
  CHECK(std::is_sorted(x.begin(), x.end()));
  // already sorted => KS statistic directly; 1% critical value
  CHECK(ks_statistic_uniform(x) < 1.628 / std::sqrt(4000.0));
}

TEST_CASE("erdos-renyi style sampling hits the binomial edge count") {
  auto kernel = GraphonKernel::constant(0.5);
  PositionScheme scheme;
  auto pos = sample_positions(scheme, 1000, 3);
  DilutionSchedule sched;  // rho = 1
  auto graph = sample_graph(kernel, pos, sched, 17);
  double mean = 0.5 * 1000.0 * 1000.0;
  double sd = std::sqrt(1000.0 * 1000.0 * 0.25);
  CHECK(std::abs(static_cast<double>(graph.edge_count()) - mean) < 4.5 * sd);
  // structural sanity
  for (int i = 0; i < graph.n; ++i) {
    CHECK(std::is_sorted(graph.indices.begin() + graph.indptr[i],
                         graph.indices.begin() + graph.indptr[i + 1]));
  }
  CHECK(graph.has_edge(0, graph.indices[0]));
}

TEST_CASE("graph sampling is reproducible and seed-sensitive") {
  auto kernel = GraphonKernel::constant(0.3);
  PositionScheme scheme;
  auto pos = sample_positions(scheme, 150, 1);
  DilutionSchedule sched;
  auto g1 = sample_graph(kernel, pos, sched, 7);
  auto g2 = sample_graph(kernel, pos, sched, 7);
  auto g3 = sample_graph(kernel, pos, sched, 8);
  CHECK(g1.indices == g2.indices);
  CHECK(g1.indptr == g2.indptr);
  CHECK(g1.indices != g3.indices);
}

TEST_CASE("multithreaded sampling matches single-threaded") {
  auto kernel = GraphonKernel::constant(0.4);
  PositionScheme scheme;
  auto pos = sample_positions(scheme, 300, 1);
  DilutionSchedule sched;
  auto g1 = sample_graph(kernel, pos, sched, 11, 1);
  auto g4 = sample_graph(kernel, pos, sched, 11, 4);
  CHECK(g1.indices == g4.indices);
  CHECK(g1.indptr == g4.indptr);
}

TEST_CASE("dilution rescales edge probability and kappa") {
  auto kernel = GraphonKernel::constant(1.0);
  PositionScheme scheme;
  auto pos = sample_positions(scheme, 400, 2);
  DilutionSchedule sched;
  sched.rho = 0.1;
  sched.kappa = DilutionSchedule::Kappa::InverseRho;
  auto graph = sample_graph(kernel, pos, sched, 21);
  double mean = 0.1 * 400.0 * 400.0;
  double sd = std::sqrt(400.0 * 400.0 * 0.1 * 0.9);
  CHECK(std::abs(static_cast<double>(graph.edge_count()) - mean) < 4.5 * sd);
  CHECK(graph.kappa[0] == doctest::Approx(10.0));
}

TEST_CASE("p-nearest kernel is the circle-distance indicator with midpoint rule") {
  auto k = GraphonKernel::p_nearest(0.25);
  CHECK(k(0.1, 0.2) == doctest::Approx(1.0));
  CHECK(k(0.9, 0.1) == doctest::Approx(1.0));   // wraps around
  CHECK(k(0.5, 0.8) == doctest::Approx(0.0));
  CHECK(k(0.0, 0.25) == doctest::Approx(0.5));  // knife edge
  // row integrals equal 2r exactly when r*M is an integer
  auto df = degree_field(k, PositionMeasure::uniform01(), 400);
  for (double v : df.values) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("degree field of the product kernel is x/2") {
  auto k = GraphonKernel::separable([](double x) { return x; }, [](double y) { return y; });
  auto df = degree_field(k, PositionMeasure::uniform01(), 200);
  for (std::size_t i = 0; i < df.grid.size(); ++i)
    CHECK(df.values[i] == doctest::Approx(df.grid[i] / 2.0).epsilon(1e-12));
  CHECK(df.sup == doctest::Approx(df.grid.back() / 2.0));
}

TEST_CASE("row-sup norm on plain kernels") {
  PositionMeasure nu = PositionMeasure::uniform01();
  auto c = GraphonKernel::constant(0.7);
  CHECK(norm_inf_inf([&](double x, double y) { return c(x, y); }, nu, 256) ==
        doctest::Approx(0.7).epsilon(1e-12));
  int m = 400;
  double top_mid = 1.0 - 0.5 / m;  // largest midpoint
  CHECK(norm_inf_inf([](double x, double y) { return x * y; }, nu, m) ==
        doctest::Approx(top_mid * 0.5).epsilon(1e-12));
}

TEST_CASE("multi-class kernel evaluates blockwise") {
  Eigen::MatrixXd m(2, 2);
  m << 1, 2, 3, 4;
  auto k = GraphonKernel::multi_class(m, {0.5, 0.5});
  CHECK(k(0.2, 0.3) == doctest::Approx(1.0));
  CHECK(k(0.2, 0.7) == doctest::Approx(2.0));
  CHECK(k(0.7, 0.2) == doctest::Approx(3.0));
  CHECK(k(0.9, 0.9) == doctest::Approx(4.0));
}

TEST_CASE("step projection of a constant kernel is flat") {
  auto c = GraphonKernel::constant(0.7);
  auto sk = project_to_steps([&](double x, double y) { return c(x, y); },
                             PositionMeasure::uniform01(), 8);
  CHECK(sk.parts() == 8);
  CHECK(sk.w.minCoeff() == doctest::Approx(0.7));
  CHECK(sk.w.maxCoeff() == doctest::Approx(0.7));
}

TEST_CASE("exact infinity-to-one norm on a two-block sign kernel") {
  StepKernel sk;
  sk.w.resize(2, 2);
  double a = 0.8;
  sk.w << a, -a, -a, a;
  auto res = norm_inf_one_exact(sk);
  CHECK(res.exact);
  CHECK(res.value == doctest::Approx(a).epsilon(1e-12));
  CHECK(res.l1 == doctest::Approx(a).epsilon(1e-12));  // all-|a| entries, masses 1/2
  CHECK(res.cut_lower == doctest::Approx(a / 4.0));
  auto heur = norm_inf_one_heuristic(sk);
  CHECK(heur.value == doctest::Approx(a).epsilon(1e-9));
  CHECK_FALSE(heur.exact);
}

TEST_CASE("exact norm enumeration refuses oversized instances") {
  StepKernel sk;
  sk.w = Eigen::MatrixXd::Ones(kInfOneExactMaxParts + 1, kInfOneExactMaxParts + 1);
  CHECK_THROWS_AS(norm_inf_one_exact(sk), ResourceError);
}

TEST_CASE("empirical step kernels on a fully connected toy graph") {
  auto kernel = GraphonKernel::constant(1.0);
  PositionScheme scheme;
  auto pos = sample_positions(scheme, 3, 1);
  DilutionSchedule sched;
  auto graph = sample_graph(kernel, pos, sched, 5);
  CHECK(graph.edge_count() == 9);

  auto adj = adjacency_step_weights(graph);
  CHECK(adj.parts() == 3);
  CHECK(adj.w.minCoeff() == doctest::Approx(1.0));
  auto sw = sampling_step_weights(kernel, pos, sched, graph.kappa);
  CHECK(sw.w.maxCoeff() == doctest::Approx(1.0));
  CHECK(sw.w.minCoeff() == doctest::Approx(1.0));
  auto pw = position_step_weights(kernel, pos);
  CHECK(pw.w.minCoeff() == doctest::Approx(1.0));
}

TEST_CASE("graph save/load round trip") {
  auto kernel = GraphonKernel::constant(0.5);
  PositionScheme scheme;
  auto pos = sample_positions(scheme, 40, 1);
  DilutionSchedule sched;
  auto graph = sample_graph(kernel, pos, sched, 9);
  std::string path = "test_graph_roundtrip.txt";
  graph.save(path);
  auto back = InteractionGraph::load(path);
  CHECK(back.n == graph.n);
  CHECK(back.seed == graph.seed);
  CHECK(back.indptr == graph.indptr);
  CHECK(back.indices == graph.indices);
  CHECK(back.positions == graph.positions);
  CHECK(back.kappa == graph.kappa);
  // byte-identical re-save
  back.save(path + ".2");
  std::ifstream f1(path, std::ios::binary), f2(path + ".2", std::ios::binary);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());
  std::remove(path.c_str());
  std::remove((path + ".2").c_str());
}

TEST_CASE("out-edge lists transpose the in-edge structure") {
  auto kernel = GraphonKernel::constant(0.5);
  PositionScheme scheme;
  auto pos = sample_positions(scheme, 60, 1);
  DilutionSchedule sched;
  auto graph = sample_graph(kernel, pos, sched, 13);
  const auto& out = graph.out_edges();
  long total = 0;
  for (int j = 0; j < graph.n; ++j) {
    for (int i : out[j]) CHECK(graph.has_edge(i, j));
    total += static_cast<long>(out[j].size());
  }
  CHECK(total == graph.edge_count());
}

TEST_CASE("holder declaration is spot-checked") {
  auto k = GraphonKernel::separable([](double x) { return x; }, [](double y) { return y; });
  auto ok = k.with_holder(1.0, 2.0, PositionMeasure::uniform01());
  REQUIRE(ok.holder().has_value());
  CHECK(ok.holder()->theta == doctest::Approx(1.0));
  CHECK_THROWS_AS(k.with_holder(1.0, 1e-4, PositionMeasure::uniform01()), ModelError);
}

TEST_CASE("dilution window diagnostics") {
  std::vector<int> ns{100, 1000, 10000};
  // dense regime: kappa = 1, w = 1
  auto dense = check_dilution(ns, [](int) { return 1.0; }, [](int) { return 1.0; });
  CHECK(dense.ok());
  CHECK(dense.rows[0].eps == doctest::Approx(32.0 * std::log(100.0) / 100.0));
  // diluted regime: rho = n^{-1/2}, kappa = 1/rho
  auto diluted = check_dilution(
      ns, [](int n) { return std::sqrt(static_cast<double>(n)); },
      [](int n) { return 1.0 / std::sqrt(static_cast<double>(n)); });
  CHECK(diluted.window_ok);
  CHECK(diluted.ok());
  // too-aggressive dilution: kappa = n fails the degree ratio
  auto bad = check_dilution(ns, [](int n) { return static_cast<double>(n); },
                            [](int n) { return 1.0 / static_cast<double>(n); });
  CHECK_FALSE(bad.ok());
}
