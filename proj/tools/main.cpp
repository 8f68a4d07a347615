#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "hawkon/config.hpp"
#include "hawkon/experiments.hpp"
#include "hawkon/hawkes_sim.hpp"
#include "hawkon/limit_solver.hpp"
#include "hawkon/longtime.hpp"
#include "hawkon/rng.hpp"

namespace {

using namespace hawkon;

struct Global {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  bool quiet = false;
  bool dry_run = false;
};

void apply_overrides(RunConfig& cfg, const Global& g) {
  if (g.seed) cfg.seed = *g.seed;
  if (g.out) cfg.out_dir = *g.out;
  if (g.threads) cfg.threads = *g.threads;
}

void say(const Global& g, const std::string& line) {
  if (!g.quiet) std::cout << line << "\n";
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open '" + path + "' for writing");
  out << body;
}

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InvalidArgument("cannot create output directory '" + dir + "': " + ec.message());
}

nlohmann::json run_plan(const RunConfig& cfg, const char* command) {
  nlohmann::json j = cfg.resolved;
  j["command"] = command;
  j["run"]["seed"] = cfg.seed;
  j["run"]["threads"] = cfg.threads;
  j["output"]["dir"] = cfg.out_dir;
  j["version"] = kVersion;
  return j;
}

bool emit_dry_run(const Global& g, const nlohmann::json& plan) {
  if (!g.dry_run) return false;
  std::cout << plan.dump(2) << "\n";
  return true;
}

InteractionGraph build_graph(const RunConfig& cfg) {
  auto positions =
      sample_positions(cfg.positions, cfg.n, derive_seed(cfg.seed, 0, 0));
  return sample_graph(cfg.kernel, positions, cfg.dilution, derive_seed(cfg.seed, 1, 0),
                      cfg.threads);
}

int cmd_validate(const Global& g) {
  RunConfig cfg = load_config(g.config_path);
  apply_overrides(cfg, g);
  nlohmann::json plan = run_plan(cfg, "validate-config");
  if (emit_dry_run(g, plan)) return 0;
  say(g, "config ok: " + g.config_path);
  if (!g.quiet) std::cout << plan.dump(2) << "\n";
  return 0;
}

int cmd_sample_graph(const Global& g) {
  RunConfig cfg = load_config(g.config_path);
  apply_overrides(cfg, g);
  nlohmann::json plan = run_plan(cfg, "sample-graph");
  if (emit_dry_run(g, plan)) return 0;
  InteractionGraph graph = build_graph(cfg);
  ensure_dir(cfg.out_dir);
  graph.save(join(cfg.out_dir, "graph.txt"));
  plan["graph"] = {{"n", graph.n}, {"edges", graph.edge_count()}};
  write_file(join(cfg.out_dir, "plan.json"), plan.dump(2) + "\n");
  say(g, "sampled graph: n=" + std::to_string(graph.n) +
             " edges=" + std::to_string(graph.edge_count()) + " -> " +
             join(cfg.out_dir, "graph.txt"));
  return 0;
}

int cmd_simulate(const Global& g) {
  RunConfig cfg = load_config(g.config_path);
  apply_overrides(cfg, g);
  nlohmann::json plan = run_plan(cfg, "simulate");
  if (emit_dry_run(g, plan)) return 0;
  InteractionGraph graph = build_graph(cfg);
  SimOptions opts;
  opts.T = cfg.T;
  opts.seed = derive_seed(cfg.seed, 2, 0);
  SpikeRecord record = simulate(graph, cfg.model(), opts);
  ensure_dir(cfg.out_dir);
  record.write_csv(join(cfg.out_dir, "spikes.csv"));
  plan["graph"] = {{"n", graph.n}, {"edges", graph.edge_count()}};
  plan["events"] = record.total();
  write_file(join(cfg.out_dir, "plan.json"), plan.dump(2) + "\n");
  say(g, "simulated " + std::to_string(record.total()) + " events over T=" +
             format_double(cfg.T) + " -> " + join(cfg.out_dir, "spikes.csv"));
  return 0;
}

int cmd_solve_limit(const Global& g, bool with_drive) {
  RunConfig cfg = load_config(g.config_path);
  apply_overrides(cfg, g);
  nlohmann::json plan = run_plan(cfg, "solve-limit");
  if (emit_dry_run(g, plan)) return 0;
  SolveOptions so;
  so.T = cfg.T;
  so.dt = cfg.dt;
  so.cells = cfg.cells;
  so.tol = cfg.tol;
  so.threads = cfg.threads;
  SolveInfo info;
  HawkesModel model = cfg.model();
  IntensityField field = solve_lambda(cfg.kernel, model, so, &info);
  if (with_drive) macroscopic_profile(field, cfg.kernel, model, cfg.threads);
  ensure_dir(cfg.out_dir);
  field.write_csv(join(cfg.out_dir, "field.csv"));
  field.write_sidecar(join(cfg.out_dir, "field.json"));
  write_file(join(cfg.out_dir, "plan.json"), plan.dump(2) + "\n");
  say(g, "solved field: iterations=" + std::to_string(info.picard.iterations) +
             " sup=" + format_double(field.sup()) + " -> " + join(cfg.out_dir, "field.csv"));
  return 0;
}

int cmd_longtime(const Global& g) {
  RunConfig cfg = load_config(g.config_path);
  apply_overrides(cfg, g);
  nlohmann::json plan = run_plan(cfg, "longtime");
  if (emit_dry_run(g, plan)) return 0;
  DiscreteOperator op = DiscreteOperator::from_kernel(cfg.kernel, cfg.positions.nu, cfg.cells);
  HawkesModel model = cfg.model();
  SpectralReport rep = full_spectral_report(op, model.h);
  nlohmann::json report = rep.to_json();
  if (rep.cls == Criticality::Subcritical) {
    StationaryResult st = stationary_limit(op, rep, model);
    report["ell_sup"] = st.ell_direct.maxCoeff();
    report["ell_residual"] = st.residual_direct;
    ensure_dir(cfg.out_dir);
    std::string csv = "x,ell_neumann,ell_direct\n";
    for (int c = 0; c < op.cells(); ++c)
      csv += format_double(op.grid[static_cast<std::size_t>(c)]) + "," +
             format_double(st.ell_neumann[c]) + "," + format_double(st.ell_direct[c]) + "\n";
    write_file(join(cfg.out_dir, "ell.csv"), csv);
  }
  ensure_dir(cfg.out_dir);
  write_file(join(cfg.out_dir, "longtime.json"), report.dump(2) + "\n");
  plan["spectral"] = report;
  write_file(join(cfg.out_dir, "plan.json"), plan.dump(2) + "\n");
  if (!g.quiet) std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_sweep(const Global& g) {
  RunConfig cfg = load_config(g.config_path);
  apply_overrides(cfg, g);
  ExperimentPlan plan = cfg.plan();
  if (plan.n_values.empty()) plan.n_values = {50, 100, 200, 400, 800};
  nlohmann::json pj = run_plan(cfg, "sweep");
  pj["experiment"]["n_values"] = plan.n_values;
  if (emit_dry_run(g, pj)) return 0;
  ConvergenceTable table = convergence_sweep(plan);
  say(g, "sweep done: slope=" + format_double(table.slope.slope) +
             " decreasing=" + (table.decreasing ? std::string("true") : std::string("false")) +
             " -> " + join(plan.out_dir, "convergence.csv"));
  return 0;
}

int cmd_profile_error(const Global& g) {
  RunConfig cfg = load_config(g.config_path);
  apply_overrides(cfg, g);
  ExperimentPlan plan = cfg.plan();
  if (plan.n_values.empty()) plan.n_values = {100, 400, 1600};
  nlohmann::json pj = run_plan(cfg, "profile-error");
  pj["experiment"]["n_values"] = plan.n_values;
  if (emit_dry_run(g, pj)) return 0;
  ProfileErrorTable table = profile_error_curve(plan);
  say(g, "profile error done: decreasing=" +
             (table.decreasing ? std::string("true") : std::string("false")) + " -> " +
             join(plan.out_dir, "profile_error.csv"));
  return 0;
}

int cmd_figure(const Global& g, const std::string& id, std::optional<int> n_override,
               std::optional<double> t_override) {
  ExperimentPlan plan;
  plan.scenario = id;
  plan.seed = g.seed.value_or(0);
  plan.out_dir = g.out.value_or("out");
  plan.threads = g.threads.value_or(1);
  if (n_override) plan.n_override = *n_override;
  if (t_override) plan.t_override = *t_override;
  if (g.dry_run) {
    FigureSetup setup = figure_setup(id);  // validates the id
    nlohmann::json pj;
    pj["command"] = "figure";
    pj["scenario"] = id;
    pj["n"] = plan.n_override.value_or(setup.n);
    pj["T"] = plan.t_override.value_or(setup.T);
    pj["seed"] = plan.seed;
    pj["out"] = plan.out_dir;
    pj["version"] = kVersion;
    std::cout << pj.dump(2) << "\n";
    return 0;
  }
  FigureOutputs out = run_figure(plan);
  say(g, "figure " + id + ": n=" + std::to_string(out.n) + " events=" +
             std::to_string(out.record.total()) + " -> " + plan.out_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hawkes processes on sampled interaction graphs: simulation, limit solver, "
               "long-time analysis, experiment campaigns"};
  app.set_version_flag("--version", std::string("hawkon ") + kVersion + " (config schema " +
                                        std::to_string(kConfigSchemaVersion) + ")");
  Global g;
  app.add_flag("--quiet", g.quiet, "suppress progress output");
  app.add_flag("--dry-run", g.dry_run, "validate and print the resolved plan, compute nothing");
  std::uint64_t seed_opt = 0;
  std::string out_opt;
  int threads_opt = 0;
  auto* seed_flag = app.add_option("--seed", seed_opt, "override the run seed");
  auto* out_flag = app.add_option("--out", out_opt, "override the output directory");
  auto* threads_flag = app.add_option("--threads", threads_opt, "worker threads (0 = hardware)");

  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("-c,--config", g.config_path, "run-config file")->required();
  };

  auto* validate = app.add_subcommand("validate-config", "parse and validate a config file");
  add_config(validate);
  auto* sample = app.add_subcommand("sample-graph", "sample the interaction graph");
  add_config(sample);
  auto* sim = app.add_subcommand("simulate", "simulate the particle system");
  add_config(sim);
  auto* solve = app.add_subcommand("solve-limit", "solve the limit intensity equation");
  add_config(solve);
  bool with_drive = false;
  solve->add_flag("--drive", with_drive, "also export the macroscopic drive field");
  auto* longt = app.add_subcommand("longtime", "spectral radius, criticality, stationary profile");
  add_config(longt);
  auto* sweep = app.add_subcommand("sweep", "coupling-error convergence sweep over N");
  add_config(sweep);
  auto* profile = app.add_subcommand("profile-error", "spatial-profile L1 error curve over N");
  add_config(profile);
  auto* figure = app.add_subcommand("figure", "run a named scenario end to end");
  std::string figure_id;
  figure->add_option("id", figure_id, "scenario id (fig1..fig4 or null)")->required();
  int fig_n = 0;
  double fig_t = 0;
  auto* fig_n_flag = figure->add_option("--n", fig_n, "override the population size");
  auto* fig_t_flag = figure->add_option("--T", fig_t, "override the horizon");

  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (*seed_flag) g.seed = seed_opt;
  if (*out_flag) g.out = out_opt;
  if (*threads_flag) g.threads = threads_opt;

  try {
    if (*validate) return cmd_validate(g);
    if (*sample) return cmd_sample_graph(g);
    if (*sim) return cmd_simulate(g);
    if (*solve) return cmd_solve_limit(g, with_drive);
    if (*longt) return cmd_longtime(g);
    if (*sweep) return cmd_sweep(g);
    if (*profile) return cmd_profile_error(g);
    if (*figure)
      return cmd_figure(g, figure_id,
                        *fig_n_flag ? std::optional<int>(fig_n) : std::nullopt,
                        *fig_t_flag ? std::optional<double>(fig_t) : std::nullopt);
  } catch (const hawkon::ConfigError& e) {
    std::cerr << "config error: " << e.what();
    if (!e.field.empty()) std::cerr << " [field " << e.field << "]";
    std::cerr << "\n";
    return 2;
  } catch (const hawkon::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
