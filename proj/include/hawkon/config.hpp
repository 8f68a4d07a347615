#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "hawkon/experiments.hpp"
#include "hawkon/graphon.hpp"
#include "hawkon/model.hpp"

namespace hawkon {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kConfigSchemaVersion = 1;

// One parsed value of the run-config grammar: bare scalar token, quoted
// string, array, or (inline) table. See docs/config.md for the grammar.
struct ConfigNode {
  enum class Type { Scalar, String, Array, Table };
  Type type = Type::Table;
  std::string text;                                        // Scalar / String payload
  std::vector<ConfigNode> items;                           // Array elements
  std::vector<std::pair<std::string, ConfigNode>> fields;  // Table entries, file order
  int line = 0;

  const ConfigNode* find(const std::string& key) const;

  // Typed reads; `path` is the dotted location used in diagnostics.
  double as_double(const std::string& path) const;
  long long as_int(const std::string& path) const;
  std::uint64_t as_u64(const std::string& path) const;
  bool as_bool(const std::string& path) const;
  std::string as_string(const std::string& path) const;
  std::vector<double> as_double_array(const std::string& path) const;
  std::vector<std::vector<double>> as_matrix(const std::string& path) const;
};

// Parse the section/key-value text into a root table keyed by section name.
ConfigNode parse_config_text(const std::string& text);
ConfigNode parse_config_file(const std::string& path);

// Fully resolved run configuration. `resolved` is the canonical echo emitted
// into plan files.
struct RunConfig {
  GraphonKernel kernel = GraphonKernel::constant(0.0);
  DilutionSchedule dilution;
  PositionScheme positions;
  int n = 100;
  JumpRate f = JumpRate::linear();
  MemoryKernel h = MemoryKernel::exponential(1.0);
  Baseline u0 = Baseline::constant(0.0);
  double T = 5.0;
  double dt = 1e-3;
  double tol = 1e-8;
  int cells = 400;
  int threads = 1;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  bool has_T = false;  // [run] T given explicitly
  ExperimentPlan experiment;
  nlohmann::json resolved;

  HawkesModel model() const { return HawkesModel(f, h, u0, positions.nu); }
  // Experiment plan with the run/output blocks folded in.
  ExperimentPlan plan() const;
};

// Parse + validate; rejects unknown sections and keys with line/field
// diagnostics.
RunConfig resolve_config(const ConfigNode& root);
RunConfig load_config(const std::string& path);

}  // namespace hawkon
