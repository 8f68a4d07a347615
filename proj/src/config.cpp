#include "hawkon/config.hpp"

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace hawkon {

namespace {

[[noreturn]] void fail(const std::string& msg, int line, const std::string& field) {
  std::ostringstream os;
  os << msg;
  if (line > 0) os << " (line " << line << ")";
  throw ConfigError(os.str(), line, field);
}

bool key_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Strip a trailing comment, respecting quoted strings.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

struct Cursor {
  const std::string& s;
  std::size_t pos = 0;
  int line;

  void skip_ws() {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  }
  bool done() {
    skip_ws();
    return pos >= s.size();
  }
  char peek() {
    skip_ws();
    return pos < s.size() ? s[pos] : '\0';
  }
};

ConfigNode parse_value(Cursor& c);

std::string parse_key(Cursor& c) {
  c.skip_ws();
  std::size_t start = c.pos;
  while (c.pos < c.s.size() && key_char(c.s[c.pos])) ++c.pos;
  if (c.pos == start) fail("expected a key", c.line, "");
  return c.s.substr(start, c.pos - start);
}

ConfigNode parse_table_body(Cursor& c) {
  ConfigNode t;
  t.type = ConfigNode::Type::Table;
  t.line = c.line;
  if (c.peek() == '}') {
    ++c.pos;
    return t;
  }
  for (;;) {
    std::string key = parse_key(c);
    if (c.peek() != '=') fail("expected '=' after key '" + key + "'", c.line, key);
    ++c.pos;
    for (const auto& f : t.fields)
      if (f.first == key) fail("duplicate key '" + key + "'", c.line, key);
    t.fields.emplace_back(key, parse_value(c));
    char ch = c.peek();
    if (ch == ',') {
      ++c.pos;
      continue;
    }
    if (ch == '}') {
      ++c.pos;
      return t;
    }
    fail("expected ',' or '}' in inline table", c.line, key);
  }
}

ConfigNode parse_value(Cursor& c) {
  char ch = c.peek();
  ConfigNode v;
  v.line = c.line;
  if (ch == '\0') fail("missing value", c.line, "");
  if (ch == '"') {
    ++c.pos;
    std::size_t end = c.s.find('"', c.pos);
    if (end == std::string::npos) fail("unterminated string", c.line, "");
    v.type = ConfigNode::Type::String;
    v.text = c.s.substr(c.pos, end - c.pos);
    c.pos = end + 1;
    return v;
  }
  if (ch == '[') {
    ++c.pos;
    v.type = ConfigNode::Type::Array;
    if (c.peek() == ']') {
      ++c.pos;
      return v;
    }
    for (;;) {
      v.items.push_back(parse_value(c));
      char n = c.peek();
      if (n == ',') {
        ++c.pos;
        continue;
      }
      if (n == ']') {
        ++c.pos;
        return v;
      }
      fail("expected ',' or ']' in array", c.line, "");
    }
  }
  if (ch == '{') {
    ++c.pos;
    return parse_table_body(c);
  }
  std::size_t start = c.pos;
  while (c.pos < c.s.size()) {
    char x = c.s[c.pos];
    if (x == ',' || x == ']' || x == '}' || x == ' ' || x == '\t') break;
    ++c.pos;
  }
  if (c.pos == start) fail("missing value", c.line, "");
  v.type = ConfigNode::Type::Scalar;
  v.text = c.s.substr(start, c.pos - start);
  return v;
}

const char* type_name(ConfigNode::Type t) {
  switch (t) {
    case ConfigNode::Type::Scalar: return "scalar";
    case ConfigNode::Type::String: return "string";
    case ConfigNode::Type::Array: return "array";
    default: return "table";
  }
}

void reject_unknown(const ConfigNode& t, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  for (const auto& f : t.fields) {
    bool ok = false;
    for (const char* a : allowed)
      if (f.first == a) ok = true;
    if (!ok)
      fail("unknown key '" + path + "." + f.first + "'", f.second.line, path + "." + f.first);
  }
}

const ConfigNode& require(const ConfigNode& t, const std::string& path, const std::string& key) {
  const ConfigNode* n = t.find(key);
  if (!n) fail("missing required key '" + path + "." + key + "'", t.line, path + "." + key);
  return *n;
}

std::string require_kind(const ConfigNode& t, const std::string& path) {
  return require(t, path, "kind").as_string(path + ".kind");
}

}  // namespace

const ConfigNode* ConfigNode::find(const std::string& key) const {
  for (const auto& f : fields)
    if (f.first == key) return &f.second;
  return nullptr;
}

double ConfigNode::as_double(const std::string& path) const {
  if (type != Type::Scalar) fail("'" + path + "' must be a number, got " + type_name(type), line, path);
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || text.empty() || errno == ERANGE)
    fail("'" + path + "' is not a valid number: '" + text + "'", line, path);
  return v;
}

long long ConfigNode::as_int(const std::string& path) const {
  if (type != Type::Scalar) fail("'" + path + "' must be an integer, got " + type_name(type), line, path);
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(text.c_str(), &end, 10);
  if (end != text.c_str() + text.size() || text.empty() || errno == ERANGE)
    fail("'" + path + "' is not a valid integer: '" + text + "'", line, path);
  return v;
}

std::uint64_t ConfigNode::as_u64(const std::string& path) const {
  if (type != Type::Scalar) fail("'" + path + "' must be an unsigned integer, got " + type_name(type), line, path);
  if (!text.empty() && text[0] == '-')
    fail("'" + path + "' must be non-negative: '" + text + "'", line, path);
  errno = 0;
  char* end = nullptr;
  std::uint64_t v = std::strtoull(text.c_str(), &end, 10);
  if (end != text.c_str() + text.size() || text.empty() || errno == ERANGE)
    fail("'" + path + "' is not a valid unsigned integer: '" + text + "'", line, path);
  return v;
}

bool ConfigNode::as_bool(const std::string& path) const {
  if (type == Type::Scalar && text == "true") return true;
  if (type == Type::Scalar && text == "false") return false;
  fail("'" + path + "' must be true or false", line, path);
}

std::string ConfigNode::as_string(const std::string& path) const {
  if (type != Type::String) fail("'" + path + "' must be a quoted string, got " + type_name(type), line, path);
  return text;
}

std::vector<double> ConfigNode::as_double_array(const std::string& path) const {
  if (type != Type::Array) fail("'" + path + "' must be an array, got " + type_name(type), line, path);
  std::vector<double> out;
  out.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i)
    out.push_back(items[i].as_double(path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::vector<double>> ConfigNode::as_matrix(const std::string& path) const {
  if (type != Type::Array) fail("'" + path + "' must be an array of arrays, got " + type_name(type), line, path);
  std::vector<std::vector<double>> out;
  out.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i)
    out.push_back(items[i].as_double_array(path + "[" + std::to_string(i) + "]"));
  return out;
}

ConfigNode parse_config_text(const std::string& text) {
  ConfigNode root;
  root.type = ConfigNode::Type::Table;
  root.line = 0;
  ConfigNode* section = nullptr;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string s = strip_comment(raw);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.pop_back();
    Cursor c{s, 0, lineno};
    if (c.done()) continue;
    if (c.peek() == '[') {
      ++c.pos;
      std::string name = parse_key(c);
      if (c.peek() != ']') fail("expected ']' after section name", lineno, name);
      ++c.pos;
      if (!c.done()) fail("unexpected text after section header", lineno, name);
      if (root.find(name)) fail("duplicate section [" + name + "]", lineno, name);
      ConfigNode t;
      t.type = ConfigNode::Type::Table;
      t.line = lineno;
      root.fields.emplace_back(name, std::move(t));
      section = &root.fields.back().second;
      continue;
    }
    if (!section) fail("key outside of any [section]", lineno, "");
    std::string key = parse_key(c);
    if (c.peek() != '=') fail("expected '=' after key '" + key + "'", lineno, key);
    ++c.pos;
    ConfigNode v = parse_value(c);
    if (!c.done()) fail("unexpected trailing text after value of '" + key + "'", lineno, key);
    if (section->find(key)) fail("duplicate key '" + key + "'", lineno, key);
    section->fields.emplace_back(key, std::move(v));
  }
  return root;
}

ConfigNode parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'", 0, path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

namespace {

JumpRate resolve_f(const ConfigNode& n, nlohmann::json& echo) {
  if (n.type == ConfigNode::Type::String) {
    if (n.text == "linear") {
      echo = "linear";
      return JumpRate::linear();
    }
    fail("model.f: unknown rate function '" + n.text + "'", n.line, "model.f");
  }
  if (n.type != ConfigNode::Type::Table)
    fail("model.f must be \"linear\" or an inline table", n.line, "model.f");
  std::string kind = require_kind(n, "model.f");
  if (kind == "sigmoid") {
    reject_unknown(n, "model.f", {"kind", "rate", "max"});
    double rate = require(n, "model.f", "rate").as_double("model.f.rate");
    double mx = require(n, "model.f", "max").as_double("model.f.max");
    if (!(rate > 0) || !(mx > 0))
      fail("model.f: sigmoid needs rate > 0 and max > 0", n.line, "model.f");
    echo = {{"kind", "sigmoid"}, {"rate", rate}, {"max", mx}};
    return JumpRate::lipschitz([rate, mx](double x) { return mx / (1.0 + std::exp(-rate * x)); },
                               mx * rate / 4.0, true);
  }
  fail("model.f.kind: unknown kind '" + kind + "'", n.line, "model.f.kind");
}

MemoryKernel resolve_h(const ConfigNode& n, nlohmann::json& echo) {
  if (n.type != ConfigNode::Type::Table) fail("model.h must be an inline table", n.line, "model.h");
  std::string kind = require_kind(n, "model.h");
  if (kind == "exp") {
    reject_unknown(n, "model.h", {"kind", "alpha"});
    double alpha = require(n, "model.h", "alpha").as_double("model.h.alpha");
    echo = {{"kind", "exp"}, {"alpha", alpha}};
    return MemoryKernel::exponential(alpha);
  }
  if (kind == "polydecay") {
    reject_unknown(n, "model.h", {"kind", "beta"});
    double beta = require(n, "model.h", "beta").as_double("model.h.beta");
    echo = {{"kind", "polydecay"}, {"beta", beta}};
    return MemoryKernel::poly_decay(beta);
  }
  if (kind == "tabulated") {
    reject_unknown(n, "model.h", {"kind", "grid", "values"});
    auto grid = require(n, "model.h", "grid").as_double_array("model.h.grid");
    auto values = require(n, "model.h", "values").as_double_array("model.h.values");
    echo = {{"kind", "tabulated"}, {"grid", grid}, {"values", values}};
    return MemoryKernel::tabulated(std::move(grid), std::move(values));
  }
  fail("model.h.kind: unknown kind '" + kind + "'", n.line, "model.h.kind");
}

Baseline resolve_u0(const ConfigNode& n, nlohmann::json& echo) {
  if (n.type != ConfigNode::Type::Table) fail("model.u0 must be an inline table", n.line, "model.u0");
  std::string kind = require_kind(n, "model.u0");
  if (kind == "constant") {
    reject_unknown(n, "model.u0", {"kind", "c"});
    double c = require(n, "model.u0", "c").as_double("model.u0.c");
    echo = {{"kind", "constant"}, {"c", c}};
    return Baseline::constant(c);
  }
  if (kind == "affine") {
    reject_unknown(n, "model.u0", {"kind", "a", "b"});
    double a = require(n, "model.u0", "a").as_double("model.u0.a");
    double b = require(n, "model.u0", "b").as_double("model.u0.b");
    echo = {{"kind", "affine"}, {"a", a}, {"b", b}};
    return Baseline::affine(a, b);
  }
  if (kind == "separable_exp") {
    reject_unknown(n, "model.u0", {"kind", "rate", "a", "b"});
    double rate = require(n, "model.u0", "rate").as_double("model.u0.rate");
    double a = require(n, "model.u0", "a").as_double("model.u0.a");
    double b = require(n, "model.u0", "b").as_double("model.u0.b");
    echo = {{"kind", "separable_exp"}, {"rate", rate}, {"a", a}, {"b", b}};
    return Baseline::separable_exp(rate, a, b);
  }
  if (kind == "classes") {
    reject_unknown(n, "model.u0", {"kind", "values", "masses"});
    auto values = require(n, "model.u0", "values").as_double_array("model.u0.values");
    auto masses = require(n, "model.u0", "masses").as_double_array("model.u0.masses");
    echo = {{"kind", "classes"}, {"values", values}, {"masses", masses}};
    return Baseline::classes(std::move(values), std::move(masses));
  }
  fail("model.u0.kind: unknown kind '" + kind + "'", n.line, "model.u0.kind");
}

GraphonKernel resolve_kernel(const ConfigNode& n, nlohmann::json& echo) {
  if (n.type != ConfigNode::Type::Table)
    fail("graph.kernel must be an inline table", n.line, "graph.kernel");
  std::string kind = require_kind(n, "graph.kernel");
  if (kind == "constant") {
    reject_unknown(n, "graph.kernel", {"kind", "rho"});
    double rho = require(n, "graph.kernel", "rho").as_double("graph.kernel.rho");
    echo = {{"kind", "constant"}, {"rho", rho}};
    return GraphonKernel::constant(rho);
  }
  if (kind == "p_nearest") {
    reject_unknown(n, "graph.kernel", {"kind", "r"});
    double r = require(n, "graph.kernel", "r").as_double("graph.kernel.r");
    echo = {{"kind", "p_nearest"}, {"r", r}};
    return GraphonKernel::p_nearest(r);
  }
  if (kind == "product") {
    reject_unknown(n, "graph.kernel", {"kind", "scale"});
    const ConfigNode* sc = n.find("scale");
    double scale = sc ? sc->as_double("graph.kernel.scale") : 1.0;
    if (!(scale >= 0)) fail("graph.kernel.scale must be >= 0", n.line, "graph.kernel.scale");
    echo = {{"kind", "product"}, {"scale", scale}};
    return GraphonKernel::separable([scale](double x) { return scale * x; },
                                    [](double y) { return y; });
  }
  if (kind == "multi_class") {
    reject_unknown(n, "graph.kernel", {"kind", "m", "masses"});
    auto m = require(n, "graph.kernel", "m").as_matrix("graph.kernel.m");
    auto masses = require(n, "graph.kernel", "masses").as_double_array("graph.kernel.masses");
    std::size_t p = m.size();
    Eigen::MatrixXd mm(p, p);
    for (std::size_t i = 0; i < p; ++i) {
      if (m[i].size() != p)
        fail("graph.kernel.m must be square", n.line, "graph.kernel.m");
      for (std::size_t j = 0; j < p; ++j) mm(static_cast<long>(i), static_cast<long>(j)) = m[i][j];
    }
    echo = {{"kind", "multi_class"}, {"m", m}, {"masses", masses}};
    return GraphonKernel::multi_class(mm, masses);
  }
  if (kind == "step") {
    reject_unknown(n, "graph.kernel", {"kind", "w"});
    auto w = require(n, "graph.kernel", "w").as_matrix("graph.kernel.w");
    std::size_t p = w.size();
    StepKernel s;
    s.w.resize(p, p);
    for (std::size_t i = 0; i < p; ++i) {
      if (w[i].size() != p) fail("graph.kernel.w must be square", n.line, "graph.kernel.w");
      for (std::size_t j = 0; j < p; ++j) s.w(static_cast<long>(i), static_cast<long>(j)) = w[i][j];
    }
    echo = {{"kind", "step"}, {"w", w}};
    return GraphonKernel::step_grid(s);
  }
  fail("graph.kernel.kind: unknown kind '" + kind + "'", n.line, "graph.kernel.kind");
}

DilutionSchedule resolve_dilution(const ConfigNode& n, nlohmann::json& echo) {
  if (n.type != ConfigNode::Type::Table)
    fail("graph.dilution must be an inline table", n.line, "graph.dilution");
  reject_unknown(n, "graph.dilution", {"rho", "kappa"});
  DilutionSchedule d;
  if (const ConfigNode* r = n.find("rho")) {
    d.rho = r->as_double("graph.dilution.rho");
    if (!(d.rho > 0)) fail("graph.dilution.rho must be > 0", r->line, "graph.dilution.rho");
  }
  std::string kappa = "ones";
  if (const ConfigNode* k = n.find("kappa")) {
    kappa = k->as_string("graph.dilution.kappa");
    if (kappa == "ones")
      d.kappa = DilutionSchedule::Kappa::Ones;
    else if (kappa == "inverse_rho")
      d.kappa = DilutionSchedule::Kappa::InverseRho;
    else if (kappa == "degree_normalized")
      d.kappa = DilutionSchedule::Kappa::DegreeNormalized;
    else
      fail("graph.dilution.kappa: unknown scheme '" + kappa + "'", k->line, "graph.dilution.kappa");
  }
  echo = {{"rho", d.rho}, {"kappa", kappa}};
  return d;
}

}  // namespace

ExperimentPlan RunConfig::plan() const {
  ExperimentPlan p = experiment;
  p.T = T;
  p.dt = dt;
  p.cells = cells;
  p.tol = tol;
  p.seed = seed;
  p.threads = threads;
  p.out_dir = out_dir;
  if (has_T) p.t_override = T;
  p.n_override = n;
  return p;
}

RunConfig resolve_config(const ConfigNode& root) {
  RunConfig cfg;
  reject_unknown(root, "config",
                 {"model", "graph", "positions", "run", "output", "experiment"});
  for (const char* name : {"model", "graph", "positions"})
    if (!root.find(name))
      fail(std::string("missing required section [") + name + "]", 0, name);

  nlohmann::json echo;
  echo["schema"] = kConfigSchemaVersion;

  const ConfigNode& model = *root.find("model");
  reject_unknown(model, "model", {"f", "h", "u0"});
  cfg.f = resolve_f(require(model, "model", "f"), echo["model"]["f"]);
  cfg.h = resolve_h(require(model, "model", "h"), echo["model"]["h"]);
  cfg.u0 = resolve_u0(require(model, "model", "u0"), echo["model"]["u0"]);

  const ConfigNode& graph = *root.find("graph");
  reject_unknown(graph, "graph", {"kernel", "dilution"});
  cfg.kernel = resolve_kernel(require(graph, "graph", "kernel"), echo["graph"]["kernel"]);
  if (const ConfigNode* d = graph.find("dilution"))
    cfg.dilution = resolve_dilution(*d, echo["graph"]["dilution"]);
  else
    echo["graph"]["dilution"] = {{"rho", 1.0}, {"kappa", "ones"}};

  const ConfigNode& pos = *root.find("positions");
  reject_unknown(pos, "positions", {"scenario", "n"});
  std::string scen = "regular";
  if (const ConfigNode* s = pos.find("scenario")) scen = s->as_string("positions.scenario");
  if (scen == "regular")
    cfg.positions.scenario = PositionScheme::Scenario::RegularGrid;
  else if (scen == "iid")
    cfg.positions.scenario = PositionScheme::Scenario::IidSorted;
  else
    fail("positions.scenario: unknown scenario '" + scen + "'", pos.line, "positions.scenario");
  long long n = require(pos, "positions", "n").as_int("positions.n");
  if (n < 1 || n > 2'000'000) fail("positions.n out of range", pos.line, "positions.n");
  cfg.n = static_cast<int>(n);
  echo["positions"] = {{"scenario", scen}, {"n", cfg.n}};

  if (const ConfigNode* run = root.find("run")) {
    reject_unknown(*run, "run", {"T", "dt", "cells", "tol", "seed", "threads"});
    if (const ConfigNode* v = run->find("T")) {
      cfg.T = v->as_double("run.T");
      cfg.has_T = true;
      if (!(cfg.T > 0)) fail("run.T must be > 0", v->line, "run.T");
    }
    if (const ConfigNode* v = run->find("dt")) {
      cfg.dt = v->as_double("run.dt");
      if (!(cfg.dt > 0)) fail("run.dt must be > 0", v->line, "run.dt");
    }
    if (const ConfigNode* v = run->find("cells")) {
      long long m = v->as_int("run.cells");
      if (m < 1 || m > 100000) fail("run.cells out of range", v->line, "run.cells");
      cfg.cells = static_cast<int>(m);
    }
    if (const ConfigNode* v = run->find("tol")) {
      cfg.tol = v->as_double("run.tol");
      if (!(cfg.tol > 0)) fail("run.tol must be > 0", v->line, "run.tol");
    }
    if (const ConfigNode* v = run->find("seed")) cfg.seed = v->as_u64("run.seed");
    if (const ConfigNode* v = run->find("threads")) {
      long long t = v->as_int("run.threads");
      if (t < 0 || t > 4096) fail("run.threads out of range", v->line, "run.threads");
      cfg.threads = static_cast<int>(t);
    }
  }
  echo["run"] = {{"T", cfg.T},     {"dt", cfg.dt},     {"cells", cfg.cells},
                 {"tol", cfg.tol}, {"seed", cfg.seed}, {"threads", cfg.threads}};

  if (const ConfigNode* outp = root.find("output")) {
    reject_unknown(*outp, "output", {"dir"});
    if (const ConfigNode* v = outp->find("dir")) cfg.out_dir = v->as_string("output.dir");
  }
  echo["output"] = {{"dir", cfg.out_dir}};

  if (const ConfigNode* exp = root.find("experiment")) {
    reject_unknown(*exp, "experiment", {"scenario", "n_values", "replicas", "profile_knots"});
    if (const ConfigNode* v = exp->find("scenario"))
      cfg.experiment.scenario = v->as_string("experiment.scenario");
    if (const ConfigNode* v = exp->find("n_values")) {
      auto xs = v->as_double_array("experiment.n_values");
      cfg.experiment.n_values.clear();
      for (double x : xs) {
        if (x < 1 || x != std::floor(x))
          fail("experiment.n_values must hold positive integers", v->line, "experiment.n_values");
        cfg.experiment.n_values.push_back(static_cast<int>(x));
      }
    }
    if (const ConfigNode* v = exp->find("replicas")) {
      long long r = v->as_int("experiment.replicas");
      if (r < 1 || r > 100000) fail("experiment.replicas out of range", v->line, "experiment.replicas");
      cfg.experiment.replicas = static_cast<int>(r);
    }
    if (const ConfigNode* v = exp->find("profile_knots")) {
      long long k = v->as_int("experiment.profile_knots");
      if (k < 2 || k > 1000000)
        fail("experiment.profile_knots out of range", v->line, "experiment.profile_knots");
      cfg.experiment.profile_knots = static_cast<int>(k);
    }
  }
  echo["experiment"] = {{"scenario", cfg.experiment.scenario},
                        {"n_values", cfg.experiment.n_values},
                        {"replicas", cfg.experiment.replicas},
                        {"profile_knots", cfg.experiment.profile_knots}};

  cfg.resolved = std::move(echo);

  // Surface model-contract violations (e.g. a linear rate with a baseline
  // that can go negative) as config diagnostics.
  try {
    cfg.model();
  } catch (const ModelError& e) {
    fail(std::string("model: ") + e.what(), model.line, "model");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) { return resolve_config(parse_config_file(path)); }

}  // namespace hawkon
