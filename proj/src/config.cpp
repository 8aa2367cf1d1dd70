#include "satlab/config.hpp"

#include "satlab/error.hpp"
#include "satlab/saturation_lab.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace satlab {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::invalid_input, "config: " + where + ": " + what);
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) bad(where, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) bad(where, "unknown key '" + it.key() + "'");
  }
}

double get_number(const json& obj, const std::string& key, double fallback,
                  const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) bad(where + "." + key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) bad(where + "." + key, "must be finite");
  return x;
}

long long get_integer(const json& obj, const std::string& key, long long fallback,
                      const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) bad(where + "." + key, "expected an integer");
  return v.get<long long>();
}

bool get_bool(const json& obj, const std::string& key, bool fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) bad(where + "." + key, "expected true or false");
  return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& key, const std::string& fallback,
                       const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) bad(where + "." + key, "expected a string");
  return v.get<std::string>();
}

std::vector<double> number_array(const json& v, const std::string& where) {
  if (!v.is_array()) bad(where, "expected an array of numbers");
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number()) bad(where, "expected an array of numbers");
    const double x = e.get<double>();
    if (!std::isfinite(x)) bad(where, "entries must be finite");
    out.push_back(x);
  }
  return out;
}

VectorSpec parse_vector(const json& v, const std::set<std::string>& names,
                        const std::string& where) {
  if (v.is_string()) {
    const std::string name = v.get<std::string>();
    if (!names.count(name)) bad(where, "unknown vector rule '" + name + "'");
    return name;
  }
  return number_array(v, where);
}

json vector_to_json(const VectorSpec& v) {
  if (const auto* name = std::get_if<std::string>(&v)) return *name;
  return std::get<std::vector<double>>(v);
}

GridValues parse_grid_values(const json& v, const std::string& where) {
  GridValues g;
  if (v.is_array()) {
    g.spec = number_array(v, where);
  } else {
    check_keys(v, {"hi", "lo", "count"}, where);
    if (!v.contains("hi") || !v.contains("lo") || !v.contains("count")) {
      bad(where, "geometric grid needs hi, lo and count");
    }
    GeometricSpec geo;
    geo.hi = get_number(v, "hi", 0.0, where);
    geo.lo = get_number(v, "lo", 0.0, where);
    geo.count = static_cast<int>(get_integer(v, "count", 0, where));
    if (!(geo.lo > 0.0) || geo.count < 1 || (geo.count > 1 && !(geo.hi > geo.lo)) ||
        geo.hi < geo.lo) {
      throw Error(ErrorKind::invalid_parameter,
                  "config: " + where + ": geometric grid needs hi > lo > 0 and count >= 1");
    }
    g.spec = geo;
  }
  for (double x : g.values()) {
    if (!(x > 0.0)) {
      throw Error(ErrorKind::invalid_parameter, "config: " + where + ": values must be > 0");
    }
  }
  if (g.values().empty()) bad(where, "grid is empty");
  return g;
}

json grid_values_to_json(const GridValues& g) {
  if (const auto* list = std::get_if<std::vector<double>>(&g.spec)) return *list;
  const auto& geo = std::get<GeometricSpec>(g.spec);
  return json{{"hi", geo.hi}, {"lo", geo.lo}, {"count", geo.count}};
}

ModelSpec parse_model(const json& j) {
  const std::string w = "model";
  check_keys(j, {"kind", "n", "s", "scale", "beta", "rho"}, w);
  ModelSpec m;
  const std::string kind = get_string(j, "kind", "linear", w);
  if (kind == "linear") {
    m.kind = ModelKind::linear;
  } else if (kind == "composition") {
    m.kind = ModelKind::composition;
  } else {
    bad(w + ".kind", "expected 'linear' or 'composition', got '" + kind + "'");
  }
  m.n = static_cast<int>(get_integer(j, "n", m.n, w));
  m.s = get_number(j, "s", m.s, w);
  m.scale = get_number(j, "scale", m.scale, w);
  m.beta = get_number(j, "beta", m.beta, w);
  m.rho = get_number(j, "rho", m.rho, w);
  if (m.n < 2) throw Error(ErrorKind::invalid_parameter, "config: model.n must be >= 2");
  if (!(m.s > 0.0)) throw Error(ErrorKind::invalid_parameter, "config: model.s must be > 0");
  if (!(m.scale > 0.0)) {
    throw Error(ErrorKind::invalid_parameter, "config: model.scale must be > 0");
  }
  if (!(m.rho > 0.0)) throw Error(ErrorKind::invalid_parameter, "config: model.rho must be > 0");
  if (m.kind == ModelKind::linear && m.beta != 0.0) {
    throw Error(ErrorKind::invalid_parameter, "config: model.beta must be 0 for a linear model");
  }
  if (!(m.beta >= 0.0 && m.beta < 1.0)) {
    throw Error(ErrorKind::invalid_parameter, "config: model.beta must lie in [0, 1)");
  }
  return m;
}

void check_length(const VectorSpec& v, int n, const std::string& where) {
  if (const auto* list = std::get_if<std::vector<double>>(&v)) {
    if (static_cast<int>(list->size()) != n) {
      bad(where, "expected " + std::to_string(n) + " entries, got " +
                     std::to_string(list->size()));
    }
  }
}

InstanceSpec parse_instance(const json& j, int n) {
  const std::string w = "instance";
  check_keys(j, {"x_true", "source", "prior"}, w);
  InstanceSpec s;
  if (j.contains("x_true")) s.x_true = parse_vector(j.at("x_true"), {"harmonic"}, w + ".x_true");
  check_length(s.x_true, n, w + ".x_true");
  if (j.contains("source") && !j.at("source").is_null()) {
    if (j.contains("prior")) bad(w, "give either a source or a prior, not both");
    const json& src = j.at("source");
    const std::string ws = w + ".source";
    check_keys(src, {"nu", "norm", "direction", "enforce_lipschitz_bound"}, ws);
    SourceSpec ss;
    ss.nu = get_number(src, "nu", ss.nu, ws);
    ss.norm = get_number(src, "norm", ss.norm, ws);
    if (src.contains("direction")) {
      ss.direction = parse_vector(src.at("direction"), {"harmonic"}, ws + ".direction");
    }
    check_length(ss.direction, n, ws + ".direction");
    ss.enforce_lipschitz_bound =
        get_bool(src, "enforce_lipschitz_bound", ss.enforce_lipschitz_bound, ws);
    if (!(ss.nu == 0.5 || ss.nu >= 1.0)) {
      throw Error(ErrorKind::invalid_parameter,
                  "config: source exponent must be 1/2 or >= 1, got " + std::to_string(ss.nu));
    }
    if (!(ss.norm >= 0.0)) {
      throw Error(ErrorKind::invalid_parameter, "config: source norm must be >= 0");
    }
    s.source = ss;
  } else if (j.contains("prior")) {
    s.prior = parse_vector(j.at("prior"), {"x_true", "zero"}, w + ".prior");
    check_length(s.prior, n, w + ".prior");
  }
  return s;
}

RuleSpec parse_rule_spec(const json& j) {
  const std::string w = "rule";
  check_keys(j,
             {"name", "tau", "gamma", "alpha0", "alpha_min", "alpha_max", "root_tolerance",
              "max_bisections", "max_expansions", "max_grid_steps", "scan_ratio",
              "require_tau_above_one", "apriori_exponent", "apriori_constant", "solver"},
             w);
  RuleSpec r;
  r.rule = parse_rule(get_string(j, "name", "discrepancy", w));
  SelectorConfig& c = r.cfg;
  c.tau = get_number(j, "tau", c.tau, w);
  c.gamma = get_number(j, "gamma", c.gamma, w);
  c.alpha0 = get_number(j, "alpha0", c.alpha0, w);
  c.alpha_min = get_number(j, "alpha_min", c.alpha_min, w);
  c.alpha_max = get_number(j, "alpha_max", c.alpha_max, w);
  c.root_tolerance = get_number(j, "root_tolerance", c.root_tolerance, w);
  c.max_bisections = static_cast<int>(get_integer(j, "max_bisections", c.max_bisections, w));
  c.max_expansions = static_cast<int>(get_integer(j, "max_expansions", c.max_expansions, w));
  c.max_grid_steps = static_cast<int>(get_integer(j, "max_grid_steps", c.max_grid_steps, w));
  c.scan_ratio = get_number(j, "scan_ratio", c.scan_ratio, w);
  c.require_tau_above_one = get_bool(j, "require_tau_above_one", c.require_tau_above_one, w);
  r.apriori_exponent = get_number(j, "apriori_exponent", r.apriori_exponent, w);
  r.apriori_constant = get_number(j, "apriori_constant", r.apriori_constant, w);
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    const std::string ws = w + ".solver";
    check_keys(s, {"max_iterations", "max_halvings", "euler_rel_tol", "euler_floor", "multistart"},
               ws);
    SolverOptions& o = c.solver;
    o.max_iterations = static_cast<int>(get_integer(s, "max_iterations", o.max_iterations, ws));
    o.max_halvings = static_cast<int>(get_integer(s, "max_halvings", o.max_halvings, ws));
    o.euler_rel_tol = get_number(s, "euler_rel_tol", o.euler_rel_tol, ws);
    o.euler_floor = get_number(s, "euler_floor", o.euler_floor, ws);
    o.multistart = static_cast<int>(get_integer(s, "multistart", o.multistart, ws));
    if (o.max_iterations < 1 || o.max_halvings < 0 || o.multistart < 0 ||
        !(o.euler_rel_tol > 0.0) || !(o.euler_floor >= 0.0)) {
      throw Error(ErrorKind::invalid_parameter, "config: rule.solver has out-of-range values");
    }
  }
  if (c.max_bisections < 1 || c.max_expansions < 0 || c.max_grid_steps < 1 ||
      !(c.scan_ratio > 0.0 && c.scan_ratio < 1.0)) {
    throw Error(ErrorKind::invalid_parameter, "config: rule has out-of-range iteration limits");
  }
  validate(c, r.rule);
  if (r.rule == Rule::apriori) {
    if (!(r.apriori_exponent > 0.0 && r.apriori_exponent <= 2.0)) {
      throw Error(ErrorKind::invalid_parameter, "config: a priori exponent must lie in (0, 2]");
    }
    if (!(r.apriori_constant > 0.0)) {
      throw Error(ErrorKind::invalid_parameter, "config: a priori constant must be > 0");
    }
  }
  return r;
}

GridSpec parse_grid(const json& j, int n, std::vector<std::string>& warnings) {
  const std::string w = "grid";
  check_keys(j, {"delta", "alpha", "k_range", "n_random", "include_adversarial", "seed"}, w);
  GridSpec g;
  if (j.contains("delta")) g.delta = parse_grid_values(j.at("delta"), w + ".delta");
  if (j.contains("alpha")) g.alpha = parse_grid_values(j.at("alpha"), w + ".alpha");
  if (j.contains("k_range")) {
    const json& k = j.at("k_range");
    if (!k.is_array() || k.size() != 2 || !k[0].is_number_integer() ||
        !k[1].is_number_integer()) {
      bad(w + ".k_range", "expected [first, last]");
    }
    g.k_first = k[0].get<int>();
    g.k_last = k[1].get<int>();
  }
  if (g.k_first < 1 || g.k_last < g.k_first || g.k_last > n) {
    throw Error(ErrorKind::invalid_parameter,
                "config: grid.k_range must satisfy 1 <= first <= last <= n");
  }
  g.n_random = static_cast<int>(get_integer(j, "n_random", g.n_random, w));
  if (g.n_random < 0) throw Error(ErrorKind::invalid_parameter, "config: grid.n_random < 0");
  g.include_adversarial = get_bool(j, "include_adversarial", g.include_adversarial, w);
  if (j.contains("seed")) {
    const long long seed = get_integer(j, "seed", 0, w);
    if (seed < 0) throw Error(ErrorKind::invalid_parameter, "config: grid.seed must be >= 0");
    g.seed = static_cast<std::uint64_t>(seed);
  } else {
    warnings.emplace_back("grid.seed missing, using 0");
  }
  return g;
}

OutputSpec parse_output(const json& j) {
  const std::string w = "output";
  check_keys(j, {"directory", "formats"}, w);
  OutputSpec o;
  o.directory = get_string(j, "directory", o.directory, w);
  if (j.contains("formats")) {
    const json& f = j.at("formats");
    if (!f.is_array()) bad(w + ".formats", "expected an array of strings");
    o.formats.clear();
    for (const json& e : f) {
      if (!e.is_string()) bad(w + ".formats", "expected an array of strings");
      const std::string name = e.get<std::string>();
      if (name != "csv" && name != "json" && name != "svg") {
        bad(w + ".formats", "unknown format '" + name + "'");
      }
      o.formats.push_back(name);
    }
  }
  return o;
}

Element materialize(const VectorSpec& v, int n) {
  if (const auto* list = std::get_if<std::vector<double>>(&v)) {
    return Eigen::Map<const Eigen::VectorXd>(list->data(), static_cast<Eigen::Index>(list->size()));
  }
  const std::string& name = std::get<std::string>(v);
  if (name == "harmonic") return harmonic_element(n);
  if (name == "zero") return Element::Zero(n);
  throw Error(ErrorKind::invalid_input, "config: cannot materialize vector rule '" + name + "'");
}

}  // namespace

std::vector<double> GridValues::values() const {
  if (const auto* list = std::get_if<std::vector<double>>(&spec)) return *list;
  const auto& geo = std::get<GeometricSpec>(spec);
  if (geo.count == 1) return {geo.hi};
  return geometric_grid(geo.hi, geo.lo, geo.count);
}

bool OutputSpec::wants(const std::string& format) const {
  for (const auto& f : formats) {
    if (f == format) return true;
  }
  return false;
}

ExperimentConfig parse_config(const json& doc) {
  check_keys(doc, {"satlab_schema", "model", "instance", "rule", "grid", "output"}, "document");
  if (!doc.contains("satlab_schema") || !doc.at("satlab_schema").is_number_integer()) {
    bad("document", "missing integer field satlab_schema");
  }
  const int version = doc.at("satlab_schema").get<int>();
  if (version != kSchemaVersion) {
    bad("document", "unsupported satlab_schema " + std::to_string(version));
  }
  if (!doc.contains("model")) bad("document", "missing section 'model'");

  ExperimentConfig c;
  c.model = parse_model(doc.at("model"));
  const json empty = json::object();
  c.instance = parse_instance(doc.value("instance", empty), c.model.n);
  c.rule = parse_rule_spec(doc.value("rule", empty));
  c.grid = parse_grid(doc.value("grid", empty), c.model.n, c.warnings);
  c.output = parse_output(doc.value("output", empty));
  return c;
}

ExperimentConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::invalid_input, std::string("config: malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config_text(buf.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

json to_json(const ExperimentConfig& c) {
  json doc;
  doc["satlab_schema"] = kSchemaVersion;
  doc["model"] = {{"kind", to_string(c.model.kind)}, {"n", c.model.n},       {"s", c.model.s},
                  {"scale", c.model.scale},         {"beta", c.model.beta}, {"rho", c.model.rho}};

  json inst;
  inst["x_true"] = vector_to_json(c.instance.x_true);
  if (c.instance.source) {
    const SourceSpec& s = *c.instance.source;
    inst["source"] = {{"nu", s.nu},
                      {"norm", s.norm},
                      {"direction", vector_to_json(s.direction)},
                      {"enforce_lipschitz_bound", s.enforce_lipschitz_bound}};
  } else {
    inst["prior"] = vector_to_json(c.instance.prior);
  }
  doc["instance"] = inst;

  const SelectorConfig& sc = c.rule.cfg;
  doc["rule"] = {{"name", to_string(c.rule.rule)},
                 {"tau", sc.tau},
                 {"gamma", sc.gamma},
                 {"alpha0", sc.alpha0},
                 {"alpha_min", sc.alpha_min},
                 {"alpha_max", sc.alpha_max},
                 {"root_tolerance", sc.root_tolerance},
                 {"max_bisections", sc.max_bisections},
                 {"max_expansions", sc.max_expansions},
                 {"max_grid_steps", sc.max_grid_steps},
                 {"scan_ratio", sc.scan_ratio},
                 {"require_tau_above_one", sc.require_tau_above_one},
                 {"apriori_exponent", c.rule.apriori_exponent},
                 {"apriori_constant", c.rule.apriori_constant},
                 {"solver",
                  {{"max_iterations", sc.solver.max_iterations},
                   {"max_halvings", sc.solver.max_halvings},
                   {"euler_rel_tol", sc.solver.euler_rel_tol},
                   {"euler_floor", sc.solver.euler_floor},
                   {"multistart", sc.solver.multistart}}}};

  doc["grid"] = {{"delta", grid_values_to_json(c.grid.delta)},
                 {"alpha", grid_values_to_json(c.grid.alpha)},
                 {"k_range", {c.grid.k_first, c.grid.k_last}},
                 {"n_random", c.grid.n_random},
                 {"include_adversarial", c.grid.include_adversarial},
                 {"seed", c.grid.seed}};
  doc["output"] = {{"directory", c.output.directory}, {"formats", c.output.formats}};
  return doc;
}

std::shared_ptr<const ForwardModel> build_model(const ModelSpec& spec) {
  if (spec.kind == ModelKind::linear) {
    return make_diagonal_linear(spec.n, spec.s, spec.scale, spec.rho);
  }
  return make_composition_model(diagonal_operator(spec.n, spec.s, spec.scale), spec.beta,
                                spec.rho);
}

ProblemInstance build_instance(const ExperimentConfig& config) {
  auto model = build_model(config.model);
  const int n = config.model.n;
  const Element x_true = materialize(config.instance.x_true, n);
  if (!config.instance.source) {
    const VectorSpec& prior = config.instance.prior;
    const auto* name = std::get_if<std::string>(&prior);
    const Element x_prior = (name && *name == "x_true") ? x_true : materialize(prior, n);
    return make_instance(std::move(model), x_true, x_prior);
  }
  const SourceSpec& s = *config.instance.source;
  SourcePrior source;
  source.nu = s.nu;
  Element dir = materialize(s.direction, n);
  if (s.norm > 0.0) {
    const double len = dir.norm();
    if (!(len > 0.0)) {
      throw Error(ErrorKind::invalid_parameter, "config: source direction is the zero vector");
    }
    source.element = dir * (s.norm / len);
  } else {
    source.element = Element::Zero(n);
  }
  source.element_norm = s.norm;
  return synthesize_instance(std::move(model), x_true, source, s.enforce_lipschitz_bound);
}

Selector build_selector(const ExperimentConfig& config) {
  Selector sel;
  sel.rule = config.rule.rule;
  sel.cfg = config.rule.cfg;
  sel.cfg.solver.seed = config.grid.seed;
  sel.apriori_exponent = config.rule.apriori_exponent;
  sel.apriori_constant = config.rule.apriori_constant;
  return sel;
}

json instance_to_json(const ProblemInstance& instance) {
  const ForwardModel& m = *instance.model;
  const DenseOperator& a = m.base_operator();
  std::vector<double> entries;
  entries.reserve(static_cast<std::size_t>(a.size()));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) entries.push_back(a(i, j));
  }
  auto vec = [](const Element& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  json doc = {{"satlab_schema", kSchemaVersion},
              {"kind", to_string(m.kind())},
              {"rows", a.rows()},
              {"cols", a.cols()},
              {"operator", entries},
              {"beta", 0.0},
              {"rho", m.domain_radius()},
              {"x_true", vec(instance.x_true)},
              {"x_prior", vec(instance.x_prior)}};
  if (const auto* comp = dynamic_cast<const CompositionModel*>(&m)) doc["beta"] = comp->beta();
  if (instance.source) {
    doc["source"] = {{"nu", instance.source->nu},
                     {"element", vec(instance.source->element)},
                     {"element_norm", instance.source->element_norm}};
  }
  return doc;
}

ProblemInstance instance_from_json(const json& doc) {
  const std::string w = "instance document";
  check_keys(doc,
             {"satlab_schema", "kind", "rows", "cols", "operator", "beta", "rho", "x_true",
              "x_prior", "source"},
             w);
  if (get_integer(doc, "satlab_schema", -1, w) != kSchemaVersion) {
    bad(w, "missing or unsupported satlab_schema");
  }
  for (const char* key : {"kind", "rows", "cols", "operator", "rho", "x_true", "x_prior"}) {
    if (!doc.contains(key)) bad(w, std::string("missing field '") + key + "'");
  }
  const long long rows = get_integer(doc, "rows", 0, w);
  const long long cols = get_integer(doc, "cols", 0, w);
  const std::vector<double> entries = number_array(doc.at("operator"), w + ".operator");
  if (rows < 1 || cols < 1 || static_cast<long long>(entries.size()) != rows * cols) {
    bad(w, "operator entries do not match rows x cols");
  }
  DenseOperator a(rows, cols);
  for (long long i = 0; i < rows; ++i) {
    for (long long j = 0; j < cols; ++j) a(i, j) = entries[static_cast<std::size_t>(i * cols + j)];
  }
  const double rho = get_number(doc, "rho", 1.0, w);
  const std::string kind = get_string(doc, "kind", "linear", w);
  std::shared_ptr<const ForwardModel> model;
  if (kind == "linear") {
    model = std::make_shared<const LinearModel>(a, rho);
  } else if (kind == "composition") {
    model = make_composition_model(a, get_number(doc, "beta", 0.0, w), rho);
  } else {
    bad(w + ".kind", "expected 'linear' or 'composition'");
  }
  auto element = [&](const char* key) {
    const std::vector<double> v = number_array(doc.at(key), w + "." + key);
    return Element(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  ProblemInstance inst = make_instance(model, element("x_true"), element("x_prior"));
  if (doc.contains("source")) {
    const json& src = doc.at("source");
    check_keys(src, {"nu", "element", "element_norm"}, w + ".source");
    SourcePrior sp;
    sp.nu = get_number(src, "nu", 0.5, w + ".source");
    const std::vector<double> e = number_array(src.at("element"), w + ".source.element");
    sp.element = Eigen::Map<const Eigen::VectorXd>(e.data(), static_cast<Eigen::Index>(e.size()));
    sp.element_norm = get_number(src, "element_norm", sp.element.norm(), w + ".source");
    inst.source = sp;
  }
  return inst;
}

}  // namespace satlab
