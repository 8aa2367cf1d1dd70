#pragma once

// Experiment configuration: a versioned JSON document describing the model,
// the ground truth and prior, the parameter choice rule and the grids.
//
//   {
//     "satlab_schema": 1,
//     "model":    {"kind": "linear", "n": 200, "s": 2, "scale": 1, "beta": 0, "rho": 1},
//     "instance": {"x_true": "harmonic",
//                  "source": {"nu": 0.5, "norm": 1, "direction": "harmonic"}},
//     "rule":     {"name": "discrepancy", "tau": 1.5, "gamma": 0.5, ...},
//     "grid":     {"delta": {"hi": 1e-2, "lo": 1e-5, "count": 8}, "seed": 0, ...},
//     "output":   {"directory": "out", "formats": ["csv", "json", "svg"]}
//   }
//
// Without a source the prior is given directly through "prior" ("x_true",
// "zero" or an explicit array). Vectors may always be explicit arrays.

#include "satlab/forward_models.hpp"
#include "satlab/param_choice.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace satlab {

inline constexpr int kSchemaVersion = 1;

struct ModelSpec {
  ModelKind kind = ModelKind::linear;
  int n = 200;
  double s = 2.0;
  double scale = 1.0;
  double beta = 0.0;
  double rho = 1.0;
};

// "harmonic" or explicit coordinates.
using VectorSpec = std::variant<std::string, std::vector<double>>;

struct SourceSpec {
  double nu = 0.5;
  double norm = 1.0;  // ||u|| for nu = 1/2, ||w|| for nu >= 1
  VectorSpec direction = std::string("harmonic");
  // Refuse instances with L ||u|| >= 1.
  bool enforce_lipschitz_bound = false;
};

struct InstanceSpec {
  VectorSpec x_true = std::string("harmonic");
  std::optional<SourceSpec> source;
  // Only without a source: "x_true", "zero" or explicit coordinates.
  VectorSpec prior = std::string("x_true");
};

struct GeometricSpec {
  double hi = 0.0;
  double lo = 0.0;
  int count = 0;
};

// Either an explicit list or a geometric generator; serialized as given.
struct GridValues {
  std::variant<std::vector<double>, GeometricSpec> spec;
  std::vector<double> values() const;
};

struct RuleSpec {
  Rule rule = Rule::discrepancy;
  SelectorConfig cfg;
  double apriori_exponent = 2.0 / 3.0;
  double apriori_constant = 1.0;
};

struct GridSpec {
  GridValues delta{GeometricSpec{1e-2, 1e-5, 8}};
  GridValues alpha{GeometricSpec{1.0, 1e-6, 7}};
  int k_first = 2;
  int k_last = 12;
  int n_random = 8;
  bool include_adversarial = true;
  std::uint64_t seed = 0;
};

struct OutputSpec {
  std::string directory = "out";
  std::vector<std::string> formats{"csv", "json", "svg"};
  bool wants(const std::string& format) const;
};

struct ExperimentConfig {
  ModelSpec model;
  InstanceSpec instance;
  RuleSpec rule;
  GridSpec grid;
  OutputSpec output;
  // Non-fatal findings from parsing, e.g. a defaulted seed.
  std::vector<std::string> warnings;
};

/// Parses and validates. Malformed documents throw invalid_input; rule
/// constraints throw what validate() throws (hypothesis_violation for tau).
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Every field written explicitly, so defaults are pinned in the output.
nlohmann::json to_json(const ExperimentConfig& config);

std::shared_ptr<const ForwardModel> build_model(const ModelSpec& spec);
ProblemInstance build_instance(const ExperimentConfig& config);
Selector build_selector(const ExperimentConfig& config);

/// Self-contained instance document: dimensions, operator entries (row-major),
/// beta, rho, x_true, x_prior and the source element when present.
nlohmann::json instance_to_json(const ProblemInstance& instance);
ProblemInstance instance_from_json(const nlohmann::json& doc);

}  // namespace satlab
