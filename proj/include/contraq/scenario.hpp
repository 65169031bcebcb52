#ifndef CONTRAQ_SCENARIO_HPP_
#define CONTRAQ_SCENARIO_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "contraq/collisions.hpp"
#include "contraq/geodesics.hpp"

namespace contraq {

inline constexpr int kScenarioSchemaVersion = 1;

enum class ScenarioKind { Flow, Hamiltonian, Geodesic };
const char* to_string(ScenarioKind kind);

// One requested verdict. Unused numeric fields stay at their defaults.
struct CheckSpec {
  std::string id;
  std::string type;
  std::string label;  // constraint label where the check needs one
  double value = 0.0;
  double tol = 0.0;
  int count = 0;
};

struct AnalysisSpec {
  bool bounds = false;
  int bounds_stride = 1;

  bool empirical_rate = false;
  double rate_epsilon = 1e-5;
  std::optional<Vec> rate_direction;  // random (seeded) when absent

  bool equivalence = false;
  double equivalence_tol = 1e-6;

  int k_paths = 1;
  double speed = 1.0;
  int fan_count = 0;
};

struct Scenario {
  int schema_version = kScenarioSchemaVersion;
  std::string name;
  std::string description;
  std::string source_path;
  ScenarioKind kind = ScenarioKind::Flow;

  // flow: the system itself; hamiltonian: the first-order model on z = (p, q)
  // used for contraction bounds, with `constraints` lifted onto the q block
  MetricField metric;
  CovectorField field;
  ConstraintSet constraints;
  StateVector x0;
  bool has_model = false;

  Hamiltonian hamiltonian;
  PhaseState phase0;
  double restitution = 0.0;
  CollisionForm form = CollisionForm::Dirac;
  CollisionConfig collision;

  PolygonalWorld world;

  SimConfig sim;
  std::uint64_t seed = 1;
  AnalysisSpec analysis;
  std::vector<CheckSpec> checks;

  Eigen::Index dim() const { return x0.dim(); }
};

/// Parses and validates a scenario. SchemaError carries the JSON pointer of
/// the offending field (or the parser's line/column); UnknownBuiltin names an
/// unrecognised family. IOError when the file cannot be read.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>");

// Directory holding the bundled scenarios (compile-time default).
std::string bundled_scenario_dir();

/// Sorted scenario names (file stems) of the *.json files in `dir`.
std::vector<std::string> list_scenarios(const std::string& dir = bundled_scenario_dir());

}  // namespace contraq

#endif  // CONTRAQ_SCENARIO_HPP_
