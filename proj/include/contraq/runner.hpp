#ifndef CONTRAQ_RUNNER_HPP_
#define CONTRAQ_RUNNER_HPP_

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "contraq/scenario.hpp"

namespace contraq {

struct CheckResult {
  std::string id;
  std::string type;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct RunOptions {
  std::optional<double> dt;           // overrides sim.dt
  std::optional<std::uint64_t> seed;  // overrides the scenario seed
};

struct RunReport {
  std::string name;
  ScenarioKind kind = ScenarioKind::Flow;
  std::vector<std::string> outputs;  // file names inside the output directory
  std::vector<CheckResult> checks;
  std::string error;                 // module error, empty on success
  double duration_s = 0.0;

  bool passed() const;
  // 0 when every check passed and no module error occurred, else 2.
  int exit_code() const;
};

// Contraction bounds sampled along a simulated trajectory.
struct BoundsSeries {
  std::vector<double> t;
  std::vector<double> lambda_min;
  std::vector<double> lambda_max;
  std::vector<int> reduced_dim;

  double min() const;
  double max() const;
};

/// Executes a scenario and writes `<name>_traj.csv`, `<name>_bounds.json`,
/// `<name>_paths.csv` (whichever apply) and `<name>_report.json` into
/// out_dir. Module errors land in the report; IOError is thrown when the
/// directory or a file cannot be written.
RunReport run(const Scenario& scenario, const std::string& out_dir, const RunOptions& options = {});

/// Simulates a flow or hamiltonian scenario and evaluates bounds every
/// analysis.bounds_stride samples (stride 1 when bounds were not requested).
BoundsSeries compute_bounds(const Scenario& scenario, const RunOptions& options = {});

/// JSON with every floating value printed as %.17g and '\n' line endings.
void write_json(std::ostream& out, const nlohmann::ordered_json& value);

}  // namespace contraq

#endif  // CONTRAQ_RUNNER_HPP_
