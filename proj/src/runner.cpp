#include "contraq/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "contraq/contraction.hpp"

namespace contraq {

using ojson = nlohmann::ordered_json;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_value(std::ostream& out, const ojson& v, int depth) {
  const std::string pad(static_cast<size_t>(2 * (depth + 1)), ' ');
  const std::string close(static_cast<size_t>(2 * depth), ' ');
  switch (v.type()) {
    case ojson::value_t::object: {
      if (v.empty()) {
        out << "{}";
        return;
      }
      out << "{\n";
      size_t i = 0;
      for (const auto& [k, item] : v.items()) {
        out << pad << ojson(k).dump() << ": ";
        write_value(out, item, depth + 1);
        out << (++i < v.size() ? ",\n" : "\n");
      }
      out << close << "}";
      return;
    }
    case ojson::value_t::array: {
      if (v.empty()) {
        out << "[]";
        return;
      }
      // numeric arrays stay on one line
      const bool flat = std::all_of(v.begin(), v.end(), [](const ojson& e) { return e.is_primitive(); });
      out << (flat ? "[" : "[\n");
      for (size_t i = 0; i < v.size(); ++i) {
        if (!flat) out << pad;
        write_value(out, v[i], depth + 1);
        if (i + 1 < v.size()) out << (flat ? ", " : ",\n");
      }
      out << (flat ? "]" : "\n" + close + "]");
      return;
    }
    case ojson::value_t::number_float: {
      const double d = v.get<double>();
      out << (std::isfinite(d) ? fmt17(d) : "null");
      return;
    }
    default:
      out << v.dump();
  }
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::IOError, "cannot write " + p.string());
  return f;
}

void finish(std::ofstream& f, const std::filesystem::path& p) {
  f.flush();
  if (!f) throw Error(ErrorKind::IOError, "write failed for " + p.string());
}

// g(z) = g(q) on z = (p, q)
ConstraintFunction lift_to_phase(const ConstraintFunction& g, Eigen::Index n) {
  ConstraintFunction out;
  out.label = g.label;
  out.g = [g, n](const Vec& z, double t) { return g.value(z.tail(n), t); };
  out.grad = [g, n](const Vec& z, double t) {
    Vec d = Vec::Zero(2 * n);
    d.tail(n) = g.gradient(z.tail(n), t);
    return d;
  };
  out.hess = [g, n](const Vec& z, double t) {
    Mat h = Mat::Zero(2 * n, 2 * n);
    h.bottomRightCorner(n, n) = g.hessian(z.tail(n), t);
    return h;
  };
  out.d_dt = [g, n](const Vec& z, double t) { return g.time_derivative(z.tail(n), t); };
  return out;
}

ConstraintSet model_constraints(const Scenario& s) {
  if (s.kind != ScenarioKind::Hamiltonian) return s.constraints;
  ConstraintSet lifted;
  const Eigen::Index n = s.phase0.q.size();
  for (const auto& g : s.constraints.constraints) lifted.constraints.push_back(lift_to_phase(g, n));
  // contact drift of the phase simulation sits well inside this band
  lifted.activation_tol = 1e-6;
  lifted.release_tol = s.constraints.release_tol;
  return lifted;
}

Scenario with_options(Scenario s, const RunOptions& o) {
  if (o.dt) {
    s.sim.dt_max = *o.dt;
    s.sim.validate();
  }
  if (o.seed) s.seed = *o.seed;
  return s;
}

struct Outcome {
  Trajectory traj;  // flow or primary phase trajectory
  std::optional<PhaseTrajectory> primary, secondary;
  std::optional<EquivalenceReport> equivalence;
  std::vector<RatePoint> rate;
  BoundsSeries bounds;
  std::vector<GeodesicPath> paths;
  std::vector<Point2> fan;
};

Trajectory simulate_scenario(const Scenario& s, Outcome& out) {
  if (s.kind == ScenarioKind::Flow) return simulate(s.metric, s.field, s.constraints, s.x0, s.sim);
  const auto sim = s.form == CollisionForm::Step ? simulate_step_form : simulate_dirac_form;
  out.primary = sim(s.hamiltonian, s.constraints, s.phase0, s.restitution, s.sim, s.collision);
  return out.primary->traj;
}

Vec sample_state(const Scenario& s, const Sample& smp) {
  if (s.kind == ScenarioKind::Flow) return smp.x;
  Vec z(smp.p.size() + smp.x.size());
  z << smp.p, smp.x;
  return z;
}

BoundsSeries bounds_along(const Scenario& s, const Trajectory& traj, int stride) {
  BoundsSeries b;
  const ConstraintSet cs = model_constraints(s);
  for (size_t i = 0; i < traj.samples.size(); ++i) {
    if (i % static_cast<size_t>(stride) != 0 && i + 1 != traj.samples.size()) continue;
    const Sample& smp = traj.samples[i];
    const ContractionBounds cb = contraction_bounds(s.metric, s.field, cs, StateVector(sample_state(s, smp), smp.t));
    b.t.push_back(smp.t);
    b.lambda_min.push_back(cb.lambda_min);
    b.lambda_max.push_back(cb.lambda_max);
    b.reduced_dim.push_back(static_cast<int>(cb.basis.reduced_dim()));
  }
  return b;
}

Vec rate_direction(const Scenario& s) {
  if (s.analysis.rate_direction) return *s.analysis.rate_direction;
  std::mt19937_64 rng(s.seed);
  std::normal_distribution<double> nd;
  Vec d(s.dim());
  for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = nd(rng);
  return d;
}

Outcome execute(const Scenario& s) {
  Outcome out;
  if (s.kind == ScenarioKind::Geodesic) {
    int k = s.analysis.k_paths;
    for (const auto& c : s.checks)
      if (c.type == "minimal_path_count") k = std::max(k, c.count + 1);
    out.paths = shortest_paths(s.world, k, s.analysis.speed);
    if (s.analysis.fan_count > 0 && !out.paths.front().corners.empty())
      out.fan = corner_fan(s.world, out.paths.front(), s.analysis.fan_count);
    return out;
  }
  out.traj = simulate_scenario(s, out);
  if (s.analysis.bounds) out.bounds = bounds_along(s, out.traj, s.analysis.bounds_stride);
  if (s.analysis.empirical_rate)
    out.rate = empirical_rate(s.metric, s.field, s.constraints, s.x0, s.analysis.rate_epsilon, s.sim, rate_direction(s));
  if (s.analysis.equivalence) {
    const auto other = s.form == CollisionForm::Step ? simulate_dirac_form : simulate_step_form;
    out.secondary = other(s.hamiltonian, s.constraints, s.phase0, s.restitution, s.sim, s.collision);
    out.equivalence = equivalence_check(*out.primary, *out.secondary, s.analysis.equivalence_tol);
  }
  return out;
}

int constraint_index(const Scenario& s, const std::string& label) {
  for (size_t j = 0; j < s.constraints.size(); ++j)
    if (s.constraints[j].label == label) return static_cast<int>(j);
  return -1;
}

CheckResult evaluate(const Scenario& s, const Outcome& o, const CheckSpec& c) {
  CheckResult r;
  r.id = c.id;
  r.type = c.type;
  r.threshold = c.tol;
  const auto at_most = [&](double measured) {
    r.measured = measured;
    r.passed = measured <= c.tol;
  };
  if (c.type == "max_constraint_residual") {
    const auto& g = s.constraints[static_cast<size_t>(constraint_index(s, c.label))];
    double worst = 0.0;
    for (const auto& smp : o.traj.samples) worst = std::max(worst, std::abs(g.value(smp.x, smp.t)));
    at_most(worst);
  } else if (c.type == "max_violation") {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& smp : o.traj.samples)
      for (const auto& g : s.constraints.constraints) worst = std::max(worst, g.value(smp.x, smp.t));
    at_most(s.constraints.empty() ? 0.0 : worst);
  } else if (c.type == "bounds_range") {
    double worst = 0.0;
    for (size_t i = 0; i < o.bounds.t.size(); ++i)
      worst = std::max({worst, std::abs(o.bounds.lambda_min[i] - c.value), std::abs(o.bounds.lambda_max[i] - c.value)});
    at_most(worst);
    r.detail = "expected " + fmt17(c.value);
  } else if (c.type == "rate_matches_bounds") {
    double worst = 0.0;
    int used = 0;
    for (const auto& p : o.rate) {
      if (p.near_event) continue;
      ++used;
      worst = std::max({worst, p.bounds.lambda_min - p.rate, p.rate - p.bounds.lambda_max});
    }
    const int need = c.count > 0 ? c.count : 10;
    r.measured = worst;
    r.passed = worst <= c.tol && used >= need;
    r.detail = std::to_string(used) + " rate samples away from events";
  } else if (c.type == "min_events") {
    r.measured = static_cast<double>(o.traj.events.size());
    r.threshold = c.count;
    r.passed = o.traj.events.size() >= static_cast<size_t>(c.count);
  } else if (c.type == "equivalence") {
    r.threshold = c.tol > 0 ? c.tol : s.analysis.equivalence_tol;
    r.measured = o.equivalence->max_deviation;
    r.passed = r.measured <= r.threshold;
    r.detail = std::to_string(o.equivalence->compared) + " samples compared";
  } else if (c.type == "restitution_law") {
    double worst = 0.0;
    for (const auto& ce : o.primary->collisions) worst = std::max(worst, std::abs(ce.gdot_post + ce.restitution * ce.gdot_pre));
    at_most(worst);
  } else if (c.type == "energy_conserved") {
    double worst = 0.0;
    int elastic = 0;
    for (const auto& ce : o.primary->collisions) {
      if (ce.restitution != 1.0) continue;
      ++elastic;
      worst = std::max(worst, std::abs(ce.kinetic_post - ce.kinetic_pre));
    }
    at_most(worst);
    r.passed = r.passed && elastic > 0;
    r.detail = std::to_string(elastic) + " elastic collisions";
  } else if (c.type == "min_collisions") {
    r.measured = static_cast<double>(o.primary->collisions.size());
    r.threshold = c.count;
    r.passed = o.primary->collisions.size() >= static_cast<size_t>(c.count);
  } else if (c.type == "minimal_path_count") {
    const double best = o.paths.front().length;
    int ties = 0;
    for (const auto& p : o.paths)
      if ((p.length - best) / best <= c.tol) ++ties;
    r.measured = ties;
    r.threshold = c.count;
    r.passed = ties == c.count;
    r.detail = "relative tolerance " + fmt17(c.tol);
  } else if (c.type == "strictly_ordered") {
    double gap = std::numeric_limits<double>::infinity();
    for (size_t i = 1; i < o.paths.size(); ++i)
      gap = std::min(gap, (o.paths[i].length - o.paths[i - 1].length) / o.paths[i - 1].length);
    r.measured = o.paths.size() > 1 ? gap : 0.0;
    r.passed = o.paths.size() > 1 && gap > c.tol;
  } else if (c.type == "shortest_length") {
    at_most(std::abs(o.paths.front().length - c.value));
    r.detail = "expected " + fmt17(c.value);
  }
  return r;
}

void write_traj_csv(const std::filesystem::path& p, const Trajectory& traj, bool phase) {
  std::ofstream f = open_out(p);
  const Eigen::Index n = traj.samples.empty() ? 0 : traj.samples.front().x.size();
  f << "t";
  for (Eigen::Index i = 1; i <= n; ++i) f << ",x" << i;
  if (phase)
    for (Eigen::Index i = 1; i <= n; ++i) f << ",p" << i;
  f << ",event\n";
  for (const auto& smp : traj.samples) {
    f << fmt17(smp.t);
    for (Eigen::Index i = 0; i < smp.x.size(); ++i) f << ',' << fmt17(smp.x[i]);
    if (phase)
      for (Eigen::Index i = 0; i < smp.p.size(); ++i) f << ',' << fmt17(smp.p[i]);
    f << ',' << smp.marker << '\n';
  }
  finish(f, p);
}

void write_paths_csv(const std::filesystem::path& p, const std::vector<GeodesicPath>& paths, double speed) {
  std::ofstream f = open_out(p);
  f << "rank,length,travel_time,action,action_difference,travel_time_difference,corners\n";
  const auto rows = path_table(paths, speed);
  for (size_t i = 0; i < rows.size(); ++i) {
    f << i + 1 << ',' << fmt17(rows[i].length) << ',' << fmt17(rows[i].travel_time) << ',' << fmt17(rows[i].action)
      << ',' << fmt17(rows[i].action_difference) << ',' << fmt17(rows[i].travel_time_difference) << ',';
    for (size_t k = 0; k < paths[i].corners.size(); ++k)
      f << (k ? ";" : "") << paths[i].corners[k].obstacle << ':' << paths[i].corners[k].vertex;
    f << '\n';
  }
  finish(f, p);
}

ojson bounds_json(const BoundsSeries& b) {
  ojson j;
  j["lambda_min"] = b.min();
  j["lambda_max"] = b.max();
  j["t"] = b.t;
  j["lambda_min_samples"] = b.lambda_min;
  j["lambda_max_samples"] = b.lambda_max;
  j["reduced_dim"] = b.reduced_dim;
  return j;
}

void write_json_file(const std::filesystem::path& p, const ojson& j) {
  std::ofstream f = open_out(p);
  write_json(f, j);
  finish(f, p);
}

ojson summary_json(const Scenario& s, const Outcome& o) {
  ojson j;
  if (s.kind == ScenarioKind::Geodesic) {
    j["paths"] = o.paths.size();
    if (!o.paths.empty()) j["shortest_length"] = o.paths.front().length;
    if (!o.fan.empty()) {
      ojson fan = ojson::array();
      for (const auto& d : o.fan) fan.push_back({d.x(), d.y()});
      j["corner_fan"] = fan;
    }
    return j;
  }
  j["samples"] = o.traj.samples.size();
  j["activations"] = o.traj.count(EventKind::Activation);
  j["releases"] = o.traj.count(EventKind::Release);
  j["collisions"] = o.traj.count(EventKind::Collision);
  if (!o.traj.samples.empty()) j["t_final"] = o.traj.samples.back().t;
  if (o.equivalence) j["equivalence_max_deviation"] = o.equivalence->max_deviation;
  return j;
}

}  // namespace

void write_json(std::ostream& out, const ojson& value) {
  write_value(out, value, 0);
  out << '\n';
}

double BoundsSeries::min() const {
  return lambda_min.empty() ? 0.0 : *std::min_element(lambda_min.begin(), lambda_min.end());
}
double BoundsSeries::max() const {
  return lambda_max.empty() ? 0.0 : *std::max_element(lambda_max.begin(), lambda_max.end());
}

bool RunReport::passed() const {
  return error.empty() && std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

int RunReport::exit_code() const { return passed() ? 0 : 2; }

BoundsSeries compute_bounds(const Scenario& scenario, const RunOptions& options) {
  const Scenario s = with_options(scenario, options);
  if (s.kind == ScenarioKind::Geodesic || !s.has_model)
    throw Error(ErrorKind::SchemaError, s.name + ": no first-order model to bound");
  Outcome o;
  const Trajectory traj = simulate_scenario(s, o);
  return bounds_along(s, traj, s.analysis.bounds ? s.analysis.bounds_stride : 1);
}

RunReport run(const Scenario& scenario, const std::string& out_dir, const RunOptions& options) {
  namespace fs = std::filesystem;
  const auto start = std::chrono::steady_clock::now();
  const Scenario s = with_options(scenario, options);
  RunReport rep;
  rep.name = s.name;
  rep.kind = s.kind;

  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::IOError, "cannot create output directory " + out_dir);

  Outcome o;
  bool ran = false;
  try {
    o = execute(s);
    ran = true;
  } catch (const Error& e) {
    rep.error = std::string(to_string(e.kind())) + ": " + e.what();
  }

  ojson outputs;
  if (ran) {
    for (const auto& c : s.checks) rep.checks.push_back(evaluate(s, o, c));
    if (s.kind == ScenarioKind::Geodesic) {
      const std::string f = s.name + "_paths.csv";
      std::vector<GeodesicPath> table(o.paths.begin(),
                                      o.paths.begin() + std::min<long>(s.analysis.k_paths, static_cast<long>(o.paths.size())));
      write_paths_csv(dir / f, table, s.analysis.speed);
      outputs["paths"] = f;
    } else {
      const std::string f = s.name + "_traj.csv";
      write_traj_csv(dir / f, o.traj, s.kind == ScenarioKind::Hamiltonian);
      outputs["trajectory"] = f;
      if (s.analysis.bounds) {
        const std::string b = s.name + "_bounds.json";
        write_json_file(dir / b, bounds_json(o.bounds));
        outputs["bounds"] = b;
      }
    }
  } else {
    for (const auto& c : s.checks) rep.checks.push_back({c.id, c.type, false, 0.0, c.tol, "not evaluated"});
  }
  const std::string report_file = s.name + "_report.json";
  outputs["report"] = report_file;
  for (const auto& [k, v] : outputs.items()) rep.outputs.push_back(v.get<std::string>());

  ojson j;
  j["schema_version"] = kScenarioSchemaVersion;
  j["name"] = s.name;
  j["kind"] = to_string(s.kind);
  j["passed"] = rep.passed();
  j["exit_code"] = rep.exit_code();
  j["error"] = rep.error.empty() ? ojson(nullptr) : ojson(rep.error);
  j["outputs"] = outputs;
  ojson checks = ojson::array();
  for (const auto& c : rep.checks) {
    ojson cj;
    cj["id"] = c.id;
    cj["type"] = c.type;
    cj["passed"] = c.passed;
    cj["measured"] = c.measured;
    cj["threshold"] = c.threshold;
    cj["detail"] = c.detail;
    checks.push_back(cj);
  }
  j["checks"] = checks;
  if (ran) j["summary"] = summary_json(s, o);
  write_json_file(dir / report_file, j);

  rep.duration_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace contraq
