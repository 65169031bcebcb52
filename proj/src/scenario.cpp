#include "contraq/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <unsupported/Eigen/Splines>

#ifndef CONTRAQ_SCENARIO_DIR
#define CONTRAQ_SCENARIO_DIR "scenarios"
#endif

namespace contraq {

using nlohmann::json;

const char* to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Flow: return "flow";
    case ScenarioKind::Hamiltonian: return "hamiltonian";
    case ScenarioKind::Geodesic: return "geodesic";
  }
  return "?";
}

namespace {

[[noreturn]] void schema_fail(const std::string& where, const std::string& msg) {
  throw Error(ErrorKind::SchemaError, where + ": " + msg);
}

// A JSON value together with its pointer path, for diagnostics.
class Node {
 public:
  Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return *j_; }

  bool has(const char* key) const { return j_->is_object() && j_->contains(key); }

  Node at(const char* key) const {
    if (!j_->is_object()) fail("expected an object");
    if (!j_->contains(key)) schema_fail(path_ + "/" + key, "required field missing");
    return Node((*j_)[key], path_ + "/" + key);
  }
  Node at(size_t i) const { return Node((*j_)[i], path_ + "/" + std::to_string(i)); }

  size_t size() const {
    if (!j_->is_array()) fail("expected an array");
    return j_->size();
  }

  // Rejects keys outside `allowed` so typos surface as schema errors.
  void only(std::initializer_list<const char*> allowed) const {
    if (!j_->is_object()) fail("expected an object");
    for (const auto& [k, v] : j_->items()) {
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
        schema_fail(path_ + "/" + k, "unknown field");
    }
  }

  double num() const {
    if (!j_->is_number()) fail("expected a number");
    const double v = j_->get<double>();
    if (!std::isfinite(v)) fail("must be finite");
    return v;
  }
  double num(const char* key, double fallback) const { return has(key) ? at(key).num() : fallback; }

  long integer() const {
    if (!j_->is_number_integer()) fail("expected an integer");
    return j_->get<long>();
  }
  int integer(const char* key, int fallback) const {
    return has(key) ? static_cast<int>(at(key).integer()) : fallback;
  }

  std::string str() const {
    if (!j_->is_string()) fail("expected a string");
    return j_->get<std::string>();
  }
  std::string str(const char* key, const std::string& fallback) const { return has(key) ? at(key).str() : fallback; }

  Vec vec(Eigen::Index expect = -1) const {
    const size_t n = size();
    if (expect >= 0 && static_cast<Eigen::Index>(n) != expect)
      fail("expected " + std::to_string(expect) + " entries, got " + std::to_string(n));
    Vec v(static_cast<Eigen::Index>(n));
    for (size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = at(i).num();
    return v;
  }

  Mat mat(Eigen::Index rows, Eigen::Index cols) const {
    if (size() != static_cast<size_t>(rows)) fail("expected " + std::to_string(rows) + " rows");
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) m.row(r) = at(static_cast<size_t>(r)).vec(cols).transpose();
    return m;
  }

  [[noreturn]] void fail(const std::string& msg) const { schema_fail(path_.empty() ? "/" : path_, msg); }

 private:
  const json* j_;
  std::string path_;
};

[[noreturn]] void unknown_builtin(const Node& n, const std::string& what, const std::string& name) {
  throw Error(ErrorKind::UnknownBuiltin, n.path() + ": unknown " + what + " '" + name + "'");
}

// ---------------------------------------------------------------- polynomials

struct Monomial {
  double coef = 0.0;
  std::vector<int> powers;
};

struct Polynomial {
  std::vector<Monomial> terms;

  double value(const Vec& x) const {
    double s = 0.0;
    for (const auto& m : terms) {
      double p = m.coef;
      for (size_t i = 0; i < m.powers.size(); ++i) p *= std::pow(x[static_cast<Eigen::Index>(i)], m.powers[i]);
      s += p;
    }
    return s;
  }

  // d/dx_a (and d/dx_b) of one monomial
  static double partial(const Monomial& m, const Vec& x, int a, int b = -1) {
    double p = m.coef;
    for (size_t i = 0; i < m.powers.size(); ++i) {
      int e = m.powers[i];
      const double xi = x[static_cast<Eigen::Index>(i)];
      double c = 1.0;
      for (int d : {a, b}) {
        if (d != static_cast<int>(i)) continue;
        c *= e;
        --e;
      }
      if (c == 0.0) return 0.0;
      p *= c * std::pow(xi, e);
    }
    return p;
  }

  Vec gradient(const Vec& x) const {
    Vec g = Vec::Zero(x.size());
    for (const auto& m : terms)
      for (Eigen::Index a = 0; a < x.size(); ++a) g[a] += partial(m, x, static_cast<int>(a));
    return g;
  }

  Mat hessian(const Vec& x) const {
    Mat h = Mat::Zero(x.size(), x.size());
    for (const auto& m : terms)
      for (Eigen::Index a = 0; a < x.size(); ++a)
        for (Eigen::Index b = 0; b < x.size(); ++b) h(a, b) += partial(m, x, static_cast<int>(a), static_cast<int>(b));
    return h;
  }
};

Polynomial parse_polynomial(const Node& n, Eigen::Index dim) {
  Polynomial p;
  for (size_t i = 0; i < n.size(); ++i) {
    const Node t = n.at(i);
    t.only({"coef", "powers"});
    Monomial m;
    m.coef = t.at("coef").num();
    const Node pw = t.at("powers");
    if (pw.size() != static_cast<size_t>(dim)) pw.fail("expected " + std::to_string(dim) + " exponents");
    for (size_t k = 0; k < pw.size(); ++k) {
      const long e = pw.at(k).integer();
      if (e < 0 || e > 16) pw.at(k).fail("exponent must lie in [0, 16]");
      m.powers.push_back(static_cast<int>(e));
    }
    p.terms.push_back(std::move(m));
  }
  return p;
}

// ----------------------------------------------------------------- components

std::function<double(double)> parse_input(const Node& n) {
  n.only({"family", "value", "amplitude", "omega", "phase"});
  const std::string fam = n.at("family").str();
  if (fam == "zero") return [](double) { return 0.0; };
  if (fam == "constant") {
    const double v = n.at("value").num();
    return [v](double) { return v; };
  }
  if (fam == "sine") {
    const double a = n.at("amplitude").num(), w = n.num("omega", 1.0), ph = n.num("phase", 0.0);
    return [a, w, ph](double t) { return a * std::sin(w * t + ph); };
  }
  unknown_builtin(n.at("family"), "input family", fam);
}

MetricField parse_metric(const Node& n, Eigen::Index dim) {
  n.only({"family", "matrix"});
  const std::string fam = n.at("family").str();
  if (fam == "identity") return MetricField::identity(dim);
  if (fam == "constant") {
    const Mat m = n.at("matrix").mat(dim, dim);
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()))
      n.at("matrix").fail("metric must be symmetric");
    Eigen::LLT<Mat> llt(m);
    if (llt.info() != Eigen::Success) n.at("matrix").fail("metric must be positive definite");
    return MetricField::constant(m);
  }
  unknown_builtin(n.at("family"), "metric family", fam);
}

CovectorField parse_field(const Node& n, Eigen::Index dim) {
  n.only({"family", "A", "b", "input_dir", "input", "components"});
  const std::string fam = n.at("family").str();
  if (fam == "contracting") return CovectorField::linear(-Mat::Identity(dim, dim));
  if (fam == "zero") return CovectorField::linear(Mat::Zero(dim, dim));
  if (fam == "linear") {
    const Mat a = n.at("A").mat(dim, dim);
    const Vec b = n.has("b") ? n.at("b").vec(dim) : Vec::Zero(dim);
    if (!n.has("input")) return CovectorField::linear(a, b);
    const Vec dir = n.at("input_dir").vec(dim);
    const auto u = parse_input(n.at("input"));
    CovectorField f;
    f.eval = [a, b, dir, u](const Vec& x, double t) -> Vec { return a * x + b - dir * u(t); };
    f.jacobian = [a](const Vec&, double) -> Mat { return a; };
    return f;
  }
  if (fam == "polynomial") {
    const Node comps = n.at("components");
    if (comps.size() != static_cast<size_t>(dim)) comps.fail("expected one polynomial per coordinate");
    std::vector<Polynomial> polys;
    for (size_t i = 0; i < comps.size(); ++i) polys.push_back(parse_polynomial(comps.at(i), dim));
    CovectorField f;
    f.eval = [polys](const Vec& x, double) {
      Vec out(static_cast<Eigen::Index>(polys.size()));
      for (size_t i = 0; i < polys.size(); ++i) out[static_cast<Eigen::Index>(i)] = polys[i].value(x);
      return out;
    };
    f.jacobian = [polys](const Vec& x, double) {
      Mat jac(static_cast<Eigen::Index>(polys.size()), x.size());
      for (size_t i = 0; i < polys.size(); ++i) jac.row(static_cast<Eigen::Index>(i)) = polys[i].gradient(x).transpose();
      return jac;
    };
    return f;
  }
  unknown_builtin(n.at("family"), "field family", fam);
}

// Circle centre c(t): constant, or a cubic interpolating spline through
// timed knots, held at the end knots outside their range.
struct CenterPath {
  using Spline2 = Eigen::Spline<double, 2>;
  Eigen::Vector2d fixed = Eigen::Vector2d::Zero();
  std::optional<Spline2> spline;
  double t0 = 0.0, t1 = 0.0;

  // (c, dc/dt)
  std::pair<Eigen::Vector2d, Eigen::Vector2d> at(double t) const {
    if (!spline) return {fixed, Eigen::Vector2d::Zero()};
    const double span = t1 - t0;
    if (t <= t0) return {(*spline)(0.0), Eigen::Vector2d::Zero()};
    if (t >= t1) return {(*spline)(1.0), Eigen::Vector2d::Zero()};
    const auto d = spline->derivatives((t - t0) / span, 1);
    return {d.col(0), d.col(1) / span};
  }
};

CenterPath parse_center(const Node& n) {
  CenterPath c;
  if (n.raw().is_array()) {
    c.fixed = n.vec(2);
    return c;
  }
  n.only({"times", "points"});
  const Vec times = n.at("times").vec();
  const Node pts = n.at("points");
  if (pts.size() != static_cast<size_t>(times.size())) pts.fail("one point per knot time");
  if (times.size() < 2) n.at("times").fail("need at least two knots");
  for (Eigen::Index i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) n.at("times").fail("knot times must increase");
  Eigen::Matrix<double, 2, Eigen::Dynamic> p(2, times.size());
  for (Eigen::Index i = 0; i < times.size(); ++i) p.col(i) = pts.at(static_cast<size_t>(i)).vec(2);
  c.t0 = times[0];
  c.t1 = times[times.size() - 1];
  const Eigen::RowVectorXd u = ((times.array() - c.t0) / (c.t1 - c.t0)).matrix().transpose();
  const Eigen::DenseIndex degree = std::min<Eigen::DenseIndex>(3, times.size() - 1);
  c.spline = Eigen::SplineFitting<CenterPath::Spline2>::Interpolate(p, degree, u);
  return c;
}

ConstraintFunction parse_constraint(const Node& n, Eigen::Index dim) {
  n.only({"family", "label", "a", "c", "Q", "b", "radius", "center", "terms"});
  const std::string fam = n.at("family").str();
  const std::string label = n.at("label").str();
  if (label.empty()) n.at("label").fail("label must be non-empty");
  if (fam == "linear") return ConstraintFunction::linear(label, n.at("a").vec(dim), n.num("c", 0.0));
  if (fam == "quadratic") {
    const Mat q = n.at("Q").mat(dim, dim);
    const Vec b = n.has("b") ? n.at("b").vec(dim) : Vec::Zero(dim);
    return ConstraintFunction::quadratic(label, symmetric_part(q), b, n.num("c", 0.0));
  }
  if (fam == "circle") {
    // r^2 - |x - c(t)|^2 <= 0: the disc is excluded
    if (dim != 2) n.fail("circle constraints need a 2-dimensional state");
    const double r = n.at("radius").num();
    if (r <= 0) n.at("radius").fail("radius must be positive");
    const CenterPath c = parse_center(n.at("center"));
    ConstraintFunction g;
    g.label = label;
    g.g = [c, r](const Vec& x, double t) { return r * r - (x - c.at(t).first).squaredNorm(); };
    g.grad = [c](const Vec& x, double t) -> Vec { return -2.0 * (x - c.at(t).first); };
    g.hess = [](const Vec&, double) -> Mat { return -2.0 * Mat::Identity(2, 2); };
    g.d_dt = [c](const Vec& x, double t) {
      const auto [ctr, vel] = c.at(t);
      return 2.0 * (x - ctr).dot(vel);
    };
    return g;
  }
  if (fam == "polynomial") {
    const Polynomial p = parse_polynomial(n.at("terms"), dim);
    ConstraintFunction g;
    g.label = label;
    g.g = [p](const Vec& x, double) { return p.value(x); };
    g.grad = [p](const Vec& x, double) { return p.gradient(x); };
    g.hess = [p](const Vec& x, double) { return p.hessian(x); };
    g.d_dt = [](const Vec&, double) { return 0.0; };
    return g;
  }
  unknown_builtin(n.at("family"), "constraint family", fam);
}

ConstraintSet parse_constraints(const Node& root, Eigen::Index dim) {
  ConstraintSet set;
  if (!root.has("constraints")) return set;
  const Node list = root.at("constraints");
  std::set<std::string> seen;
  for (size_t i = 0; i < list.size(); ++i) {
    set.constraints.push_back(parse_constraint(list.at(i), dim));
    if (!seen.insert(set.constraints.back().label).second) list.at(i).at("label").fail("duplicate label");
  }
  return set;
}

void parse_sim(const Node& n, Scenario& s) {
  n.only({"t_end", "dt", "event_tol", "sample_stride", "activation_tol", "release_tol", "contact_speed_tol"});
  s.sim.t_end = n.num("t_end", s.sim.t_end);
  s.sim.dt_max = n.num("dt", s.sim.dt_max);
  s.sim.event_tol = n.num("event_tol", s.sim.event_tol);
  s.sim.sample_stride = n.integer("sample_stride", s.sim.sample_stride);
  s.constraints.activation_tol = n.num("activation_tol", s.constraints.activation_tol);
  s.constraints.release_tol = n.num("release_tol", s.constraints.release_tol);
  s.collision.contact_speed_tol = n.num("contact_speed_tol", s.collision.contact_speed_tol);
  try {
    s.sim.validate();
    s.constraints.validate();
  } catch (const Error& e) {
    n.fail(e.what());
  }
}

void parse_analysis(const Node& n, Scenario& s) {
  n.only({"bounds", "empirical_rate", "equivalence", "paths"});
  AnalysisSpec& a = s.analysis;
  const bool geodesic = s.kind == ScenarioKind::Geodesic;
  if (n.has("bounds")) {
    const Node b = n.at("bounds");
    if (geodesic) b.fail("bounds need a flow or hamiltonian scenario");
    if (s.kind == ScenarioKind::Hamiltonian && !s.has_model) b.fail("bounds need a 'model' section");
    b.only({"stride"});
    a.bounds = true;
    a.bounds_stride = b.integer("stride", 1);
    if (a.bounds_stride < 1) b.at("stride").fail("must be >= 1");
  }
  if (n.has("empirical_rate")) {
    const Node r = n.at("empirical_rate");
    if (s.kind != ScenarioKind::Flow) r.fail("empirical_rate needs a flow scenario");
    r.only({"epsilon", "direction"});
    a.empirical_rate = true;
    a.rate_epsilon = r.num("epsilon", a.rate_epsilon);
    if (!(a.rate_epsilon > 0)) r.at("epsilon").fail("must be positive");
    if (r.has("direction")) a.rate_direction = r.at("direction").vec(s.dim());
  }
  if (n.has("equivalence")) {
    const Node e = n.at("equivalence");
    if (s.kind != ScenarioKind::Hamiltonian) e.fail("equivalence needs a hamiltonian scenario");
    e.only({"tol"});
    a.equivalence = true;
    a.equivalence_tol = e.num("tol", a.equivalence_tol);
  }
  if (n.has("paths")) {
    const Node p = n.at("paths");
    if (!geodesic) p.fail("paths need a geodesic scenario");
    p.only({"k", "speed", "fan_count"});
    a.k_paths = p.integer("k", 1);
    a.speed = p.num("speed", 1.0);
    a.fan_count = p.integer("fan_count", 0);
    if (a.k_paths < 1) p.at("k").fail("must be >= 1");
    if (!(a.speed > 0)) p.at("speed").fail("must be positive");
    if (a.fan_count < 0) p.at("fan_count").fail("must be >= 0");
  }
}

struct CheckRule {
  const char* type;
  std::vector<ScenarioKind> kinds;
  bool needs_label = false;
};

const std::vector<CheckRule>& check_rules() {
  using K = ScenarioKind;
  static const std::vector<CheckRule> rules = {
      {"max_constraint_residual", {K::Flow, K::Hamiltonian}, true},
      {"max_violation", {K::Flow, K::Hamiltonian}},
      {"bounds_range", {K::Flow, K::Hamiltonian}},
      {"rate_matches_bounds", {K::Flow}},
      {"min_events", {K::Flow}},
      {"equivalence", {K::Hamiltonian}},
      {"restitution_law", {K::Hamiltonian}},
      {"energy_conserved", {K::Hamiltonian}},
      {"min_collisions", {K::Hamiltonian}},
      {"minimal_path_count", {K::Geodesic}},
      {"strictly_ordered", {K::Geodesic}},
      {"shortest_length", {K::Geodesic}},
  };
  return rules;
}

void parse_checks(const Node& n, Scenario& s) {
  std::set<std::string> ids;
  for (size_t i = 0; i < n.size(); ++i) {
    const Node c = n.at(i);
    c.only({"id", "type", "label", "value", "tol", "count"});
    CheckSpec spec;
    spec.type = c.at("type").str();
    spec.id = c.str("id", spec.type);
    if (!ids.insert(spec.id).second) c.at("id").fail("duplicate check id");
    const auto& rules = check_rules();
    const auto rule = std::find_if(rules.begin(), rules.end(), [&](const CheckRule& r) { return spec.type == r.type; });
    if (rule == rules.end()) unknown_builtin(c.at("type"), "check type", spec.type);
    if (std::find(rule->kinds.begin(), rule->kinds.end(), s.kind) == rule->kinds.end())
      c.at("type").fail(spec.type + " does not apply to a " + to_string(s.kind) + " scenario");
    spec.label = c.str("label", "");
    if (rule->needs_label) {
      const auto& cs = s.constraints.constraints;
      if (std::none_of(cs.begin(), cs.end(), [&](const ConstraintFunction& g) { return g.label == spec.label; }))
        c.at("label").fail("no constraint labelled '" + spec.label + "'");
    }
    spec.value = c.num("value", 0.0);
    spec.tol = c.num("tol", 0.0);
    spec.count = c.integer("count", 0);
    if (spec.tol < 0) c.at("tol").fail("must be non-negative");
    if (spec.type == "bounds_range" && !s.analysis.bounds)
      c.fail("bounds_range needs analysis.bounds");
    if (spec.type == "rate_matches_bounds" && !s.analysis.empirical_rate)
      c.fail("rate_matches_bounds needs analysis.empirical_rate");
    if (spec.type == "equivalence" && !s.analysis.equivalence) c.fail("equivalence needs analysis.equivalence");
    s.checks.push_back(std::move(spec));
  }
}

void parse_flow(const Node& root, Scenario& s) {
  root.only({"schema_version", "name", "description", "kind", "seed", "metric", "field", "constraints", "initial",
             "sim", "analysis", "checks"});
  const Node init = root.at("initial");
  init.only({"x", "t"});
  s.x0 = StateVector(init.at("x").vec(), init.num("t", 0.0));
  if (s.x0.dim() < 1) init.at("x").fail("state must have at least one coordinate");
  const Eigen::Index n = s.x0.dim();
  s.metric = root.has("metric") ? parse_metric(root.at("metric"), n) : MetricField::identity(n);
  s.field = parse_field(root.at("field"), n);
  s.constraints = parse_constraints(root, n);
  s.has_model = true;
}

void parse_hamiltonian(const Node& root, Scenario& s) {
  root.only({"schema_version", "name", "description", "kind", "seed", "hamiltonian", "constraints", "initial",
             "restitution", "form", "model", "sim", "analysis", "checks"});
  const Node init = root.at("initial");
  init.only({"q", "p", "t"});
  s.phase0.q = init.at("q").vec();
  const Eigen::Index n = s.phase0.q.size();
  if (n < 1) init.at("q").fail("need at least one coordinate");
  s.phase0.p = init.at("p").vec(n);
  s.phase0.t = init.num("t", 0.0);

  const Node h = root.at("hamiltonian");
  h.only({"family", "stiffness", "inverse_mass", "damping", "input_dir", "input", "impulse_weight"});
  const std::string fam = h.at("family").str();
  if (fam != "linear") unknown_builtin(h.at("family"), "hamiltonian family", fam);
  const Mat hinv = h.at("inverse_mass").mat(n, n);
  if (Eigen::LLT<Mat>(hinv).info() != Eigen::Success) h.at("inverse_mass").fail("must be positive definite");
  const Mat damping = h.has("damping") ? h.at("damping").mat(n, n) : Mat::Zero(n, n);
  const Vec dir = h.has("input_dir") ? h.at("input_dir").vec(n) : Vec::Zero(n);
  std::function<double(double)> u;
  if (h.has("input")) u = parse_input(h.at("input"));
  s.hamiltonian = Hamiltonian::linear(h.at("stiffness").mat(n, n), hinv, damping, dir, u);
  if (h.has("impulse_weight")) {
    const Mat w = h.at("impulse_weight").mat(n, n);
    if (Eigen::LLT<Mat>(w).info() != Eigen::Success) h.at("impulse_weight").fail("must be positive definite");
    s.hamiltonian.impulse_weight = w;
  }

  s.constraints = parse_constraints(root, n);
  s.restitution = root.num("restitution", 0.0);
  if (s.restitution < 0 || s.restitution > 1) root.at("restitution").fail("must lie in [0, 1]");
  const std::string form = root.str("form", "dirac");
  if (form == "dirac") {
    s.form = CollisionForm::Dirac;
  } else if (form == "step") {
    s.form = CollisionForm::Step;
  } else {
    root.at("form").fail("expected 'step' or 'dirac'");
  }

  // optional first-order model on z = (p, q) for contraction bounds
  if (root.has("model")) {
    const Node m = root.at("model");
    m.only({"metric", "field"});
    s.metric = m.has("metric") ? parse_metric(m.at("metric"), 2 * n) : MetricField::identity(2 * n);
    s.field = parse_field(m.at("field"), 2 * n);
    s.has_model = true;
  }
  Vec z(2 * n);
  z << s.phase0.p, s.phase0.q;
  s.x0 = StateVector(z, s.phase0.t);
}

void parse_geodesic(const Node& root, Scenario& s) {
  root.only({"schema_version", "name", "description", "kind", "seed", "world", "analysis", "checks"});
  const Node w = root.at("world");
  w.only({"obstacles", "source", "target"});
  s.world.source = w.at("source").vec(2);
  s.world.target = w.at("target").vec(2);
  const Node obs = w.at("obstacles");
  for (size_t i = 0; i < obs.size(); ++i) {
    const Node poly = obs.at(i);
    Polygon p;
    for (size_t k = 0; k < poly.size(); ++k) p.vertices.push_back(poly.at(k).vec(2));
    s.world.obstacles.push_back(std::move(p));
  }
  try {
    s.world.validate();
  } catch (const Error& e) {
    w.fail(e.what());
  }
  s.x0 = StateVector(s.world.source, 0.0);
}

Scenario parse_root(const json& doc) {
  const Node root(doc, "");
  if (!doc.is_object()) root.fail("scenario must be a JSON object");
  Scenario s;
  const Node ver = root.at("schema_version");
  s.schema_version = static_cast<int>(ver.integer());
  if (s.schema_version != kScenarioSchemaVersion)
    ver.fail("unsupported schema version " + std::to_string(s.schema_version));
  s.name = root.at("name").str();
  if (s.name.empty() || !std::all_of(s.name.begin(), s.name.end(), [](unsigned char ch) {
        return std::isalnum(ch) || ch == '_' || ch == '-';
      }))
    root.at("name").fail("name must be non-empty and use [A-Za-z0-9_-]");
  s.description = root.str("description", "");
  if (root.has("seed")) {
    const long seed = root.at("seed").integer();
    if (seed < 0) root.at("seed").fail("must be non-negative");
    s.seed = static_cast<std::uint64_t>(seed);
  }

  const std::string kind = root.at("kind").str();
  if (kind == "flow") {
    s.kind = ScenarioKind::Flow;
    parse_flow(root, s);
  } else if (kind == "hamiltonian") {
    s.kind = ScenarioKind::Hamiltonian;
    parse_hamiltonian(root, s);
  } else if (kind == "geodesic") {
    s.kind = ScenarioKind::Geodesic;
    parse_geodesic(root, s);
  } else {
    root.at("kind").fail("expected flow, hamiltonian or geodesic");
  }

  if (s.kind != ScenarioKind::Geodesic) {
    if (root.has("sim")) parse_sim(root.at("sim"), s);
    try {
      s.x0.validate();
      const StateVector at_start = s.kind == ScenarioKind::Flow ? s.x0 : StateVector(s.phase0.q, s.phase0.t);
      detect_active(s.constraints, at_start);
    } catch (const Error& e) {
      root.at("initial").fail(e.what());
    }
  }
  if (root.has("analysis")) parse_analysis(root.at("analysis"), s);
  if (root.has("checks")) parse_checks(root.at("checks"), s);
  return s;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // the parser message carries line and column
    throw Error(ErrorKind::SchemaError, origin + ": " + e.what());
  }
  try {
    Scenario s = parse_root(doc);
    s.source_path = origin;
    return s;
  } catch (const Error& e) {
    throw Error(e.kind(), origin + ": " + e.what());
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IOError, "cannot read scenario file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

std::string bundled_scenario_dir() { return CONTRAQ_SCENARIO_DIR; }

std::vector<std::string> list_scenarios(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> names;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec))
    if (entry.is_regular_file() && entry.path().extension() == ".json") names.push_back(entry.path().stem().string());
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace contraq
