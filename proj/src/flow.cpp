#include "contraq/flow.hpp"

#include <algorithm>
#include <cmath>

namespace contraq {

namespace {

constexpr double kMinBisection = 1e-14;
constexpr int kMaxProjectionIters = 50;

void insert_sorted(ActiveSet& set, int j) {
  set.insert(std::upper_bound(set.begin(), set.end(), j), j);
}

// Lowest-index constraint outside `contact` with g > tol, or -1.
int first_violated(const ConstraintSet& set, const ActiveSet& contact, const Vec& x, double t,
                   double tol) {
  for (size_t j = 0; j < set.size(); ++j) {
    if (std::binary_search(contact.begin(), contact.end(), static_cast<int>(j))) continue;
    if (set[j].value(x, t) > tol) return static_cast<int>(j);
  }
  return -1;
}

}  // namespace

void SimConfig::validate() const {
  if (!(dt_max > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt_max must be positive");
  if (!(event_tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "event_tol must be positive");
  if (integrator_order != 4) throw Error(ErrorKind::InvalidArgument, "only RK4 is supported");
  if (sample_stride < 1) throw Error(ErrorKind::InvalidArgument, "sample_stride must be >= 1");
  if (!std::isfinite(t_end)) throw Error(ErrorKind::InvalidArgument, "t_end must be finite");
}

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Activation: return "activation";
    case EventKind::Release: return "release";
    case EventKind::Collision: return "collision";
  }
  return "unknown";
}

size_t Trajectory::count(EventKind kind) const {
  return static_cast<size_t>(
      std::count_if(events.begin(), events.end(), [kind](const Event& e) { return e.kind == kind; }));
}

VelocitySolution constrained_velocity(const MetricField& metric, const CovectorField& f,
                                      const ConstraintSet& constraints, const ActiveSet& contact,
                                      const StateVector& state) {
  VelocitySolution out;
  const Mat m = metric.at(state.x, state.t);
  const Vec force = f.at(state.x, state.t);
  if (contact.empty()) {
    out.xdot = m.llt().solve(force);
    return out;
  }
  out.multipliers = solve_multipliers(constraints, contact, metric, f, state, 0.0);
  const Mat normals = gradient_rows(constraints, out.multipliers.active, state);
  Vec total = force;
  if (normals.rows() > 0) total += normals.transpose() * out.multipliers.lambdas;
  out.xdot = m.llt().solve(total);
  return out;
}

VelocitySolution solve_velocity(const MetricField& metric, const CovectorField& f,
                                const ConstraintSet& constraints, const StateVector& state) {
  state.validate();
  return constrained_velocity(metric, f, constraints, detect_active(constraints, state), state);
}

Vec project_onto_constraints(const ConstraintSet& constraints, const ActiveSet& active,
                             const Vec& x, double t, double tol) {
  if (active.empty()) return x;
  Vec y = x;
  const auto k = static_cast<Eigen::Index>(active.size());
  for (int iter = 0; iter <= kMaxProjectionIters; ++iter) {
    Vec g(k);
    for (Eigen::Index a = 0; a < k; ++a) g(a) = constraints[static_cast<size_t>(active[static_cast<size_t>(a)])].value(y, t);
    if (g.cwiseAbs().maxCoeff() <= tol) return y;
    if (iter == kMaxProjectionIters) break;
    const Mat n = gradient_rows(constraints, active, StateVector(y, t));
    const Mat nnt = n * n.transpose();
    y -= n.transpose() * (pseudo_inverse(nnt, kPinvCutoff) * g);
  }
  throw Error(ErrorKind::InfeasibleState, "projection onto the active constraints failed");
}

Trajectory simulate(const MetricField& metric, const CovectorField& f,
                    const ConstraintSet& constraints, const StateVector& x0,
                    const SimConfig& config) {
  config.validate();
  constraints.validate();
  x0.validate();

  const double eps = constraints.activation_tol;
  // Drift correction target, well inside the activation band.
  const double drift_tol = 1e-3 * eps;
  Trajectory traj;

  Vec x = x0.x;
  double t = x0.t;
  ActiveSet contact = solve_multipliers(constraints, detect_active(constraints, x0), metric, f, x0).active;

  auto rhs = [&](const Vec& y, double s) {
    return constrained_velocity(metric, f, constraints, contact, StateVector(y, s)).xdot;
  };

  auto make_sample = [&](bool on_grid) {
    Sample s;
    s.t = t;
    s.x = x;
    const StateVector st(x, t);
    const MultiplierSolution sol = contact.empty()
                                       ? MultiplierSolution{}
                                       : solve_multipliers(constraints, contact, metric, f, st);
    s.active = sol.active;
    s.lambdas = sol.lambdas;
    s.on_grid = on_grid;
    return s;
  };
  auto emit = [&](Sample s) {
    if (!traj.samples.empty() && traj.samples.back().t == s.t) {
      s.on_grid = s.on_grid || traj.samples.back().on_grid;
      std::string marker = traj.samples.back().marker;
      if (!s.marker.empty()) marker += (marker.empty() ? "" : ";") + s.marker;
      s.marker = marker;
      traj.samples.back() = std::move(s);
    } else {
      traj.samples.push_back(std::move(s));
    }
  };

  // Drops constraints whose multiplier turned positive, recording events.
  auto apply_releases = [&](std::string& marker) {
    if (contact.empty()) return;
    const StateVector st(x, t);
    const MultiplierSolution sol = solve_multipliers(constraints, contact, metric, f, st);
    for (int j : sol.released) {
      Event ev;
      ev.kind = EventKind::Release;
      ev.time = t;
      ev.constraint = j;
      ev.label = constraints[static_cast<size_t>(j)].label;
      ev.pre_state = st;
      ev.post_state = st;
      traj.events.push_back(ev);
      if (!marker.empty()) marker += ";";
      marker += "release:" + ev.label;
    }
    contact = sol.active;
  };

  emit(make_sample(true));

  long grid_index = 0;
  const double t0 = x0.t;
  while (t < config.t_end) {
    const double next_grid = t0 + static_cast<double>(grid_index + 1) * config.dt_max;
    const double target = std::min(next_grid, config.t_end);
    const double h = target - t;
    if (h <= 0.0) {
      ++grid_index;
      continue;
    }

    Vec x_new = rk4_step(rhs, x, t, h);
    if (first_violated(constraints, contact, x_new, target, eps) < 0) {
      x = project_onto_constraints(constraints, contact, x_new, target, drift_tol);
      t = target;
      const bool on_grid = (target == next_grid);
      if (on_grid) ++grid_index;
      std::string marker;
      apply_releases(marker);
      const bool stride_hit = on_grid && (grid_index % config.sample_stride == 0);
      if (stride_hit || t >= config.t_end || !marker.empty()) {
        Sample s = make_sample(on_grid);
        s.marker = marker;
        emit(std::move(s));
      }
      continue;
    }

    // Localize the earliest crossing within (t, t+h].
    double lo = 0.0, hi = h;
    while (hi - lo > config.event_tol) {
      if (hi - lo < kMinBisection) throw Error(ErrorKind::StepTooSmall, "event bisection underflow");
      const double mid = 0.5 * (lo + hi);
      const Vec x_mid = rk4_step(rhs, x, t, mid);
      if (first_violated(constraints, contact, x_mid, t + mid, eps) >= 0)
        hi = mid;
      else
        lo = mid;
    }
    Vec x_hit = rk4_step(rhs, x, t, hi);
    const double t_hit = (hi == h) ? target : t + hi;
    const StateVector pre(x_hit, t_hit);

    std::string marker;
    int j = first_violated(constraints, contact, x_hit, t_hit, eps);
    while (j >= 0) {
      insert_sorted(contact, j);
      x_hit = project_onto_constraints(constraints, contact, x_hit, t_hit, drift_tol);
      Event ev;
      ev.kind = EventKind::Activation;
      ev.time = t_hit;
      ev.constraint = j;
      ev.label = constraints[static_cast<size_t>(j)].label;
      ev.pre_state = pre;
      ev.post_state = StateVector(x_hit, t_hit);
      traj.events.push_back(ev);
      if (!marker.empty()) marker += ";";
      marker += "activation:" + ev.label;
      j = first_violated(constraints, contact, x_hit, t_hit, eps);
    }
    x = x_hit;
    t = t_hit;
    const bool on_grid = (t == next_grid);
    if (on_grid) ++grid_index;
    apply_releases(marker);
    Sample s = make_sample(on_grid);
    s.marker = marker;
    emit(std::move(s));
  }
  return traj;
}

}  // namespace contraq
