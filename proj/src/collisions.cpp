#include "contraq/collisions.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace contraq {

namespace {

constexpr double kMinBisection = 1e-14;
constexpr double kAccelFdStep = 1e-6;

void insert_sorted(ActiveSet& set, int j) {
  set.insert(std::upper_bound(set.begin(), set.end(), j), j);
}

int first_violated(const ConstraintSet& set, const ActiveSet& contact, const Vec& q, double t,
                   double tol) {
  for (size_t j = 0; j < set.size(); ++j) {
    if (std::binary_search(contact.begin(), contact.end(), static_cast<int>(j))) continue;
    if (set[j].value(q, t) > tol) return static_cast<int>(j);
  }
  return -1;
}

// Integrates z = [q; p; w] where w is the step-form velocity offset (always
// zero in the Dirac form).
class PhaseSystem {
 public:
  PhaseSystem(const Hamiltonian& ham, const ConstraintSet& cs, CollisionForm form, Eigen::Index n)
      : ham_(ham), cs_(cs), form_(form), n_(n) {}

  ActiveSet contact;

  Vec q(const Vec& z) const { return z.segment(0, n_); }
  Vec p(const Vec& z) const { return z.segment(n_, n_); }
  Vec w(const Vec& z) const { return z.segment(2 * n_, n_); }

  Vec velocity(const Vec& z) const { return ham_.inverse_mass(q(z)) * p(z) + w(z); }

  double gdot(int j, const Vec& z, double t) const {
    const auto& g = cs_[static_cast<size_t>(j)];
    const Vec qz = q(z);
    return g.gradient(qz, t).dot(velocity(z)) + g.time_derivative(qz, t);
  }

  Vec free_rates(const Vec& z, double t) const {
    const Vec qz = q(z), pz = p(z);
    const Vec v = velocity(z);
    Vec force = -ham_.dh_dq(qz, pz, t);
    if (ham_.generalized_force) force += ham_.generalized_force(qz, v, t);
    Vec dz = Vec::Zero(3 * n_);
    dz.segment(0, n_) = v;
    dz.segment(n_, n_) = force;
    return dz;
  }

  // Contact multipliers that keep gdot = 0 for the contact set.
  ActiveSolve contact_solve(const Vec& z, double t, const ActiveSet& set) const {
    const Vec dz0 = free_rates(z, t);
    const auto k = static_cast<Eigen::Index>(set.size());
    Vec accel(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      const int j = set[static_cast<size_t>(a)];
      const double h = kAccelFdStep;
      accel(a) = (gdot(j, z + h * dz0, t + h) - gdot(j, z - h * dz0, t - h)) / (2.0 * h);
    }
    const Mat normals = gradient_rows(cs_, set, StateVector(q(z), t));
    const Mat gram = normals * ham_.inverse_mass(q(z)) * normals.transpose();
    return solve_active_system(symmetric_part(gram), accel, 1.0);
  }

  Vec rates(const Vec& z, double t) const {
    Vec dz = free_rates(z, t);
    if (contact.empty()) return dz;
    const ActiveSolve sol = contact_solve(z, t, contact);
    if (sol.retained.empty()) return dz;
    ActiveSet kept;
    for (int pos : sol.retained) kept.push_back(contact[static_cast<size_t>(pos)]);
    const Mat normals = gradient_rows(cs_, kept, StateVector(q(z), t));
    const Vec force = normals.transpose() * sol.lambdas;
    if (form_ == CollisionForm::Dirac)
      dz.segment(n_, n_) += force;
    else
      dz.segment(2 * n_, n_) += ham_.inverse_mass(q(z)) * force;
    return dz;
  }

  // Removes drift off the contact manifold at position and velocity level.
  void project(Vec& z, double t, double tol) const {
    if (contact.empty()) return;
    z.segment(0, n_) = project_onto_constraints(cs_, contact, q(z), t, tol);
    const Mat normals = gradient_rows(cs_, contact, StateVector(q(z), t));
    const Mat hinv = ham_.inverse_mass(q(z));
    Vec gd(static_cast<Eigen::Index>(contact.size()));
    for (size_t a = 0; a < contact.size(); ++a) gd(static_cast<Eigen::Index>(a)) = gdot(contact[a], z, t);
    const Mat gram = normals * hinv * normals.transpose();
    const Vec dp = -normals.transpose() * (pseudo_inverse(gram, kPinvCutoff) * gd);
    apply_momentum_change(z, dp);
  }

  // Adds a momentum-like change dp, realized per form.
  void apply_momentum_change(Vec& z, const Vec& dp) const {
    if (form_ == CollisionForm::Dirac)
      z.segment(n_, n_) += dp;
    else
      z.segment(2 * n_, n_) += ham_.inverse_mass(q(z)) * dp;
  }

  double kinetic(const Vec& z) const {
    const Vec v = velocity(z);
    return 0.5 * v.dot(ham_.inverse_mass(q(z)).llt().solve(v));
  }

  PhaseState phase(const Vec& z, double t) const {
    PhaseState s;
    s.q = q(z);
    s.p = p(z);
    s.t = t;
    s.offset = w(z);
    return s;
  }

 private:
  const Hamiltonian& ham_;
  const ConstraintSet& cs_;
  CollisionForm form_;
  Eigen::Index n_;
};

PhaseTrajectory simulate_phase(const Hamiltonian& ham, const ConstraintSet& constraints,
                               const PhaseState& x0, double restitution, const SimConfig& config,
                               const CollisionConfig& cc, CollisionForm form) {
  config.validate();
  constraints.validate();
  if (restitution < 0.0 || restitution > 1.0)
    throw Error(ErrorKind::InvalidArgument, "restitution must lie in [0,1]");
  const Eigen::Index n = x0.q.size();
  if (n < 1 || x0.p.size() != n)
    throw Error(ErrorKind::InvalidArgument, "phase state needs matching q and p");

  PhaseSystem sys(ham, constraints, form, n);
  const double eps = constraints.activation_tol;
  const double drift_tol = 1e-3 * eps;

  Vec z = Vec::Zero(3 * n);
  z.segment(0, n) = x0.q;
  z.segment(n, n) = x0.p;
  if (x0.offset.size() == n) {
    if (form == CollisionForm::Step)
      z.segment(2 * n, n) = x0.offset;
    else
      z.segment(n, n) += ham.inverse_mass(x0.q).llt().solve(x0.offset);
  }
  double t = x0.t;
  detect_active(constraints, StateVector(x0.q, t));  // feasibility check

  PhaseTrajectory out;
  out.form = form;
  Trajectory& traj = out.traj;

  auto rhs = [&](const Vec& y, double s) { return sys.rates(y, s); };

  auto emit = [&](bool on_grid, const std::string& marker) {
    Sample s;
    s.t = t;
    s.x = sys.q(z);
    s.p = sys.p(z);
    s.active = sys.contact;
    if (!sys.contact.empty()) {
      const ActiveSolve sol = sys.contact_solve(z, t, sys.contact);
      s.active.clear();
      for (int pos : sol.retained) s.active.push_back(sys.contact[static_cast<size_t>(pos)]);
      s.lambdas = sol.lambdas;
    }
    s.on_grid = on_grid;
    s.marker = marker;
    if (!traj.samples.empty() && traj.samples.back().t == s.t) {
      s.on_grid = s.on_grid || traj.samples.back().on_grid;
      const std::string& prev = traj.samples.back().marker;
      if (!prev.empty()) s.marker = prev + (s.marker.empty() ? "" : ";") + s.marker;
      traj.samples.back() = std::move(s);
    } else {
      traj.samples.push_back(std::move(s));
    }
  };

  auto apply_releases = [&](std::string& marker) {
    if (sys.contact.empty()) return;
    const ActiveSolve sol = sys.contact_solve(z, t, sys.contact);
    ActiveSet kept;
    for (int pos : sol.retained) kept.push_back(sys.contact[static_cast<size_t>(pos)]);
    for (int pos : sol.released) {
      const int j = sys.contact[static_cast<size_t>(pos)];
      Event ev;
      ev.kind = EventKind::Release;
      ev.time = t;
      ev.constraint = j;
      ev.label = constraints[static_cast<size_t>(j)].label;
      ev.pre_state = StateVector(sys.q(z), t);
      ev.post_state = ev.pre_state;
      traj.events.push_back(ev);
      if (!marker.empty()) marker += ";";
      marker += "release:" + ev.label;
    }
    std::sort(kept.begin(), kept.end());
    sys.contact = kept;
  };

  auto collide = [&](int j, std::string& marker) {
    const auto& g = constraints[static_cast<size_t>(j)];
    CollisionEvent ce;
    ce.time = t;
    ce.constraint = j;
    ce.label = g.label;
    ce.normal = g.gradient(sys.q(z), t);
    ce.gdot_pre = sys.gdot(j, z, t);
    ce.kinetic_pre = sys.kinetic(z);
    const StateVector pre(sys.q(z), t);

    const bool slow = std::abs(ce.gdot_pre) <= cc.contact_speed_tol;
    ce.restitution = slow ? 0.0 : restitution;
    if (ce.gdot_pre > 0.0) {
      ce.impulse = collision_multiplier(g, sys.phase(z, t), ham, ce.restitution);
      const Vec dv = ce.impulse * (ham.weight(sys.q(z)) * ce.normal);
      sys.apply_momentum_change(z, ham.inverse_mass(sys.q(z)).llt().solve(dv));
    }
    // Separating fast: no impulse and no contact.
    ce.persistent = ce.restitution == 0.0 && ce.gdot_pre >= -cc.contact_speed_tol;
    if (ce.persistent) {
      insert_sorted(sys.contact, j);
      z.segment(0, n) = project_onto_constraints(constraints, sys.contact, sys.q(z), t, drift_tol);
    }
    ce.gdot_post = sys.gdot(j, z, t);
    ce.kinetic_post = sys.kinetic(z);
    out.collisions.push_back(ce);

    Event ev;
    ev.kind = EventKind::Collision;
    ev.time = t;
    ev.constraint = j;
    ev.label = g.label;
    ev.pre_state = pre;
    ev.post_state = StateVector(sys.q(z), t);
    ev.impulse = ce.impulse;
    traj.events.push_back(ev);
    if (!marker.empty()) marker += ";";
    marker += "collision:" + g.label;
  };

  emit(true, "");
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

    const Vec z_new = rk4_step(rhs, z, t, h);
    if (first_violated(constraints, sys.contact, sys.q(z_new), target, eps) < 0) {
      z = z_new;
      t = target;
      sys.project(z, t, drift_tol);
      const bool on_grid = (target == next_grid);
      if (on_grid) ++grid_index;
      std::string marker;
      apply_releases(marker);
      const bool stride_hit = on_grid && (grid_index % config.sample_stride == 0);
      if (stride_hit || t >= config.t_end || !marker.empty()) emit(on_grid, marker);
      continue;
    }

    // Impacts are localized at the g = 0 crossing rather than the band edge;
    // re-entering from the band edge would feed energy into every bounce.
    std::vector<int> crossing;
    for (size_t j = 0; j < constraints.size(); ++j) {
      if (std::binary_search(sys.contact.begin(), sys.contact.end(), static_cast<int>(j))) continue;
      if (constraints[j].value(sys.q(z_new), target) > eps) crossing.push_back(static_cast<int>(j));
    }
    auto crossed = [&](const Vec& zz, double tt) {
      for (int j : crossing)
        if (constraints[static_cast<size_t>(j)].value(sys.q(zz), tt) > 0.0) return true;
      return false;
    };
    double lo = 0.0, hi = h;
    while (hi - lo > config.event_tol) {
      if (hi - lo < kMinBisection) throw Error(ErrorKind::StepTooSmall, "event bisection underflow");
      const double mid = 0.5 * (lo + hi);
      if (crossed(rk4_step(rhs, z, t, mid), t + mid))
        hi = mid;
      else
        lo = mid;
    }
    z = rk4_step(rhs, z, t, hi);
    t = (hi == h) ? target : t + hi;

    std::string marker;
    for (int j : crossing)
      if (constraints[static_cast<size_t>(j)].value(sys.q(z), t) > 0.0) collide(j, marker);
    sys.project(z, t, drift_tol);
    const bool on_grid = (t == next_grid);
    if (on_grid) ++grid_index;
    apply_releases(marker);
    emit(on_grid, marker);
  }
  return out;
}

}  // namespace

const char* to_string(CollisionForm form) {
  return form == CollisionForm::Step ? "step" : "dirac";
}

Mat Hamiltonian::inverse_mass(const Vec& q) const {
  if (!H) throw Error(ErrorKind::InvalidArgument, "Hamiltonian has no inverse-mass matrix");
  return H(q);
}

Vec Hamiltonian::potential_gradient(const Vec& q, double t) const {
  if (grad_V) return grad_V(q, t);
  if (!V) return Vec::Zero(q.size());
  return fd_gradient(V, q, t);
}

Vec Hamiltonian::dh_dq(const Vec& q, const Vec& p, double t) const {
  Vec d = potential_gradient(q, t);
  const Eigen::Index n = q.size();
  Tensor3 dh;
  if (dH_dq) {
    dh = dH_dq(q);
  } else {
    dh = Tensor3(n);
    for (Eigen::Index l = 0; l < n; ++l) {
      const double h = fd_step(q[l]);
      Vec qp = q, qm = q;
      qp[l] += h;
      qm[l] -= h;
      const Mat diff = (H(qp) - H(qm)) / (2.0 * h);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) dh(i, j, l) = diff(i, j);
    }
  }
  if (dh.max_abs() == 0.0) return d;
  for (Eigen::Index l = 0; l < n; ++l) d[l] += 0.5 * p.dot(dh.slice_last(l) * p);
  return d;
}

Mat Hamiltonian::weight(const Vec& q) const { return impulse_weight ? *impulse_weight : inverse_mass(q); }

double Hamiltonian::energy(const Vec& q, const Vec& p, double t) const {
  const double v = V ? V(q, t) : 0.0;
  return v + 0.5 * p.dot(inverse_mass(q) * p);
}

Hamiltonian Hamiltonian::linear(const Mat& stiffness, const Mat& inverse_mass, const Mat& damping,
                                const Vec& input_dir, std::function<double(double)> input) {
  Hamiltonian ham;
  const Mat k = symmetric_part(stiffness);
  ham.V = [k](const Vec& q, double) { return 0.5 * q.dot(k * q); };
  ham.grad_V = [k](const Vec& q, double) -> Vec { return k * q; };
  ham.H = [inverse_mass](const Vec&) -> Mat { return inverse_mass; };
  const Eigen::Index n = inverse_mass.rows();
  ham.dH_dq = [n](const Vec&) { return Tensor3(n); };
  ham.generalized_force = [damping, input_dir, input](const Vec&, const Vec& qdot, double t) -> Vec {
    Vec f = -damping * qdot;
    if (input) f -= input_dir * input(t);
    return f;
  };
  return ham;
}

Vec PhaseState::velocity(const Hamiltonian& ham) const {
  Vec v = ham.inverse_mass(q) * p;
  if (offset.size() == v.size()) v += offset;
  return v;
}

double collision_multiplier(const ConstraintFunction& g, const PhaseState& state,
                            const Hamiltonian& ham, double restitution) {
  if (restitution < 0.0 || restitution > 1.0)
    throw Error(ErrorKind::InvalidArgument, "restitution must lie in [0,1]");
  const Vec n = g.gradient(state.q, state.t);
  const double gdot = n.dot(state.velocity(ham)) + g.time_derivative(state.q, state.t);
  if (!(gdot > 0.0))
    throw Error(ErrorKind::NotIncoming, "constraint '" + g.label + "' is not approached");
  const double norm = n.dot(ham.weight(state.q) * n);
  if (!(norm > 0.0)) throw Error(ErrorKind::InvalidArgument, "degenerate constraint normal");
  return -(1.0 + restitution) * gdot / norm;
}

PhaseTrajectory simulate_step_form(const Hamiltonian& ham, const ConstraintSet& constraints,
                                   const PhaseState& x0, double restitution,
                                   const SimConfig& config, const CollisionConfig& cc) {
  return simulate_phase(ham, constraints, x0, restitution, config, cc, CollisionForm::Step);
}

PhaseTrajectory simulate_dirac_form(const Hamiltonian& ham, const ConstraintSet& constraints,
                                    const PhaseState& x0, double restitution,
                                    const SimConfig& config, const CollisionConfig& cc) {
  return simulate_phase(ham, constraints, x0, restitution, config, cc, CollisionForm::Dirac);
}

EquivalenceReport equivalence_check(const PhaseTrajectory& a, const PhaseTrajectory& b, double tol) {
  if (a.collisions.size() != b.collisions.size())
    throw Error(ErrorKind::EventCountMismatch,
                "collision counts differ: " + std::to_string(a.collisions.size()) + " vs " +
                    std::to_string(b.collisions.size()));
  std::map<double, const Sample*> grid_b;
  for (const auto& s : b.traj.samples)
    if (s.on_grid) grid_b[s.t] = &s;
  EquivalenceReport rep;
  for (const auto& s : a.traj.samples) {
    if (!s.on_grid) continue;
    auto it = grid_b.find(s.t);
    if (it == grid_b.end()) continue;
    const double d = (s.x - it->second->x).norm();
    ++rep.compared;
    if (d > rep.max_deviation) {
      rep.max_deviation = d;
      rep.at_time = s.t;
    }
  }
  rep.passed = rep.compared > 0 && rep.max_deviation <= tol;
  return rep;
}

}  // namespace contraq
