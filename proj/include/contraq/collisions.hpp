#ifndef CONTRAQ_COLLISIONS_HPP_
#define CONTRAQ_COLLISIONS_HPP_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "contraq/flow.hpp"

namespace contraq {

/// h = V(q,t) + 1/2 p^T H(q) p plus an optional non-conservative force.
///
/// `impulse_weight` W maps a collision multiplier to a velocity increment
/// lambda W n; when unset W = H(q), i.e. a momentum impulse lambda n.
struct Hamiltonian {
  ScalarFn V;
  VectorFn grad_V;
  std::function<Mat(const Vec&)> H;
  std::function<Tensor3(const Vec&)> dH_dq;
  std::function<Vec(const Vec& q, const Vec& qdot, double t)> generalized_force;
  std::optional<Mat> impulse_weight;

  Mat inverse_mass(const Vec& q) const;
  Vec potential_gradient(const Vec& q, double t) const;
  // dh/dq = dV/dq + 1/2 p^T dH/dq p
  Vec dh_dq(const Vec& q, const Vec& p, double t) const;
  Mat weight(const Vec& q) const;
  double energy(const Vec& q, const Vec& p, double t) const;

  /// V = 1/2 q^T K q, constant H, force -D qdot - b u(t).
  static Hamiltonian linear(const Mat& stiffness, const Mat& inverse_mass, const Mat& damping,
                            const Vec& input_dir, std::function<double(double)> input);
};

struct PhaseState {
  Vec q;
  Vec p;       // p-bar in the step form, p in the Dirac form
  double t = 0.0;
  Vec offset;  // accumulated step-form velocity increments; empty means zero

  Vec velocity(const Hamiltonian& ham) const;
};

enum class CollisionForm { Step, Dirac };
const char* to_string(CollisionForm form);

struct CollisionEvent {
  double time = 0.0;
  int constraint = -1;
  std::string label;
  double restitution = 0.0;  // effective value applied at this event
  double impulse = 0.0;      // lambda_j
  Vec normal;
  double gdot_pre = 0.0;
  double gdot_post = 0.0;
  double kinetic_pre = 0.0;  // 1/2 v^T H^-1 v with v the physical velocity
  double kinetic_post = 0.0;
  bool persistent = false;   // constraint kept in plastic contact afterwards
};

struct PhaseTrajectory {
  CollisionForm form = CollisionForm::Step;
  Trajectory traj;  // samples carry q in x and the form's momentum in p
  std::vector<CollisionEvent> collisions;
};

struct CollisionConfig {
  // Impacts slower than this are treated as plastic to avoid Zeno chatter.
  double contact_speed_tol = 1e-6;
};

/// lambda_j = -(1+e) gdot / (n^T W n), gdot = n^T v + dg/dt with v = H p + offset.
/// NotIncoming unless gdot > 0.
double collision_multiplier(const ConstraintFunction& g, const PhaseState& state,
                            const Hamiltonian& ham, double restitution);

/// Constrained Hamiltonian flow with the constraint term as a step velocity
/// increment: pbar' = -dh/dq, q' = dh/dpbar + sum lambda_j theta(g_j) dg_j/dq.
PhaseTrajectory simulate_step_form(const Hamiltonian& ham, const ConstraintSet& constraints,
                                   const PhaseState& x0, double restitution,
                                   const SimConfig& config, const CollisionConfig& cc = {});

/// Same system with the constraint term as a momentum impulse at each event:
/// p' = -dh/dq + sum lambda_j delta(g_j) gdot_j dg_j/dq, q' = dh/dp.
PhaseTrajectory simulate_dirac_form(const Hamiltonian& ham, const ConstraintSet& constraints,
                                    const PhaseState& x0, double restitution,
                                    const SimConfig& config, const CollisionConfig& cc = {});

struct EquivalenceReport {
  double max_deviation = 0.0;
  double at_time = 0.0;
  size_t compared = 0;
  bool passed = false;
};

/// Max position deviation over shared grid sample times.
/// EventCountMismatch when the collision counts differ.
EquivalenceReport equivalence_check(const PhaseTrajectory& a, const PhaseTrajectory& b, double tol);

}  // namespace contraq

#endif  // CONTRAQ_COLLISIONS_HPP_
