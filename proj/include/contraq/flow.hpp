#ifndef CONTRAQ_FLOW_HPP_
#define CONTRAQ_FLOW_HPP_

#include <string>
#include <vector>

#include "contraq/constraints.hpp"

namespace contraq {

struct SimConfig {
  double dt_max = 1e-3;
  double event_tol = 1e-12;  // time localization of constraint crossings
  int integrator_order = 4;  // only classical RK4 is provided
  double t_end = 1.0;
  int sample_stride = 1;     // emit every k-th grid step (events always emitted)

  void validate() const;
};

enum class EventKind { Activation, Release, Collision };
const char* to_string(EventKind kind);

struct Event {
  EventKind kind = EventKind::Activation;
  double time = 0.0;
  int constraint = -1;
  std::string label;
  StateVector pre_state;
  StateVector post_state;
  double impulse = 0.0;  // collision multiplier, zero for flow events
};

struct Sample {
  double t = 0.0;
  Vec x;          // state (positions q for phase trajectories)
  Vec p;          // momenta; empty for first-order flows
  ActiveSet active;
  Vec lambdas;    // aligned with `active`
  bool on_grid = false;
  std::string marker;  // event labels at this time, ';'-joined
};

struct Trajectory {
  std::vector<Sample> samples;
  std::vector<Event> events;

  size_t count(EventKind kind) const;
};

struct VelocitySolution {
  Vec xdot;
  MultiplierSolution multipliers;
};

/// xdot = M^-1 (f + sum_{j in A} lambda_j dg_j/dx), active set detected at the state.
VelocitySolution solve_velocity(const MetricField& metric, const CovectorField& f,
                                const ConstraintSet& constraints, const StateVector& state);

// Same with a caller-chosen contact set (no detection).
VelocitySolution constrained_velocity(const MetricField& metric, const CovectorField& f,
                                      const ConstraintSet& constraints, const ActiveSet& contact,
                                      const StateVector& state);

// One classical Runge-Kutta step of ydot = rhs(y, t).
template <typename Rhs>
Vec rk4_step(const Rhs& rhs, const Vec& y, double t, double h) {
  const Vec k1 = rhs(y, t);
  const Vec k2 = rhs(Vec(y + 0.5 * h * k1), t + 0.5 * h);
  const Vec k3 = rhs(Vec(y + 0.5 * h * k2), t + 0.5 * h);
  const Vec k4 = rhs(Vec(y + h * k3), t + h);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Gauss-Newton projection of x onto {g_j = 0, j in active} along the gradients.
// InfeasibleState when |g| <= tol is not reached.
Vec project_onto_constraints(const ConstraintSet& constraints, const ActiveSet& active,
                             const Vec& x, double t, double tol);

/// Event-driven integration of M xdot = f + sum lambda_j dg_j/dx.
///
/// RK4 between events on a fixed grid t0 + k*dt_max. A crossing g_j > eps_act
/// is localized by bisection to event_tol, the state is projected onto the
/// boundary and j joins the contact set; simultaneous crossings activate one
/// at a time in index order. Constraints whose multiplier turns positive are
/// released.
Trajectory simulate(const MetricField& metric, const CovectorField& f,
                    const ConstraintSet& constraints, const StateVector& x0,
                    const SimConfig& config);

}  // namespace contraq

#endif  // CONTRAQ_FLOW_HPP_
