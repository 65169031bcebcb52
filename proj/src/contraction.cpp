#include "contraq/contraction.hpp"

#include <cmath>
#include <map>

#include "contraq/geometry.hpp"

namespace contraq {

namespace {

constexpr double kMaxPairSeparation = 1e-1;

}  // namespace

Mat generalized_jacobian(const MetricField& metric, const CovectorField& f,
                         const ConstraintSet& constraints, const MultiplierSolution& multipliers,
                         const StateVector& state) {
  Mat a = covariant_derivative_vector(f, metric, state);
  a += 0.5 * metric.time_derivative(state.x, state.t);
  for (size_t k = 0; k < multipliers.active.size(); ++k) {
    const auto& g = constraints[static_cast<size_t>(multipliers.active[k])];
    a += multipliers.lambdas[static_cast<Eigen::Index>(k)] * covariant_hessian_scalar(g, metric, state);
  }
  return symmetric_part(a);
}

EigenRange generalized_extreme_eigenvalues(const Mat& a, const Mat& b) {
  if (a.rows() == 0) return {};
  Eigen::LLT<Mat> llt(symmetric_part(b));
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::NonSPDMetric, "reduced metric is not positive definite");
  const auto l = llt.matrixL();
  // C = L^-1 A L^-T
  Mat c = l.solve(symmetric_part(a));
  c = l.solve(c.transpose()).transpose();
  Eigen::SelfAdjointEigenSolver<Mat> eig(symmetric_part(c), Eigen::EigenvaluesOnly);
  const Vec& ev = eig.eigenvalues();
  return {ev(0), ev(ev.size() - 1)};
}

ContractionBounds contraction_bounds(const MetricField& metric, const CovectorField& f,
                                     const ConstraintSet& constraints, const StateVector& state) {
  state.validate();
  ContractionBounds out;
  const ActiveSet active = detect_active(constraints, state);
  out.multipliers = solve_multipliers(constraints, active, metric, f, state);
  out.basis = tangent_basis(constraints, out.multipliers.active, state);
  const Mat& g = out.basis.G_par;
  const Mat jac = generalized_jacobian(metric, f, constraints, out.multipliers, state);
  out.generalized_jacobian = g.transpose() * jac * g;
  const Mat reduced_metric = g.transpose() * metric.at(state.x, state.t) * g;
  const EigenRange range = generalized_extreme_eigenvalues(out.generalized_jacobian, reduced_metric);
  out.lambda_min = range.min;
  out.lambda_max = range.max;
  return out;
}

Vec activation_jump(const Mat& metric, const Vec& normal, const Vec& delta) {
  const Vec m_inv_n = metric.llt().solve(normal);
  const double denom = normal.dot(m_inv_n);
  if (!(denom > 0.0)) return delta;
  return delta - m_inv_n * (normal.dot(delta) / denom);
}

std::vector<DeltaSample> propagate_delta(const MetricField& metric, const CovectorField& f,
                                         const ConstraintSet& constraints, const Trajectory& traj,
                                         const Vec& delta0) {
  std::vector<DeltaSample> out;
  if (traj.samples.empty()) return out;
  const Eigen::Index n = delta0.size();

  Vec delta = delta0;
  size_t next_event = 0;
  auto apply_events_at = [&](const Sample& s) {
    while (next_event < traj.events.size() && traj.events[next_event].time <= s.t) {
      const Event& ev = traj.events[next_event++];
      if (ev.kind != EventKind::Activation) continue;
      const StateVector& post = ev.post_state;
      const Vec normal = constraints[static_cast<size_t>(ev.constraint)].gradient(post.x, post.t);
      delta = activation_jump(metric.at(post.x, post.t), normal, delta);
    }
  };

  apply_events_at(traj.samples.front());
  out.push_back({traj.samples.front().t, delta});

  for (size_t k = 0; k + 1 < traj.samples.size(); ++k) {
    const Sample& s = traj.samples[k];
    const Sample& s_next = traj.samples[k + 1];
    const ActiveSet contact = s.active;
    auto velocity = [&](const Vec& y, double t) {
      return constrained_velocity(metric, f, constraints, contact, StateVector(y, t)).xdot;
    };
    auto rhs = [&](const Vec& z, double t) -> Vec {
      const Vec y = z.head(n);
      const Vec d = z.tail(n);
      Vec dz(2 * n);
      dz.head(n) = velocity(y, t);
      const double dnorm = d.norm();
      if (dnorm == 0.0) {
        dz.tail(n).setZero();
      } else {
        const double h = 1e-6 * std::max(1.0, y.norm()) / dnorm;
        dz.tail(n) = (velocity(y + h * d, t) - velocity(y - h * d, t)) / (2.0 * h);
      }
      return dz;
    };
    Vec z(2 * n);
    z << s.x, delta;
    z = rk4_step(rhs, z, s.t, s_next.t - s.t);
    delta = z.tail(n);
    apply_events_at(s_next);
    out.push_back({s_next.t, delta});
  }
  return out;
}

std::vector<RatePoint> empirical_rate(const MetricField& metric, const CovectorField& f,
                                      const ConstraintSet& constraints, const StateVector& x0,
                                      double epsilon, const SimConfig& config,
                                      const Vec& direction) {
  if (!(epsilon > 0.0) || epsilon > 1e-4)
    throw Error(ErrorKind::InvalidArgument, "epsilon must lie in (0, 1e-4]");
  if (direction.size() != x0.dim() || direction.norm() == 0.0)
    throw Error(ErrorKind::InvalidArgument, "perturbation direction must be a nonzero n-vector");

  const StateVector x1(x0.x + epsilon * direction.normalized(), x0.t);
  const Trajectory ta = simulate(metric, f, constraints, x0, config);
  const Trajectory tb = simulate(metric, f, constraints, x1, config);

  std::map<double, const Sample*> grid_b;
  for (const auto& s : tb.samples)
    if (s.on_grid) grid_b[s.t] = &s;

  struct Pair {
    double t;
    const Sample* a;
    const Sample* b;
    double dist;
  };
  std::vector<Pair> pairs;
  for (const auto& s : ta.samples) {
    if (!s.on_grid) continue;
    auto it = grid_b.find(s.t);
    if (it == grid_b.end()) continue;
    const Vec diff = it->second->x - s.x;
    const Vec mid = 0.5 * (it->second->x + s.x);
    const double d = std::sqrt(diff.dot(metric.at(mid, s.t) * diff));
    if (d > kMaxPairSeparation)
      throw Error(ErrorKind::DivergedPair, "neighbouring trajectories separated beyond 0.1");
    pairs.push_back({s.t, &s, it->second, d});
  }

  auto has_event_in = [](const Trajectory& tr, double lo, double hi) {
    for (const auto& e : tr.events)
      if (e.time >= lo && e.time <= hi) return true;
    return false;
  };

  std::vector<RatePoint> out;
  for (size_t k = 1; k + 1 < pairs.size(); ++k) {
    const Pair& prev = pairs[k - 1];
    const Pair& next = pairs[k + 1];
    if (prev.dist <= 0.0 || next.dist <= 0.0) continue;
    RatePoint pt;
    pt.t = pairs[k].t;
    pt.distance = pairs[k].dist;
    pt.rate = (std::log(next.dist) - std::log(prev.dist)) / (next.t - prev.t);
    pt.near_event = has_event_in(ta, prev.t, next.t) || has_event_in(tb, prev.t, next.t);
    pt.bounds = contraction_bounds(metric, f, constraints, StateVector(pairs[k].a->x, pt.t));
    out.push_back(std::move(pt));
  }
  return out;
}

}  // namespace contraq
