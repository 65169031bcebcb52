#ifndef CONTRAQ_CONTRACTION_HPP_
#define CONTRAQ_CONTRACTION_HPP_

#include <vector>

#include "contraq/flow.hpp"

namespace contraq {

struct ContractionBounds {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  Mat generalized_jacobian;  // m x m: G_par^T (.)_H G_par
  TangentBasis basis;
  MultiplierSolution multipliers;
};

/// Symmetric part of  grad_M f + 1/2 dM/dt + sum_{j in A} lambda_j grad_M^2 g_j.
///
/// The active set is the one retained in `multipliers`.
Mat generalized_jacobian(const MetricField& metric, const CovectorField& f,
                         const ConstraintSet& constraints, const MultiplierSolution& multipliers,
                         const StateVector& state);

struct EigenRange {
  double min = 0.0;
  double max = 0.0;
};

/// Extreme eigenvalues of A v = lambda B v for symmetric A and SPD B, by
/// whitening with the Cholesky factor of B. NonSPDMetric if B is not SPD.
EigenRange generalized_extreme_eigenvalues(const Mat& a, const Mat& b);

/// Contraction-rate bounds on the constraint tangent space at a state.
///
/// lambda_min / lambda_max bracket G^T (.)_H G against G^T M G where G is the
/// tangent basis of the retained active set. With no tangent directions left
/// (fully constrained) both bounds are zero.
ContractionBounds contraction_bounds(const MetricField& metric, const CovectorField& f,
                                     const ConstraintSet& constraints, const StateVector& state);

/// delta - M^-1 n (n^T delta) / (n^T M^-1 n): the M-orthogonal projection of a
/// virtual displacement onto the tangent plane of a newly active constraint.
Vec activation_jump(const Mat& metric, const Vec& normal, const Vec& delta);

struct DeltaSample {
  double t = 0.0;
  Vec delta;
};

/// Virtual displacement carried along a simulated trajectory.
///
/// Between samples (x, delta) are integrated jointly with RK4, where
/// delta' = [v(x + h delta) - v(x - h delta)] / 2h on the sample's contact set
/// and h = 1e-6 max(1,|x|) / |delta|. Activation events apply activation_jump.
/// Samples should be dense (stride 1) since each interval takes one RK4 step.
std::vector<DeltaSample> propagate_delta(const MetricField& metric, const CovectorField& f,
                                         const ConstraintSet& constraints, const Trajectory& traj,
                                         const Vec& delta0);

struct RatePoint {
  double t = 0.0;
  double rate = 0.0;      // d/dt log d_M
  double distance = 0.0;  // straight-line M-distance between the pair
  bool near_event = false;
  ContractionBounds bounds;  // at the reference trajectory
};

/// Measured contraction rate of two neighbouring simulations started at x0
/// and x0 + epsilon * direction/|direction|. Centered differences of log d_M on
/// the shared time grid. DivergedPair when the separation exceeds 0.1.
std::vector<RatePoint> empirical_rate(const MetricField& metric, const CovectorField& f,
                                      const ConstraintSet& constraints, const StateVector& x0,
                                      double epsilon, const SimConfig& config,
                                      const Vec& direction);

}  // namespace contraq

#endif  // CONTRAQ_CONTRACTION_HPP_
