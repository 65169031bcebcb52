#include "contraq/geometry.hpp"

namespace contraq {

Tensor3 christoffel(const MetricField& metric, const StateVector& state) {
  state.validate();
  const Eigen::Index n = state.dim();
  const Mat m = metric.at(state.x, state.t);
  const Tensor3 dm = metric.spatial_derivative(state.x, state.t);
  const Mat m_inv = m.llt().solve(Mat::Identity(n, n));

  Tensor3 gamma(n);
  if (dm.max_abs() == 0.0) return gamma;

  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      // first-kind symbol with lowered last index
      Vec lowered(n);
      for (Eigen::Index l = 0; l < n; ++l)
        lowered[l] = 0.5 * (dm(i, l, j) + dm(j, l, i) - dm(i, j, l));
      const Vec raised = m_inv * lowered;
      for (Eigen::Index k = 0; k < n; ++k) {
        gamma(i, j, k) = raised[k];
        gamma(j, i, k) = raised[k];
      }
    }
  }
  return gamma;
}

Mat contract_christoffel(const Tensor3& gamma, const Vec& a) {
  const Eigen::Index n = gamma.dim();
  Mat c = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < n; ++k) c(i, j) += gamma(i, j, k) * a[k];
  return c;
}

Mat covariant_derivative_vector(const CovectorField& field, const MetricField& metric,
                                const StateVector& state) {
  const Tensor3 gamma = christoffel(metric, state);
  const Mat jac = field.jacobian_at(state.x, state.t);
  if (gamma.max_abs() == 0.0) return jac;
  return jac - contract_christoffel(gamma, field.at(state.x, state.t));
}

Mat covariant_hessian_scalar(const ConstraintFunction& g, const MetricField& metric,
                             const StateVector& state) {
  const Tensor3 gamma = christoffel(metric, state);
  Mat h = symmetric_part(g.hessian(state.x, state.t));
  if (gamma.max_abs() == 0.0) return h;
  h -= contract_christoffel(gamma, g.gradient(state.x, state.t));
  return symmetric_part(h);
}

}  // namespace contraq
