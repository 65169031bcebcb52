#ifndef CONTRAQ_GEOMETRY_HPP_
#define CONTRAQ_GEOMETRY_HPP_

#include "contraq/fields.hpp"

namespace contraq {

/// Christoffel symbols of the metric, gamma(i,j,k) = gamma_ij^k.
///
/// gamma_ij^k = 1/2 sum_l (dM_il/dx_j + dM_jl/dx_i - dM_ij/dx_l) (M^-1)_kl,
/// with k the contracted (upper) index. Symmetric in (i,j).
Tensor3 christoffel(const MetricField& metric, const StateVector& state);

/// (grad_M f)_ij = df_i/dx_j - sum_k gamma_ij^k f_k.
Mat covariant_derivative_vector(const CovectorField& field, const MetricField& metric,
                                const StateVector& state);

/// Covariant Hessian of a scalar: d2g/dxi dxj - sum_k gamma_ij^k dg/dx_k.
Mat covariant_hessian_scalar(const ConstraintFunction& g, const MetricField& metric,
                             const StateVector& state);

// Contraction of gamma with a covector: C_ij = sum_k gamma_ij^k a_k.
Mat contract_christoffel(const Tensor3& gamma, const Vec& a);

}  // namespace contraq

#endif  // CONTRAQ_GEOMETRY_HPP_
