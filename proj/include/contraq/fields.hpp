#ifndef CONTRAQ_FIELDS_HPP_
#define CONTRAQ_FIELDS_HPP_

#include <functional>
#include <string>

#include "contraq/core.hpp"

namespace contraq {

enum class DerivativeMode { Analytic, FiniteDifference };

using MatrixFn = std::function<Mat(const Vec&, double)>;
using VectorFn = std::function<Vec(const Vec&, double)>;
using ScalarFn = std::function<double(const Vec&, double)>;
using TensorFn = std::function<Tensor3(const Vec&, double)>;

// Central-difference step used for first derivatives of coordinate i.
inline double fd_step(double xi) { return 1e-5 * std::max(1.0, std::abs(xi)); }
// Step for nested (second) differences.
inline double fd_step2(double xi) { return 1e-4 * std::max(1.0, std::abs(xi)); }

/// Riemannian metric M(x,t) with optional analytic derivatives.
///
/// `d_dx` returns dM with dM(i,j,l) = dM_ij/dx_l. In Analytic mode a missing
/// derivative raises DerivativeUnavailable; in FiniteDifference mode missing
/// derivatives are taken by central differences of `eval`.
struct MetricField {
  MatrixFn eval;
  TensorFn d_dx;
  MatrixFn d_dt;
  DerivativeMode derivative_mode = DerivativeMode::Analytic;

  static MetricField constant(const Mat& m);
  static MetricField identity(Eigen::Index n);

  // M at (x,t), symmetrized and SPD-checked.
  Mat at(const Vec& x, double t) const;
  Tensor3 spatial_derivative(const Vec& x, double t) const;
  Mat time_derivative(const Vec& x, double t) const;
};

/// Covariant vector field f(x,t) and its Jacobian df_i/dx_j.
struct CovectorField {
  VectorFn eval;
  MatrixFn jacobian;
  DerivativeMode derivative_mode = DerivativeMode::Analytic;

  // f(x,t) = A x + b.
  static CovectorField linear(const Mat& a, const Vec& b);
  static CovectorField linear(const Mat& a);

  Vec at(const Vec& x, double t) const { return eval(x, t); }
  Mat jacobian_at(const Vec& x, double t) const;
};

/// Scalar inequality constraint g(x,t) <= 0.
struct ConstraintFunction {
  ScalarFn g;
  VectorFn grad;
  MatrixFn hess;
  ScalarFn d_dt;
  std::string label;
  DerivativeMode derivative_mode = DerivativeMode::Analytic;

  double value(const Vec& x, double t) const { return g(x, t); }
  Vec gradient(const Vec& x, double t) const;
  Mat hessian(const Vec& x, double t) const;
  double time_derivative(const Vec& x, double t) const;

  // g(x) = a.x + c  (time independent)
  static ConstraintFunction linear(std::string label, const Vec& a, double c);
  // g(x) = x^T Q x + b.x + c  (time independent; Q symmetric)
  static ConstraintFunction quadratic(std::string label, const Mat& q, const Vec& b, double c);
};

// Central-difference helpers shared by the fallback paths.
Mat fd_jacobian(const VectorFn& f, const Vec& x, double t);
Vec fd_gradient(const ScalarFn& f, const Vec& x, double t);
Mat fd_hessian(const ScalarFn& f, const Vec& x, double t);

}  // namespace contraq

#endif  // CONTRAQ_FIELDS_HPP_
