#include "contraq/fields.hpp"

#include <cmath>

namespace contraq {

namespace {

constexpr double kSymmetryTol = 1e-12;

[[noreturn]] void missing(const char* what) {
  throw Error(ErrorKind::DerivativeUnavailable, what);
}

}  // namespace

Mat fd_jacobian(const VectorFn& f, const Vec& x, double t) {
  const Eigen::Index n = x.size();
  Mat jac;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = fd_step(x[j]);
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    Vec col = (f(xp, t) - f(xm, t)) / (2.0 * h);
    if (j == 0) jac.resize(col.size(), n);
    jac.col(j) = col;
  }
  return jac;
}

Vec fd_gradient(const ScalarFn& f, const Vec& x, double t) {
  Vec g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = fd_step(x[j]);
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    g[j] = (f(xp, t) - f(xm, t)) / (2.0 * h);
  }
  return g;
}

Mat fd_hessian(const ScalarFn& f, const Vec& x, double t) {
  const Eigen::Index n = x.size();
  Mat hess(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double hi = fd_step2(x[i]);
      const double hj = fd_step2(x[j]);
      auto at = [&](double si, double sj) {
        Vec y = x;
        y[i] += si * hi;
        y[j] += sj * hj;
        return f(y, t);
      };
      const double v = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * hi * hj);
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  return hess;
}

MetricField MetricField::constant(const Mat& m) {
  MetricField field;
  const Eigen::Index n = m.rows();
  field.eval = [m](const Vec&, double) { return m; };
  field.d_dx = [n](const Vec&, double) { return Tensor3(n); };
  field.d_dt = [n](const Vec&, double) { return Mat(Mat::Zero(n, n)); };
  return field;
}

MetricField MetricField::identity(Eigen::Index n) { return constant(Mat::Identity(n, n)); }

Mat MetricField::at(const Vec& x, double t) const {
  Mat m = eval(x, t);
  if (m.rows() != x.size() || m.cols() != x.size())
    throw Error(ErrorKind::InvalidArgument, "metric dimension does not match state");
  const double scale = std::max(m.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff() / scale;
  if (!m.allFinite() || asym > kSymmetryTol)
    throw Error(ErrorKind::NonSPDMetric, "metric is not symmetric");
  m = symmetric_part(m);
  Eigen::SelfAdjointEigenSolver<Mat> eig(m, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success || eig.eigenvalues()(0) <= 0.0)
    throw Error(ErrorKind::NonSPDMetric, "metric is not positive definite");
  return m;
}

Tensor3 MetricField::spatial_derivative(const Vec& x, double t) const {
  if (d_dx) return d_dx(x, t);
  if (derivative_mode != DerivativeMode::FiniteDifference) missing("metric dM/dx not supplied");
  const Eigen::Index n = x.size();
  Tensor3 dm(n);
  for (Eigen::Index l = 0; l < n; ++l) {
    const double h = fd_step(x[l]);
    Vec xp = x, xm = x;
    xp[l] += h;
    xm[l] -= h;
    const Mat diff = (eval(xp, t) - eval(xm, t)) / (2.0 * h);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) dm(i, j, l) = 0.5 * (diff(i, j) + diff(j, i));
  }
  return dm;
}

Mat MetricField::time_derivative(const Vec& x, double t) const {
  if (d_dt) return d_dt(x, t);
  if (derivative_mode != DerivativeMode::FiniteDifference) missing("metric dM/dt not supplied");
  const double h = fd_step(t);
  return (eval(x, t + h) - eval(x, t - h)) / (2.0 * h);
}

CovectorField CovectorField::linear(const Mat& a, const Vec& b) {
  CovectorField f;
  f.eval = [a, b](const Vec& x, double) -> Vec { return a * x + b; };
  f.jacobian = [a](const Vec&, double) -> Mat { return a; };
  return f;
}

CovectorField CovectorField::linear(const Mat& a) { return linear(a, Vec::Zero(a.rows())); }

Mat CovectorField::jacobian_at(const Vec& x, double t) const {
  if (jacobian) return jacobian(x, t);
  if (derivative_mode != DerivativeMode::FiniteDifference) missing("field Jacobian not supplied");
  return fd_jacobian(eval, x, t);
}

Vec ConstraintFunction::gradient(const Vec& x, double t) const {
  if (grad) return grad(x, t);
  if (derivative_mode != DerivativeMode::FiniteDifference) missing("constraint gradient not supplied");
  return fd_gradient(g, x, t);
}

Mat ConstraintFunction::hessian(const Vec& x, double t) const {
  if (hess) return hess(x, t);
  if (derivative_mode != DerivativeMode::FiniteDifference) missing("constraint Hessian not supplied");
  if (grad) return symmetric_part(fd_jacobian(grad, x, t));
  return fd_hessian(g, x, t);
}

double ConstraintFunction::time_derivative(const Vec& x, double t) const {
  if (d_dt) return d_dt(x, t);
  if (derivative_mode != DerivativeMode::FiniteDifference) missing("constraint dg/dt not supplied");
  const double h = fd_step(t);
  return (g(x, t + h) - g(x, t - h)) / (2.0 * h);
}

ConstraintFunction ConstraintFunction::linear(std::string label, const Vec& a, double c) {
  ConstraintFunction f;
  const Eigen::Index n = a.size();
  f.label = std::move(label);
  f.g = [a, c](const Vec& x, double) { return a.dot(x) + c; };
  f.grad = [a](const Vec&, double) -> Vec { return a; };
  f.hess = [n](const Vec&, double) -> Mat { return Mat::Zero(n, n); };
  f.d_dt = [](const Vec&, double) { return 0.0; };
  return f;
}

ConstraintFunction ConstraintFunction::quadratic(std::string label, const Mat& q, const Vec& b,
                                                 double c) {
  ConstraintFunction f;
  const Mat qs = symmetric_part(q);
  f.label = std::move(label);
  f.g = [qs, b, c](const Vec& x, double) { return x.dot(qs * x) + b.dot(x) + c; };
  f.grad = [qs, b](const Vec& x, double) -> Vec { return 2.0 * qs * x + b; };
  f.hess = [qs](const Vec&, double) -> Mat { return 2.0 * qs; };
  f.d_dt = [](const Vec&, double) { return 0.0; };
  return f;
}

}  // namespace contraq
