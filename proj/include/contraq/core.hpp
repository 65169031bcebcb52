#ifndef CONTRAQ_CORE_HPP_
#define CONTRAQ_CORE_HPP_

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace contraq {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class ErrorKind {
  NonSPDMetric,
  DerivativeUnavailable,
  InfeasibleState,
  AcuteCorner,
  NoConvergence,
  StepTooSmall,
  NotIncoming,
  EventCountMismatch,
  Unreachable,
  DivergedPair,
  InvalidArgument,
  SchemaError,
  UnknownBuiltin,
  IOError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// State coordinates x together with time t.
struct StateVector {
  Vec x;
  double t = 0.0;

  StateVector() = default;
  StateVector(Vec x_, double t_) : x(std::move(x_)), t(t_) {}

  Eigen::Index dim() const { return x.size(); }
  // Throws InvalidArgument unless n >= 1 and every entry is finite.
  void validate() const;
};

// Dense rank-3 array indexed [i][j][k], stored row-major in k.
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(Eigen::Index n) : n_(n), data_(static_cast<size_t>(n * n * n), 0.0) {}

  Eigen::Index dim() const { return n_; }

  double& operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) {
    return data_[static_cast<size_t>((i * n_ + j) * n_ + k)];
  }
  double operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) const {
    return data_[static_cast<size_t>((i * n_ + j) * n_ + k)];
  }

  // Slice over the first two indices with the third fixed: S(i,j) = T(i,j,k).
  Mat slice_last(Eigen::Index k) const;
  double max_abs() const;

 private:
  Eigen::Index n_ = 0;
  std::vector<double> data_;
};

// Symmetric part (A + A^T)/2.
template <typename Derived>
Mat symmetric_part(const Eigen::MatrixBase<Derived>& a) {
  return 0.5 * (a + a.transpose());
}

}  // namespace contraq

#endif  // CONTRAQ_CORE_HPP_
