#include "contraq/core.hpp"

#include <cmath>

namespace contraq {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonSPDMetric: return "NonSPDMetric";
    case ErrorKind::DerivativeUnavailable: return "DerivativeUnavailable";
    case ErrorKind::InfeasibleState: return "InfeasibleState";
    case ErrorKind::AcuteCorner: return "AcuteCorner";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::StepTooSmall: return "StepTooSmall";
    case ErrorKind::NotIncoming: return "NotIncoming";
    case ErrorKind::EventCountMismatch: return "EventCountMismatch";
    case ErrorKind::Unreachable: return "Unreachable";
    case ErrorKind::DivergedPair: return "DivergedPair";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::UnknownBuiltin: return "UnknownBuiltin";
    case ErrorKind::IOError: return "IOError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void StateVector::validate() const {
  if (x.size() < 1) throw Error(ErrorKind::InvalidArgument, "state dimension must be >= 1");
  if (!x.allFinite() || !std::isfinite(t))
    throw Error(ErrorKind::InvalidArgument, "state contains non-finite entries");
}

Mat Tensor3::slice_last(Eigen::Index k) const {
  Mat s(n_, n_);
  for (Eigen::Index i = 0; i < n_; ++i)
    for (Eigen::Index j = 0; j < n_; ++j) s(i, j) = (*this)(i, j, k);
  return s;
}

double Tensor3::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace contraq
