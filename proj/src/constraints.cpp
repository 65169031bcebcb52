#include "contraq/constraints.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>

namespace contraq {

void ConstraintSet::validate() const {
  std::set<std::string> labels;
  for (const auto& c : constraints) {
    if (!c.g) throw Error(ErrorKind::InvalidArgument, "constraint '" + c.label + "' has no g");
    if (!labels.insert(c.label).second)
      throw Error(ErrorKind::InvalidArgument, "duplicate constraint label '" + c.label + "'");
  }
  if (!(activation_tol > 0.0) || !(release_tol > 0.0))
    throw Error(ErrorKind::InvalidArgument, "tolerances must be positive");
}

double MultiplierSolution::lambda_of(int j) const {
  for (size_t a = 0; a < active.size(); ++a)
    if (active[a] == j) return lambdas[static_cast<Eigen::Index>(a)];
  return 0.0;
}

ActiveSet detect_active(const ConstraintSet& set, const StateVector& state) {
  ActiveSet active;
  for (size_t j = 0; j < set.size(); ++j) {
    const double g = set[j].value(state.x, state.t);
    if (g > set.activation_tol)
      throw Error(ErrorKind::InfeasibleState,
                  "constraint '" + set[j].label + "' violated: g = " + std::to_string(g));
    if (std::abs(g) <= set.activation_tol) active.push_back(static_cast<int>(j));
  }
  return active;
}

Mat gradient_rows(const ConstraintSet& set, const ActiveSet& active, const StateVector& state) {
  Mat rows(static_cast<Eigen::Index>(active.size()), state.dim());
  for (size_t a = 0; a < active.size(); ++a)
    rows.row(static_cast<Eigen::Index>(a)) =
        set[static_cast<size_t>(active[a])].gradient(state.x, state.t).transpose();
  return rows;
}

Mat gram_matrix(const ConstraintSet& set, const ActiveSet& active, const MetricField& metric,
                const StateVector& state) {
  const Mat normals = gradient_rows(set, active, state);
  const Mat m = metric.at(state.x, state.t);
  const Mat m_inv_nt = m.llt().solve(normals.transpose());
  Mat gram = symmetric_part(normals * m_inv_nt);
  for (Eigen::Index i = 0; i < gram.rows(); ++i)
    for (Eigen::Index k = i + 1; k < gram.cols(); ++k)
      if (gram(i, k) < -kAcuteTol)
        throw Error(ErrorKind::AcuteCorner,
                    "constraints '" + set[static_cast<size_t>(active[i])].label + "' and '" +
                        set[static_cast<size_t>(active[k])].label + "' form an acute corner");
  return gram;
}

Mat pseudo_inverse(const Mat& a, double rel_cutoff, int* rank) {
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? rel_cutoff * s(0) : 0.0;
  Vec s_inv = Vec::Zero(s.size());
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) {
      s_inv(i) = 1.0 / s(i);
      ++r;
    }
  }
  if (rank) *rank = r;
  return svd.matrixV() * s_inv.asDiagonal() * svd.matrixU().transpose();
}

ActiveSolve solve_active_system(const Mat& gram, const Vec& rhs, double scale) {
  ActiveSolve out;
  out.retained.resize(static_cast<size_t>(gram.rows()));
  std::iota(out.retained.begin(), out.retained.end(), 0);

  const size_t max_passes = out.retained.size() + 1;
  for (size_t pass = 0; pass < max_passes; ++pass) {
    const auto k = static_cast<Eigen::Index>(out.retained.size());
    Mat sub(k, k);
    Vec b(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      b(a) = rhs(out.retained[static_cast<size_t>(a)]);
      for (Eigen::Index c = 0; c < k; ++c)
        sub(a, c) = gram(out.retained[static_cast<size_t>(a)], out.retained[static_cast<size_t>(c)]);
    }
    int rank = 0;
    out.lambdas = k > 0 ? Vec(-scale * (pseudo_inverse(sub, kPinvCutoff, &rank) * b)) : Vec();
    out.gram = sub;
    out.rank = rank;
    out.used_pseudoinverse = rank < k;

    Eigen::Index worst = -1;
    for (Eigen::Index a = 0; a < k; ++a)
      if (out.lambdas(a) > 0.0 && (worst < 0 || out.lambdas(a) > out.lambdas(worst))) worst = a;
    if (worst < 0) return out;
    out.released.push_back(out.retained[static_cast<size_t>(worst)]);
    out.retained.erase(out.retained.begin() + worst);
  }
  throw Error(ErrorKind::NoConvergence, "multiplier release did not settle");
}

MultiplierSolution solve_multipliers(const ConstraintSet& set, const ActiveSet& active,
                                     const MetricField& metric, const CovectorField& f,
                                     const StateVector& state, double restitution) {
  if (restitution < 0.0 || restitution > 1.0)
    throw Error(ErrorKind::InvalidArgument, "restitution must lie in [0,1]");
  MultiplierSolution sol;
  if (active.empty()) {
    sol.lambdas = Vec();
    sol.gram = Mat();
    return sol;
  }
  const Mat gram = gram_matrix(set, active, metric, state);
  const Mat normals = gradient_rows(set, active, state);
  const Mat m = metric.at(state.x, state.t);
  const Vec m_inv_f = m.llt().solve(f.at(state.x, state.t));

  Vec b = normals * m_inv_f;
  for (size_t a = 0; a < active.size(); ++a)
    b(static_cast<Eigen::Index>(a)) +=
        set[static_cast<size_t>(active[a])].time_derivative(state.x, state.t);

  const ActiveSolve solve = solve_active_system(gram, b, 1.0 + restitution);
  for (int pos : solve.retained) sol.active.push_back(active[static_cast<size_t>(pos)]);
  for (int pos : solve.released) sol.released.push_back(active[static_cast<size_t>(pos)]);
  std::sort(sol.released.begin(), sol.released.end());
  sol.lambdas = solve.lambdas;
  sol.gram = solve.gram;
  sol.gram_rank = solve.rank;
  sol.used_pseudoinverse = solve.used_pseudoinverse;
  return sol;
}

TangentBasis tangent_basis_from_normals(const Mat& normal_rows, Eigen::Index n) {
  TangentBasis basis;
  if (normal_rows.rows() == 0) {
    basis.G_par = Mat::Identity(n, n);
    return basis;
  }
  Eigen::FullPivHouseholderQR<Mat> qr(normal_rows.transpose());
  qr.setThreshold(kPinvCutoff);
  const Eigen::Index rank = qr.rank();
  const Mat q = qr.matrixQ();
  Mat g = q.rightCols(n - rank);
  for (Eigen::Index c = 0; c < g.cols(); ++c) {
    const double scale = g.col(c).cwiseAbs().maxCoeff();
    for (Eigen::Index r = 0; r < n; ++r) {
      if (std::abs(g(r, c)) > 1e-12 * scale) {
        if (g(r, c) < 0.0) g.col(c) *= -1.0;
        break;
      }
    }
  }
  basis.G_par = g;
  return basis;
}

TangentBasis tangent_basis(const ConstraintSet& set, const ActiveSet& active,
                           const StateVector& state) {
  return tangent_basis_from_normals(gradient_rows(set, active, state), state.dim());
}

}  // namespace contraq
