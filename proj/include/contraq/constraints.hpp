#ifndef CONTRAQ_CONSTRAINTS_HPP_
#define CONTRAQ_CONSTRAINTS_HPP_

#include <vector>

#include "contraq/fields.hpp"

namespace contraq {

// Gram entries below this are treated as an acute corner.
inline constexpr double kAcuteTol = 1e-10;
// Singular values below kPinvCutoff * sigma_max count as zero.
inline constexpr double kPinvCutoff = 1e-10;

struct ConstraintSet {
  std::vector<ConstraintFunction> constraints;
  double activation_tol = 1e-9;
  double release_tol = 1e-9;

  ConstraintSet() = default;
  explicit ConstraintSet(std::vector<ConstraintFunction> c) : constraints(std::move(c)) {}

  size_t size() const { return constraints.size(); }
  bool empty() const { return constraints.empty(); }
  const ConstraintFunction& operator[](size_t j) const { return constraints[j]; }
  // Throws InvalidArgument on duplicate labels or non-positive tolerances.
  void validate() const;
};

// Sorted constraint indices (0-based) into a ConstraintSet.
using ActiveSet = std::vector<int>;

struct MultiplierSolution {
  ActiveSet active;    // retained after releases
  ActiveSet released;  // dropped because their multiplier turned positive
  Vec lambdas;         // aligned with `active`
  Mat gram;            // Gram matrix over `active`
  int gram_rank = 0;
  bool used_pseudoinverse = false;

  // Multiplier of constraint j, zero when j is not retained.
  double lambda_of(int j) const;
};

struct TangentBasis {
  Mat G_par;  // n x m, orthonormal columns
  Eigen::Index reduced_dim() const { return G_par.cols(); }
  Mat projector() const { return G_par * G_par.transpose(); }
};

/// {j : |g_j(x,t)| <= activation_tol}; InfeasibleState if any g_j > activation_tol.
ActiveSet detect_active(const ConstraintSet& set, const StateVector& state);

// Stacked gradients of the listed constraints, one row each.
Mat gradient_rows(const ConstraintSet& set, const ActiveSet& active, const StateVector& state);

/// G_jk = (dg_j/dx)^T M^-1 (dg_k/dx) over the active set. AcuteCorner when any
/// off-diagonal entry is below -1e-10.
Mat gram_matrix(const ConstraintSet& set, const ActiveSet& active, const MetricField& metric,
                const StateVector& state);

/// Moore-Penrose pseudoinverse by SVD with relative cutoff.
Mat pseudo_inverse(const Mat& a, double rel_cutoff, int* rank = nullptr);

// Solution of lambda = -scale * G^+ rhs with iterative release of positive
// components (largest first, lowest position on ties).
struct ActiveSolve {
  std::vector<int> retained;  // positions into the input system
  std::vector<int> released;
  Vec lambdas;                // aligned with `retained`
  Mat gram;                   // retained block
  int rank = 0;
  bool used_pseudoinverse = false;
};
ActiveSolve solve_active_system(const Mat& gram, const Vec& rhs, double scale);

/// Multipliers of the constrained flow M xdot = f + sum lambda_j dg_j/dx.
///
/// lambda = -(1+e) G^+ b with b_k = dg_k/dx^T M^-1 f + dg_k/dt. Components
/// with lambda_j > 0 are released and the system re-solved, at most |A| passes.
/// Restitution e = 0 is the persistent-contact case.
MultiplierSolution solve_multipliers(const ConstraintSet& set, const ActiveSet& active,
                                     const MetricField& metric, const CovectorField& f,
                                     const StateVector& state, double restitution = 0.0);

/// Orthonormal basis of the null space of the active gradient rows, via
/// rank-revealing Householder QR. Each column's first nonzero entry is positive.
TangentBasis tangent_basis(const ConstraintSet& set, const ActiveSet& active,
                           const StateVector& state);
TangentBasis tangent_basis_from_normals(const Mat& normal_rows, Eigen::Index n);

}  // namespace contraq

#endif  // CONTRAQ_CONSTRAINTS_HPP_
