#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "contraq/constraints.hpp"

using namespace contraq;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

ConstraintFunction parabola() {
  Mat q = Mat::Zero(2, 2);
  q(0, 0) = 1.0;
  return ConstraintFunction::quadratic("parabola", q, v2(0, 1), 0.0);
}

ConstraintFunction circle(double a, double b) {
  return ConstraintFunction::quadratic("circle", -Mat::Identity(2, 2), v2(2 * a, 2 * b),
                                       1.0 - a * a - b * b);
}

Mat example3_metric() {
  Mat m(2, 2);
  m << 2, 1, 1, 2;
  return m;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::IOError;
}

}  // namespace

TEST_CASE("detect_active") {
  const ConstraintSet s({parabola()});
  CHECK(detect_active(s, StateVector(v2(1, -1), 0)) == ActiveSet{0});
  CHECK(detect_active(s, StateVector(v2(0, -5), 0)).empty());
  CHECK(kind_of([&] { detect_active(s, StateVector(v2(0, 1), 0)); }) == ErrorKind::InfeasibleState);

  Vec one(1);
  one << 1.0;
  const ConstraintSet box({ConstraintFunction::linear("upper", one, -2.0),
                           ConstraintFunction::linear("lower", -one, -2.0)});
  Vec x(1);
  x << 2.0;
  CHECK(detect_active(box, StateVector(x, 0)) == ActiveSet{0});
  x << 0.0;
  CHECK(detect_active(box, StateVector(x, 0)).empty());
}

TEST_CASE("gram_matrix") {
  const ConstraintSet s({parabola()});
  const Mat g = gram_matrix(s, {0}, MetricField::identity(2), StateVector(v2(1, -1), 0));
  CHECK(g(0, 0) == doctest::Approx(5.0).epsilon(1e-15));

  const ConstraintSet wall({ConstraintFunction::linear("wall", v2(1, 0), -2.0)});
  const Mat g3 = gram_matrix(wall, {0}, MetricField::constant(example3_metric()), StateVector(v2(2, 0), 0));
  CHECK(std::abs(g3(0, 0) - 2.0 / 3.0) < 1e-15);

  const ConstraintSet ortho({ConstraintFunction::linear("a", v2(1, 0), 0.0),
                             ConstraintFunction::linear("b", v2(0, 1), 0.0)});
  CHECK(gram_matrix(ortho, {0, 1}, MetricField::identity(2), StateVector(v2(0, 0), 0)) ==
        Mat::Identity(2, 2));

  const ConstraintSet acute({ConstraintFunction::linear("a", v2(1, 0), 0.0),
                             ConstraintFunction::linear("b", v2(-1, 1), 0.0)});
  CHECK(kind_of([&] {
          gram_matrix(acute, {0, 1}, MetricField::identity(2), StateVector(v2(0, 0), 0));
        }) == ErrorKind::AcuteCorner);
}

TEST_CASE("solve_multipliers examples") {
  SUBCASE("parabola flow") {
    const ConstraintSet s({parabola()});
    const auto f = CovectorField::linear(Mat::Identity(2, 2), v2(0, 1));
    for (double x1 : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
      const auto sol = solve_multipliers(s, {0}, MetricField::identity(2), f, StateVector(v2(x1, -x1 * x1), 0));
      REQUIRE(sol.active == ActiveSet{0});
      CHECK(std::abs(sol.lambdas[0] + (x1 * x1 + 1) / (4 * x1 * x1 + 1)) < 1e-12);
      CHECK_FALSE(sol.used_pseudoinverse);
      CHECK(sol.gram_rank == 1);
    }
  }
  SUBCASE("static circle with f = -x") {
    const ConstraintSet s({circle(2, 0)});
    const auto f = CovectorField::linear(-Mat::Identity(2, 2));
    const auto sol = solve_multipliers(s, {0}, MetricField::identity(2), f, StateVector(v2(3, 0), 0));
    REQUIRE(sol.active.size() == 1);
    CHECK(sol.lambdas[0] == doctest::Approx(-1.5).epsilon(1e-14));
  }
  SUBCASE("tangent field") {
    const ConstraintSet s({ConstraintFunction::linear("floor", v2(0, 1), 0.0)});
    const auto f = CovectorField::linear(Mat::Zero(2, 2), v2(1, 0));
    const auto sol = solve_multipliers(s, {0}, MetricField::identity(2), f, StateVector(v2(0, 0), 0));
    REQUIRE(sol.active.size() == 1);
    CHECK(sol.lambdas[0] == 0.0);
  }
  SUBCASE("outward field releases the constraint") {
    const ConstraintSet s({ConstraintFunction::linear("floor", v2(0, 1), 0.0)});
    const auto f = CovectorField::linear(Mat::Zero(2, 2), v2(0, -1));
    const auto sol = solve_multipliers(s, {0}, MetricField::identity(2), f, StateVector(v2(0, 0), 0));
    CHECK(sol.active.empty());
    CHECK(sol.released == ActiveSet{0});
    CHECK(sol.lambda_of(0) == 0.0);
  }
  SUBCASE("restitution scales the solve") {
    const ConstraintSet s({parabola()});
    const auto f = CovectorField::linear(Mat::Identity(2, 2), v2(0, 1));
    const auto sol = solve_multipliers(s, {0}, MetricField::identity(2), f, StateVector(v2(1, -1), 0), 1.0);
    CHECK(sol.lambdas[0] == doctest::Approx(-0.8).epsilon(1e-14));
  }
}

TEST_CASE("release ordering and released rates") {
  // Corner at the origin: one wall pushes, the other pulls away.
  const ConstraintSet s({ConstraintFunction::linear("x", v2(1, 0), 0.0),
                         ConstraintFunction::linear("y", v2(0, 1), 0.0)});
  const auto f = CovectorField::linear(Mat::Zero(2, 2), v2(1, -1));
  const StateVector st(v2(0, 0), 0);
  const auto sol = solve_multipliers(s, {0, 1}, MetricField::identity(2), f, st);
  CHECK(sol.active == ActiveSet{0});
  CHECK(sol.released == ActiveSet{1});
  CHECK(sol.lambdas[0] == doctest::Approx(-1.0));

  const ActiveSolve tie = solve_active_system(Mat::Identity(2, 2), v2(-1, -1), 1.0);
  CHECK(tie.released == std::vector<int>{0, 1});
}

TEST_CASE("release property on random obtuse corners") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 500; ++trial) {
    // Three half-planes through the origin in R^3 with pairwise non-acute normals.
    Mat normals(3, 3);
    for (int r = 0; r < 3; ++r) {
      normals.row(r) = Vec::Unit(3, r).transpose();
      normals.row(r) += 0.2 * std::abs(u(rng)) * Vec::Unit(3, (r + 1) % 3).transpose();
    }
    const Mat gram = normals * normals.transpose();
    if ((gram.array() < -1e-10).any()) continue;
    std::vector<ConstraintFunction> cs;
    for (int r = 0; r < 3; ++r)
      cs.push_back(ConstraintFunction::linear("c" + std::to_string(r), normals.row(r).transpose(), 0.0));
    const ConstraintSet set(cs);
    Vec fb(3);
    fb << u(rng), u(rng), u(rng);
    const auto f = CovectorField::linear(Mat::Zero(3, 3), fb);
    const auto sol = solve_multipliers(set, {0, 1, 2}, MetricField::identity(3), f, StateVector(Vec::Zero(3), 0));
    Vec force = fb;
    for (size_t k = 0; k < sol.active.size(); ++k) {
      CHECK(sol.lambdas[static_cast<Eigen::Index>(k)] <= 1e-12);
      force += sol.lambdas[static_cast<Eigen::Index>(k)] * normals.row(sol.active[k]).transpose();
    }
    for (int j : sol.released) CHECK(normals.row(j).dot(force) <= 1e-10);
    for (int j : sol.active) CHECK(std::abs(normals.row(j).dot(force)) <= 1e-10);
    ++checked;
  }
  CHECK(checked > 100);
}

TEST_CASE("duplicated constraint goes through the pseudoinverse") {
  const auto f = CovectorField::linear(Mat::Identity(2, 2), v2(0, 1));
  const StateVector st(v2(1, -1), 0);
  const ConstraintSet single({parabola()});
  ConstraintFunction twin = parabola();
  twin.label = "parabola-twin";
  const ConstraintSet doubled({parabola(), twin});

  const auto a = solve_multipliers(single, {0}, MetricField::identity(2), f, st);
  const auto b = solve_multipliers(doubled, {0, 1}, MetricField::identity(2), f, st);
  CHECK(b.used_pseudoinverse);
  CHECK(b.gram_rank == 1);
  const Vec n = parabola().gradient(st.x, st.t);
  const Vec fa = a.lambdas[0] * n;
  Vec fb = Vec::Zero(2);
  for (Eigen::Index k = 0; k < b.lambdas.size(); ++k) fb += b.lambdas[k] * n;
  CHECK((fa - fb).norm() < 1e-9);
}

TEST_CASE("pseudo_inverse") {
  Mat a(2, 2);
  a << 1, 1, 1, 1;
  int rank = -1;
  const Mat p = pseudo_inverse(a, kPinvCutoff, &rank);
  CHECK(rank == 1);
  CHECK((p - 0.25 * a).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((a * p * a - a).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("tangent_basis examples") {
  const ConstraintSet s({parabola()});
  const TangentBasis t = tangent_basis(s, {0}, StateVector(v2(1, -1), 0));
  REQUIRE(t.reduced_dim() == 1);
  CHECK(t.G_par(0, 0) == doctest::Approx(1 / std::sqrt(5.0)).epsilon(1e-14));
  CHECK(t.G_par(1, 0) == doctest::Approx(-2 / std::sqrt(5.0)).epsilon(1e-14));

  const TangentBasis none = tangent_basis(s, {}, StateVector(Vec::Zero(3), 0));
  CHECK(none.G_par == Mat::Identity(3, 3));

  const ConstraintSet c({circle(2, 0)});
  const TangentBasis tc = tangent_basis(c, {0}, StateVector(v2(3, 0), 0));
  REQUIRE(tc.reduced_dim() == 1);
  CHECK(std::abs(tc.G_par(0, 0)) < 1e-15);
  CHECK(tc.G_par(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("tangent basis properties") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const Eigen::Index n = 2 + trial % 4;
    const Eigen::Index k = 1 + trial % n;
    Mat rows(k, n);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < n; ++j) rows(i, j) = u(rng);
    if (trial % 7 == 0 && k >= 2) rows.row(k - 1) = 2.0 * rows.row(0);  // rank deficient
    const TangentBasis t = tangent_basis_from_normals(rows, n);
    const Eigen::Index m = t.reduced_dim();
    Eigen::FullPivLU<Mat> lu(rows);
    CHECK(m == n - lu.rank());
    if (m == 0) continue;
    CHECK((t.G_par.transpose() * t.G_par - Mat::Identity(m, m)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((rows * t.G_par).cwiseAbs().maxCoeff() <= 1e-10);
    for (Eigen::Index c = 0; c < m; ++c) {
      const double scale = t.G_par.col(c).cwiseAbs().maxCoeff();
      Eigen::Index first = 0;
      while (first < n && std::abs(t.G_par(first, c)) <= 1e-12 * scale) ++first;
      REQUIRE(first < n);
      CHECK(t.G_par(first, c) > 0.0);
    }
    // projector independent of constraint order
    Mat reversed = rows.colwise().reverse();
    const TangentBasis tr = tangent_basis_from_normals(reversed, n);
    CHECK((t.projector() - tr.projector()).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("constraint set validation") {
  ConstraintSet s({parabola(), parabola()});
  CHECK(kind_of([&] { s.validate(); }) == ErrorKind::InvalidArgument);
  ConstraintSet ok({parabola()});
  ok.activation_tol = 0.0;
  CHECK(kind_of([&] { ok.validate(); }) == ErrorKind::InvalidArgument);
}
