#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "contraq/flow.hpp"

using namespace contraq;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
Vec v1(double a) {
  Vec v(1);
  v << a;
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

double max_violation(const ConstraintSet& set, const Trajectory& tr) {
  double worst = -INFINITY;
  for (const auto& s : tr.samples)
    for (size_t j = 0; j < set.size(); ++j) worst = std::max(worst, set[j].value(s.x, s.t));
  return worst;
}

}  // namespace

TEST_CASE("solve_velocity examples") {
  SUBCASE("static circle equilibrium") {
    const ConstraintSet s({circle(2, 0)});
    const auto v = solve_velocity(MetricField::identity(2), CovectorField::linear(-Mat::Identity(2, 2)), s,
                                  StateVector(v2(3, 0), 0));
    CHECK(v.xdot.norm() < 1e-15);
    CHECK(v.multipliers.lambdas[0] == doctest::Approx(-1.5));
  }
  SUBCASE("parabola") {
    const ConstraintSet s({parabola()});
    const auto v = solve_velocity(MetricField::identity(2), CovectorField::linear(Mat::Identity(2, 2), v2(0, 1)),
                                  s, StateVector(v2(1, -1), 0));
    CHECK(v.xdot[0] == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(v.xdot[1] == doctest::Approx(-0.4).epsilon(1e-14));
    CHECK(std::abs(v2(2, 1).dot(v.xdot)) < 1e-15);
  }
  SUBCASE("interior point") {
    Mat m(2, 2);
    m << 2, 1, 1, 2;
    const ConstraintSet s({parabola()});
    const auto v = solve_velocity(MetricField::constant(m), CovectorField::linear(Mat::Zero(2, 2), v2(1, 0)), s,
                                  StateVector(v2(0, -3), 0));
    CHECK((v.xdot - m.inverse() * v2(1, 0)).norm() < 1e-15);
    CHECK(v.multipliers.active.empty());
  }
}

TEST_CASE("parabola trajectories stay on the parabola") {
  const ConstraintSet s({parabola()});
  SimConfig cfg;
  cfg.t_end = 2.0;
  const Trajectory tr = simulate(MetricField::identity(2), CovectorField::linear(Mat::Identity(2, 2), v2(0, 1)), s,
                                 StateVector(v2(1, -1), 0), cfg);
  REQUIRE(tr.samples.size() == 2001);
  double worst = 0.0;
  for (const auto& smp : tr.samples) {
    worst = std::max(worst, std::abs(smp.x[1] + smp.x[0] * smp.x[0]));
    CHECK(smp.active == ActiveSet{0});
  }
  CHECK(worst <= 1e-7);
  CHECK(tr.events.empty());
  CHECK(tr.samples.back().t == 2.0);
  CHECK(tr.samples.back().x[0] > 1.0);
}

TEST_CASE("unconstrained decay") {
  SimConfig cfg;
  const Trajectory tr = simulate(MetricField::identity(2), CovectorField::linear(-Mat::Identity(2, 2)),
                                 ConstraintSet{}, StateVector(v2(1, 1), 0), cfg);
  const Vec& x = tr.samples.back().x;
  CHECK(std::abs(x[0] - std::exp(-1.0)) < 1e-8);
  CHECK(std::abs(x[1] - std::exp(-1.0)) < 1e-8);
}

TEST_CASE("no constraints reduces to plain RK4 bit for bit") {
  Mat m(2, 2);
  m << 2, 1, 1, 2;
  Mat a(2, 2);
  a << -1, -2, 1, -1;
  const MetricField metric = MetricField::constant(m);
  const CovectorField f = CovectorField::linear(a);
  SimConfig cfg;
  cfg.dt_max = 0.01;
  cfg.t_end = 0.5;
  const Trajectory tr = simulate(metric, f, ConstraintSet{}, StateVector(v2(1, 0.5), 0), cfg);

  Vec x = v2(1, 0.5);
  double t = 0.0;
  auto rhs = [&](const Vec& y, double s) -> Vec { return metric.at(y, s).llt().solve(f.at(y, s)); };
  REQUIRE(tr.samples.size() == 51);
  for (size_t k = 1; k < tr.samples.size(); ++k) {
    const double target = std::min(static_cast<double>(k) * cfg.dt_max, cfg.t_end);
    x = rk4_step(rhs, x, t, target - t);
    t = target;
    CHECK(tr.samples[k].t == t);
    CHECK(tr.samples[k].x == x);
  }
}

TEST_CASE("activation on a wall and first-order contact") {
  // xdot = x in 1D, wall at x = 2: reaches the wall at ln 2 and stays.
  const ConstraintSet s({ConstraintFunction::linear("wall", v1(1.0), -2.0)});
  SimConfig cfg;
  cfg.t_end = 1.5;
  const Trajectory tr = simulate(MetricField::identity(1), CovectorField::linear(Mat::Identity(1, 1)), s,
                                 StateVector(v1(1.0), 0), cfg);
  REQUIRE(tr.events.size() == 1);
  const Event& ev = tr.events.front();
  CHECK(ev.kind == EventKind::Activation);
  CHECK(ev.label == "wall");
  CHECK(std::abs(ev.time - std::log(2.0)) < 1e-9);
  CHECK(std::abs(ev.post_state.x[0] - 2.0) <= s.activation_tol);
  bool marked = false;
  for (const auto& smp : tr.samples) {
    if (smp.t > ev.time) {
      CHECK(std::abs(smp.x[0] - 2.0) <= 1e-9);
      CHECK(smp.active == ActiveSet{0});
    }
    marked = marked || smp.marker == "activation:wall";
  }
  CHECK(marked);
  for (size_t k = 1; k < tr.samples.size(); ++k) CHECK(tr.samples[k].t > tr.samples[k - 1].t);
}

TEST_CASE("release when the multiplier changes sign") {
  const ConstraintSet s({ConstraintFunction::linear("ceiling", v2(0, 1), -1.0)});
  CovectorField f;
  f.eval = [](const Vec&, double t) -> Vec { return v2(0.1, std::cos(t)); };
  f.jacobian = [](const Vec&, double) -> Mat { return Mat::Zero(2, 2); };
  SimConfig cfg;
  cfg.t_end = 3.0;
  const Trajectory tr = simulate(MetricField::identity(2), f, s, StateVector(v2(0, 1), 0), cfg);
  REQUIRE(tr.count(EventKind::Release) == 1);
  REQUIRE(tr.count(EventKind::Activation) == 0);
  const Event& rel = tr.events.front();
  CHECK(std::abs(rel.time - M_PI / 2) <= cfg.dt_max);
  const double tr_end = tr.samples.back().t;
  CHECK(std::abs(tr.samples.back().x[1] - (1.0 + std::sin(tr_end) - 1.0)) < 1e-5);
  CHECK(max_violation(s, tr) <= 1e-7);
  CHECK(tr.samples.back().active.empty());
}

TEST_CASE("circle contact arc keeps persistent contact") {
  const ConstraintSet s({circle(2, 0)});
  const double th = 0.3;
  SimConfig cfg;
  cfg.t_end = 1.0;
  const Trajectory tr = simulate(MetricField::identity(2), CovectorField::linear(-Mat::Identity(2, 2)), s,
                                 StateVector(v2(2 + std::cos(th), std::sin(th)), 0), cfg);
  CHECK(max_violation(s, tr) <= 1e-7);
  CHECK(tr.events.empty());
  for (const auto& smp : tr.samples) {
    REQUIRE(smp.active == ActiveSet{0});
    const auto v = constrained_velocity(MetricField::identity(2), CovectorField::linear(-Mat::Identity(2, 2)), s,
                                        smp.active, StateVector(smp.x, smp.t));
    CHECK(std::abs(s[0].gradient(smp.x, smp.t).dot(v.xdot)) <= 1e-8);
  }
}

TEST_CASE("simultaneous crossings activate in index order") {
  // Heading into the corner x1 <= 1, x2 <= 1 along the diagonal.
  const ConstraintSet s({ConstraintFunction::linear("b", v2(0, 1), -1.0),
                         ConstraintFunction::linear("a", v2(1, 0), -1.0)});
  SimConfig cfg;
  cfg.t_end = 2.0;
  const auto f = CovectorField::linear(Mat::Zero(2, 2), v2(1, 1));
  const Trajectory tr = simulate(MetricField::identity(2), f, s, StateVector(v2(0, 0), 0), cfg);
  REQUIRE(tr.count(EventKind::Activation) == 2);
  CHECK(tr.events[0].constraint == 0);
  CHECK(tr.events[1].constraint == 1);
  CHECK(tr.events[0].time == tr.events[1].time);
  CHECK((tr.samples.back().x - v2(1, 1)).norm() < 1e-9);

  const Trajectory again = simulate(MetricField::identity(2), f, s, StateVector(v2(0, 0), 0), cfg);
  REQUIRE(again.events.size() == tr.events.size());
  for (size_t k = 0; k < tr.events.size(); ++k) {
    CHECK(again.events[k].time == tr.events[k].time);
    CHECK(again.events[k].post_state.x == tr.events[k].post_state.x);
  }
  REQUIRE(again.samples.size() == tr.samples.size());
  for (size_t k = 0; k < tr.samples.size(); ++k) CHECK(again.samples[k].x == tr.samples[k].x);
}

TEST_CASE("sample stride and errors") {
  SimConfig cfg;
  cfg.sample_stride = 10;
  cfg.t_end = 0.1;
  const Trajectory tr = simulate(MetricField::identity(1), CovectorField::linear(-Mat::Identity(1, 1)),
                                 ConstraintSet{}, StateVector(v1(1.0), 0), cfg);
  CHECK(tr.samples.size() == 11);

  const ConstraintSet s({ConstraintFunction::linear("wall", v1(1.0), -2.0)});
  CHECK_THROWS_AS(simulate(MetricField::identity(1), CovectorField::linear(Mat::Identity(1, 1)), s,
                           StateVector(v1(3.0), 0), SimConfig{}),
                  Error);
  SimConfig bad;
  bad.dt_max = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}
