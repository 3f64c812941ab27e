#include "doctest.h"

#include "fixtures.hpp"
#include "oracles.hpp"
#include "properties.hpp"
#include "rpisynth/setgeom.hpp"

using namespace rpisynth;

namespace {

double signed_area(const std::vector<Vector>& poly) {
  double a = 0.0;
  for (size_t i = 0; i < poly.size(); ++i) {
    const Vector& p = poly[i];
    const Vector& q = poly[(i + 1) % poly.size()];
    a += p[0] * q[1] - p[1] * q[0];
  }
  return 0.5 * a;
}

}  // namespace

TEST_CASE("support of a box is |p'T| hw + p'T c") {
  Matrix T(2, 2);
  T << 1, 2, -1, 0.5;
  const Box b(Vector::Constant(2, 0.5), Vector::Constant(2, 1.0));
  Vector p(2);
  p << 1, -1;
  const Vector pt = T.transpose() * p;
  CHECK(support_box(T, p, b) == doctest::Approx(pt.dot(b.center) + pt.cwiseAbs().dot(b.halfwidth)));
  CHECK(support_box(T, p, b) == doctest::Approx(oracles::max_over_points(T, p, b.corners())));
}

TEST_CASE("support_hull agrees with the corner maximum") {
  const auto rep = properties::support_vs_vertices(60, 11);
  CHECK(rep.failures == 0);
  CHECK(rep.worst < 1e-8);
}

TEST_CASE("support_rows evaluates each row of M") {
  properties::Rng rng(3);
  const BoxHullSet W = properties::random_hull(rng, 3, 2);
  const Matrix T = properties::randn(3, 2, rng), M = properties::randn(4, 3, rng);
  const Vector h = support_rows(T, M, W);
  REQUIRE(h.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(h[i] == doctest::Approx(support_hull(T, M.row(i).transpose(), W)));
}

TEST_CASE("support_point attains the support value") {
  properties::Rng rng(5);
  for (int k = 0; k < 20; ++k) {
    const BoxHullSet W = properties::random_hull(rng, 3, 3);
    const Matrix T = properties::randn(2, 3, rng);
    const Vector p = properties::randn(2, 1, rng);
    const SupportPoint sp = support_point(T, p, W);
    CHECK(sp.value == doctest::Approx(support_hull(T, p, W)));
    CHECK(p.dot(T * sp.point) == doctest::Approx(sp.value));
    CHECK(contains_point(W, sp.point, 1e-7).inside);
  }
}

TEST_CASE("contains_point agrees with a separating-hyperplane search") {
  const auto rep = properties::membership_vs_separation(90, 12);
  CHECK(rep.failures == 0);
}

TEST_CASE("contains_point on a single box and a segment hull") {
  const BoxHullSet unit({Box(Vector::Zero(2), Vector::Ones(2))});
  CHECK(contains_point(unit, Vector::Ones(2)).inside);
  CHECK_FALSE(contains_point(unit, Vector::Constant(2, 1.001)).inside);
  const BoxHullSet seg({Box::singleton(Vector::Zero(2)), Box::singleton(Vector::Constant(2, 2.0))});
  CHECK(contains_point(seg, Vector::Ones(2)).inside);
  Vector off(2);
  off << 1.0, 1.01;
  CHECK_FALSE(contains_point(seg, off).inside);
}

TEST_CASE("sample stays in W") {
  properties::Rng rng(8);
  const BoxHullSet W = properties::random_hull(rng, 3, 2);
  for (int k = 0; k < 50; ++k) CHECK(contains_point(W, sample(W, rng), 1e-9).inside);
}

TEST_CASE("vertices of the pentagon each make two constraints active") {
  const HPolytope Y = fixtures::illustrative_Y();
  const auto V = vertices_hpoly(Y);
  CHECK(V.size() == 5);
  for (const Vector& v : V) {
    CHECK(Y.contains(v, 1e-9));
    const Vector slack = Y.g - Y.G * v;
    CHECK((slack.array().abs() < 1e-9).count() == 2);
  }
}

TEST_CASE("vertices of a box and rejection of unbounded sets") {
  const auto V = vertices_hpoly(HPolytope::box(Vector::Ones(3)));
  CHECK(V.size() == 8);
  HPolytope half;
  half.G = Matrix::Identity(2, 2);
  half.g = Vector::Ones(2);
  CHECK_THROWS_AS(vertices_hpoly(half), InputError);
}

TEST_CASE("hull_outline of a unit box is its four corners, counterclockwise") {
  const BoxHullSet W({Box(Vector::Zero(2), Vector::Ones(2))});
  const auto out = hull_outline(W);
  CHECK(out.size() == 4);
  CHECK(signed_area(out) == doctest::Approx(4.0));
}

TEST_CASE("hull_outline keeps only corners and covers every corner") {
  properties::Rng rng(21);
  const BoxHullSet W = properties::random_hull(rng, 4, 2, 0.05);
  const auto out = hull_outline(W);
  CHECK(signed_area(out) > 0.0);
  const auto corners = W.all_corners();
  for (const Vector& v : out) {
    bool is_corner = false;
    for (const Vector& c : corners) is_corner = is_corner || (c - v).norm() < 1e-12;
    CHECK(is_corner);
  }
  // every corner on the inner side of every edge
  for (size_t i = 0; i < out.size(); ++i) {
    const Vector& a = out[i];
    const Vector& b = out[(i + 1) % out.size()];
    for (const Vector& c : corners)
      CHECK((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]) >= -1e-12);
  }
}

TEST_CASE("matrix_power_inf_norm matches extended precision") {
  const Matrix A = fixtures::illustrative_system().A;
  for (int s : {0, 1, 2, 10, 59, 60, 120}) {
    const double want = oracles::power_inf_norm_ld(A, s);
    CHECK(matrix_power_inf_norm(A, s) == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("simulate with W = {0} from the origin stays at the origin") {
  const LtiSystem sys = fixtures::illustrative_system();
  Rng rng(1);
  const auto traj = simulate(sys, BoxHullSet::origin(2), Vector::Zero(3), 50, rng);
  CHECK(traj.size() == 50);
  for (const auto& pt : traj) {
    CHECK(pt.x.norm() == 0.0);
    CHECK(pt.y.norm() == 0.0);
  }
}

TEST_CASE("simulate follows the state recursion") {
  const LtiSystem sys = fixtures::illustrative_system();
  Rng rng(2);
  const BoxHullSet W({Box(Vector::Zero(2), Vector::Constant(2, 0.1))});
  const auto traj = simulate(sys, W, Vector::Ones(3), 20, rng);
  for (size_t t = 0; t + 1 < traj.size(); ++t) {
    CHECK((traj[t + 1].x - (sys.A * traj[t].x + sys.B * traj[t].w)).norm() < 1e-14);
    CHECK((traj[t].y - (sys.C * traj[t].x + sys.D * traj[t].w)).norm() < 1e-14);
  }
}

TEST_CASE("scaled and inflated hulls") {
  const BoxHullSet W({Box(Vector::Ones(2), Vector::Constant(2, 0.5))});
  CHECK(W.scaled(2.0)[0].center.isApprox(Vector::Constant(2, 2.0)));
  CHECK(W.scaled(2.0)[0].halfwidth.isApprox(Vector::Ones(2)));
  CHECK(W.inflated(2.0)[0].center.isApprox(Vector::Ones(2)));
  CHECK(W.inflated(2.0)[0].halfwidth.isApprox(Vector::Ones(2)));
}
