#include "doctest.h"

#include "fixtures.hpp"
#include "oracles.hpp"
#include "properties.hpp"
#include "rpisynth/verifier.hpp"

using namespace rpisynth;

TEST_CASE("parameter checks") {
  const LtiSystem sys = fixtures::illustrative_system();
  const HPolytope Y = fixtures::illustrative_Y();
  RpiParams p = select_params(sys, Y, 0.2, 1e-3);
  const Certificate ok = verify_params(sys, Y, p);
  CHECK(ok.pass());
  CHECK(ok.worst_margin() >= -1e-9);
  p.alpha *= 0.5;  // no longer contracts
  const Certificate bad = verify_params(sys, Y, p);
  CHECK_FALSE(bad.pass());
  REQUIRE(bad.find("ineq_contraction"));
  CHECK(bad.find("ineq_contraction")->margin < 0.0);
  CHECK_FALSE(bad.find("ineq_contraction")->pass);
}

TEST_CASE("output inclusion with W = {0} and with a blown-up W") {
  const LtiSystem sys = fixtures::illustrative_system();
  const HPolytope Y = fixtures::illustrative_Y();
  const RpiParams p = select_params(sys, Y, 0.2, 1e-3);
  CHECK(verify_output_inclusion(sys, Y, p, BoxHullSet::origin(2)).pass());
  const BoxHullSet W({Box(Vector::Zero(2), Vector::Constant(2, 0.01))});
  CHECK_FALSE(verify_output_inclusion(sys, Y, p, W.scaled(1e3)).pass());
}

TEST_CASE("gamma bound") {
  const LtiSystem sys = fixtures::illustrative_system();
  const Certificate c0 = verify_gamma(sys, BoxHullSet::origin(2), 0.2);
  CHECK(c0.pass());
  CHECK(c0.worst_margin() == doctest::Approx(0.2));

  LtiSystem id = sys;
  id.B = Matrix::Identity(3, 3);
  const BoxHullSet tight({Box(Vector::Zero(3), Vector::Constant(3, 0.3))});
  CHECK(verify_gamma(id, tight, 0.3).worst_margin() == doctest::Approx(0.0).scale(1.0));

  properties::Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const BoxHullSet W = properties::random_hull(rng, 3, 2);
    double worst = 0.0;
    for (const Vector& c : W.all_corners()) worst = std::max(worst, (sys.B * c).cwiseAbs().maxCoeff());
    CHECK(verify_gamma(sys, W, 1.0).worst_margin() == doctest::Approx(1.0 - worst).epsilon(1e-12));
  }
}

TEST_CASE("origin check") {
  const BoxHullSet in({Box(Vector::Constant(2, 0.5), Vector::Ones(2))});
  CHECK(verify_origin(in).pass());
  const BoxHullSet out({Box(Vector::Constant(2, 3.0), Vector::Ones(2)), Box(Vector::Constant(2, 2.0), Vector::Constant(2, 0.5))});
  const Certificate c = verify_origin(out);
  CHECK_FALSE(c.pass());
  // the second box needs 1.5 more in every direction
  CHECK(c.worst_margin() == doctest::Approx(-1.5));
}

TEST_CASE("distance with W = {0} is one per face of the unit box") {
  const LtiSystem sys = fixtures::illustrative_system();
  const HPolytope Y = HPolytope::box(Vector::Ones(2));
  const auto V = vertices_hpoly(Y);
  const Matrix H = make_H("box", 2);
  const DistanceResult d = distance_dY(sys, V, BoxHullSet::origin(2), 7, H);
  CHECK(d.objective == doctest::Approx(4.0));
  for (int r = 0; r < 4; ++r) CHECK(d.epsilon[r] == doctest::Approx(1.0));
}

TEST_CASE("distance is zero when every vertex is reachable") {
  const LtiSystem sys = fixtures::illustrative_system();
  const auto V = vertices_hpoly(fixtures::illustrative_Y());
  const BoxHullSet big({Box(Vector::Zero(2), Vector::Constant(2, 100.0))});
  CHECK(distance_dY(sys, V, big, 3, make_H("uniform:6", 2)).objective == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("distance agrees with a grid over the synthesizer weights") {
  const auto rep = properties::distance_vs_grid(6, 41, 10);
  CHECK_MESSAGE(rep.failures == 0, rep.note);
}

TEST_CASE("distance never grows when the boxes grow") {
  const LtiSystem sys = fixtures::illustrative_system();
  const auto V = vertices_hpoly(fixtures::illustrative_Y());
  const Matrix H = make_H("uniform:6", 2);
  properties::Rng rng(17);
  for (int k = 0; k < 15; ++k) {
    const BoxHullSet W = properties::random_hull(rng, 2, 2).scaled(0.3);
    const double a = distance_dY(sys, V, W, 5, H).objective;
    const double b = distance_dY(sys, V, W.inflated(1.0 + properties::unif(rng, 0.0, 1.0)), 5, H).objective;
    CHECK(b <= a + 1e-9);
  }
}

TEST_CASE("coverage accepts the optimal epsilon and rejects half of it") {
  const LtiSystem sys = fixtures::illustrative_system();
  const auto V = vertices_hpoly(HPolytope::box(Vector::Ones(2)));
  const Matrix H = make_H("box", 2);
  const DistanceResult d = distance_dY(sys, V, BoxHullSet::origin(2), 4, H);
  CHECK(verify_coverage(sys, V, BoxHullSet::origin(2), 4, H, d.epsilon).pass());
  const Certificate half = verify_coverage(sys, V, BoxHullSet::origin(2), 4, H, 0.5 * d.epsilon);
  CHECK_FALSE(half.pass());
  CHECK(half.worst_margin() == doctest::Approx(-0.5));
}

TEST_CASE("coverage of Y = {0}") {
  const LtiSystem sys = fixtures::illustrative_system();
  const Matrix H = make_H("box", 2);
  CHECK(verify_coverage(sys, {Vector::Zero(2)}, BoxHullSet::origin(2), 3, H, Vector::Zero(4)).pass());
}

TEST_CASE("Monte Carlo with W = {0}") {
  const LtiSystem sys = fixtures::illustrative_system();
  Rng rng(1);
  const MonteCarloReport r = monte_carlo(sys, BoxHullSet::origin(2), fixtures::illustrative_Y(), 100, 3, rng);
  CHECK(r.violations == 0);
  CHECK(r.steps == 300);
  CHECK(r.max_excursion == 0.0);
}

TEST_CASE("Monte Carlo sees violations for a large W") {
  const LtiSystem sys = fixtures::illustrative_system();
  Rng rng(2);
  const BoxHullSet W({Box(Vector::Zero(2), Vector::Constant(2, 2.0))});
  const MonteCarloReport r = monte_carlo(sys, W, fixtures::illustrative_Y(), 200, 2, rng);
  CHECK(r.violations > 0);
  CHECK(r.max_excursion > 0.0);
}
