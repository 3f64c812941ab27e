#include "doctest.h"

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "properties.hpp"
#include "rpisynth/encoder.hpp"
#include "rpisynth/verifier.hpp"

using namespace rpisynth;

namespace {

// Smallest Q and r for the boxes already stored in x.
void fill_Qr(const SynthProblem& p, Vector& x) {
  const VariableLayout& L = p.layout;
  const BoxHullSet W = boxes_from_x(L, x);
  const Matrix I = Matrix::Identity(L.nw, L.nw);
  for (int t = 0; t < L.s; ++t)
    x.segment(L.x_Q(t), L.mY) = support_rows(I, p.gbar[static_cast<size_t>(t)] * p.sys.B, W);
  x.segment(L.x_r(), L.mY) = support_rows(I, p.Y.G * p.sys.D, W);
}

double worst_row(const RowBlock& b, const Vector& x) { return (b.M * x - b.rhs).maxCoeff(); }

}  // namespace

TEST_CASE("dimensions on the illustrative configuration") {
  const LtiSystem sys = fixtures::illustrative_system();
  const HPolytope Y = fixtures::illustrative_Y();
  const RpiParams par = select_params(sys, Y, 0.2, 1e-3);
  const SynthProblem p = assemble(sys, Y, {}, par, 4, 59, make_H("uniform:6", 2));
  const BlockCounts c = p.counts();
  const long N = 4, vY = 5, l = 59, nw = 2, ny = 2, nB = 6, mY = 5, nx = 3, s = par.s;
  CHECK(c.dim_x == 2 * N * nw + (s + 1) * mY);
  CHECK(c.dim_beta == vY * N * (l + 1));
  CHECK(c.dim_w == vY * (l + 1) * nw);
  CHECK(c.dim_wbar == vY * N * (l + 1) * nw);
  CHECK(c.dim_wbar == 2400);
  CHECK(c.dim_beta == 1200);
  CHECK(c.dim_z == nB + vY * ny);
  CHECK(c.c_rows == vY * ny);
  CHECK(c.bilinear_rows == vY * (l + 1) * nw);
  CHECK(c.d_rows == vY * 2 * N * (l + 1) * nw);
  CHECK(c.beta_nonneg == vY * N * (l + 1));
  CHECK(c.beta_sums == vY * (l + 1));
  CHECK(c.e_rows == vY * nB);
  CHECK(c.a_rows == N * (s + 1) * mY + mY + 2 * N * nx + 2 * nw);
}

TEST_CASE("output-inclusion rows hold exactly when the support inequality does") {
  const LtiSystem sys = fixtures::illustrative_system();
  const HPolytope Y = fixtures::illustrative_Y();
  const RpiParams par = select_params(sys, Y, 0.2, 1e-2);
  properties::Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const int N = 1 + trial % 3;
    const SynthProblem p = assemble(sys, Y, {}, par, N, 3, make_H("box", 2));
    const BoxHullSet W = properties::random_hull(rng, N, 2).scaled(std::pow(10.0, properties::unif(rng, -3, 0)));
    Vector x = Vector::Zero(p.layout.dim_x());
    boxes_into_x(p.layout, W, x);
    fill_Qr(p, x);
    const RowBlock inc = encode_output_inclusion(p.gbar, sys, Y, par, p.layout);
    const double margin = verify_output_inclusion(sys, Y, par, W).worst_margin();
    CHECK(worst_row(inc, x) == doctest::Approx(std::max(0.0, -margin)).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("gamma rows hold exactly when B W lies in the gamma cube") {
  const LtiSystem sys = fixtures::illustrative_system();
  properties::Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const int N = 1 + trial % 4;
    VariableLayout L;
    L.N = N;
    L.nw = 2;
    L.nx = 3;
    L.s = 1;
    L.mY = 1;
    const BoxHullSet W = properties::random_hull(rng, N, 2).scaled(0.2);
    Vector x = Vector::Zero(L.dim_x());
    boxes_into_x(L, W, x);
    const RowBlock g = encode_gamma_bound(sys, 0.5, L);
    CHECK(g.rows() == 2 * N * 3);
    const double margin = verify_gamma(sys, W, 0.5).worst_margin();
    CHECK(-worst_row(g, x) == doctest::Approx(margin).epsilon(1e-12));
  }
}

TEST_CASE("origin rows put the origin in the first box") {
  VariableLayout L;
  L.N = 2;
  L.nw = 2;
  L.s = 1;
  L.mY = 1;
  const RowBlock o = encode_origin(L);
  CHECK(o.rows() == 4);
  Vector x = Vector::Zero(L.dim_x());
  boxes_into_x(L, BoxHullSet({Box(Vector::Constant(2, 0.5), Vector::Ones(2)), Box(Vector::Constant(2, 5), Vector::Ones(2))}), x);
  CHECK(worst_row(o, x) <= 0.0);
  boxes_into_x(L, BoxHullSet({Box(Vector::Constant(2, 1.5), Vector::Ones(2)), Box(Vector::Zero(2), Vector::Ones(2))}), x);
  CHECK(worst_row(o, x) == doctest::Approx(0.5));
}

TEST_CASE("reach matrices") {
  const LtiSystem sys = fixtures::illustrative_system();
  const auto R = build_reach(sys, 4);
  REQUIRE(R.size() == 5);
  CHECK(R[3].isApprox(sys.C * sys.B));
  CHECK(R[0].isApprox(sys.C * sys.A * sys.A * sys.A * sys.B));
  CHECK(R[4] == sys.D);
  CHECK_THROWS_AS(build_reach(sys, 0), InputError);
}

TEST_CASE("normal presets") {
  const Matrix box = make_H("box", 3);
  CHECK(box.rows() == 6);
  CHECK(box.topRows(3) == Matrix::Identity(3, 3));
  CHECK(box.bottomRows(3) == -Matrix::Identity(3, 3));
  const Matrix u = make_H("uniform:6", 2);
  REQUIRE(u.rows() == 6);
  for (int i = 0; i < 6; ++i) {
    CHECK(u(i, 0) == doctest::Approx(std::cos(2 * std::numbers::pi * i / 6)));
    CHECK(u(i, 1) == doctest::Approx(std::sin(2 * std::numbers::pi * i / 6)));
  }
  CHECK_THROWS_AS(make_H("uniform:6", 3), InputError);
  CHECK_THROWS_AS(make_H("uniform:2", 2), InputError);
  CHECK_THROWS_AS(make_H("hexagon", 2), InputError);
}

TEST_CASE("duplicate vertices are merged") {
  std::vector<Vector> pts{Vector::Zero(2), Vector::Constant(2, 1e-9), Vector::Ones(2)};
  CHECK(dedup_points(pts).size() == 2);
}

TEST_CASE("boxes survive a round trip through x") {
  VariableLayout L;
  L.N = 3;
  L.nw = 2;
  L.s = 2;
  L.mY = 4;
  properties::Rng rng(9);
  const BoxHullSet W = properties::random_hull(rng, 3, 2);
  Vector x = Vector::Zero(L.dim_x());
  boxes_into_x(L, W, x);
  const BoxHullSet back = boxes_from_x(L, x);
  for (int j = 0; j < 3; ++j) {
    CHECK(back[j].center == W[j].center);
    CHECK(back[j].halfwidth == W[j].halfwidth);
  }
}
