#pragma once

// Systems shared by several test binaries.

#include "rpisynth/setgeom.hpp"

namespace fixtures {

using rpisynth::HPolytope;
using rpisynth::LtiSystem;
using rpisynth::Matrix;
using rpisynth::Vector;

/// Three-state plant with a pentagonal output constraint set.
inline LtiSystem illustrative_system() {
  Matrix A(3, 3), B(3, 2), C(2, 3), D(2, 2);
  A << -0.5844, -0.2378, -0.2015,  //
      -0.2378, 0.0368, 0.6915,     //
      -0.2015, 0.6915, -0.0162;
  B << 0, 0.8974,  //
      0, -1.8597,  //
      0.8903, 0.9479;
  C << 0, 2.0091, -0.1402,  //
      -0.9894, 0, 1.1447;
  D << -0.8078, 0,  //
      0.9676, 0.6751;
  return LtiSystem(A, B, C, D);
}

inline HPolytope illustrative_Y() {
  Matrix G(5, 2);
  G << -0.4489, 2.1848,  //
      -1.9691, 1.2596,     //
      1.0364, 0.8726,      //
      1.4018, -0.3397,     //
      -0.9868, -2.0995;
  return HPolytope{G, Vector::Ones(5)};
}

/// Partitioned plant: x1+ = A11 x1 + A12 x2 + B1 u, x2+ = A21 x1 + A22 x2,
/// y = C1 x1 + C2 x2.
struct Partitioned {
  Matrix A11, A12, A21, A22, B1, C1, C2;
};

inline Partitioned reduced_order_plant() {
  Partitioned p;
  p.A11.resize(2, 2);
  p.A11 << 1, 1, 0, 1;
  p.A12.resize(2, 4);
  p.A12 << -0.0524, -0.3299, 0.3061, 0.2773,  //
      -0.0048, -0.1020, 0.1244, -0.1044;
  p.A21.resize(4, 2);
  p.A21 << 0, 0.0204,  //
      0, 0.0344,       //
      0, -0.0339,      //
      0, 0.0134;
  p.A22.resize(4, 4);
  p.A22 << -0.0790, 0.2854, -0.0377, 0.6949,  //
      0.2854, -0.2284, 0.2752, 0.3536,         //
      -0.0377, 0.2752, 0.6021, -0.2824,        //
      0.6949, 0.3536, -0.2824, -0.0129;
  p.B1.resize(2, 1);
  p.B1 << 0.5, 1;
  p.C1.resize(2, 2);
  p.C1 << 0.9407, -0.3282,  //
      -0.6624, -0.7257;
  p.C2.resize(2, 4);
  p.C2 << 0.8716, 0.3587, 0.2407, 0.5116,  //
      -0.1863, 0.1624, 0.7122, 1.7494;
  return p;
}

/// A <- A22, B <- A21, C <- C2, D <- C1.
inline LtiSystem reduced_order_mapped() {
  const auto p = reduced_order_plant();
  return LtiSystem(p.A22, p.A21, p.C2, p.C1);
}

}  // namespace fixtures
