#pragma once

// Polytope and box primitives, support-function calculus for convex hulls of
// boxes, vertex enumeration and simulation of the disturbed LTI plant.

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "rpisynth/types.hpp"

namespace rpisynth {

using Rng = std::mt19937_64;

/// {y : G y <= g}. Normals need not be normalized.
struct HPolytope {
  Matrix G;
  Vector g;

  int dim() const { return static_cast<int>(G.cols()); }
  int rows() const { return static_cast<int>(G.rows()); }
  bool contains(const Vector& y, double tol = 1e-9) const;

  /// [I; -I] y <= halfwidth
  static HPolytope box(const Vector& halfwidth);
};

/// center (+) {d : |d| <= halfwidth}
struct Box {
  Vector center;
  Vector halfwidth;

  Box() = default;
  Box(Vector c, Vector hw);

  int dim() const { return static_cast<int>(center.size()); }
  static Box singleton(const Vector& point);
  /// All 2^n corners, lowest bit of the index toggles the first coordinate.
  std::vector<Vector> corners() const;
};

/// ConvHull(boxes[0], ..., boxes[N-1]).
class BoxHullSet {
 public:
  BoxHullSet() = default;
  explicit BoxHullSet(std::vector<Box> boxes);

  int size() const { return static_cast<int>(boxes_.size()); }
  int dim() const { return boxes_.front().dim(); }
  const Box& operator[](int j) const { return boxes_[static_cast<size_t>(j)]; }
  const std::vector<Box>& boxes() const { return boxes_; }

  /// Single point at the origin of R^n.
  static BoxHullSet origin(int n);
  /// Same boxes, every halfwidth and center multiplied by `factor`.
  BoxHullSet scaled(double factor) const;
  /// Same centers, halfwidths multiplied by `factor`.
  BoxHullSet inflated(double factor) const;
  std::vector<Vector> all_corners() const;

 private:
  std::vector<Box> boxes_;
};

/// x+ = A x + B w,  y = C x + D w.
struct LtiSystem {
  Matrix A, B, C, D;

  LtiSystem() = default;
  LtiSystem(Matrix a, Matrix b, Matrix c, Matrix d);

  int nx() const { return static_cast<int>(A.rows()); }
  int nw() const { return static_cast<int>(B.cols()); }
  int ny() const { return static_cast<int>(C.rows()); }

  double spectral_radius() const;
};

double spectral_radius(const Matrix& A);

// ---- support functions ------------------------------------------------------

/// h_{T box}(p) = p'T c + |p'T| hw
double support_box(const Matrix& T, const Vector& p, const Box& box);
/// max_j support_box(T, p, box_j)
double support_hull(const Matrix& T, const Vector& p, const BoxHullSet& W);
/// Row-stacked support_hull over the rows of M.
Vector support_rows(const Matrix& T, const Matrix& M, const BoxHullSet& W);

/// Support of T*W in direction p together with a maximizing point of W.
struct SupportPoint {
  double value;
  Vector point;  // element of W (not of T W)
};
SupportPoint support_point(const Matrix& T, const Vector& p, const BoxHullSet& W);

// ---- membership, sampling ---------------------------------------------------

struct Membership {
  bool inside = false;
  /// Convex weights per box and the per-box points, reconstructing the query
  /// as sum_j weights[j] * points[j] when `inside`.
  Vector weights;
  std::vector<Vector> points;
};

/// Exact membership test for ConvHull of boxes via a single perspective LP.
Membership contains_point(const BoxHullSet& W, const Vector& w, double tol = 1e-9);

/// sum_j beta_j p_j with beta uniform on the simplex and p_j uniform in box j.
Vector sample(const BoxHullSet& W, Rng& rng);

// ---- vertex enumeration, outlines -------------------------------------------

/// Combinatorial vertex enumeration: every n-subset of rows, kept when the
/// solution satisfies all rows within `tol`, merged within 1e-7.
std::vector<Vector> vertices_hpoly(const HPolytope& P, double tol = 1e-9);

/// Convex hull of planar points, counterclockwise, starting at the lowest-left
/// point, collinear points dropped.
std::vector<Vector> convex_hull_2d(std::vector<Vector> pts);

/// Counterclockwise outline of a planar ConvHull of boxes.
std::vector<Vector> hull_outline(const BoxHullSet& W);

// ---- misc -------------------------------------------------------------------

/// Max absolute row sum of A^s.
double matrix_power_inf_norm(const Matrix& A, int s);

struct TrajectoryPoint {
  Vector x, y, w;
};
/// Rolls out T steps from x0 with w(t) = sample(W, rng).
std::vector<TrajectoryPoint> simulate(const LtiSystem& sys, const BoxHullSet& W,
                                      const Vector& x0, int T, Rng& rng);

}  // namespace rpisynth
