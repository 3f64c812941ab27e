#pragma once

// Constraint blocks of the bilinear synthesis program
//
//   min c'z  s.t.  A x <= b,  D_x x + D_wbar wbar <= 0,  C_w w + C_z z = h,
//                  E_z z <= 0,  beta >= 0,  T_beta beta = 1,  g(wbar, beta) = w.
//
// Flat layouts (all zero-based):
//   x    = [wbar_1, epsw_1, ..., wbar_N, epsw_N, Q_0, ..., Q_{s-1}, r]
//   slot = i*(l+1) + t for vertex i and step t < l; t = l is the direct-feedthrough
//          disturbance of vertex i
//   w    = per slot, n_w entries
//   wbar = per (slot, box), n_w entries
//   beta = per (slot, box)
//   z    = [eps (n_B), b_1 (n_y), ..., b_vY (n_y)]

#include <string>
#include <vector>

#include "rpisynth/lp.hpp"
#include "rpisynth/rpi_params.hpp"
#include "rpisynth/setgeom.hpp"

namespace rpisynth {

struct VariableLayout {
  int N = 0, vY = 0, l = 0, s = 0;
  int nx = 0, nw = 0, ny = 0, mY = 0, nB = 0;

  int slots() const { return vY * (l + 1); }
  int slot(int i, int t) const { return i * (l + 1) + t; }

  int x_wbar(int j) const { return 2 * j * nw; }
  int x_epsw(int j) const { return 2 * j * nw + nw; }
  int x_Q(int t) const { return 2 * N * nw + t * mY; }
  int x_r() const { return 2 * N * nw + s * mY; }
  int w_at(int k) const { return k * nw; }
  int wbar_at(int k, int j) const { return (k * N + j) * nw; }
  int beta_at(int k, int j) const { return k * N + j; }
  int z_eps() const { return 0; }
  int z_b(int i) const { return nB + i * ny; }

  int dim_x() const { return 2 * N * nw + (s + 1) * mY; }
  int dim_w() const { return slots() * nw; }
  int dim_wbar() const { return slots() * N * nw; }
  int dim_beta() const { return slots() * N; }
  int dim_z() const { return nB + vY * ny; }
};

/// Rows M v <= rhs (or = rhs) over one variable group.
struct RowBlock {
  SparseMatrix M;
  Vector rhs;
  int rows() const { return static_cast<int>(M.rows()); }
};

struct BilinearTerm {
  int w;     // entry of w
  int beta;  // entry of beta
  int wbar;  // entry of wbar
};

struct BlockCounts {
  long a_rows = 0, c_rows = 0, bilinear_rows = 0, d_rows = 0, beta_nonneg = 0, beta_sums = 0,
       e_rows = 0;
  long dim_x = 0, dim_w = 0, dim_wbar = 0, dim_beta = 0, dim_z = 0;
};

struct SynthProblem {
  VariableLayout layout;
  LtiSystem sys;
  HPolytope Y;
  std::vector<Vector> vertices;
  RpiParams params;
  Matrix H;

  std::vector<Matrix> gbar;  // (1-alpha)^{-1} G C A^t, t < s
  Vector rhs;                // g - lambda sum_t |gbar_t| 1
  /// reach[t] multiplies the disturbance in step t: C A^{l-1-t} B for t < l,
  /// D for t = l.
  std::vector<Matrix> reach;

  RowBlock A;                  // over x
  SparseMatrix Cw, Cz;         // over w, z
  Vector h;
  SparseMatrix Dx, Dwbar;      // rows <= 0
  SparseMatrix Ez;             // rows <= 0
  SparseMatrix Tbeta;          // rows = 1
  std::vector<BilinearTerm> bilinear;
  Vector cost_z;

  std::vector<std::string> warnings;

  BlockCounts counts() const;
};

/// (1-alpha)^{-1} G C A^t for t = 0..s-1.
std::vector<Matrix> build_gbar(const LtiSystem& sys, const HPolytope& Y, const RpiParams& params);

/// sum_t gbar_t B wbar_j + |.| epsw_j <= Q_t, G D wbar_j + |G D| epsw_j <= r,
/// sum_t Q_t + r <= g - lambda sum_t |gbar_t| 1. Appends a warning per
/// nonpositive right-hand side entry.
RowBlock encode_output_inclusion(const std::vector<Matrix>& gbar, const LtiSystem& sys,
                                 const HPolytope& Y, const RpiParams& params,
                                 const VariableLayout& layout,
                                 std::vector<std::string>* warnings = nullptr);

/// [I; -I] B wbar_j + |[I; -I] B| epsw_j <= gamma 1 for every box.
RowBlock encode_gamma_bound(const LtiSystem& sys, double gamma, const VariableLayout& layout);

/// |wbar_1| <= epsw_1 as 2 n_w rows.
RowBlock encode_origin(const VariableLayout& layout);

/// Output-disturbance maps for the vertex reach equalities.
std::vector<Matrix> build_reach(const LtiSystem& sys, int l);

/// Normal matrix of B(eps): "box" gives [I; -I] in R^{n_y}; "uniform:k" (n_y = 2)
/// gives rows (cos(2 pi i / k), sin(2 pi i / k)), i = 0..k-1.
Matrix make_H(const std::string& preset, int ny);

/// Drops points within `tol` (Euclidean) of an earlier one.
std::vector<Vector> dedup_points(const std::vector<Vector>& pts, double tol = 1e-7);

/// Builds every block. `l` defaults to params.s when <= 0.
SynthProblem assemble(const LtiSystem& sys, const HPolytope& Y, std::vector<Vector> Y_vertices,
                      const RpiParams& params, int N, int l, const Matrix& H);

/// Full variable vector of the bilinear program.
struct Witness {
  Vector x, w, wbar, beta, z;
};

/// Largest violation per block (0 when satisfied).
struct BlockResiduals {
  double a = 0, c = 0, bilinear = 0, d = 0, beta = 0, e = 0, bounds = 0;
  double worst() const;
};
BlockResiduals block_residuals(const SynthProblem& p, const Witness& v);

/// Boxes read off x.
BoxHullSet boxes_from_x(const VariableLayout& layout, const Vector& x);

/// Writes boxes into the wbar/epsw part of x (Q, r left untouched).
void boxes_into_x(const VariableLayout& layout, const BoxHullSet& W, Vector& x);

}  // namespace rpisynth
