#pragma once

// Test-only reference computations. Nothing here calls into the library's
// solver paths, so results can be used to check them.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace oracles {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// min c'x over {G x <= g} by enumerating every n-subset of rows.
inline double brute_force_lp_min(const Vector& c, const Matrix& G, const Vector& g) {
  const int n = static_cast<int>(G.cols()), m = static_cast<int>(G.rows());
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  Matrix Gs(n, n);
  Vector gs(n);
  while (true) {
    for (int r = 0; r < n; ++r) {
      Gs.row(r) = G.row(idx[static_cast<size_t>(r)]);
      gs[r] = g[idx[static_cast<size_t>(r)]];
    }
    Eigen::FullPivLU<Matrix> lu(Gs);
    if (lu.rank() == n) {
      const Vector x = lu.solve(gs);
      if (((G * x - g).array() <= 1e-9 * (1.0 + g.cwiseAbs().maxCoeff())).all())
        best = std::min(best, c.dot(x));
    }
    int k = n - 1;
    while (k >= 0 && idx[static_cast<size_t>(k)] == m - n + k) --k;
    if (k < 0) break;
    ++idx[static_cast<size_t>(k)];
    for (int r = k + 1; r < n; ++r) idx[static_cast<size_t>(r)] = idx[static_cast<size_t>(r - 1)] + 1;
  }
  return best;
}

/// Corners of an axis-aligned box.
inline std::vector<Vector> box_corners(const Vector& c, const Vector& hw) {
  const int n = static_cast<int>(c.size());
  std::vector<Vector> out;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    Vector v = c;
    for (int k = 0; k < n; ++k) v[k] += ((mask >> k) & 1u) ? hw[k] : -hw[k];
    out.push_back(v);
  }
  return out;
}

/// max over the listed points of p' T v.
inline double max_over_points(const Matrix& T, const Vector& p, const std::vector<Vector>& pts) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& v : pts) best = std::max(best, p.dot(T * v));
  return best;
}

/// A^s by repeated multiplication in long double, then max abs row sum.
inline double power_inf_norm_ld(const Matrix& A, int s) {
  using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const MatL Al = A.cast<long double>();
  MatL P = MatL::Identity(A.rows(), A.cols());
  for (int k = 0; k < s; ++k) P = P * Al;
  long double best = 0;
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    long double r = 0;
    for (Eigen::Index j = 0; j < P.cols(); ++j) r += std::fabs(P(i, j));
    best = std::max(best, r);
  }
  return static_cast<double>(best);
}

/// Points of a regular grid over the simplex {b >= 0, sum b = 1} in R^N with
/// spacing 1/steps.
inline void simplex_grid(int N, int steps, std::vector<Vector>& out) {
  std::vector<int> counts(static_cast<size_t>(N), 0);
  auto rec = [&](auto& self, int k, int remaining) -> void {
    if (k == N - 1) {
      counts[static_cast<size_t>(k)] = remaining;
      Vector b(N);
      for (int j = 0; j < N; ++j) b[j] = static_cast<double>(counts[static_cast<size_t>(j)]) / steps;
      out.push_back(b);
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      counts[static_cast<size_t>(k)] = c;
      self(self, k + 1, remaining - c);
    }
  };
  rec(rec, 0, steps);
}

}  // namespace oracles
