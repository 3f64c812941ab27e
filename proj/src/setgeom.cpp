#include "rpisynth/setgeom.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rpisynth/lp.hpp"

namespace rpisynth {

bool HPolytope::contains(const Vector& y, double tol) const {
  detail::require(y.size() == G.cols(), "HPolytope::contains: dimension mismatch");
  return ((G * y - g).array() <= tol).all();
}

HPolytope HPolytope::box(const Vector& halfwidth) {
  const auto n = halfwidth.size();
  HPolytope P;
  P.G.resize(2 * n, n);
  P.G << Matrix::Identity(n, n), -Matrix::Identity(n, n);
  P.g.resize(2 * n);
  P.g << halfwidth, halfwidth;
  return P;
}

Box::Box(Vector c, Vector hw) : center(std::move(c)), halfwidth(std::move(hw)) {
  detail::require(center.size() == halfwidth.size(), "Box: center/halfwidth dimension mismatch");
  detail::require((halfwidth.array() >= 0.0).all(), "Box: halfwidth must be nonnegative");
}

Box Box::singleton(const Vector& point) { return Box(point, Vector::Zero(point.size())); }

std::vector<Vector> Box::corners() const {
  const int n = dim();
  std::vector<Vector> out;
  out.reserve(size_t{1} << n);
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    Vector v = center;
    for (int k = 0; k < n; ++k) v[k] += ((mask >> k) & 1u) ? halfwidth[k] : -halfwidth[k];
    out.push_back(std::move(v));
  }
  return out;
}

BoxHullSet::BoxHullSet(std::vector<Box> boxes) : boxes_(std::move(boxes)) {
  detail::require(!boxes_.empty(), "BoxHullSet: at least one box is required");
  for (const auto& b : boxes_)
    detail::require(b.dim() == boxes_.front().dim(), "BoxHullSet: boxes must share a dimension");
}

BoxHullSet BoxHullSet::origin(int n) { return BoxHullSet({Box::singleton(Vector::Zero(n))}); }

BoxHullSet BoxHullSet::scaled(double factor) const {
  detail::require(factor >= 0.0, "BoxHullSet::scaled: factor must be nonnegative");
  std::vector<Box> out;
  for (const auto& b : boxes_) out.emplace_back(b.center * factor, b.halfwidth * factor);
  return BoxHullSet(std::move(out));
}

BoxHullSet BoxHullSet::inflated(double factor) const {
  detail::require(factor >= 0.0, "BoxHullSet::inflated: factor must be nonnegative");
  std::vector<Box> out;
  for (const auto& b : boxes_) out.emplace_back(b.center, b.halfwidth * factor);
  return BoxHullSet(std::move(out));
}

std::vector<Vector> BoxHullSet::all_corners() const {
  std::vector<Vector> pts;
  for (const auto& b : boxes_) {
    auto c = b.corners();
    pts.insert(pts.end(), c.begin(), c.end());
  }
  return pts;
}

LtiSystem::LtiSystem(Matrix a, Matrix b, Matrix c, Matrix d)
    : A(std::move(a)), B(std::move(b)), C(std::move(c)), D(std::move(d)) {
  detail::require(A.rows() == A.cols(), "LtiSystem: A must be square");
  detail::require(B.rows() == A.rows(), "LtiSystem: B rows must equal nx");
  detail::require(C.cols() == A.rows(), "LtiSystem: C cols must equal nx");
  detail::require(D.rows() == C.rows(), "LtiSystem: D rows must equal ny");
  detail::require(D.cols() == B.cols(), "LtiSystem: D cols must equal nw");
}

double LtiSystem::spectral_radius() const { return rpisynth::spectral_radius(A); }

double spectral_radius(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(A, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// ---- support functions ------------------------------------------------------

double support_box(const Matrix& T, const Vector& p, const Box& box) {
  detail::require(T.rows() == p.size(), "support_box: T rows must match p");
  detail::require(T.cols() == box.dim(), "support_box: T cols must match box dimension");
  const Vector r = T.transpose() * p;
  return r.dot(box.center) + r.cwiseAbs().dot(box.halfwidth);
}

double support_hull(const Matrix& T, const Vector& p, const BoxHullSet& W) {
  double best = -kInf;
  for (const auto& b : W.boxes()) best = std::max(best, support_box(T, p, b));
  return best;
}

Vector support_rows(const Matrix& T, const Matrix& M, const BoxHullSet& W) {
  detail::require(M.cols() == T.rows(), "support_rows: M cols must match T rows");
  Vector out(M.rows());
  for (Eigen::Index i = 0; i < M.rows(); ++i) out[i] = support_hull(T, M.row(i).transpose(), W);
  return out;
}

SupportPoint support_point(const Matrix& T, const Vector& p, const BoxHullSet& W) {
  detail::require(T.rows() == p.size() && T.cols() == W.dim(), "support_point: dimension mismatch");
  const Vector r = T.transpose() * p;
  SupportPoint best{-kInf, Vector()};
  for (const auto& b : W.boxes()) {
    const double v = r.dot(b.center) + r.cwiseAbs().dot(b.halfwidth);
    if (v > best.value) {
      Vector pt = b.center;
      for (int k = 0; k < b.dim(); ++k) pt[k] += (r[k] >= 0.0 ? 1.0 : -1.0) * b.halfwidth[k];
      best = {v, std::move(pt)};
    }
  }
  return best;
}

// ---- membership, sampling ---------------------------------------------------

Membership contains_point(const BoxHullSet& W, const Vector& w, double tol) {
  detail::require(tol > 0.0, "contains_point: tol must be positive");
  detail::require(w.size() == W.dim(), "contains_point: dimension mismatch");
  const int N = W.size(), n = W.dim();
  // Per box: weight beta_j >= 0 and scaled point q_j = beta_j p_j (free).
  LpBuilder lp(0);
  const int beta0 = lp.add_vars(N, 0.0, kInf);
  const int q0 = lp.add_vars(N * n, -kInf, kInf);
  auto q = [&](int j, int k) { return q0 + j * n + k; };
  LpBuilder::Row simplex;
  for (int j = 0; j < N; ++j) simplex.emplace_back(beta0 + j, 1.0);
  lp.add_eq(simplex, 1.0);
  for (int k = 0; k < n; ++k) {
    LpBuilder::Row sum;
    for (int j = 0; j < N; ++j) sum.emplace_back(q(j, k), 1.0);
    lp.add_eq(sum, w[k]);
  }
  for (int j = 0; j < N; ++j) {
    const Box& b = W[j];
    for (int k = 0; k < n; ++k) {
      lp.add_le({{q(j, k), 1.0}, {beta0 + j, -(b.center[k] + b.halfwidth[k])}}, tol);
      lp.add_le({{q(j, k), -1.0}, {beta0 + j, b.center[k] - b.halfwidth[k]}}, tol);
    }
  }
  const LpOutcome res = solve_lp(lp.build());
  Membership m;
  if (res.status == LpStatus::kInfeasible) return m;
  if (!res.optimal()) throw SolverError(std::string("contains_point: LP ") + to_string(res.status));
  m.inside = true;
  m.weights = res.x.segment(beta0, N);
  for (int j = 0; j < N; ++j) {
    const double bj = m.weights[j];
    if (bj > 1e-12) {
      Vector pt = res.x.segment(q0 + j * n, n) / bj;
      // Clamp the tolerance slack back into the box.
      pt = pt.cwiseMax(W[j].center - W[j].halfwidth).cwiseMin(W[j].center + W[j].halfwidth);
      m.points.push_back(std::move(pt));
    } else {
      m.points.push_back(W[j].center);
    }
  }
  return m;
}

Vector sample(const BoxHullSet& W, Rng& rng) {
  const int N = W.size(), n = W.dim();
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Vector beta(N);
  for (int j = 0; j < N; ++j) beta[j] = expo(rng);
  beta /= beta.sum();
  Vector out = Vector::Zero(n);
  for (int j = 0; j < N; ++j) {
    Vector p = W[j].center;
    for (int k = 0; k < n; ++k) p[k] += unif(rng) * W[j].halfwidth[k];
    out += beta[j] * p;
  }
  return out;
}

// ---- vertex enumeration -----------------------------------------------------

namespace {

bool is_bounded(const HPolytope& P) {
  const int n = P.dim();
  for (int k = 0; k < n; ++k) {
    for (double sgn : {1.0, -1.0}) {
      LpBuilder lp(n);
      for (int j = 0; j < n; ++j) lp.set_bounds(j, -kInf, kInf);
      lp.set_cost(k, -sgn);
      for (int i = 0; i < P.rows(); ++i) {
        LpBuilder::Row r;
        for (int j = 0; j < n; ++j) r.emplace_back(j, P.G(i, j));
        lp.add_le(r, P.g[i]);
      }
      const auto res = solve_lp(lp.build());
      if (res.status == LpStatus::kUnbounded) return false;
      if (res.status == LpStatus::kInfeasible) throw InputError("vertices_hpoly: polytope is empty");
    }
  }
  return true;
}

}  // namespace

std::vector<Vector> vertices_hpoly(const HPolytope& P, double tol) {
  const int n = P.dim(), m = P.rows();
  detail::require(P.g.size() == m, "vertices_hpoly: G/g row mismatch");
  detail::require(n >= 1 && m >= n, "vertices_hpoly: need at least n rows");
  if (!is_bounded(P)) throw InputError("vertices_hpoly: polytope is unbounded");

  std::vector<Vector> verts;
  std::vector<int> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  Matrix Gs(n, n);
  Vector gs(n);
  while (true) {
    for (int r = 0; r < n; ++r) {
      Gs.row(r) = P.G.row(idx[static_cast<size_t>(r)]);
      gs[r] = P.g[idx[static_cast<size_t>(r)]];
    }
    Eigen::FullPivLU<Matrix> lu(Gs);
    if (lu.rank() == n) {
      const Vector y = lu.solve(gs);
      if (((P.G * y - P.g).array() <= tol).all()) {
        const bool dup = std::any_of(verts.begin(), verts.end(),
                                     [&](const Vector& v) { return (v - y).norm() <= 1e-7; });
        if (!dup) verts.push_back(y);
      }
    }
    // next combination
    int k = n - 1;
    while (k >= 0 && idx[static_cast<size_t>(k)] == m - n + k) --k;
    if (k < 0) break;
    ++idx[static_cast<size_t>(k)];
    for (int r = k + 1; r < n; ++r) idx[static_cast<size_t>(r)] = idx[static_cast<size_t>(r - 1)] + 1;
  }
  if (verts.empty()) throw InputError("vertices_hpoly: no vertices found");
  return verts;
}

std::vector<Vector> convex_hull_2d(std::vector<Vector> pts) {
  for (const auto& p : pts) detail::require(p.size() == 2, "convex_hull_2d: points must be planar");
  std::sort(pts.begin(), pts.end(), [](const Vector& a, const Vector& b) {
    return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vector& a, const Vector& b) { return (a - b).norm() <= 1e-12; }),
            pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Vector& o, const Vector& a, const Vector& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  std::vector<Vector> hull(2 * pts.size());
  size_t k = 0;
  for (size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 1e-14) --k;
    hull[k++] = pts[i];
  }
  for (size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 1e-14) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

std::vector<Vector> hull_outline(const BoxHullSet& W) {
  if (W.dim() != 2) throw InputError("hull_outline: only planar sets are supported");
  return convex_hull_2d(W.all_corners());
}

// ---- misc -------------------------------------------------------------------

double matrix_power_inf_norm(const Matrix& A, int s) {
  detail::require(s >= 0, "matrix_power_inf_norm: s must be nonnegative");
  detail::require(A.rows() == A.cols(), "matrix_power_inf_norm: A must be square");
  Matrix P = Matrix::Identity(A.rows(), A.cols());
  for (int k = 0; k < s; ++k) P = P * A;
  return P.cwiseAbs().rowwise().sum().maxCoeff();
}

std::vector<TrajectoryPoint> simulate(const LtiSystem& sys, const BoxHullSet& W, const Vector& x0,
                                      int T, Rng& rng) {
  detail::require(T >= 1, "simulate: T must be positive");
  detail::require(x0.size() == sys.nx() && W.dim() == sys.nw(), "simulate: dimension mismatch");
  std::vector<TrajectoryPoint> out;
  out.reserve(static_cast<size_t>(T));
  Vector x = x0;
  for (int t = 0; t < T; ++t) {
    Vector w = sample(W, rng);
    Vector y = sys.C * x + sys.D * w;
    Vector xn = sys.A * x + sys.B * w;
    out.push_back({std::move(x), std::move(y), std::move(w)});
    x = std::move(xn);
  }
  return out;
}

}  // namespace rpisynth
