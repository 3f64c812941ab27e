#include "rpisynth/verifier.hpp"

#include <algorithm>
#include <cmath>

#include "rpisynth/encoder.hpp"
#include "rpisynth/lp.hpp"

namespace rpisynth {

bool Certificate::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

double Certificate::worst_margin() const {
  double w = kInf;
  for (const auto& c : checks) w = std::min(w, c.margin);
  return w;
}

void Certificate::add(std::string name, double margin, int location, double tol) {
  checks.push_back(Check{std::move(name), margin >= -tol, margin, location});
}

void Certificate::merge(const Certificate& other) {
  checks.insert(checks.end(), other.checks.begin(), other.checks.end());
}

const Check* Certificate::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

void add_vector(Certificate& cert, const std::string& name, const Vector& margins, double tol) {
  Eigen::Index at = 0;
  const double m = margins.size() ? margins.minCoeff(&at) : kInf;
  cert.add(name, m, static_cast<int>(at), tol);
}

// Columns and rows reaching vertex y in l steps, disturbances in W via
// q_jc = beta_j c_jc + hw_jc (2 a_jc - beta_j), 0 <= a_jc <= beta_j.
// The n_y output rows read y = sum_t reach_t w_t + b with b at b_col.
void add_vertex_reach(LpBuilder& lp, const std::vector<Matrix>& reach, const BoxHullSet& W,
                      const Vector& y, int b_col) {
  const int N = W.size(), nw = W.dim(), ny = static_cast<int>(y.size());
  std::vector<LpBuilder::Row> out(static_cast<size_t>(ny));
  for (int r = 0; r < ny; ++r) out[static_cast<size_t>(r)].emplace_back(b_col + r, 1.0);
  for (const Matrix& R : reach) {
    LpBuilder::Row simplex;
    for (int j = 0; j < N; ++j) {
      const Box& box = W[j];
      const int beta = lp.add_vars(1, 0.0, kInf);
      simplex.emplace_back(beta, 1.0);
      // w_c gets beta (c - hw) + 2 hw a
      const Vector lo = box.center - box.halfwidth;
      for (int r = 0; r < ny; ++r) {
        double coef = 0.0;
        for (int c = 0; c < nw; ++c) coef += R(r, c) * lo[c];
        out[static_cast<size_t>(r)].emplace_back(beta, coef);
      }
      for (int c = 0; c < nw; ++c) {
        if (box.halfwidth[c] <= 0.0) continue;
        const int a = lp.add_vars(1, 0.0, kInf);
        lp.add_le({{a, 1.0}, {beta, -1.0}}, 0.0);
        for (int r = 0; r < ny; ++r)
          out[static_cast<size_t>(r)].emplace_back(a, 2.0 * box.halfwidth[c] * R(r, c));
      }
    }
    lp.add_eq(simplex, 1.0);
  }
  for (int r = 0; r < ny; ++r) lp.add_eq(out[static_cast<size_t>(r)], y[r]);
}

}  // namespace

Certificate verify_params(const LtiSystem& sys, const HPolytope& Y, const RpiParams& p, double tol) {
  Certificate cert;
  cert.add("alpha_range", std::min(p.alpha, 1.0 - p.alpha), -1, 0.0);
  cert.add("lambda_range", std::min(p.lambda, 1.0 - p.lambda), -1, tol);
  if (p.s < 1) {
    cert.add("s_positive", p.s - 1.0, -1, 0.0);
    return cert;
  }
  const RpiConstants c = compute_constants(sys, Y, p.s);
  const ParamMargins m = param_margins(c, p);
  cert.add("ineq_output", m.inclusion_y, -1, tol);
  cert.add("ineq_contraction", m.contraction, -1, tol);
  cert.add("ineq_approximation", m.approximation, -1, tol);
  if (p.alpha < 1.0) {
    const InclusionMargins inc = inclusion_margins(sys, Y, p);
    add_vector(cert, "set_output", inc.output, tol);
    add_vector(cert, "set_contraction", inc.contraction, tol);
    add_vector(cert, "set_approximation", inc.approximation, tol);
  }
  return cert;
}

Certificate verify_output_inclusion(const LtiSystem& sys, const HPolytope& Y, const RpiParams& p,
                                    const BoxHullSet& W, double tol) {
  const std::vector<Matrix> gbar = build_gbar(sys, Y, p);
  Vector lhs = support_rows(Matrix::Identity(sys.nw(), sys.nw()), Y.G * sys.D, W);
  Vector rhs = Y.g;
  for (const Matrix& Gt : gbar) {
    lhs += support_rows(Matrix::Identity(sys.nw(), sys.nw()), Gt * sys.B, W);
    rhs -= p.lambda * Gt.cwiseAbs().rowwise().sum();
  }
  Certificate cert;
  add_vector(cert, "output_inclusion", rhs - lhs, tol);
  return cert;
}

Certificate verify_gamma(const LtiSystem& sys, const BoxHullSet& W, double gamma, double tol) {
  Matrix I2(2 * sys.nx(), sys.nx());
  I2 << Matrix::Identity(sys.nx(), sys.nx()), -Matrix::Identity(sys.nx(), sys.nx());
  const Vector h = support_rows(sys.B, I2, W);
  Certificate cert;
  add_vector(cert, "gamma_bound", Vector::Constant(h.size(), gamma) - h, tol);
  return cert;
}

Certificate verify_origin(const BoxHullSet& W, double tol) {
  // min ||sum_j q_j||_inf over the perspective description of W
  const int N = W.size(), n = W.dim();
  LpBuilder lp(0);
  const int t = lp.add_vars(1, 0.0, kInf);
  lp.set_cost(t, 1.0);
  const int beta0 = lp.add_vars(N, 0.0, kInf);
  const int q0 = lp.add_vars(N * n, -kInf, kInf);
  LpBuilder::Row simplex;
  for (int j = 0; j < N; ++j) simplex.emplace_back(beta0 + j, 1.0);
  lp.add_eq(simplex, 1.0);
  for (int k = 0; k < n; ++k) {
    LpBuilder::Row sum;
    for (int j = 0; j < N; ++j) sum.emplace_back(q0 + j * n + k, 1.0);
    LpBuilder::Row up(sum), down;
    up.emplace_back(t, -1.0);
    for (const auto& [c, v] : sum) down.emplace_back(c, -v);
    down.emplace_back(t, -1.0);
    lp.add_le(up, 0.0);
    lp.add_le(down, 0.0);
  }
  for (int j = 0; j < N; ++j)
    for (int k = 0; k < n; ++k) {
      const int q = q0 + j * n + k;
      lp.add_le({{q, 1.0}, {beta0 + j, -(W[j].center[k] + W[j].halfwidth[k])}}, 0.0);
      lp.add_le({{q, -1.0}, {beta0 + j, W[j].center[k] - W[j].halfwidth[k]}}, 0.0);
    }
  const LpOutcome out = solve_lp(lp.build());
  if (!out.optimal()) throw SolverError(std::string("origin check LP ") + to_string(out.status));
  Certificate cert;
  cert.add("origin", -out.objective, -1, tol);
  return cert;
}

DistanceResult distance_dY(const LtiSystem& sys, const std::vector<Vector>& Y_vertices,
                           const BoxHullSet& W, int l, const Matrix& H) {
  detail::require(W.dim() == sys.nw(), "disturbance set dimension differs from n_w");
  detail::require(H.cols() == sys.ny(), "H must have n_y columns");
  const std::vector<Matrix> reach = build_reach(sys, l);
  const int nB = static_cast<int>(H.rows()), ny = sys.ny();
  LpBuilder lp(0);
  const int eps0 = lp.add_vars(nB, 0.0, kInf);
  for (int r = 0; r < nB; ++r) lp.set_cost(eps0 + r, 1.0);
  for (const Vector& y : Y_vertices) {
    const int b0 = lp.add_vars(ny, -kInf, kInf);
    for (int r = 0; r < nB; ++r) {
      LpBuilder::Row row{{eps0 + r, -1.0}};
      for (int c = 0; c < ny; ++c) row.emplace_back(b0 + c, H(r, c));
      lp.add_le(row, 0.0);
    }
    add_vertex_reach(lp, reach, W, y, b0);
  }
  const LpOutcome out = solve_lp(lp.build());
  if (!out.optimal()) throw SolverError(std::string("distance LP ") + to_string(out.status));
  return DistanceResult{out.x.segment(eps0, nB), out.objective};
}

Certificate verify_coverage(const LtiSystem& sys, const std::vector<Vector>& Y_vertices,
                            const BoxHullSet& W, int l, const Matrix& H, const Vector& epsilon,
                            double tol) {
  detail::require(epsilon.size() == H.rows(), "epsilon length differs from the rows of H");
  const std::vector<Matrix> reach = build_reach(sys, l);
  const int nB = static_cast<int>(H.rows()), ny = sys.ny();
  Certificate cert;
  double worst = kInf;
  int where = -1;
  for (size_t i = 0; i < Y_vertices.size(); ++i) {
    LpBuilder lp(0);
    const int t = lp.add_vars(1, 0.0, kInf);
    lp.set_cost(t, 1.0);
    const int b0 = lp.add_vars(ny, -kInf, kInf);
    for (int r = 0; r < nB; ++r) {
      LpBuilder::Row row{{t, -1.0}};
      for (int c = 0; c < ny; ++c) row.emplace_back(b0 + c, H(r, c));
      lp.add_le(row, epsilon[r]);
    }
    add_vertex_reach(lp, reach, W, Y_vertices[i], b0);
    const LpOutcome out = solve_lp(lp.build());
    if (!out.optimal()) throw SolverError(std::string("coverage LP ") + to_string(out.status));
    if (-out.objective < worst) {
      worst = -out.objective;
      where = static_cast<int>(i);
    }
  }
  cert.add("coverage", Y_vertices.empty() ? 0.0 : worst, where, tol);
  return cert;
}

MonteCarloReport monte_carlo(const LtiSystem& sys, const BoxHullSet& W, const HPolytope& Y, int T,
                             int runs, Rng& rng) {
  MonteCarloReport rep;
  for (int run = 0; run < runs; ++run) {
    const auto traj = simulate(sys, W, Vector::Zero(sys.nx()), T, rng);
    for (const auto& pt : traj) {
      const double exc = (Y.G * pt.y - Y.g).maxCoeff();
      rep.max_excursion = std::max(rep.max_excursion, exc);
      if (exc > 1e-8) ++rep.violations;
      ++rep.steps;
    }
  }
  return rep;
}

}  // namespace rpisynth
