#include "rpisynth/synthesizer.hpp"

#include <algorithm>
#include <cstdlib>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace rpisynth {

namespace {

struct Part {
  const SparseMatrix* M;
  int col_off;
};

// Appends rows sum_k parts[k].M.row(i) * v_k  (<= or =)  rhs[i].
void append_rows(LpBuilder& lp, std::initializer_list<Part> parts, const Vector& rhs, bool eq) {
  LpBuilder::Row row;
  for (Eigen::Index i = 0; i < rhs.size(); ++i) {
    row.clear();
    for (const Part& part : parts)
      for (SparseMatrix::InnerIterator it(*part.M, i); it; ++it)
        row.emplace_back(part.col_off + static_cast<int>(it.col()), it.value());
    if (eq) lp.add_eq(row, rhs[i]);
    else lp.add_le(row, rhs[i]);
  }
}

void x_bounds(LpBuilder& lp, const VariableLayout& L) {
  for (int k = 0; k < L.dim_x(); ++k) lp.set_bounds(k, -kInf, kInf);
  for (int j = 0; j < L.N; ++j)
    for (int c = 0; c < L.nw; ++c) lp.set_bounds(L.x_epsw(j) + c, 0.0, kInf);
}

// z columns start at `off`: eps >= 0 carries the cost, b free.
void z_columns(LpBuilder& lp, const VariableLayout& L, int off) {
  for (int k = 0; k < L.dim_z(); ++k) lp.set_bounds(off + k, -kInf, kInf);
  for (int r = 0; r < L.nB; ++r) {
    lp.set_bounds(off + L.z_eps() + r, 0.0, kInf);
    lp.set_cost(off + L.z_eps() + r, 1.0);
  }
}

void require_optimal(const LpOutcome& out, const char* which) {
  if (out.optimal()) return;
  std::ostringstream os;
  os << which << " LP ended with status " << to_string(out.status) << " after " << out.iterations
     << " iterations";
  throw SolverError(os.str());
}

// Positive right-hand sides of the A block, pulled in by a relative 1e-7. The
// inclusion rows add up s+1 terms that are each only solver-accurate, so the
// exact rows can miss the certificate tolerance by rounding.
Vector tightened_rhs(const SynthProblem& p) {
  Vector rhs = p.A.rhs;
  for (Eigen::Index i = 0; i < rhs.size(); ++i)
    if (rhs[i] > 0.0) rhs[i] *= 1.0 - 1e-7;
  return rhs;
}

// w = S wbar for fixed beta.
SparseMatrix beta_map(const SynthProblem& p, const Vector& beta) {
  std::vector<Triplet> trip;
  for (const auto& b : p.bilinear)
    if (beta[b.beta] != 0.0) trip.emplace_back(b.w, b.wbar, beta[b.beta]);
  SparseMatrix S(p.layout.dim_w(), p.layout.dim_wbar());
  S.setFromTriplets(trip.begin(), trip.end());
  return S;
}

// w = M beta for fixed wbar.
SparseMatrix wbar_map(const SynthProblem& p, const Vector& wbar) {
  std::vector<Triplet> trip;
  for (const auto& b : p.bilinear)
    if (wbar[b.wbar] != 0.0) trip.emplace_back(b.w, b.beta, wbar[b.wbar]);
  SparseMatrix M(p.layout.dim_w(), p.layout.dim_beta());
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

StepResult p_step_literal(const SynthProblem& p, const Vector& beta) {
  const VariableLayout& L = p.layout;
  const int off_wbar = L.dim_x(), off_z = off_wbar + L.dim_wbar();
  LpBuilder lp(off_z + L.dim_z());
  x_bounds(lp, L);
  for (int k = 0; k < L.dim_wbar(); ++k) lp.set_bounds(off_wbar + k, -kInf, kInf);
  z_columns(lp, L, off_z);

  append_rows(lp, {{&p.A.M, 0}}, tightened_rhs(p), false);
  append_rows(lp, {{&p.Dx, 0}, {&p.Dwbar, off_wbar}}, Vector::Zero(p.Dx.rows()), false);
  append_rows(lp, {{&p.Ez, off_z}}, Vector::Zero(p.Ez.rows()), false);
  const SparseMatrix CwS = p.Cw * beta_map(p, beta);
  append_rows(lp, {{&CwS, off_wbar}, {&p.Cz, off_z}}, p.h, true);

  const LpOutcome out = solve_lp(lp.build());
  require_optimal(out, "P");
  StepResult r;
  r.v.x = out.x.head(L.dim_x());
  r.v.wbar = out.x.segment(off_wbar, L.dim_wbar());
  r.v.z = out.x.segment(off_z, L.dim_z());
  r.v.beta = beta;
  r.v.w = beta_map(p, beta) * r.v.wbar;
  r.objective = p.cost_z.dot(r.v.z);
  r.lp_iterations = out.iterations;
  return r;
}

// For fixed beta, Sum_j beta_kj Box_j is the box with center Sum beta c_j and
// halfwidth Sum beta eps_j, so each slot needs one deviation d_k with
// |d_k| <= Sum_j beta_kj eps_j instead of N box points.
StepResult p_step_reduced(const SynthProblem& p, const Vector& beta) {
  const VariableLayout& L = p.layout;
  const int off_d = L.dim_x(), off_z = off_d + L.dim_w();
  LpBuilder lp(off_z + L.dim_z());
  x_bounds(lp, L);
  for (int k = 0; k < L.dim_w(); ++k) lp.set_bounds(off_d + k, -kInf, kInf);
  z_columns(lp, L, off_z);

  append_rows(lp, {{&p.A.M, 0}}, tightened_rhs(p), false);

  LpBuilder::Row row;
  for (int k = 0; k < L.slots(); ++k)
    for (int c = 0; c < L.nw; ++c)
      for (double sign : {1.0, -1.0}) {
        row.clear();
        row.emplace_back(off_d + L.w_at(k) + c, sign);
        for (int j = 0; j < L.N; ++j) {
          const double b = beta[L.beta_at(k, j)];
          if (b != 0.0) row.emplace_back(L.x_epsw(j) + c, -b);
        }
        lp.add_le(row, 0.0);
      }

  append_rows(lp, {{&p.Ez, off_z}}, Vector::Zero(p.Ez.rows()), false);

  for (int i = 0; i < L.vY; ++i) {
    // coefficient of box center j: Sum_t beta_{(i,t) j} reach_t
    std::vector<Matrix> center(static_cast<size_t>(L.N), Matrix::Zero(L.ny, L.nw));
    for (int t = 0; t <= L.l; ++t)
      for (int j = 0; j < L.N; ++j) {
        const double b = beta[L.beta_at(L.slot(i, t), j)];
        if (b != 0.0) center[static_cast<size_t>(j)] += b * p.reach[static_cast<size_t>(t)];
      }
    for (int r = 0; r < L.ny; ++r) {
      row.clear();
      for (int j = 0; j < L.N; ++j)
        for (int c = 0; c < L.nw; ++c) row.emplace_back(L.x_wbar(j) + c, center[static_cast<size_t>(j)](r, c));
      for (int t = 0; t <= L.l; ++t)
        for (int c = 0; c < L.nw; ++c)
          row.emplace_back(off_d + L.w_at(L.slot(i, t)) + c, p.reach[static_cast<size_t>(t)](r, c));
      row.emplace_back(off_z + L.z_b(i) + r, 1.0);
      lp.add_eq(row, p.vertices[static_cast<size_t>(i)][r]);
    }
  }

  const LpOutcome out = solve_lp(lp.build());
  require_optimal(out, "P");

  StepResult res;
  Witness& v = res.v;
  v.x = out.x.head(L.dim_x());
  v.z = out.x.segment(off_z, L.dim_z());
  v.beta = beta;
  v.w.resize(L.dim_w());
  v.wbar.resize(L.dim_wbar());
  for (int k = 0; k < L.slots(); ++k) {
    Vector cen = Vector::Zero(L.nw), hw = Vector::Zero(L.nw);
    for (int j = 0; j < L.N; ++j) {
      const double b = beta[L.beta_at(k, j)];
      cen += b * v.x.segment(L.x_wbar(j), L.nw);
      hw += b * v.x.segment(L.x_epsw(j), L.nw);
    }
    // Clip round-off so the deviation stays inside the summed box.
    const Vector d = out.x.segment(off_d + L.w_at(k), L.nw).cwiseMax(-hw).cwiseMin(hw);
    v.w.segment(L.w_at(k), L.nw) = cen + d;
    // Split d over the boxes as a vertex of the literal P feasible set: start
    // every weighted box at its low corner and raise boxes one at a time.
    for (int c = 0; c < L.nw; ++c) {
      double need = d[c] + hw[c];
      for (int j = 0; j < L.N; ++j) {
        const double e = v.x[L.x_epsw(j) + c];
        const double b = beta[L.beta_at(k, j)];
        double u = -1.0;
        if (b > 0.0 && e > 0.0 && need > 0.0) {
          u = std::min(1.0, -1.0 + need / (b * e));
          need -= (u + 1.0) * b * e;
        }
        v.wbar[L.wbar_at(k, j) + c] = v.x[L.x_wbar(j) + c] + u * e;
      }
    }
  }
  res.objective = p.cost_z.dot(v.z);
  res.lp_iterations = out.iterations;
  return res;
}

double dirichlet_shape(double b) { return std::max(50.0 * b, 0.05); }

}  // namespace

StepResult p_step(const SynthProblem& p, const Vector& beta, PStepForm form) {
  detail::require(beta.size() == p.layout.dim_beta(), "beta has the wrong length");
  return form == PStepForm::kLiteral ? p_step_literal(p, beta) : p_step_reduced(p, beta);
}

StepResult q_step(const SynthProblem& p, const Witness& from) {
  const VariableLayout& L = p.layout;
  const int off_z = L.dim_beta();
  LpBuilder lp(off_z + L.dim_z());
  z_columns(lp, L, off_z);

  const SparseMatrix M = wbar_map(p, from.wbar);
  const SparseMatrix CwM = p.Cw * M;
  append_rows(lp, {{&CwM, 0}, {&p.Cz, off_z}}, p.h, true);
  append_rows(lp, {{&p.Tbeta, 0}}, Vector::Ones(p.Tbeta.rows()), true);
  append_rows(lp, {{&p.Ez, off_z}}, Vector::Zero(p.Ez.rows()), false);

  const LpOutcome out = solve_lp(lp.build());
  require_optimal(out, "Q");
  StepResult r;
  r.v.x = from.x;
  r.v.wbar = from.wbar;
  r.v.beta = out.x.head(L.dim_beta()).cwiseMax(0.0);
  r.v.z = out.x.segment(off_z, L.dim_z());
  r.v.w = M * r.v.beta;
  r.objective = p.cost_z.dot(r.v.z);
  r.lp_iterations = out.iterations;
  return r;
}

Vector uniform_beta(const VariableLayout& L) {
  return Vector::Constant(L.dim_beta(), 1.0 / L.N);
}

Vector heuristic_beta(const VariableLayout& L) {
  if (L.N != L.vY) throw InputError("the one-hot initialization needs N equal to the vertex count");
  Vector beta = Vector::Zero(L.dim_beta());
  for (int i = 0; i < L.vY; ++i)
    for (int t = 0; t <= L.l; ++t) beta[L.beta_at(L.slot(i, t), i)] = 1.0;
  return beta;
}

Vector pad_beta(const VariableLayout& from, const Vector& beta, int N_to) {
  detail::require(N_to >= from.N, "cannot pad to fewer boxes");
  detail::require(beta.size() == from.dim_beta(), "beta has the wrong length");
  Vector out = Vector::Zero(static_cast<Eigen::Index>(from.slots()) * N_to);
  for (int k = 0; k < from.slots(); ++k)
    for (int j = 0; j < from.N; ++j) out[k * N_to + j] = beta[from.beta_at(k, j)];
  return out;
}

namespace {

SynthResult finish(const SynthProblem& p, const Witness& v, double obj) {
  SynthResult r;
  r.witness = v;
  r.objective = obj;
  r.W = boxes_from_x(p.layout, v.x);
  r.epsilon = v.z.head(p.layout.nB);
  r.residual = block_residuals(p, v).worst();
  return r;
}

}  // namespace

SynthResult alternate(const SynthProblem& p, const Vector& beta0, double zeta, int max_iters) {
  detail::require(zeta > 0.0, "zeta must be positive");
  detail::require(max_iters >= 1, "max_iters must be >= 1");
  std::vector<double> history;
  Vector beta = beta0;
  Witness best;
  double best_obj = kInf, prev_q = kInf;
  int it = 0;
  std::string why = "iteration limit";
  for (it = 1; it <= max_iters; ++it) {
    StepResult P, Q;
    try {
      P = p_step(p, beta);
      Q = q_step(p, P.v);
    } catch (const SolverError& e) {
      std::ostringstream os;
      os << "iteration " << it << ": " << e.what();
      throw SolverError(os.str());
    }
    history.push_back(P.objective);
    history.push_back(Q.objective);
    if (Q.objective < best_obj) {
      best_obj = Q.objective;
      best = Q.v;
    }
    if (it > 1 && Q.objective >= prev_q - zeta) {
      why = "converged";
      break;
    }
    prev_q = Q.objective;
    beta = Q.v.beta;
  }
  SynthResult r = finish(p, best, best_obj);
  r.history = std::move(history);
  r.iterations = std::min(it, max_iters);
  r.termination = why;
  return r;
}

int default_threads() {
  if (const char* env = std::getenv("RPISYNTH_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

SynthResult refine(const SynthProblem& p, const SynthResult& start, int restarts,
                   std::uint64_t seed, double zeta, int max_iters, int threads) {
  if (restarts <= 0) return start;
  if (threads <= 0) threads = default_threads();
  const VariableLayout& L = p.layout;
  const Vector& incumbent = start.witness.beta;

  std::vector<SynthResult> runs(static_cast<size_t>(restarts));
  std::vector<std::string> errors(static_cast<size_t>(restarts));
  std::vector<char> ok(static_cast<size_t>(restarts), 0);

  auto run_one = [&](int r) {
    std::seed_seq sseq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                       static_cast<std::uint32_t>(r)};
    Rng rng(sseq);
    Vector beta(L.dim_beta());
    for (int k = 0; k < L.slots(); ++k) {
      double sum = 0.0;
      for (int j = 0; j < L.N; ++j) {
        std::gamma_distribution<double> gd(dirichlet_shape(incumbent[L.beta_at(k, j)]), 1.0);
        beta[L.beta_at(k, j)] = gd(rng);
        sum += beta[L.beta_at(k, j)];
      }
      for (int j = 0; j < L.N; ++j) beta[L.beta_at(k, j)] /= sum;
    }
    try {
      runs[static_cast<size_t>(r)] = alternate(p, beta, zeta, max_iters);
      ok[static_cast<size_t>(r)] = 1;
    } catch (const Error& e) {
      errors[static_cast<size_t>(r)] = e.what();
    }
  };

  const int workers = std::min(threads, restarts);
  if (workers <= 1) {
    for (int r = 0; r < restarts; ++r) run_one(r);
  } else {
    std::mutex mu;
    int next = 0;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        while (true) {
          int r;
          {
            std::lock_guard<std::mutex> lock(mu);
            if (next >= restarts) return;
            r = next++;
          }
          run_one(r);
        }
      });
    for (auto& th : pool) th.join();
  }

  SynthResult best = start;
  for (int r = 0; r < restarts; ++r)
    if (ok[static_cast<size_t>(r)] && runs[static_cast<size_t>(r)].objective < best.objective)
      best = runs[static_cast<size_t>(r)];
  return best;
}

}  // namespace rpisynth
