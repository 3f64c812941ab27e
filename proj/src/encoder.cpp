#include "rpisynth/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace rpisynth {

namespace {

// Accumulates rows as triplets; duplicate entries are summed on build.
struct RowSink {
  int cols;
  int rows = 0;
  std::vector<Triplet> trip;
  std::vector<double> rhs;

  explicit RowSink(int c) : cols(c) {}
  int row(double r) {
    rhs.push_back(r);
    return rows++;
  }
  void put(int r, int c, double v) {
    if (v != 0.0) trip.emplace_back(r, c, v);
  }
  SparseMatrix matrix() const {
    SparseMatrix M(rows, cols);
    M.setFromTriplets(trip.begin(), trip.end());
    return M;
  }
  RowBlock block() const {
    return RowBlock{matrix(), Eigen::Map<const Vector>(rhs.data(), rows)};
  }
};

// Rows a' wbar_j + |a'| epsw_j for each row a of T, appended with -1 on an
// optional extra column.
void box_support_rows(RowSink& sink, const Matrix& T, const VariableLayout& L, int j,
                      const Vector& rhs, int extra_col0) {
  for (int i = 0; i < T.rows(); ++i) {
    const int r = sink.row(rhs[i]);
    for (int c = 0; c < L.nw; ++c) {
      sink.put(r, L.x_wbar(j) + c, T(i, c));
      sink.put(r, L.x_epsw(j) + c, std::fabs(T(i, c)));
    }
    if (extra_col0 >= 0) sink.put(r, extra_col0 + i, -1.0);
  }
}

double max_violation(const SparseMatrix& M, const Vector& v, const Vector& rhs) {
  if (M.rows() == 0) return 0.0;
  return std::max(0.0, (M * v - rhs).maxCoeff());
}

double max_abs(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

std::vector<Matrix> build_gbar(const LtiSystem& sys, const HPolytope& Y, const RpiParams& params) {
  detail::require(params.s >= 1, "s must be >= 1");
  detail::require(params.alpha >= 0.0 && params.alpha < 1.0, "alpha must lie in [0, 1)");
  std::vector<Matrix> out;
  out.reserve(static_cast<size_t>(params.s));
  Matrix P = Y.G * sys.C / (1.0 - params.alpha);
  for (int t = 0; t < params.s; ++t) {
    out.push_back(P);
    P = P * sys.A;
  }
  return out;
}

RowBlock encode_output_inclusion(const std::vector<Matrix>& gbar, const LtiSystem& sys,
                                 const HPolytope& Y, const RpiParams& params,
                                 const VariableLayout& L, std::vector<std::string>* warnings) {
  RowSink sink(L.dim_x());
  const Vector zero = Vector::Zero(L.mY);
  for (int j = 0; j < L.N; ++j) {
    for (int t = 0; t < L.s; ++t)
      box_support_rows(sink, gbar[static_cast<size_t>(t)] * sys.B, L, j, zero, L.x_Q(t));
    box_support_rows(sink, Y.G * sys.D, L, j, zero, L.x_r());
  }
  Vector rhs = Y.g;
  for (const auto& Gt : gbar) rhs -= params.lambda * Gt.cwiseAbs().rowwise().sum();
  for (int i = 0; i < L.mY; ++i) {
    const int r = sink.row(rhs[i]);
    for (int t = 0; t < L.s; ++t) sink.put(r, L.x_Q(t) + i, 1.0);
    sink.put(r, L.x_r() + i, 1.0);
    if (!(rhs[i] > 0.0) && warnings) {
      std::ostringstream os;
      os << "output inclusion right-hand side row " << i << " is " << rhs[i]
         << "; the program may be infeasible";
      warnings->push_back(os.str());
    }
  }
  return sink.block();
}

RowBlock encode_gamma_bound(const LtiSystem& sys, double gamma, const VariableLayout& L) {
  RowSink sink(L.dim_x());
  Matrix IB(2 * sys.nx(), sys.nw());
  IB << sys.B, -sys.B;
  const Vector rhs = Vector::Constant(IB.rows(), gamma);
  for (int j = 0; j < L.N; ++j) box_support_rows(sink, IB, L, j, rhs, -1);
  return sink.block();
}

RowBlock encode_origin(const VariableLayout& L) {
  RowSink sink(L.dim_x());
  for (int sign : {1, -1})
    for (int c = 0; c < L.nw; ++c) {
      const int r = sink.row(0.0);
      sink.put(r, L.x_wbar(0) + c, sign);
      sink.put(r, L.x_epsw(0) + c, -1.0);
    }
  return sink.block();
}

std::vector<Matrix> build_reach(const LtiSystem& sys, int l) {
  detail::require(l >= 1, "l must be >= 1");
  std::vector<Matrix> reach(static_cast<size_t>(l + 1));
  Matrix CA = sys.C;  // C A^k
  for (int k = 0; k < l; ++k) {
    reach[static_cast<size_t>(l - 1 - k)] = CA * sys.B;
    CA = CA * sys.A;
  }
  reach[static_cast<size_t>(l)] = sys.D;
  return reach;
}

Matrix make_H(const std::string& preset, int ny) {
  if (preset == "box") {
    Matrix H(2 * ny, ny);
    H << Matrix::Identity(ny, ny), -Matrix::Identity(ny, ny);
    return H;
  }
  if (preset.rfind("uniform:", 0) == 0) {
    int k = 0;
    try {
      k = std::stoi(preset.substr(8));
    } catch (const std::exception&) {
      throw InputError("bad H preset '" + preset + "'");
    }
    if (ny != 2) throw InputError("uniform:k normals need n_y = 2");
    if (k < 3) throw InputError("uniform:k needs k >= 3");
    Matrix H(k, 2);
    for (int i = 0; i < k; ++i) {
      const double a = 2.0 * std::numbers::pi * i / k;
      H(i, 0) = std::cos(a);
      H(i, 1) = std::sin(a);
    }
    // cos(pi/2) and friends are rounding noise, not coefficients
    H = H.unaryExpr([](double v) { return std::abs(v) < 1e-15 ? 0.0 : v; });
    return H;
  }
  throw InputError("unknown H preset '" + preset + "' (box | uniform:k)");
}

std::vector<Vector> dedup_points(const std::vector<Vector>& pts, double tol) {
  std::vector<Vector> out;
  for (const auto& p : pts) {
    bool dup = false;
    for (const auto& q : out)
      if ((p - q).norm() <= tol) {
        dup = true;
        break;
      }
    if (!dup) out.push_back(p);
  }
  return out;
}

SynthProblem assemble(const LtiSystem& sys, const HPolytope& Y, std::vector<Vector> Y_vertices,
                      const RpiParams& params, int N, int l, const Matrix& H) {
  detail::require(N >= 1, "N must be >= 1");
  detail::require(Y.dim() == sys.ny(), "constraint set dimension differs from n_y");
  detail::require(H.cols() == sys.ny(), "H must have n_y columns");
  detail::require(H.rows() >= 1, "H needs at least one row");
  if (l <= 0) l = params.s;
  if (Y_vertices.empty()) Y_vertices = vertices_hpoly(Y);
  Y_vertices = dedup_points(Y_vertices);
  for (const auto& v : Y_vertices) detail::require(v.size() == sys.ny(), "vertex dimension differs from n_y");

  SynthProblem p;
  p.sys = sys;
  p.Y = Y;
  p.vertices = Y_vertices;
  p.params = params;
  p.H = H;
  VariableLayout& L = p.layout;
  L.N = N;
  L.vY = static_cast<int>(Y_vertices.size());
  L.l = l;
  L.s = params.s;
  L.nx = sys.nx();
  L.nw = sys.nw();
  L.ny = sys.ny();
  L.mY = Y.rows();
  L.nB = static_cast<int>(H.rows());

  p.gbar = build_gbar(sys, Y, params);
  p.rhs = Y.g;
  for (const auto& Gt : p.gbar) p.rhs -= params.lambda * Gt.cwiseAbs().rowwise().sum();
  p.reach = build_reach(sys, l);

  // A x <= b
  {
    const RowBlock inc = encode_output_inclusion(p.gbar, sys, Y, params, L, &p.warnings);
    const RowBlock gam = encode_gamma_bound(sys, params.gamma, L);
    const RowBlock org = encode_origin(L);
    const int rows = inc.rows() + gam.rows() + org.rows();
    p.A.M.resize(rows, L.dim_x());
    p.A.rhs.resize(rows);
    std::vector<Triplet> trip;
    int off = 0;
    for (const RowBlock* b : {&inc, &gam, &org}) {
      for (int k = 0; k < b->M.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(b->M, k); it; ++it)
          trip.emplace_back(off + it.row(), it.col(), it.value());
      p.A.rhs.segment(off, b->rows()) = b->rhs;
      off += b->rows();
    }
    p.A.M.setFromTriplets(trip.begin(), trip.end());
  }

  // C_w w + C_z z = h
  {
    std::vector<Triplet> cw, cz;
    p.h.resize(L.vY * L.ny);
    for (int i = 0; i < L.vY; ++i) {
      for (int r = 0; r < L.ny; ++r) {
        const int row = i * L.ny + r;
        p.h[row] = Y_vertices[static_cast<size_t>(i)][r];
        for (int t = 0; t <= l; ++t) {
          const Matrix& R = p.reach[static_cast<size_t>(t)];
          for (int c = 0; c < L.nw; ++c)
            if (R(r, c) != 0.0) cw.emplace_back(row, L.w_at(L.slot(i, t)) + c, R(r, c));
        }
        cz.emplace_back(row, L.z_b(i) + r, 1.0);
      }
    }
    p.Cw.resize(L.vY * L.ny, L.dim_w());
    p.Cw.setFromTriplets(cw.begin(), cw.end());
    p.Cz.resize(L.vY * L.ny, L.dim_z());
    p.Cz.setFromTriplets(cz.begin(), cz.end());
  }

  // +-(wbar_kj - wbar_j) - epsw_j <= 0, bilinear map, simplex sums
  {
    std::vector<Triplet> dx, dw, tb;
    int row = 0;
    for (int k = 0; k < L.slots(); ++k) {
      for (int j = 0; j < L.N; ++j) {
        for (int sign : {1, -1})
          for (int c = 0; c < L.nw; ++c) {
            dw.emplace_back(row, L.wbar_at(k, j) + c, sign);
            dx.emplace_back(row, L.x_wbar(j) + c, -sign);
            dx.emplace_back(row, L.x_epsw(j) + c, -1.0);
            ++row;
          }
        for (int c = 0; c < L.nw; ++c)
          p.bilinear.push_back({L.w_at(k) + c, L.beta_at(k, j), L.wbar_at(k, j) + c});
        tb.emplace_back(k, L.beta_at(k, j), 1.0);
      }
    }
    p.Dx.resize(row, L.dim_x());
    p.Dx.setFromTriplets(dx.begin(), dx.end());
    p.Dwbar.resize(row, L.dim_wbar());
    p.Dwbar.setFromTriplets(dw.begin(), dw.end());
    p.Tbeta.resize(L.slots(), L.dim_beta());
    p.Tbeta.setFromTriplets(tb.begin(), tb.end());
  }

  // H b_i - eps <= 0
  {
    std::vector<Triplet> ez;
    for (int i = 0; i < L.vY; ++i)
      for (int r = 0; r < L.nB; ++r) {
        const int row = i * L.nB + r;
        for (int c = 0; c < L.ny; ++c)
          if (H(r, c) != 0.0) ez.emplace_back(row, L.z_b(i) + c, H(r, c));
        ez.emplace_back(row, L.z_eps() + r, -1.0);
      }
    p.Ez.resize(L.vY * L.nB, L.dim_z());
    p.Ez.setFromTriplets(ez.begin(), ez.end());
  }

  p.cost_z = Vector::Zero(L.dim_z());
  p.cost_z.head(L.nB).setOnes();
  return p;
}

BlockCounts SynthProblem::counts() const {
  BlockCounts c;
  c.a_rows = A.M.rows();
  c.c_rows = Cw.rows();
  c.bilinear_rows = layout.dim_w();
  c.d_rows = Dx.rows();
  c.beta_nonneg = layout.dim_beta();
  c.beta_sums = Tbeta.rows();
  c.e_rows = Ez.rows();
  c.dim_x = layout.dim_x();
  c.dim_w = layout.dim_w();
  c.dim_wbar = layout.dim_wbar();
  c.dim_beta = layout.dim_beta();
  c.dim_z = layout.dim_z();
  return c;
}

double BlockResiduals::worst() const { return std::max({a, c, bilinear, d, beta, e, bounds}); }

BlockResiduals block_residuals(const SynthProblem& p, const Witness& v) {
  const VariableLayout& L = p.layout;
  BlockResiduals r;
  r.a = max_violation(p.A.M, v.x, p.A.rhs);
  r.c = max_abs(p.Cw * v.w + p.Cz * v.z - p.h);
  Vector gw = Vector::Zero(L.dim_w());
  for (const auto& b : p.bilinear) gw[b.w] += v.beta[b.beta] * v.wbar[b.wbar];
  r.bilinear = max_abs(gw - v.w);
  r.d = max_violation(p.Dx, v.x, -(p.Dwbar * v.wbar));
  r.beta = std::max(std::max(0.0, -v.beta.minCoeff()),
                    max_abs(p.Tbeta * v.beta - Vector::Ones(p.Tbeta.rows())));
  r.e = max_violation(p.Ez, v.z, Vector::Zero(p.Ez.rows()));
  double bnd = 0.0;
  for (int j = 0; j < L.N; ++j) bnd = std::max(bnd, -v.x.segment(L.x_epsw(j), L.nw).minCoeff());
  bnd = std::max(bnd, -v.z.head(L.nB).minCoeff());
  r.bounds = bnd;
  return r;
}

BoxHullSet boxes_from_x(const VariableLayout& L, const Vector& x) {
  std::vector<Box> boxes;
  for (int j = 0; j < L.N; ++j)
    boxes.emplace_back(x.segment(L.x_wbar(j), L.nw),
                       x.segment(L.x_epsw(j), L.nw).cwiseMax(0.0));
  return BoxHullSet(std::move(boxes));
}

void boxes_into_x(const VariableLayout& L, const BoxHullSet& W, Vector& x) {
  detail::require(W.size() == L.N && W.dim() == L.nw, "box set does not match the layout");
  for (int j = 0; j < L.N; ++j) {
    x.segment(L.x_wbar(j), L.nw) = W[j].center;
    x.segment(L.x_epsw(j), L.nw) = W[j].halfwidth;
  }
}

}  // namespace rpisynth
