#include "rpisynth/rpi_params.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

namespace rpisynth {

namespace {

Vector abs_row_sums(const Matrix& M) { return M.cwiseAbs().rowwise().sum(); }

// Closed interval {a : qa a^2 + b a + c >= 0} for qa <= 0. Returns false when
// empty. Unbounded sides come back as +-inf.
bool concave_superlevel(double qa, double b, double c, double& lo, double& hi) {
  if (qa == 0.0) {
    if (b > 0.0) {
      lo = -c / b;
      hi = kInf;
    } else if (b < 0.0) {
      lo = -kInf;
      hi = -c / b;
    } else {
      lo = -kInf;
      hi = kInf;
      return c >= 0.0;
    }
    return true;
  }
  const double disc = b * b - 4.0 * qa * c;
  if (disc < 0.0) return false;
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
  double r1 = q / qa;
  double r2 = (q != 0.0) ? c / q : r1;
  if (r1 > r2) std::swap(r1, r2);
  lo = r1;
  hi = r2;
  return true;
}

}  // namespace

// ---- constants --------------------------------------------------------------

ConstantsAccumulator::ConstantsAccumulator(const LtiSystem& sys, const HPolytope& Y)
    : GC_(Y.G * sys.C), g_(Y.g), A_(sys.A) {
  detail::require(Y.dim() == sys.ny(), "constraint set dimension differs from n_y");
  P_ = A_;
  c_.s = 1;
  c_.L = abs_row_sums(GC_);
  row_sums_ = Vector::Ones(A_.rows());
  finish_();
}

void ConstantsAccumulator::advance() {
  c_.L += abs_row_sums(GC_ * P_);
  row_sums_ += abs_row_sums(P_);
  P_ = P_ * A_;
  ++c_.s;
  finish_();
}

void ConstantsAccumulator::finish_() {
  c_.theta = kInf;
  for (Eigen::Index i = 0; i < c_.L.size(); ++i)
    if (c_.L[i] > 0.0) c_.theta = std::min(c_.theta, g_[i] / c_.L[i]);
  c_.M = row_sums_.size() ? row_sums_.maxCoeff() : 0.0;
  c_.zeta = P_.size() ? abs_row_sums(P_).maxCoeff() : 0.0;
}

RpiConstants compute_constants(const LtiSystem& sys, const HPolytope& Y, int s) {
  detail::require(s >= 1, "s must be >= 1");
  ConstantsAccumulator acc(sys, Y);
  while (acc.current().s < s) acc.advance();
  return acc.current();
}

double ParamMargins::worst() const {
  return std::min({inclusion_y, contraction, approximation});
}

ParamMargins param_margins(const RpiConstants& c, const RpiParams& p) {
  ParamMargins m;
  m.inclusion_y = std::isinf(c.theta) ? kInf : (1.0 - p.alpha) * c.theta - p.lambda;
  m.contraction = p.alpha * p.lambda - (p.gamma + p.lambda) * c.zeta;
  m.approximation = (1.0 - p.alpha) * p.mu - (p.alpha * p.gamma + p.lambda) * c.M;
  return m;
}

// ---- H(s) -------------------------------------------------------------------

std::optional<HsSolution> solve_hs(const RpiConstants& c, double gamma, double mu) {
  detail::require(gamma > 0.0 && mu > 0.0, "gamma and mu must be positive");
  const double z = c.zeta;
  if (z >= 1.0) return std::nullopt;

  // Upper end of the lambda interval: min over pieces p + q alpha.
  std::vector<std::pair<double, double>> pieces;
  pieces.emplace_back(1.0, 0.0);
  if (std::isfinite(c.theta)) pieces.emplace_back(c.theta, -c.theta);
  pieces.emplace_back(mu / c.M, -(mu + gamma * c.M) / c.M);
  auto upper = [&](double a) {
    double u = kInf;
    for (const auto& [p, q] : pieces) u = std::min(u, p + q * a);
    return u;
  };

  // Feasible alpha: (alpha - z)(p + q alpha) >= gamma z for every piece.
  double lo = z, hi = 1.0;
  for (const auto& [p, q] : pieces) {
    double a0, a1;
    const bool ok = z > 0.0 ? concave_superlevel(q, p - q * z, -p * z - gamma * z, a0, a1)
                            : concave_superlevel(0.0, q, p, a0, a1);
    if (!ok) return std::nullopt;
    lo = std::max(lo, a0);
    hi = std::min(hi, a1);
  }
  if (!(lo <= hi) || lo >= 1.0) return std::nullopt;

  std::vector<double> cand{lo, hi};
  for (size_t i = 0; i < pieces.size(); ++i)
    for (size_t j = i + 1; j < pieces.size(); ++j) {
      const double dq = pieces[i].second - pieces[j].second;
      if (dq == 0.0) continue;
      const double a = (pieces[j].first - pieces[i].first) / dq;
      if (a > lo && a < hi) cand.push_back(a);
    }
  std::sort(cand.begin(), cand.end());

  double best = -kInf;
  for (double a : cand) best = std::max(best, a + upper(a));
  const double tie = 1e-14 * std::max(1.0, std::fabs(best));
  for (double a : cand) {
    if (a + upper(a) >= best - tie) {
      HsSolution out{a, std::min(1.0, std::max(0.0, upper(a)))};
      if (out.alpha >= 1.0) return std::nullopt;
      return out;
    }
  }
  return std::nullopt;
}

void check_assumptions(const LtiSystem& sys, const HPolytope& Y) {
  detail::require(Y.dim() == sys.ny(), "constraint set dimension differs from n_y");
  const double rho = sys.spectral_radius();
  if (!(rho < 1.0)) {
    std::ostringstream os;
    os << "A is not strictly stable (spectral radius " << rho << ")";
    throw AssumptionError(os.str());
  }
  for (Eigen::Index i = 0; i < Y.g.size(); ++i) {
    if (!(Y.g[i] > 0.0)) {
      std::ostringstream os;
      os << "constraint offsets must be positive; g[" << i << "] = " << Y.g[i];
      throw AssumptionError(os.str());
    }
  }
}

RpiParams select_params(const LtiSystem& sys, const HPolytope& Y, double gamma, double mu,
                        int s_max) {
  detail::require(gamma > 0.0 && mu > 0.0, "gamma and mu must be positive");
  detail::require(s_max >= 1, "s_max must be >= 1");
  check_assumptions(sys, Y);
  ConstantsAccumulator acc(sys, Y);
  while (true) {
    const RpiConstants& c = acc.current();
    if (auto sol = solve_hs(c, gamma, mu)) return RpiParams{c.s, sol->alpha, sol->lambda, gamma, mu};
    if (c.s >= s_max) {
      std::ostringstream os;
      os << "no feasible (alpha, lambda) for s <= " << s_max << "; at s = " << c.s
         << ": zeta = " << c.zeta << ", theta = " << c.theta << ", M = " << c.M;
      throw AssumptionError(os.str());
    }
    acc.advance();
  }
}

// ---- literal inclusions -----------------------------------------------------

double InclusionMargins::worst() const {
  double w = kInf;
  for (const Vector* v : {&output, &contraction, &approximation})
    if (v->size()) w = std::min(w, v->minCoeff());
  return w;
}

InclusionMargins inclusion_margins(const LtiSystem& sys, const HPolytope& Y, const RpiParams& p) {
  const int nx = sys.nx();
  Matrix P = Matrix::Identity(nx, nx);
  Vector sum_out = Vector::Zero(Y.rows());
  Vector sum_state = Vector::Zero(2 * nx);
  const Matrix GC = Y.G * sys.C;
  for (int t = 0; t < p.s; ++t) {
    sum_out += abs_row_sums(GC * P);
    const Vector r = abs_row_sums(P);
    sum_state.head(nx) += r;
    sum_state.tail(nx) += r;
    P = P * sys.A;
  }
  Vector tail(2 * nx);
  tail << abs_row_sums(P), abs_row_sums(P);
  const double inv = 1.0 / (1.0 - p.alpha);

  InclusionMargins m;
  m.output = Y.g - p.lambda * inv * sum_out;
  m.contraction = Vector::Constant(2 * nx, p.alpha * p.lambda) - (p.gamma + p.lambda) * tail;
  m.approximation =
      Vector::Constant(2 * nx, p.mu) - (p.alpha * p.gamma + p.lambda) * inv * sum_state;
  return m;
}

}  // namespace rpisynth
