#include "rpisynth/lp.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>

namespace rpisynth {

void LpProblem::validate() const {
  const auto n = cost.size();
  detail::require(lower.size() == n && upper.size() == n, "lp: bound vectors must match cost size");
  detail::require(A_ub.cols() == n || A_ub.rows() == 0, "lp: A_ub column count mismatch");
  detail::require(A_eq.cols() == n || A_eq.rows() == 0, "lp: A_eq column count mismatch");
  detail::require(A_ub.rows() == b_ub.size(), "lp: A_ub/b_ub row mismatch");
  detail::require(A_eq.rows() == b_eq.size(), "lp: A_eq/b_eq row mismatch");
  detail::require(cost.allFinite(), "lp: cost must be finite");
  detail::require(b_ub.allFinite() && b_eq.allFinite(), "lp: right-hand sides must be finite");
  for (Eigen::Index j = 0; j < n; ++j) {
    detail::require(!(lower[j] > upper[j]), "lp: lower bound above upper bound");
    detail::require(lower[j] != kInf && upper[j] != -kInf, "lp: empty variable range");
  }
}

// ---- builder ----------------------------------------------------------------

LpBuilder::LpBuilder(int num_vars)
    : n_(num_vars),
      cost_(static_cast<size_t>(num_vars), 0.0),
      lower_(static_cast<size_t>(num_vars), 0.0),
      upper_(static_cast<size_t>(num_vars), kInf) {}

int LpBuilder::add_vars(int count, double lower, double upper) {
  const int first = n_;
  n_ += count;
  cost_.resize(static_cast<size_t>(n_), 0.0);
  lower_.resize(static_cast<size_t>(n_), lower);
  upper_.resize(static_cast<size_t>(n_), upper);
  return first;
}

void LpBuilder::set_bounds(int var, double lower, double upper) {
  lower_[static_cast<size_t>(var)] = lower;
  upper_[static_cast<size_t>(var)] = upper;
}

void LpBuilder::add_le(const Row& row, double rhs) {
  const int r = num_le();
  for (const auto& [col, val] : row)
    if (val != 0.0) ub_.emplace_back(r, col, val);
  b_ub_.push_back(rhs);
}

void LpBuilder::add_ge(const Row& row, double rhs) {
  Row neg(row);
  for (auto& entry : neg) entry.second = -entry.second;
  add_le(neg, -rhs);
}

void LpBuilder::add_eq(const Row& row, double rhs) {
  const int r = num_eq();
  for (const auto& [col, val] : row)
    if (val != 0.0) eq_.emplace_back(r, col, val);
  b_eq_.push_back(rhs);
}

LpProblem LpBuilder::build() const {
  LpProblem p;
  p.cost = Eigen::Map<const Vector>(cost_.data(), n_);
  p.lower = Eigen::Map<const Vector>(lower_.data(), n_);
  p.upper = Eigen::Map<const Vector>(upper_.data(), n_);
  p.A_ub.resize(num_le(), n_);
  p.A_ub.setFromTriplets(ub_.begin(), ub_.end());
  p.A_eq.resize(num_eq(), n_);
  p.A_eq.setFromTriplets(eq_.begin(), eq_.end());
  p.b_ub = Eigen::Map<const Vector>(b_ub_.data(), num_le());
  p.b_eq = Eigen::Map<const Vector>(b_eq_.data(), num_eq());
  return p;
}

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
    case LpStatus::kIterationLimit: return "iteration-limit";
  }
  return "unknown";
}

// ---- simplex ----------------------------------------------------------------

namespace {

constexpr double kAcceptResidual = 1e-8;
// basic values further than this outside their bounds trigger a repair
constexpr double kRepairTol = 1e-7;
constexpr int kMaxRepairs = 20;
// relative to the largest cost
constexpr double kAcceptDual = 1e-7;

double pow2_round(double v) {
  if (!(v > 0.0) || !std::isfinite(v)) return 1.0;
  return std::exp2(std::round(std::log2(v)));
}

enum class VarState : unsigned char { kBasic, kAtLower, kAtUpper, kFreeZero };

// Dense tableau simplex over the equilibrated standard form
//   [A_ub I 0; A_eq 0 0] [x; s] (+ artificials) = b.
class TableauSimplex {
 public:
  TableauSimplex(const LpProblem& p, const LpOptions& opt) : opt_(opt) {
    n_ = p.num_vars();
    m1_ = static_cast<int>(p.A_ub.rows());
    m2_ = static_cast<int>(p.A_eq.rows());
    m_ = m1_ + m2_;
    scale_(p);
  }

  LpOutcome run(const LpProblem& p);
  bool numerical_trouble() const { return trouble_; }

 private:
  void scale_(const LpProblem& p);
  void setup_();
  double& T(int i, int j) { return tab_[static_cast<size_t>(i) * ncols_ + static_cast<size_t>(j)]; }
  double* row(int i) { return tab_.data() + static_cast<size_t>(i) * ncols_; }
  void compute_reduced_costs_(const std::vector<double>& cost);
  LpStatus iterate_(const std::vector<double>& cost);
  int price_() const;
  void pivot_(int p, int q);
  bool drive_out_artificials_();
  bool factor_basis_(Eigen::SparseLU<Eigen::SparseMatrix<double>>& lu) const;
  bool reinvert_();
  double basic_infeasibility_() const;
  bool repair_(double tol = kRepairTol);
  LpStatus optimize_(const std::vector<double>& cost);

  const LpOptions& opt_;
  int n_ = 0, m1_ = 0, m2_ = 0, m_ = 0, ncols_ = 0, nart_ = 0;

  // Scaled data, row-major sparse rows over the structural columns.
  std::vector<std::vector<std::pair<int, double>>> rows_;
  std::vector<double> b_, row_scale_, col_scale_;
  std::vector<double> cost_;  // structural, scaled
  std::vector<double> lb_, ub_;  // all columns
  std::vector<int> art_row_;     // artificial column -> row
  std::vector<double> art_sign_;

  std::vector<double> tab_;
  std::vector<double> d_;     // reduced costs
  std::vector<double> devex_;
  std::vector<double> x_;     // values of all columns
  std::vector<int> basis_;    // row -> column
  std::vector<VarState> state_;
  std::vector<int> nz_;       // scratch: nonzeros of pivot row
  long iters_ = 0, degenerate_ = 0, since_refactor_ = 0;
  bool lost_ = false;
  bool trouble_ = false;  // gave up on a repair
  int repairs_ = 0;
  bool bland_ = false;
};

void TableauSimplex::scale_(const LpProblem& p) {
  rows_.assign(static_cast<size_t>(m_), {});
  b_.assign(static_cast<size_t>(m_), 0.0);
  for (int i = 0; i < m1_; ++i) {
    for (SparseMatrix::InnerIterator it(p.A_ub, i); it; ++it)
      if (it.value() != 0.0) rows_[static_cast<size_t>(i)].emplace_back(static_cast<int>(it.col()), it.value());
    b_[static_cast<size_t>(i)] = p.b_ub[i];
  }
  for (int i = 0; i < m2_; ++i) {
    for (SparseMatrix::InnerIterator it(p.A_eq, i); it; ++it)
      if (it.value() != 0.0)
        rows_[static_cast<size_t>(m1_ + i)].emplace_back(static_cast<int>(it.col()), it.value());
    b_[static_cast<size_t>(m1_ + i)] = p.b_eq[i];
  }
  row_scale_.assign(static_cast<size_t>(m_), 1.0);
  col_scale_.assign(static_cast<size_t>(n_), 1.0);
  if (opt_.equilibrate) {
    // Geometric-mean passes pull each row and column range toward 1 around
    // its centre, then one max-abs pass. Factors are powers of two so scaling
    // is exact.
    auto row_pass = [&](bool geometric) {
      for (int i = 0; i < m_; ++i) {
        double mx = 0.0, mn = kInf;
        for (auto& [j, v] : rows_[static_cast<size_t>(i)]) {
          mx = std::max(mx, std::abs(v));
          mn = std::min(mn, std::abs(v));
        }
        if (mx == 0.0) continue;
        const double f = pow2_round(geometric ? 1.0 / std::sqrt(mx * mn) : 1.0 / mx);
        for (auto& e : rows_[static_cast<size_t>(i)]) e.second *= f;
        b_[static_cast<size_t>(i)] *= f;
        row_scale_[static_cast<size_t>(i)] *= f;
      }
    };
    auto col_pass = [&](bool geometric) {
      std::vector<double> cmax(static_cast<size_t>(n_), 0.0), cmin(static_cast<size_t>(n_), kInf);
      for (const auto& r : rows_)
        for (const auto& [j, v] : r) {
          cmax[static_cast<size_t>(j)] = std::max(cmax[static_cast<size_t>(j)], std::abs(v));
          cmin[static_cast<size_t>(j)] = std::min(cmin[static_cast<size_t>(j)], std::abs(v));
        }
      std::vector<double> f(static_cast<size_t>(n_), 1.0);
      for (int j = 0; j < n_; ++j) {
        const double mx = cmax[static_cast<size_t>(j)];
        if (mx > 0.0) f[static_cast<size_t>(j)] = pow2_round(geometric ? 1.0 / std::sqrt(mx * cmin[static_cast<size_t>(j)]) : 1.0 / mx);
      }
      for (auto& r : rows_)
        for (auto& e : r) e.second *= f[static_cast<size_t>(e.first)];
      for (int j = 0; j < n_; ++j) col_scale_[static_cast<size_t>(j)] *= f[static_cast<size_t>(j)];
    };
    for (int pass = 0; pass < opt_.geometric_passes; ++pass) {
      row_pass(true);
      col_pass(true);
    }
    for (int pass = 0; pass < 2; ++pass) {
      row_pass(false);
      col_pass(false);
    }
  }
  // x = S x'  =>  c' = S c, bounds' = bounds / S
  cost_.resize(static_cast<size_t>(n_));
  lb_.assign(static_cast<size_t>(n_ + m1_), 0.0);
  ub_.assign(static_cast<size_t>(n_ + m1_), kInf);
  for (int j = 0; j < n_; ++j) {
    const double s = col_scale_[static_cast<size_t>(j)];
    cost_[static_cast<size_t>(j)] = p.cost[j] * s;
    lb_[static_cast<size_t>(j)] = p.lower[j] / s;
    ub_[static_cast<size_t>(j)] = p.upper[j] / s;
  }
}

void TableauSimplex::setup_() {
  const int nstruct = n_ + m1_;
  x_.assign(static_cast<size_t>(nstruct), 0.0);
  state_.assign(static_cast<size_t>(nstruct), VarState::kAtLower);
  for (int j = 0; j < n_; ++j) {
    const double lo = lb_[static_cast<size_t>(j)], hi = ub_[static_cast<size_t>(j)];
    if (std::isfinite(lo)) {
      x_[static_cast<size_t>(j)] = lo;
      state_[static_cast<size_t>(j)] = VarState::kAtLower;
    } else if (std::isfinite(hi)) {
      x_[static_cast<size_t>(j)] = hi;
      state_[static_cast<size_t>(j)] = VarState::kAtUpper;
    } else {
      x_[static_cast<size_t>(j)] = 0.0;
      state_[static_cast<size_t>(j)] = VarState::kFreeZero;
    }
  }
  // Residuals decide which rows need an artificial.
  std::vector<double> resid(static_cast<size_t>(m_));
  for (int i = 0; i < m_; ++i) {
    double r = b_[static_cast<size_t>(i)];
    for (const auto& [j, v] : rows_[static_cast<size_t>(i)]) r -= v * x_[static_cast<size_t>(j)];
    resid[static_cast<size_t>(i)] = r;
  }
  art_row_.clear();
  art_sign_.clear();
  std::vector<int> row_art(static_cast<size_t>(m_), -1);
  for (int i = 0; i < m_; ++i) {
    const double r = resid[static_cast<size_t>(i)];
    const bool ineq = i < m1_;
    if (ineq && r >= -opt_.feasibility_tol) continue;
    row_art[static_cast<size_t>(i)] = static_cast<int>(art_row_.size());
    art_row_.push_back(i);
    // slack is nonbasic at 0, so for an inequality the artificial absorbs -r.
    art_sign_.push_back(ineq ? -1.0 : (r >= 0.0 ? 1.0 : -1.0));
  }
  nart_ = static_cast<int>(art_row_.size());
  ncols_ = nstruct + nart_;
  lb_.resize(static_cast<size_t>(ncols_), 0.0);
  ub_.resize(static_cast<size_t>(ncols_), kInf);
  x_.resize(static_cast<size_t>(ncols_), 0.0);
  state_.resize(static_cast<size_t>(ncols_), VarState::kAtLower);

  tab_.assign(static_cast<size_t>(m_) * static_cast<size_t>(ncols_), 0.0);
  basis_.assign(static_cast<size_t>(m_), -1);
  for (int i = 0; i < m_; ++i) {
    const int a = row_art[static_cast<size_t>(i)];
    // Row is scaled so that its basic column has coefficient +1.
    const double sign = (a >= 0) ? art_sign_[static_cast<size_t>(a)] : 1.0;
    double* t = row(i);
    for (const auto& [j, v] : rows_[static_cast<size_t>(i)]) t[j] = v * sign;
    if (i < m1_) t[n_ + i] = sign;
    if (a >= 0) {
      const int col = n_ + m1_ + a;
      t[col] = 1.0;
      basis_[static_cast<size_t>(i)] = col;
      x_[static_cast<size_t>(col)] = std::abs(resid[static_cast<size_t>(i)]);
    } else {
      basis_[static_cast<size_t>(i)] = n_ + i;
      x_[static_cast<size_t>(n_ + i)] = std::max(0.0, resid[static_cast<size_t>(i)]);
    }
    state_[static_cast<size_t>(basis_[static_cast<size_t>(i)])] = VarState::kBasic;
  }
  devex_.assign(static_cast<size_t>(ncols_), 1.0);
  nz_.reserve(static_cast<size_t>(ncols_));
}

void TableauSimplex::compute_reduced_costs_(const std::vector<double>& cost) {
  d_.assign(cost.begin(), cost.end());
  for (int i = 0; i < m_; ++i) {
    const double cb = cost[static_cast<size_t>(basis_[static_cast<size_t>(i)])];
    if (cb == 0.0) continue;
    const double* t = row(i);
    for (int j = 0; j < ncols_; ++j) d_[static_cast<size_t>(j)] -= cb * t[j];
  }
  for (int i = 0; i < m_; ++i) d_[static_cast<size_t>(basis_[static_cast<size_t>(i)])] = 0.0;
}

int TableauSimplex::price_() const {
  int best = -1;
  double best_score = 0.0;
  const double tol = opt_.optimality_tol;
  for (int j = 0; j < ncols_; ++j) {
    const auto st = state_[static_cast<size_t>(j)];
    if (st == VarState::kBasic) continue;
    const double lo = lb_[static_cast<size_t>(j)], hi = ub_[static_cast<size_t>(j)];
    if (lo == hi) continue;
    const double dj = d_[static_cast<size_t>(j)];
    bool eligible = false;
    if (st == VarState::kAtLower) eligible = dj < -tol;
    else if (st == VarState::kAtUpper) eligible = dj > tol;
    else eligible = std::abs(dj) > tol;
    if (!eligible) continue;
    if (bland_) return j;
    const double score = dj * dj / devex_[static_cast<size_t>(j)];
    if (score > best_score) {
      best_score = score;
      best = j;
    }
  }
  return best;
}

void TableauSimplex::pivot_(int p, int q) {
  double* tp = row(p);
  const double piv = tp[q];
  const double inv = 1.0 / piv;
  nz_.clear();
  for (int j = 0; j < ncols_; ++j) {
    if (tp[j] != 0.0) {
      tp[j] *= inv;
      nz_.push_back(j);
    }
  }
  tp[q] = 1.0;
  for (int i = 0; i < m_; ++i) {
    if (i == p) continue;
    double* ti = row(i);
    const double f = ti[q];
    if (f == 0.0) continue;
    for (const int j : nz_) ti[j] -= f * tp[j];
    ti[q] = 0.0;
  }
  const double dq = d_[static_cast<size_t>(q)];
  if (dq != 0.0)
    for (const int j : nz_) d_[static_cast<size_t>(j)] -= dq * tp[j];
  d_[static_cast<size_t>(q)] = 0.0;

  // Devex reference weights.
  const double wq = devex_[static_cast<size_t>(q)];
  for (const int j : nz_) {
    if (j == q) continue;
    const double r = tp[j];
    devex_[static_cast<size_t>(j)] = std::max(devex_[static_cast<size_t>(j)], r * r * wq);
  }
  const int leaving = basis_[static_cast<size_t>(p)];
  devex_[static_cast<size_t>(leaving)] = std::max(wq * inv * inv, 1.0);
  basis_[static_cast<size_t>(p)] = q;
  state_[static_cast<size_t>(q)] = VarState::kBasic;
}

LpStatus TableauSimplex::iterate_(const std::vector<double>& cost) {
  compute_reduced_costs_(cost);
  const double ftol = opt_.feasibility_tol;
  const double ptol = opt_.pivot_tol;
  while (true) {
    if (iters_ >= opt_.max_iterations) return LpStatus::kIterationLimit;
    if (opt_.refactor_interval > 0 && since_refactor_ >= opt_.refactor_interval) {
      if (reinvert_()) compute_reduced_costs_(cost);
      since_refactor_ = 0;
      if (basic_infeasibility_() > kRepairTol) {
        lost_ = true;
        return LpStatus::kInfeasible;
      }
    }
    int q = price_();
    if (q < 0 && since_refactor_ > 0) {
      // confirm optimality on fresh data
      if (reinvert_()) compute_reduced_costs_(cost);
      since_refactor_ = 0;
      if (basic_infeasibility_() > kRepairTol) {
        lost_ = true;
        return LpStatus::kInfeasible;
      }
      q = price_();
    }
    if (q < 0) return LpStatus::kOptimal;
    ++iters_;

    const auto st = state_[static_cast<size_t>(q)];
    double dir;
    if (st == VarState::kAtLower) dir = 1.0;
    else if (st == VarState::kAtUpper) dir = -1.0;
    else dir = d_[static_cast<size_t>(q)] < 0.0 ? 1.0 : -1.0;

    // Harris two-pass ratio test.
    double theta_max = kInf;
    for (int i = 0; i < m_; ++i) {
      const double a = dir * T(i, q);
      const int b = basis_[static_cast<size_t>(i)];
      const double xb = x_[static_cast<size_t>(b)];
      if (a > ptol) {
        const double lo = lb_[static_cast<size_t>(b)];
        if (std::isfinite(lo)) theta_max = std::min(theta_max, (xb - lo + ftol) / a);
      } else if (a < -ptol) {
        const double hi = ub_[static_cast<size_t>(b)];
        if (std::isfinite(hi)) theta_max = std::min(theta_max, (hi - xb + ftol) / -a);
      }
    }
    const double range = ub_[static_cast<size_t>(q)] - lb_[static_cast<size_t>(q)];
    if (!std::isfinite(theta_max) && !std::isfinite(range)) return LpStatus::kUnbounded;

    int p = -1;
    double theta = kInf;
    double best_abs = 0.0;
    for (int i = 0; i < m_; ++i) {
      const double a = dir * T(i, q);
      const int b = basis_[static_cast<size_t>(i)];
      const double xb = x_[static_cast<size_t>(b)];
      double ratio;
      if (a > ptol) {
        const double lo = lb_[static_cast<size_t>(b)];
        if (!std::isfinite(lo)) continue;
        ratio = (xb - lo) / a;
      } else if (a < -ptol) {
        const double hi = ub_[static_cast<size_t>(b)];
        if (!std::isfinite(hi)) continue;
        ratio = (hi - xb) / -a;
      } else {
        continue;
      }
      if (bland_) {
        // textbook ratio test, ties by smallest basic index
        if (p < 0 || ratio < theta - 1e-12 ||
            (ratio <= theta + 1e-12 && b < basis_[static_cast<size_t>(p)])) {
          p = i;
          theta = ratio;
        }
      } else if (ratio <= theta_max && std::abs(a) > best_abs) {
        best_abs = std::abs(a);
        p = i;
        theta = ratio;
      }
    }
    theta = std::max(theta, 0.0);

    if (std::isfinite(range) && (p < 0 || range <= theta)) {
      // Bound flip of the entering variable, basis unchanged.
      for (int i = 0; i < m_; ++i) {
        const double a = T(i, q);
        if (a != 0.0) x_[static_cast<size_t>(basis_[static_cast<size_t>(i)])] -= dir * a * range;
      }
      if (dir > 0) {
        x_[static_cast<size_t>(q)] = ub_[static_cast<size_t>(q)];
        state_[static_cast<size_t>(q)] = VarState::kAtUpper;
      } else {
        x_[static_cast<size_t>(q)] = lb_[static_cast<size_t>(q)];
        state_[static_cast<size_t>(q)] = VarState::kAtLower;
      }
      continue;
    }
    if (p < 0) return LpStatus::kUnbounded;

    if (theta < 1e-12) {
      ++degenerate_;
      if (!bland_ && degenerate_ >= opt_.bland_after) bland_ = true;
    }
    for (int i = 0; i < m_; ++i) {
      const double a = T(i, q);
      if (a != 0.0) x_[static_cast<size_t>(basis_[static_cast<size_t>(i)])] -= dir * a * theta;
    }
    const int leaving = basis_[static_cast<size_t>(p)];
    const double a_p = dir * T(p, q);
    if (a_p > 0) {
      x_[static_cast<size_t>(leaving)] = lb_[static_cast<size_t>(leaving)];
      state_[static_cast<size_t>(leaving)] = VarState::kAtLower;
    } else {
      x_[static_cast<size_t>(leaving)] = ub_[static_cast<size_t>(leaving)];
      state_[static_cast<size_t>(leaving)] = VarState::kAtUpper;
    }
    x_[static_cast<size_t>(q)] += dir * theta;
    pivot_(p, q);
    ++since_refactor_;
  }
}

bool TableauSimplex::drive_out_artificials_() {
  const int first_art = n_ + m1_;
  for (int i = 0; i < m_; ++i) {
    if (basis_[static_cast<size_t>(i)] < first_art) continue;
    const double* t = row(i);
    int best = -1;
    double best_abs = 1e-7;
    for (int j = 0; j < first_art; ++j) {
      if (state_[static_cast<size_t>(j)] == VarState::kBasic) continue;
      if (std::abs(t[j]) > best_abs) {
        best_abs = std::abs(t[j]);
        best = j;
      }
    }
    if (best < 0) continue;  // redundant row: artificial stays basic, fixed at 0
    const int art = basis_[static_cast<size_t>(i)];
    // Degenerate pivot: the entering variable keeps its value and the
    // artificial (numerically ~0) leaves.
    const double xa = x_[static_cast<size_t>(art)];
    const double delta = xa / t[best];
    for (int r = 0; r < m_; ++r) {
      const double a = T(r, best);
      if (a != 0.0) x_[static_cast<size_t>(basis_[static_cast<size_t>(r)])] -= a * delta;
    }
    x_[static_cast<size_t>(best)] += delta;
    x_[static_cast<size_t>(art)] = 0.0;
    state_[static_cast<size_t>(art)] = VarState::kAtLower;
    pivot_(i, best);
  }
  return true;
}

// Basis matrix over the unsigned scaled rows: slacks +1, artificials art_sign.
bool TableauSimplex::factor_basis_(Eigen::SparseLU<Eigen::SparseMatrix<double>>& lu) const {
  std::vector<Triplet> trip;
  std::vector<int> col_of_basis(static_cast<size_t>(ncols_), -1);
  for (int i = 0; i < m_; ++i) col_of_basis[static_cast<size_t>(basis_[static_cast<size_t>(i)])] = i;
  for (int i = 0; i < m_; ++i) {
    for (const auto& [j, v] : rows_[static_cast<size_t>(i)]) {
      const int k = col_of_basis[static_cast<size_t>(j)];
      if (k >= 0) trip.emplace_back(i, k, v);
    }
    if (i < m1_) {
      const int k = col_of_basis[static_cast<size_t>(n_ + i)];
      if (k >= 0) trip.emplace_back(i, k, 1.0);
    }
  }
  for (int a = 0; a < nart_; ++a) {
    const int k = col_of_basis[static_cast<size_t>(n_ + m1_ + a)];
    if (k >= 0) trip.emplace_back(art_row_[static_cast<size_t>(a)], k, art_sign_[static_cast<size_t>(a)]);
  }
  Eigen::SparseMatrix<double> B(m_, m_);
  B.setFromTriplets(trip.begin(), trip.end());
  B.makeCompressed();
  lu.compute(B);
  return lu.info() == Eigen::Success;
}

// Rebuilds the tableau and the basic values from the original rows, dropping
// accumulated elimination error. Reduced costs are left to the caller.
bool TableauSimplex::reinvert_() {
  if (m_ == 0) return true;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  if (!factor_basis_(lu)) return false;

  std::vector<std::vector<std::pair<int, double>>> cols(static_cast<size_t>(n_));
  for (int i = 0; i < m_; ++i)
    for (const auto& [j, v] : rows_[static_cast<size_t>(i)]) cols[static_cast<size_t>(j)].emplace_back(i, v);

  Vector rhs(m_);
  for (int i = 0; i < m_; ++i) rhs[i] = b_[static_cast<size_t>(i)];
  Vector a(m_);
  std::vector<double> fresh(static_cast<size_t>(m_) * static_cast<size_t>(ncols_), 0.0);
  for (int j = 0; j < ncols_; ++j) {
    a.setZero();
    if (j < n_) {
      for (const auto& [i, v] : cols[static_cast<size_t>(j)]) a[i] = v;
    } else if (j < n_ + m1_) {
      a[j - n_] = 1.0;
    } else {
      const int k = j - n_ - m1_;
      a[art_row_[static_cast<size_t>(k)]] = art_sign_[static_cast<size_t>(k)];
    }
    if (state_[static_cast<size_t>(j)] != VarState::kBasic) {
      const double xj = x_[static_cast<size_t>(j)];
      if (xj != 0.0) rhs -= xj * a;
    }
    const Vector t = lu.solve(a);
    if (!t.allFinite()) return false;
    for (int i = 0; i < m_; ++i)
      if (std::abs(t[i]) > 1e-14) fresh[static_cast<size_t>(i) * ncols_ + static_cast<size_t>(j)] = t[i];
  }
  const Vector xb = lu.solve(rhs);
  if (!xb.allFinite()) return false;
  for (int i = 0; i < m_; ++i) {
    const int b = basis_[static_cast<size_t>(i)];
    // basic columns are exact unit vectors
    double* r = fresh.data() + static_cast<size_t>(i) * ncols_;
    for (int k = 0; k < m_; ++k) r[basis_[static_cast<size_t>(k)]] = 0.0;
    r[b] = 1.0;
    x_[static_cast<size_t>(b)] = xb[i];
  }
  tab_.swap(fresh);
  return true;
}

double TableauSimplex::basic_infeasibility_() const {
  double worst = 0.0;
  for (int i = 0; i < m_; ++i) {
    const auto b = static_cast<size_t>(basis_[static_cast<size_t>(i)]);
    worst = std::max({worst, lb_[b] - x_[b], x_[b] - ub_[b]});
  }
  return worst;
}

// Phase 1 from the current basis: every basic variable outside its bounds
// gets the violated bound as its only bound on the far side and a unit cost
// pulling it back. One round reaches zero infeasibility unless the rows are
// inconsistent; rounds repeat when refactoring drifts again.
bool TableauSimplex::repair_(double tol) {
  for (int round = 0; round < 10; ++round) {
    struct Saved {
      size_t col;
      double lo, hi;
      bool below;
    };
    std::vector<Saved> saved;
    std::vector<double> cost(static_cast<size_t>(ncols_), 0.0);
    for (int i = 0; i < m_; ++i) {
      const auto b = static_cast<size_t>(basis_[static_cast<size_t>(i)]);
      if (x_[b] < lb_[b] - tol) {
        saved.push_back({b, lb_[b], ub_[b], true});
        cost[b] = -1.0;
        ub_[b] = lb_[b];
        lb_[b] = -kInf;
      } else if (x_[b] > ub_[b] + tol) {
        saved.push_back({b, lb_[b], ub_[b], false});
        cost[b] = 1.0;
        lb_[b] = ub_[b];
        ub_[b] = kInf;
      }
    }
    if (saved.empty()) return true;
    lost_ = false;
    const LpStatus st = iterate_(cost);
    for (const Saved& s : saved) {
      lb_[s.col] = s.lo;
      ub_[s.col] = s.hi;
      // left the basis at the violated bound
      if (state_[s.col] == VarState::kAtUpper && s.below) state_[s.col] = VarState::kAtLower;
      else if (state_[s.col] == VarState::kAtLower && !s.below) state_[s.col] = VarState::kAtUpper;
    }
    if (st == LpStatus::kIterationLimit) return false;
    if (!lost_ && basic_infeasibility_() > tol) return false;
  }
  lost_ = false;
  return basic_infeasibility_() <= tol;
}

LpStatus TableauSimplex::optimize_(const std::vector<double>& cost) {
  while (true) {
    const LpStatus st = iterate_(cost);
    if (!lost_) return st;
    lost_ = false;
    // the same drift coming back means the basis is too ill-conditioned
    if (++repairs_ > kMaxRepairs || !repair_()) {
      trouble_ = true;
      return LpStatus::kInfeasible;
    }
    if (iters_ >= opt_.max_iterations) return LpStatus::kIterationLimit;
  }
}

LpOutcome TableauSimplex::run(const LpProblem& p) {
  LpOutcome out;
  setup_();

  if (nart_ > 0) {
    std::vector<double> phase1(static_cast<size_t>(ncols_), 0.0);
    for (int a = 0; a < nart_; ++a) phase1[static_cast<size_t>(n_ + m1_ + a)] = 1.0;
    const LpStatus st = optimize_(phase1);
    if (st == LpStatus::kIterationLimit) {
      out.status = st;
      out.iterations = iters_;
      return out;
    }
    double infeas = 0.0;
    double bmax = 1.0;
    for (int a = 0; a < nart_; ++a) infeas += x_[static_cast<size_t>(n_ + m1_ + a)];
    for (double v : b_) bmax = std::max(bmax, std::abs(v));
    if (infeas > 1e-8 * bmax) {
      out.status = LpStatus::kInfeasible;
      out.iterations = iters_;
      out.degenerate_pivots = degenerate_;
      return out;
    }
    for (int a = 0; a < nart_; ++a) {
      const auto col = static_cast<size_t>(n_ + m1_ + a);
      ub_[col] = 0.0;
      if (state_[col] != VarState::kBasic) x_[col] = 0.0;
    }
    drive_out_artificials_();
  }

  std::vector<double> phase2(static_cast<size_t>(ncols_), 0.0);
  std::copy(cost_.begin(), cost_.end(), phase2.begin());
  LpStatus st = optimize_(phase2);
  if (st == LpStatus::kOptimal) {
    // tighten to the final tolerance on fresh data
    if (since_refactor_ > 0 && reinvert_()) since_refactor_ = 0;
    if (basic_infeasibility_() > opt_.feasibility_tol) {
      if (repair_(opt_.feasibility_tol)) st = optimize_(phase2);
      else trouble_ = true;
    }
  }
  out.status = st;
  out.iterations = iters_;
  out.degenerate_pivots = degenerate_;
  if (st != LpStatus::kOptimal) return out;

  if (since_refactor_ > 0) reinvert_();
  // Unscale primal.
  out.x.resize(n_);
  for (int j = 0; j < n_; ++j) out.x[j] = x_[static_cast<size_t>(j)] * col_scale_[static_cast<size_t>(j)];
  out.objective = p.cost.dot(out.x);

  // Duals from B' y = c_B on the scaled system.
  {
    Vector cb(m_);
    for (int i = 0; i < m_; ++i) {
      const int b = basis_[static_cast<size_t>(i)];
      cb[i] = b < n_ ? cost_[static_cast<size_t>(b)] : 0.0;
    }
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    Vector y = Vector::Zero(m_);
    if (m_ > 0 && factor_basis_(lu)) y = lu.transpose().solve(cb);
    out.y_ub.resize(m1_);
    out.y_eq.resize(m2_);
    for (int i = 0; i < m1_; ++i) out.y_ub[i] = y[i] * row_scale_[static_cast<size_t>(i)];
    for (int i = 0; i < m2_; ++i) out.y_eq[i] = y[m1_ + i] * row_scale_[static_cast<size_t>(m1_ + i)];
    out.reduced_costs = p.cost;
    if (m1_ > 0) out.reduced_costs -= p.A_ub.transpose() * out.y_ub;
    if (m2_ > 0) out.reduced_costs -= p.A_eq.transpose() * out.y_eq;
    double dinf = 0.0;
    for (int j = 0; j < n_; ++j) {
      const double dj = out.reduced_costs[j];
      switch (state_[static_cast<size_t>(j)]) {
        case VarState::kAtLower: dinf = std::max(dinf, lb_[static_cast<size_t>(j)] == ub_[static_cast<size_t>(j)] ? 0.0 : -dj); break;
        case VarState::kAtUpper: dinf = std::max(dinf, lb_[static_cast<size_t>(j)] == ub_[static_cast<size_t>(j)] ? 0.0 : dj); break;
        default: dinf = std::max(dinf, std::abs(dj));
      }
    }
    out.dual_infeasibility = dinf;
  }

  // Residual on the original rows, each divided by its largest coefficient,
  // and on the original bounds.
  double res = 0.0;
  auto row_residual = [&](const SparseMatrix& A, const Vector& b, bool equality) {
    if (A.rows() == 0) return;
    const Vector ax = A * out.x;
    Vector rmax = Vector::Zero(A.rows());
    for (int k = 0; k < A.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(A, k); it; ++it)
        rmax[it.row()] = std::max(rmax[it.row()], std::abs(it.value()));
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      const double viol = (ax[i] - b[i]) / (rmax[i] > 0.0 ? rmax[i] : 1.0);
      res = std::max(res, equality ? std::abs(viol) : viol);
    }
  };
  row_residual(p.A_ub, p.b_ub, false);
  row_residual(p.A_eq, p.b_eq, true);
  for (int j = 0; j < n_; ++j) {
    res = std::max(res, p.lower[j] - out.x[j]);
    res = std::max(res, out.x[j] - p.upper[j]);
  }
  out.primal_residual = res;
  return out;
}

}  // namespace

LpOutcome solve_lp(const LpProblem& problem, const LpOptions& options) {
  problem.validate();
  LpOptions opt = options;
  const double dual_tol = kAcceptDual * std::max(1.0, problem.cost.cwiseAbs().maxCoeff());
  std::optional<LpOutcome> feasible;  // optimal on its rows, duals off
  std::optional<LpOutcome> verdict;  // last infeasible or unbounded answer
  LpOutcome out;
  // An ill-conditioned basis can leave the point off its rows or stop short of
  // the optimum. Retry with other scaling, stricter pivots and more frequent
  // refactoring.
  for (int attempt = 0; attempt < 3; ++attempt) {
    TableauSimplex simplex(problem, opt);
    out = simplex.run(problem);
    if (!simplex.numerical_trouble()) {
      if (out.optimal() && out.primal_residual <= kAcceptResidual) {
        if (out.dual_infeasibility <= dual_tol) return out;
        if (!feasible || out.objective < feasible->objective) feasible = out;
      } else if (!out.optimal()) {
        // infeasible, unbounded or out of iterations twice in a row
        if (verdict && verdict->status == out.status) return out;
        verdict = out;
      }
    }
    opt.geometric_passes = attempt == 0 ? 0 : 2 * options.geometric_passes + 1;
    opt.pivot_tol *= 10.0;
    opt.refactor_interval = std::max<long>(10, opt.refactor_interval / 4);
  }
  if (feasible) return *feasible;
  if (verdict) return *verdict;
  throw SolverError(out.optimal() ? "simplex ended with primal residual " + std::to_string(out.primal_residual)
                                  : std::string("simplex could not restore primal feasibility"));
}

void write_lp_format(const LpProblem& p, std::ostream& os) {
  os.precision(17);
  auto term = [&](double v, int j, bool first) {
    const double a = std::fabs(v);
    os << (v >= 0 ? (first ? "" : "+ ") : (first ? "-" : "- "));
    if (a != 1.0) os << a << ' ';
    os << 'x' << j;
  };
  os << "\\ generated by rpisynth\nMinimize\n obj:";
  bool first = true;
  for (int j = 0; j < p.num_vars(); ++j) {
    if (p.cost[j] == 0.0) continue;
    os << ' ';
    term(p.cost[j], j, first);
    first = false;
  }
  if (first) os << " 0 x0";
  os << "\nSubject To\n";
  auto emit_rows = [&](const SparseMatrix& A, const Vector& b, const char* prefix, const char* sense) {
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      os << ' ' << prefix << i << ':';
      bool f = true;
      for (SparseMatrix::InnerIterator it(A, i); it; ++it) {
        os << ' ';
        term(it.value(), static_cast<int>(it.col()), f);
        f = false;
      }
      if (f) os << " 0 x0";
      os << ' ' << sense << ' ' << b[i] << '\n';
    }
  };
  emit_rows(p.A_ub, p.b_ub, "c", "<=");
  emit_rows(p.A_eq, p.b_eq, "e", "=");
  os << "Bounds\n";
  for (int j = 0; j < p.num_vars(); ++j) {
    const double lo = p.lower[j], hi = p.upper[j];
    if (lo == -kInf && hi == kInf) {
      os << " x" << j << " free\n";
    } else if (lo == hi) {
      os << " x" << j << " = " << lo << '\n';
    } else {
      os << ' ';
      if (lo == -kInf) os << "-inf";
      else os << lo;
      os << " <= x" << j << " <= ";
      if (hi == kInf) os << "+inf";
      else os << hi;
      os << '\n';
    }
  }
  os << "End\n";
}

}  // namespace rpisynth
