#pragma once

// Bounded-variable two-phase primal simplex on a dense tableau.
//
//   minimize    c'x
//   subject to  A_ub x <= b_ub,  A_eq x = b_eq,  lower <= x <= upper
//
// Infinite bounds are allowed; free variables are supported natively.

#include <Eigen/SparseCore>

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "rpisynth/types.hpp"

namespace rpisynth {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

struct LpProblem {
  Vector cost;
  SparseMatrix A_ub;
  Vector b_ub;
  SparseMatrix A_eq;
  Vector b_eq;
  Vector lower;
  Vector upper;

  int num_vars() const { return static_cast<int>(cost.size()); }
  /// Throws InputError on inconsistent shapes or non-finite costs.
  void validate() const;
};

/// Row-at-a-time construction of an LpProblem.
class LpBuilder {
 public:
  explicit LpBuilder(int num_vars);

  int num_vars() const { return n_; }
  /// Appends variables, returns the index of the first one.
  int add_vars(int count, double lower = 0.0, double upper = kInf);
  void set_bounds(int var, double lower, double upper);
  void set_cost(int var, double c) { cost_[static_cast<size_t>(var)] = c; }

  using Row = std::vector<std::pair<int, double>>;
  void add_le(const Row& row, double rhs);
  void add_ge(const Row& row, double rhs);
  void add_eq(const Row& row, double rhs);

  int num_le() const { return static_cast<int>(b_ub_.size()); }
  int num_eq() const { return static_cast<int>(b_eq_.size()); }

  LpProblem build() const;

 private:
  int n_;
  std::vector<double> cost_, lower_, upper_;
  std::vector<Triplet> ub_, eq_;
  std::vector<double> b_ub_, b_eq_;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

const char* to_string(LpStatus status);

struct LpOutcome {
  LpStatus status = LpStatus::kInfeasible;
  Vector x;
  double objective = kInf;
  /// Row multipliers. For a minimization, y_ub <= 0 at optimality.
  Vector y_ub;
  Vector y_eq;
  /// c - A_ub' y_ub - A_eq' y_eq
  Vector reduced_costs;
  /// Largest violation of rows or bounds, each row divided by its largest
  /// coefficient.
  double primal_residual = 0.0;
  /// Largest reduced cost of the wrong sign, in the unscaled problem.
  double dual_infeasibility = 0.0;
  long iterations = 0;
  long degenerate_pivots = 0;

  bool optimal() const { return status == LpStatus::kOptimal; }
};

struct LpOptions {
  long max_iterations = 1'000'000;
  /// Degenerate pivots tolerated before switching to Bland's rule.
  long bland_after = 5000;
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-7;
  bool equilibrate = true;
  /// Pivots between rebuilds of the tableau from a fresh basis factorization.
  long refactor_interval = 100;
  /// Geometric-mean scaling passes before the max-abs ones.
  int geometric_passes = 4;
};

/// Throws SolverError if every attempt ends optimal but off its rows.
LpOutcome solve_lp(const LpProblem& problem, const LpOptions& options = {});

/// CPLEX-LP text layout, readable by most open-source solvers. Variable names
/// are x0..x{n-1}, rows c0.. (inequalities) then e0.. (equalities).
void write_lp_format(const LpProblem& problem, std::ostream& os);

}  // namespace rpisynth
