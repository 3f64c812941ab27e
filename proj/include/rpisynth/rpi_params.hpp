#pragma once

// Constants certifying the implicit mu-RPI set and the selection of
// (s, alpha, lambda).

#include <optional>
#include <string>

#include "rpisynth/setgeom.hpp"

namespace rpisynth {

struct RpiConstants {
  int s = 0;
  Vector L;            // sum_{t<s} |G C A^t| 1
  double theta = 0.0;  // min_i g_i / L_i over rows with L_i > 0
  double M = 0.0;      // || sum_{t<s} |A^t| 1 ||_inf
  double zeta = 0.0;   // ||A^s||_inf
};

struct RpiParams {
  int s = 0;
  double alpha = 0.0;
  double lambda = 0.0;
  double gamma = 0.0;
  double mu = 0.0;
};

/// Builds the constants for s = 1, 2, ... adding one term per step.
class ConstantsAccumulator {
 public:
  ConstantsAccumulator(const LtiSystem& sys, const HPolytope& Y);

  /// Constants at the current s (starts at 1).
  const RpiConstants& current() const { return c_; }
  void advance();

 private:
  void finish_();

  Matrix GC_;
  Vector g_;
  Matrix A_;
  Matrix P_;         // A^s
  Vector row_sums_;  // sum_{t<s} |A^t| 1
  RpiConstants c_;
};

RpiConstants compute_constants(const LtiSystem& sys, const HPolytope& Y, int s);

/// Signed slacks of the three scalar conditions; all >= 0 means feasible.
struct ParamMargins {
  double inclusion_y = 0.0;    // (1-alpha) theta - lambda
  double contraction = 0.0;    // alpha lambda - (gamma + lambda) zeta
  double approximation = 0.0;  // (1-alpha) mu - (alpha gamma + lambda) M
  double worst() const;
};

ParamMargins param_margins(const RpiConstants& c, const RpiParams& p);

struct HsSolution {
  double alpha = 0.0;
  double lambda = 0.0;
};

/// max alpha + lambda subject to the three conditions, alpha in [0,1),
/// lambda in [0,1]. Exact: the lambda range for fixed alpha is an interval
/// with a piecewise-linear upper end, so the optimum sits at an endpoint of
/// the feasible alpha interval or at a kink. Ties go to the smallest alpha.
std::optional<HsSolution> solve_hs(const RpiConstants& c, double gamma, double mu);

/// Smallest s in [1, s_max] for which solve_hs is feasible. Throws
/// AssumptionError when A is not strictly stable, g has a nonpositive entry,
/// or s_max is exceeded.
RpiParams select_params(const LtiSystem& sys, const HPolytope& Y, double gamma, double mu,
                        int s_max = 1000);

/// Rowwise evaluation of the underlying set inclusions with box support
/// functions (no norm bounds). Each vector holds rhs - lhs.
struct InclusionMargins {
  Vector output;       // g - lambda/(1-alpha) sum_t |G C A^t| 1
  Vector contraction;  // alpha lambda 1 - (gamma+lambda) |[I;-I] A^s| 1
  Vector approximation;  // mu 1 - (alpha gamma + lambda)/(1-alpha) sum_t |[I;-I] A^t| 1
  double worst() const;
};

InclusionMargins inclusion_margins(const LtiSystem& sys, const HPolytope& Y, const RpiParams& p);

/// Throws AssumptionError unless rho(A) < 1 and g > 0.
void check_assumptions(const LtiSystem& sys, const HPolytope& Y);

}  // namespace rpisynth
