#pragma once

// Independent checks of a candidate (params, W, eps). Nothing here reads the
// synthesizer's variables; only boxes, parameters and the plant.

#include <string>
#include <vector>

#include "rpisynth/rpi_params.hpp"
#include "rpisynth/setgeom.hpp"

namespace rpisynth {

struct Check {
  std::string name;
  bool pass = false;
  double margin = 0.0;  // signed slack, worst over the check
  int location = -1;    // row / vertex of the worst slack, -1 if scalar
};

struct Certificate {
  std::vector<Check> checks;

  bool pass() const;
  double worst_margin() const;
  void add(std::string name, double margin, int location, double tol);
  void merge(const Certificate& other);
  const Check* find(const std::string& name) const;
};

/// The three scalar conditions at params.s and their rowwise set-inclusion
/// counterparts, plus alpha in [0,1) and lambda in [0,1].
Certificate verify_params(const LtiSystem& sys, const HPolytope& Y, const RpiParams& params,
                          double tol = 1e-9);

/// Row-by-row support inequality of O(s, alpha, lambda, W) inside Y.
Certificate verify_output_inclusion(const LtiSystem& sys, const HPolytope& Y,
                                    const RpiParams& params, const BoxHullSet& W,
                                    double tol = 1e-8);

/// B W inside the gamma-cube.
Certificate verify_gamma(const LtiSystem& sys, const BoxHullSet& W, double gamma, double tol = 1e-8);

/// 0 in W. The margin is minus the smallest uniform widening of every box
/// needed to cover the origin (0 when covered).
Certificate verify_origin(const BoxHullSet& W, double tol = 1e-8);

struct DistanceResult {
  Vector epsilon;
  double objective = 0.0;
};

/// min ||eps||_1 such that every vertex is reached in l steps from the origin
/// up to H b <= eps, disturbances in W through the perspective form.
DistanceResult distance_dY(const LtiSystem& sys, const std::vector<Vector>& Y_vertices,
                           const BoxHullSet& W, int l, const Matrix& H);

/// Per vertex: smallest t >= 0 such that the vertex is reachable with
/// H b <= eps + t 1. Margin is -t.
Certificate verify_coverage(const LtiSystem& sys, const std::vector<Vector>& Y_vertices,
                            const BoxHullSet& W, int l, const Matrix& H, const Vector& epsilon,
                            double tol = 1e-8);

struct MonteCarloReport {
  long violations = 0;
  long steps = 0;
  double max_excursion = 0.0;  // max(0, G y - g) over all steps and rows
};

/// `runs` trajectories of length T from x0 = 0 with w(t) sampled from W.
/// Counts steps with G y > g + 1e-8.
MonteCarloReport monte_carlo(const LtiSystem& sys, const BoxHullSet& W, const HPolytope& Y, int T,
                             int runs, Rng& rng);

}  // namespace rpisynth
