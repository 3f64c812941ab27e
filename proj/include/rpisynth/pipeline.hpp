#pragma once

// End-to-end stages behind the CLI verbs. Library errors escaping a stage
// keep their class and get the stage name prefixed to the message.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rpisynth/problem_io.hpp"
#include "rpisynth/verifier.hpp"

namespace rpisynth {

using LogFn = std::function<void(const std::string&)>;

/// Parameter selection only: params, constants and the scalar checks.
ResultDoc run_params(const ProblemSpec& spec);

/// params -> assemble -> alternate -> refine -> verify.
ResultDoc run_synth(const ProblemSpec& spec, int threads = 0, const LogFn& log = {});

/// Re-certifies a stored result against the spec. The certificate passes iff
/// every check passes.
Certificate run_verify(const ProblemSpec& spec, const ResultDoc& result);

/// x2+ = A22 x2 + A21 x1, y = C2 x2 + C1 x1: the disturbance set of the
/// standard problem is the constraint set for x1.
ProblemSpec reduce(const PartitionedSpec& spec);

/// Standard-normal B, C, D and a symmetrized A rescaled to spectral radius
/// rho; Y is the unit box and H the "box" preset.
ProblemSpec generate(int nx, int nw, int ny, double rho, std::uint64_t seed);

struct PlotData {
  std::vector<Vector> W_outline;   // n_w = 2
  std::vector<Vector> Y_outline;   // n_y = 2, counterclockwise
  std::vector<Vector> O_boundary;  // support points of O(s, alpha, lambda, W)
  std::vector<std::vector<Vector>> trajectories;  // outputs y(t)
};

/// Points of O(s, alpha, lambda, W) attaining its support in `directions`
/// equally spaced directions (n_y = 2).
std::vector<Vector> output_set_boundary(const LtiSystem& sys, const RpiParams& params,
                                        const BoxHullSet& W, int directions = 360);

PlotData plot_data(const ProblemSpec& spec, const ResultDoc& result, int runs = 3, int steps = 500,
                   std::uint64_t seed = 1);

/// One CSV per panel in `dir`; panels with the wrong dimension are skipped.
/// Returns the written paths.
std::vector<std::string> write_plot_files(const PlotData& data, const std::string& dir);

}  // namespace rpisynth
