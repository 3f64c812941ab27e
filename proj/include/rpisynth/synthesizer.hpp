#pragma once

// Alternating minimization over the two LPs obtained by freezing either the
// convex weights beta or the per-slot box points wbar.

#include <cstdint>
#include <string>
#include <vector>

#include "rpisynth/encoder.hpp"

namespace rpisynth {

struct StepResult {
  Witness v;
  double objective = 0.0;
  long lp_iterations = 0;
};

enum class PStepForm {
  /// One box Sum_j beta_kj Box_j per slot; wbar is reconstructed afterwards.
  kReduced,
  /// wbar kept as variables with every box-membership row.
  kLiteral,
};

/// LP with beta fixed. Throws SolverError if the LP is not solved to
/// optimality.
StepResult p_step(const SynthProblem& p, const Vector& beta, PStepForm form = PStepForm::kReduced);

/// LP over (beta, w, z) with the boxes and wbar of `from` fixed; x and wbar are
/// copied through.
StepResult q_step(const SynthProblem& p, const Witness& from);

struct SynthResult {
  BoxHullSet W;
  Vector epsilon;
  double objective = 0.0;
  /// Objective after every half step: P_1, Q_1, P_2, Q_2, ...
  std::vector<double> history;
  int iterations = 0;
  std::string termination;
  Witness witness;
  double residual = 0.0;  // worst block violation of `witness`
};

/// 1/N everywhere.
Vector uniform_beta(const VariableLayout& layout);

/// Needs N = v_Y: every slot of vertex i puts all weight on box i.
Vector heuristic_beta(const VariableLayout& layout);

/// Weights for N_to >= from.N boxes: each slot keeps its weights and the
/// added boxes get none, so the previous solution stays feasible.
Vector pad_beta(const VariableLayout& from, const Vector& beta, int N_to);

/// Stops when Q_k >= Q_{k-1} - zeta or after max_iters; returns the best
/// iterate seen.
SynthResult alternate(const SynthProblem& p, const Vector& beta0, double zeta = 1e-4,
                      int max_iters = 100);

/// Restarts of alternate() from Dirichlet perturbations of the incumbent
/// weights (shape max(50 beta, 0.05) per entry). Restart r draws from its own
/// stream derived from (seed, r). Keeps the best; ties go to the lowest
/// restart index, and the input wins ties against restarts.
SynthResult refine(const SynthProblem& p, const SynthResult& start, int restarts,
                   std::uint64_t seed, double zeta = 1e-4, int max_iters = 100, int threads = 0);

/// RPISYNTH_THREADS if set and positive, else the hardware concurrency.
int default_threads();

}  // namespace rpisynth
