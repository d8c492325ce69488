#pragma once

#include <vector>

#include "lsmrn/graph.hpp"
#include "lsmrn/model.hpp"

namespace lsmrn {

/// Floor applied to every multiplicative-update denominator.
inline constexpr double kDenominatorFloor = 1e-12;

/// One multiplicative update of U_t (exponent 1/4), all other factors fixed.
void step_latent(LatentState& state, const SnapshotSeries& series, const LaplacianTriple& laplacian,
                 const Hyperparams& hyper, int t);

/// One multiplicative update of the interaction matrix B.
void step_interaction(LatentState& state, const SnapshotSeries& series);

/// One multiplicative update of the transition matrix A. Requires T >= 2.
void step_transition(LatentState& state);

struct GlobalLearnResult {
  LatentState state;
  /// Objective before the first iteration followed by one value per iteration.
  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = false;
};

/// Cyclic multiplicative updates of every U_t, then B, then A until the
/// relative objective change drops below `hyper.tol` or `hyper.max_iters`
/// iterations ran. `warm_start`, when given, replaces the seeded
/// initialization.
GlobalLearnResult global_learn(const SnapshotSeries& series, const LaplacianTriple& laplacian,
                               const Hyperparams& hyper, const LatentState* warm_start = nullptr);

}  // namespace lsmrn
