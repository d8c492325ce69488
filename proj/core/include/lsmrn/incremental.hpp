#pragma once

#include <cstddef>
#include <vector>

#include "lsmrn/graph.hpp"
#include "lsmrn/model.hpp"

namespace lsmrn {

/// Vertices whose outgoing or incoming observed edges are mispredicted.
struct CandidateSet {
  std::vector<VertexId> members;  // ascending vertex id

  bool empty() const { return members.empty(); }
  std::size_t size() const { return members.size(); }
  bool contains(VertexId v) const;
  /// Members sorted by their position in `ordering`.
  std::vector<VertexId> ordered(const SccOrdering& ordering) const;
};

/// Both endpoints of every observed edge (i,j) of `snapshot` whose
/// prediction U_i B U_j^T misses the reading by at least `delta`.
CandidateSet select_candidates(const Matrix& U_prev, const Matrix& B, const SparseMatrix& snapshot, double delta);

enum class AdjustBranch {
  kPassive,       // prediction already inside the delta band
  kRaise,         // prediction too low: additive step along B U_j^T
  kLowerCapped,   // prediction too high, full step theta = C
  kLowerRoot,     // prediction too high, theta solves f(theta) = 0
  kDegenerate,    // B U_j^T = 0, no direction to move along
};

struct AdjustResult {
  Vector row;
  AdjustBranch branch = AdjustBranch::kPassive;
  double step = 0.0;  // alpha for kRaise, theta for the lowering branches
};

/// Passive-aggressive adjustment of one latent row so that the edge
/// prediction row_i B row_j^T moves into [y - delta, y + delta] with the
/// smallest change, aggressiveness capped by C, staying non-negative.
AdjustResult adjust_vertex(const Vector& row_i, const Matrix& B, const Vector& row_j, double y, double delta,
                           double C);

struct SweepDiagnostics {
  int sweep = 0;
  std::size_t candidates = 0;       // cand size at the start of the sweep
  std::size_t violated_edges = 0;   // visited edges still outside the band after the sweep
  double max_violation = 0.0;       // largest |prediction - reading| among visited edges
};

struct IncrementalUpdateResult {
  Matrix U;
  int sweeps = 0;
  bool converged = false;  // candidate set drained before the sweep cap
  std::size_t initial_candidates = 0;
  std::size_t adjust_calls = 0;
  std::size_t edge_visits = 0;  // adjust calls plus post-adjustment edge checks
  std::size_t degenerate_edges = 0;
  std::vector<SweepDiagnostics> diagnostics;
};

/// Lazy, feedback-driven update of U_prev towards `snapshot`. Candidates are
/// visited in `ordering` position order; sweeps stop when the candidate set
/// is empty or after `hyper.max_iters` sweeps.
IncrementalUpdateResult incremental_update(const Matrix& U_prev, const Matrix& B, const SparseMatrix& snapshot,
                                           const SccOrdering& ordering, const Hyperparams& hyper);

struct IncrementalLearnResult {
  LatentState state;
  std::vector<IncrementalUpdateResult> updates;  // one per snapshot after the first; U left empty
  int transition_iterations = 0;
};

/// Global learning on the first snapshot, incremental updates for the rest,
/// then the transition matrix fitted to the resulting latent sequence.
IncrementalLearnResult incremental_learn(const SnapshotSeries& series, const RoadNetwork& network,
                                         const LaplacianTriple& laplacian, const Hyperparams& hyper);

/// Multiplicative transition updates on a fixed latent sequence until the
/// relative change of sum_t ||U_t - U_{t-1} A||^2 falls below `tol`.
/// Returns the number of updates applied.
int fit_transition(LatentState& state, double tol, int max_iters);

}  // namespace lsmrn
