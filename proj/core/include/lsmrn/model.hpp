#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "lsmrn/graph.hpp"

namespace lsmrn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Sequence of sparse speed snapshots over one road network.
///
/// Only strictly positive entries are stored, so the observation mask of a
/// snapshot is exactly its sparsity pattern. Snapshots are indexed from 0.
class SnapshotSeries {
 public:
  SnapshotSeries() = default;

  /// Validates every snapshot against `network` (non-negative, on edges,
  /// n x n) and drops explicit zeros.
  SnapshotSeries(const RoadNetwork& network, std::vector<SparseMatrix> snapshots, double span_minutes);

  /// Skips the network check; for snapshots derived from a validated series.
  static SnapshotSeries from_validated(int num_vertices, std::vector<SparseMatrix> snapshots, double span_minutes);

  /// T empty snapshots over n vertices.
  static SnapshotSeries empty(int num_vertices, int num_snapshots, double span_minutes);

  int num_vertices() const { return num_vertices_; }
  int num_snapshots() const { return static_cast<int>(snapshots_.size()); }
  double span_minutes() const { return span_minutes_; }

  const SparseMatrix& snapshot(int t) const;
  std::span<const SparseMatrix> snapshots() const { return snapshots_; }

  std::size_t observed_count(int t) const { return static_cast<std::size_t>(snapshot(t).nonZeros()); }
  std::size_t observed_count() const;

  /// Snapshots [first, first + count).
  SnapshotSeries slice(int first, int count) const;

 private:
  int num_vertices_ = 0;
  double span_minutes_ = 5.0;
  std::vector<SparseMatrix> snapshots_;
};

/// Model hyperparameters. `tol` is the relative objective change that stops
/// global learning; `max_iters` also caps incremental sweeps.
struct Hyperparams {
  int k = 20;
  double lambda = 8.0;      // 2^3
  double gamma = 0.03125;   // 2^-5
  double delta = 1.0;       // speed units
  double phi = 1e-2;
  double C = 1.0;
  double tol = 1e-4;
  int max_iters = 100;
  std::uint64_t seed = 42;

  /// Throws ConfigError on the first violated constraint.
  void validate() const;
};

/// Time-dependent latent attributes U_t (n x k), interaction B and transition A (k x k).
struct LatentState {
  std::vector<Matrix> U;
  Matrix B;
  Matrix A;

  int num_vertices() const { return U.empty() ? 0 : static_cast<int>(U.front().rows()); }
  int rank() const { return static_cast<int>(B.rows()); }
  int num_snapshots() const { return static_cast<int>(U.size()); }

  bool is_nonnegative() const;
};

/// Seeded uniform(0,1] initialization. A is the identity when T == 1.
LatentState initialize_state(int num_vertices, int rank, int num_snapshots, std::uint64_t seed);

/// U_i B U_j^T for a single ordered pair.
inline double edge_value(const Matrix& U, const Matrix& B, VertexId i, VertexId j) {
  return U.row(i).dot(B * U.row(j).transpose());
}

/// (U B U^T) evaluated on the sparsity pattern of `pattern` only.
SparseMatrix masked_product(const SparseMatrix& pattern, const Matrix& U, const Matrix& B);

/// Dense U_t B U_t^T.
Matrix reconstruct_snapshot(const LatentState& state, int t);

/// U_T A^h, the latent attributes h spans after the last snapshot.
Matrix propagate_latent(const LatentState& state, int horizon);

/// (U_T A^h) B (U_T A^h)^T.
Matrix predict_ahead(const LatentState& state, int horizon);

struct ObjectiveTerms {
  double reconstruction = 0.0;
  double laplacian = 0.0;   // already multiplied by lambda
  double transition = 0.0;  // already multiplied by gamma
  double total() const { return reconstruction + laplacian + transition; }
};

ObjectiveTerms objective_terms(const LatentState& state, const SnapshotSeries& series,
                               const LaplacianTriple& laplacian, const Hyperparams& hyper);

double evaluate_objective(const LatentState& state, const SnapshotSeries& series,
                          const LaplacianTriple& laplacian, const Hyperparams& hyper);

/// Analytic partial derivative of the objective with respect to U_t.
Matrix gradient_wrt_latent(const LatentState& state, const SnapshotSeries& series,
                           const LaplacianTriple& laplacian, const Hyperparams& hyper, int t);

/// Throws DataError if state and series/laplacian dimensions disagree.
void check_dimensions(const LatentState& state, const SnapshotSeries& series, const LaplacianTriple& laplacian);

}  // namespace lsmrn
