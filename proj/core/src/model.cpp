#include "lsmrn/model.hpp"

#include <random>
#include <string>

#include "lsmrn/errors.hpp"

namespace lsmrn {

SnapshotSeries::SnapshotSeries(const RoadNetwork& network, std::vector<SparseMatrix> snapshots,
                               double span_minutes)
    : num_vertices_(network.num_vertices()), span_minutes_(span_minutes), snapshots_(std::move(snapshots)) {
  if (!(span_minutes > 0.0)) throw ConfigError("span must be positive");
  const int n = num_vertices_;
  for (std::size_t t = 0; t < snapshots_.size(); ++t) {
    SparseMatrix& g = snapshots_[t];
    if (g.rows() != n || g.cols() != n) {
      throw DataError("snapshot " + std::to_string(t) + " is " + std::to_string(g.rows()) + "x" +
                      std::to_string(g.cols()) + ", expected " + std::to_string(n) + "x" + std::to_string(n));
    }
    for (int i = 0; i < n; ++i) {
      for (SparseMatrix::InnerIterator it(g, i); it; ++it) {
        if (it.value() < 0.0) {
          throw DataError("negative speed in snapshot " + std::to_string(t) + " at (" + std::to_string(i) + "," +
                          std::to_string(it.col()) + ")");
        }
        if (it.value() > 0.0 && !network.has_edge(i, static_cast<VertexId>(it.col()))) {
          throw DataError("snapshot " + std::to_string(t) + " has a reading on non-edge (" + std::to_string(i) +
                          "," + std::to_string(it.col()) + ")");
        }
      }
    }
    g.prune([](Eigen::Index, Eigen::Index, double v) { return v > 0.0; });
    g.makeCompressed();
  }
}

SnapshotSeries SnapshotSeries::empty(int num_vertices, int num_snapshots, double span_minutes) {
  if (num_vertices <= 0 || num_snapshots < 0) throw ConfigError("invalid empty series dimensions");
  SnapshotSeries s;
  s.num_vertices_ = num_vertices;
  s.span_minutes_ = span_minutes;
  s.snapshots_.assign(static_cast<std::size_t>(num_snapshots), SparseMatrix(num_vertices, num_vertices));
  return s;
}

SnapshotSeries SnapshotSeries::from_validated(int num_vertices, std::vector<SparseMatrix> snapshots,
                                              double span_minutes) {
  SnapshotSeries s;
  s.num_vertices_ = num_vertices;
  s.span_minutes_ = span_minutes;
  s.snapshots_ = std::move(snapshots);
  for (auto& g : s.snapshots_) {
    g.prune([](Eigen::Index, Eigen::Index, double v) { return v > 0.0; });
    g.makeCompressed();
  }
  return s;
}

const SparseMatrix& SnapshotSeries::snapshot(int t) const {
  if (t < 0 || t >= num_snapshots()) {
    throw std::out_of_range("snapshot index " + std::to_string(t) + " outside [0, " +
                            std::to_string(num_snapshots()) + ")");
  }
  return snapshots_[static_cast<std::size_t>(t)];
}

std::size_t SnapshotSeries::observed_count() const {
  std::size_t total = 0;
  for (const auto& g : snapshots_) total += static_cast<std::size_t>(g.nonZeros());
  return total;
}

SnapshotSeries SnapshotSeries::slice(int first, int count) const {
  if (first < 0 || count < 0 || first + count > num_snapshots()) {
    throw std::out_of_range("slice [" + std::to_string(first) + ", " + std::to_string(first + count) +
                            ") outside series of length " + std::to_string(num_snapshots()));
  }
  SnapshotSeries s;
  s.num_vertices_ = num_vertices_;
  s.span_minutes_ = span_minutes_;
  s.snapshots_.assign(snapshots_.begin() + first, snapshots_.begin() + first + count);
  return s;
}

void Hyperparams::validate() const {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
  if (!(delta >= 0.0)) throw ConfigError("delta must be >= 0");
  if (!(phi >= 0.0)) throw ConfigError("phi must be >= 0");
  if (!(C >= 0.0)) throw ConfigError("C must be >= 0");
  if (!(tol >= 0.0)) throw ConfigError("tol must be >= 0");
  if (max_iters < 1) throw ConfigError("max-iters must be >= 1");
}

bool LatentState::is_nonnegative() const {
  for (const auto& u : U) {
    if ((u.array() < 0.0).any()) return false;
  }
  return (B.array() >= 0.0).all() && (A.array() >= 0.0).all();
}

LatentState initialize_state(int num_vertices, int rank, int num_snapshots, std::uint64_t seed) {
  if (num_vertices <= 0 || rank <= 0 || num_snapshots <= 0) throw ConfigError("invalid state dimensions");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    // Row-major fill so the stream order does not depend on Eigen's storage.
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = 1.0 - unit(rng);  // (0, 1]
    return m;
  };

  LatentState state;
  state.U.reserve(static_cast<std::size_t>(num_snapshots));
  for (int t = 0; t < num_snapshots; ++t) state.U.push_back(draw(num_vertices, rank));
  state.B = draw(rank, rank);
  state.A = num_snapshots == 1 ? Matrix::Identity(rank, rank) : draw(rank, rank);
  return state;
}

SparseMatrix masked_product(const SparseMatrix& pattern, const Matrix& U, const Matrix& B) {
  SparseMatrix out = pattern;
  const Matrix UBt = U * B.transpose();  // row j holds (B U_j^T)^T
  for (Eigen::Index i = 0; i < out.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(out, i); it; ++it) {
      it.valueRef() = U.row(i).dot(UBt.row(it.col()));
    }
  }
  return out;
}

Matrix reconstruct_snapshot(const LatentState& state, int t) {
  if (t < 0 || t >= state.num_snapshots()) {
    throw std::out_of_range("timestamp " + std::to_string(t) + " outside [0, " +
                            std::to_string(state.num_snapshots()) + ")");
  }
  const Matrix& U = state.U[static_cast<std::size_t>(t)];
  return U * state.B * U.transpose();
}

Matrix propagate_latent(const LatentState& state, int horizon) {
  if (horizon < 1) throw ConfigError("prediction horizon must be >= 1, got " + std::to_string(horizon));
  if (state.U.empty()) throw DataError("cannot predict from an empty state");
  Matrix U = state.U.back();
  for (int step = 0; step < horizon; ++step) U = U * state.A;
  return U;
}

Matrix predict_ahead(const LatentState& state, int horizon) {
  const Matrix U = propagate_latent(state, horizon);
  return U * state.B * U.transpose();
}

void check_dimensions(const LatentState& state, const SnapshotSeries& series, const LaplacianTriple& laplacian) {
  const int n = series.num_vertices();
  const int k = state.rank();
  if (state.num_snapshots() != series.num_snapshots()) {
    throw DataError("state has " + std::to_string(state.num_snapshots()) + " latent matrices, series has " +
                    std::to_string(series.num_snapshots()) + " snapshots");
  }
  if (state.B.rows() != k || state.B.cols() != k || state.A.rows() != k || state.A.cols() != k) {
    throw DataError("B and A must be square with the latent rank");
  }
  for (const auto& u : state.U) {
    if (u.rows() != n || u.cols() != k) throw DataError("latent matrix shape does not match (n, k)");
  }
  if (laplacian.L.rows() != n || laplacian.W.rows() != n) {
    throw DataError("laplacian dimension does not match the series");
  }
}

ObjectiveTerms objective_terms(const LatentState& state, const SnapshotSeries& series,
                               const LaplacianTriple& laplacian, const Hyperparams& hyper) {
  check_dimensions(state, series, laplacian);
  ObjectiveTerms terms;
  const int T = series.num_snapshots();
  for (int t = 0; t < T; ++t) {
    const Matrix& U = state.U[static_cast<std::size_t>(t)];
    const SparseMatrix& G = series.snapshot(t);
    const SparseMatrix M = masked_product(G, U, state.B);
    double sq = 0.0;
    for (Eigen::Index i = 0; i < G.outerSize(); ++i) {
      SparseMatrix::InnerIterator g(G, i), m(M, i);
      for (; g; ++g, ++m) {
        const double r = g.value() - m.value();
        sq += r * r;
      }
    }
    terms.reconstruction += sq;
    // Tr(U^T L U)
    terms.laplacian += hyper.lambda * (U.array() * (laplacian.L * U).array()).sum();
    if (t > 0) {
      terms.transition += hyper.gamma * (U - state.U[static_cast<std::size_t>(t) - 1] * state.A).squaredNorm();
    }
  }
  return terms;
}

double evaluate_objective(const LatentState& state, const SnapshotSeries& series,
                          const LaplacianTriple& laplacian, const Hyperparams& hyper) {
  return objective_terms(state, series, laplacian, hyper).total();
}

Matrix gradient_wrt_latent(const LatentState& state, const SnapshotSeries& series,
                           const LaplacianTriple& laplacian, const Hyperparams& hyper, int t) {
  check_dimensions(state, series, laplacian);
  const int T = series.num_snapshots();
  if (t < 0 || t >= T) throw std::out_of_range("timestamp " + std::to_string(t) + " out of range");

  const auto ti = static_cast<std::size_t>(t);
  const Matrix& U = state.U[ti];
  const Matrix& B = state.B;
  const Matrix& A = state.A;
  const SparseMatrix& G = series.snapshot(t);
  // Residual restricted to observed entries: Y ⊙ (G - U B U^T).
  SparseMatrix R = G - masked_product(G, U, B);

  Matrix grad = -2.0 * (R * (U * B.transpose())) - 2.0 * (SparseMatrix(R.transpose()) * (U * B));
  grad += 2.0 * hyper.lambda * (laplacian.L * U);
  if (t > 0) grad += 2.0 * hyper.gamma * (U - state.U[ti - 1] * A);
  if (t < T - 1) grad += 2.0 * hyper.gamma * (U * A * A.transpose() - state.U[ti + 1] * A.transpose());
  return grad;
}

}  // namespace lsmrn
