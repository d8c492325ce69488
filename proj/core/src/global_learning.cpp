#include "lsmrn/global_learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lsmrn/errors.hpp"

namespace lsmrn {
namespace {

// Elementwise X <- X ⊙ (num / max(den, eps))^exponent. An entry whose
// numerator and denominator both vanish has a zero partial derivative and is
// left as is.
void multiplicative_apply(Matrix& X, const Matrix& num, const Matrix& den, double exponent) {
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      const double n = num(r, c);
      const double d = den(r, c);
      if (n <= 0.0 && d <= 0.0) continue;
      const double ratio = std::max(n, 0.0) / std::max(d, kDenominatorFloor);
      X(r, c) *= exponent == 1.0 ? ratio : std::pow(ratio, exponent);
    }
  }
}

}  // namespace

void step_latent(LatentState& state, const SnapshotSeries& series, const LaplacianTriple& laplacian,
                 const Hyperparams& hyper, int t) {
  check_dimensions(state, series, laplacian);
  const int T = series.num_snapshots();
  if (t < 0 || t >= T) throw std::out_of_range("timestamp " + std::to_string(t) + " out of range");

  const auto ti = static_cast<std::size_t>(t);
  Matrix& U = state.U[ti];
  const Matrix& B = state.B;
  const Matrix& A = state.A;
  const SparseMatrix& G = series.snapshot(t);
  const SparseMatrix M = masked_product(G, U, B);
  const SparseMatrix Gt = G.transpose();
  const SparseMatrix Mt = M.transpose();
  const Matrix UBt = U * B.transpose();
  const Matrix UB = U * B;

  Matrix num = G * UBt + Gt * UB;
  Matrix den = M * UBt + Mt * UB;
  if (hyper.lambda != 0.0) {
    num += hyper.lambda * (laplacian.W * U);
    den += hyper.lambda * (laplacian.degree.asDiagonal() * U);
  }
  if (hyper.gamma != 0.0) {
    if (t > 0) {
      num += hyper.gamma * (state.U[ti - 1] * A);
      den += hyper.gamma * U;
    }
    if (t < T - 1) {
      num += hyper.gamma * (state.U[ti + 1] * A.transpose());
      den += hyper.gamma * (U * (A * A.transpose()));
    }
  }
  multiplicative_apply(U, num, den, 0.25);
}

void step_interaction(LatentState& state, const SnapshotSeries& series) {
  const int k = state.rank();
  if (state.num_snapshots() != series.num_snapshots()) throw DataError("state/series length mismatch");
  Matrix num = Matrix::Zero(k, k);
  Matrix den = Matrix::Zero(k, k);
  for (int t = 0; t < series.num_snapshots(); ++t) {
    const Matrix& U = state.U[static_cast<std::size_t>(t)];
    const SparseMatrix& G = series.snapshot(t);
    if (U.rows() != G.rows()) throw DataError("latent rows do not match snapshot dimension");
    num.noalias() += U.transpose() * (G * U);
    den.noalias() += U.transpose() * (masked_product(G, U, state.B) * U);
  }
  multiplicative_apply(state.B, num, den, 1.0);
}

void step_transition(LatentState& state) {
  const int T = state.num_snapshots();
  if (T < 2) throw ConfigError("transition update needs at least two snapshots");
  const int k = state.rank();
  Matrix num = Matrix::Zero(k, k);
  Matrix gram = Matrix::Zero(k, k);
  for (int t = 1; t < T; ++t) {
    const Matrix& prev = state.U[static_cast<std::size_t>(t) - 1];
    num.noalias() += prev.transpose() * state.U[static_cast<std::size_t>(t)];
    gram.noalias() += prev.transpose() * prev;
  }
  const Matrix den = gram * state.A;
  multiplicative_apply(state.A, num, den, 1.0);
}

GlobalLearnResult global_learn(const SnapshotSeries& series, const LaplacianTriple& laplacian,
                               const Hyperparams& hyper, const LatentState* warm_start) {
  hyper.validate();
  const int T = series.num_snapshots();
  if (T < 1) throw DataError("global learning needs at least one snapshot");

  GlobalLearnResult result;
  result.state = warm_start ? *warm_start : initialize_state(series.num_vertices(), hyper.k, T, hyper.seed);
  LatentState& state = result.state;
  check_dimensions(state, series, laplacian);

  double previous = evaluate_objective(state, series, laplacian, hyper);
  result.objective_trace.push_back(previous);
  for (int iter = 0; iter < hyper.max_iters; ++iter) {
    for (int t = 0; t < T; ++t) step_latent(state, series, laplacian, hyper, t);
    step_interaction(state, series);
    if (T >= 2) step_transition(state);

    const double current = evaluate_objective(state, series, laplacian, hyper);
    result.objective_trace.push_back(current);
    result.iterations = iter + 1;
    const double scale = std::max(std::abs(previous), std::numeric_limits<double>::min());
    if (std::abs(previous - current) / scale < hyper.tol) {
      result.converged = true;
      break;
    }
    previous = current;
  }
  return result;
}

}  // namespace lsmrn
