#include "lsmrn/incremental.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "lsmrn/errors.hpp"
#include "lsmrn/global_learning.hpp"

namespace lsmrn {
namespace {

constexpr double kBandSlack = 1e-9;

}  // namespace

bool CandidateSet::contains(VertexId v) const {
  return std::binary_search(members.begin(), members.end(), v);
}

std::vector<VertexId> CandidateSet::ordered(const SccOrdering& ordering) const {
  std::vector<VertexId> out = members;
  std::sort(out.begin(), out.end(), [&](VertexId a, VertexId b) { return ordering.position[a] < ordering.position[b]; });
  return out;
}

CandidateSet select_candidates(const Matrix& U_prev, const Matrix& B, const SparseMatrix& snapshot, double delta) {
  const SparseMatrix predicted = masked_product(snapshot, U_prev, B);
  std::vector<char> flagged(static_cast<std::size_t>(snapshot.rows()), 0);
  for (Eigen::Index i = 0; i < snapshot.outerSize(); ++i) {
    SparseMatrix::InnerIterator g(snapshot, i), p(predicted, i);
    for (; g; ++g, ++p) {
      if (std::abs(g.value() - p.value()) >= delta) {
        flagged[static_cast<std::size_t>(i)] = 1;
        flagged[static_cast<std::size_t>(g.col())] = 1;
      }
    }
  }
  CandidateSet out;
  for (std::size_t v = 0; v < flagged.size(); ++v) {
    if (flagged[v]) out.members.push_back(static_cast<VertexId>(v));
  }
  return out;
}

AdjustResult adjust_vertex(const Vector& row_i, const Matrix& B, const Vector& row_j, double y, double delta,
                           double C) {
  AdjustResult out;
  out.row = row_i;
  const Vector d = B * row_j;
  const double predicted = row_i.dot(d);
  const double error = std::abs(predicted - y);
  if (error <= delta) return out;

  const double d_norm2 = d.squaredNorm();
  if (d_norm2 == 0.0) {
    out.branch = AdjustBranch::kDegenerate;
    return out;
  }

  if (predicted < y) {
    const double alpha = std::min(C, std::max(error - delta, 0.0) / d_norm2);
    out.row = (row_i + alpha * d).cwiseMax(0.0);
    out.branch = AdjustBranch::kRaise;
    out.step = alpha;
    return out;
  }

  // f is continuous and non-increasing in theta with f(0) = predicted - y - delta > 0.
  auto f = [&](double theta) { return (row_i - theta * d).cwiseMax(0.0).dot(d) - y - delta; };
  double theta;
  if (f(C) >= 0.0) {
    theta = C;
    out.branch = AdjustBranch::kLowerCapped;
  } else {
    double lo = 0.0;
    double hi = C;
    while (hi - lo > 1e-8) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) >= 0.0 ? lo : hi) = mid;
    }
    // f is affine on the bracket once the active set settles; solve that
    // piece exactly to land on the band edge.
    const double mid = 0.5 * (lo + hi);
    double ud = 0.0;
    double dd = 0.0;
    for (Eigen::Index a = 0; a < d.size(); ++a) {
      if (row_i[a] - mid * d[a] > 0.0) {
        ud += row_i[a] * d[a];
        dd += d[a] * d[a];
      }
    }
    theta = mid;
    if (dd > 0.0) {
      const double exact = (ud - y - delta) / dd;
      if (exact >= lo && exact <= hi) theta = exact;
    }
    out.branch = AdjustBranch::kLowerRoot;
  }
  out.row = (row_i - theta * d).cwiseMax(0.0);
  out.step = theta;
  return out;
}

IncrementalUpdateResult incremental_update(const Matrix& U_prev, const Matrix& B, const SparseMatrix& snapshot,
                                           const SccOrdering& ordering, const Hyperparams& hyper) {
  const auto n = U_prev.rows();
  if (snapshot.rows() != n || static_cast<Eigen::Index>(ordering.order.size()) != n) {
    throw DataError("incremental update: latent rows, snapshot and ordering disagree on n");
  }
  if (B.rows() != U_prev.cols() || B.cols() != U_prev.cols()) {
    throw DataError("incremental update: B must be k x k");
  }

  IncrementalUpdateResult result;
  result.U = U_prev;
  Matrix& U = result.U;

  const CandidateSet initial = select_candidates(U_prev, B, snapshot, hyper.delta);
  result.initial_candidates = initial.size();

  // Candidates keyed by ordering position.
  std::set<int> cand;
  for (VertexId v : initial.members) cand.insert(ordering.position[v]);

  while (!cand.empty() && result.sweeps < hyper.max_iters) {
    SweepDiagnostics diag;
    diag.sweep = result.sweeps;
    diag.candidates = cand.size();
    const std::vector<int> visit(cand.begin(), cand.end());
    for (int pos : visit) {
      const VertexId i = ordering.order[static_cast<std::size_t>(pos)];
      const Vector old = U.row(i).transpose();

      for (SparseMatrix::InnerIterator it(snapshot, i); it; ++it) {
        const auto j = static_cast<VertexId>(it.col());
        AdjustResult adj = adjust_vertex(U.row(i).transpose(), B, U.row(j).transpose(), it.value(), hyper.delta,
                                         hyper.C);
        if (adj.branch == AdjustBranch::kDegenerate) ++result.degenerate_edges;
        U.row(i) = adj.row.transpose();
        ++result.adjust_calls;
        ++result.edge_visits;
      }

      if ((U.row(i).transpose() - old).squaredNorm() <= hyper.phi) cand.erase(pos);

      for (SparseMatrix::InnerIterator it(snapshot, i); it; ++it) {
        const auto j = static_cast<VertexId>(it.col());
        const double violation = std::abs(edge_value(U, B, i, j) - it.value());
        ++result.edge_visits;
        diag.max_violation = std::max(diag.max_violation, violation);
        // An adjusted edge lands on the band edge itself; rounding must not
        // count that as a fresh violation.
        if (violation >= hyper.delta + kBandSlack * std::max(1.0, it.value())) {
          ++diag.violated_edges;
          cand.insert(ordering.position[j]);
        }
      }
    }
    result.diagnostics.push_back(diag);
    ++result.sweeps;
  }
  result.converged = cand.empty();
  return result;
}

int fit_transition(LatentState& state, double tol, int max_iters) {
  if (state.num_snapshots() < 2) return 0;
  auto residual = [&] {
    double r = 0.0;
    for (int t = 1; t < state.num_snapshots(); ++t) {
      const auto ti = static_cast<std::size_t>(t);
      r += (state.U[ti] - state.U[ti - 1] * state.A).squaredNorm();
    }
    return r;
  };
  double previous = residual();
  int iter = 0;
  while (iter < max_iters) {
    step_transition(state);
    ++iter;
    const double current = residual();
    const double scale = std::max(previous, std::numeric_limits<double>::min());
    if (std::abs(previous - current) / scale < tol) break;
    previous = current;
  }
  return iter;
}

IncrementalLearnResult incremental_learn(const SnapshotSeries& series, const RoadNetwork& network,
                                         const LaplacianTriple& laplacian, const Hyperparams& hyper) {
  hyper.validate();
  const int T = series.num_snapshots();
  if (T < 1) throw DataError("incremental learning needs at least one snapshot");
  if (network.num_vertices() != series.num_vertices()) throw DataError("network and series disagree on n");

  IncrementalLearnResult result;
  GlobalLearnResult first = global_learn(series.slice(0, 1), laplacian, hyper);

  LatentState& state = result.state;
  state.B = std::move(first.state.B);
  state.U.reserve(static_cast<std::size_t>(T));
  state.U.push_back(std::move(first.state.U.front()));

  const SccOrdering ordering = update_ordering(network, hyper.seed);
  for (int t = 1; t < T; ++t) {
    IncrementalUpdateResult step = incremental_update(state.U.back(), state.B, series.snapshot(t), ordering, hyper);
    state.U.push_back(std::move(step.U));
    step.U.resize(0, 0);
    result.updates.push_back(std::move(step));
  }

  const int k = hyper.k;
  if (T == 1) {
    state.A = Matrix::Identity(k, k);
  } else {
    // Seeded (0,1] start, as in global learning.
    std::mt19937_64 rng(hyper.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    state.A.resize(k, k);
    for (int r = 0; r < k; ++r)
      for (int c = 0; c < k; ++c) state.A(r, c) = 1.0 - unit(rng);
    result.transition_iterations = fit_transition(state, hyper.tol, 10 * hyper.max_iters);
  }
  return result;
}

}  // namespace lsmrn
