#pragma once

#include <random>
#include <vector>

#include "lsmrn/graph.hpp"
#include "lsmrn/model.hpp"
#include "oracles.hpp"

namespace lsmrn::fixture {

inline SparseMatrix sparse(int n, const std::vector<Eigen::Triplet<double>>& entries) {
  SparseMatrix m(n, n);
  m.setFromTriplets(entries.begin(), entries.end());
  m.makeCompressed();
  return m;
}

struct RandomInstance {
  RoadNetwork network;
  SnapshotSeries series;
  LatentState state;
};

/// Random digraph with unit-scale readings on roughly `observed` of its
/// edges per snapshot and a random positive state.
inline RandomInstance random_instance(int n, int k, int T, std::uint64_t seed, double observed = 0.7,
                                      bool empty_snapshots = false) {
  std::mt19937_64 rng(seed);
  RandomInstance out;
  out.network = oracle::random_digraph(n, std::min(1.0, 3.0 / n), rng);
  std::uniform_real_distribution<double> value(0.5, 1.5);
  std::bernoulli_distribution keep(observed);
  std::vector<SparseMatrix> snaps;
  for (int t = 0; t < T; ++t) {
    std::vector<Eigen::Triplet<double>> e;
    if (!empty_snapshots)
      for (const Edge& edge : out.network.edges())
        if (keep(rng)) e.emplace_back(edge.src, edge.dst, value(rng));
    snaps.push_back(sparse(n, e));
  }
  out.series = SnapshotSeries(out.network, std::move(snaps), 5.0);
  out.state = initialize_state(n, k, T, seed + 1);
  std::uniform_real_distribution<double> unit(0.1, 1.0);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) out.state.A(r, c) = unit(rng);
  return out;
}

}  // namespace lsmrn::fixture
