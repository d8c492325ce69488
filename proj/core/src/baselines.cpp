#include "lsmrn/baselines.hpp"

#include <algorithm>
#include <string>
#include <tuple>

#include "lsmrn/errors.hpp"

namespace lsmrn {

SnapshotSeries knn_complete(const SnapshotSeries& series, const RoadNetwork& network, int K) {
  if (K < 1) throw ConfigError("KNN neighbour count must be >= 1");
  if (!network.has_coords()) throw ConfigError("KNN completion needs vertex coordinates");
  if (network.num_vertices() != series.num_vertices()) throw DataError("network and series disagree on n");

  const auto edges = network.edges();
  const auto coords = network.coords();
  std::vector<Point> midpoint(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Point& a = coords[edges[e].src];
    const Point& b = coords[edges[e].dst];
    midpoint[e] = {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
  }

  const int n = network.num_vertices();
  std::vector<SparseMatrix> completed;
  completed.reserve(static_cast<std::size_t>(series.num_snapshots()));
  for (int t = 0; t < series.num_snapshots(); ++t) {
    const SparseMatrix& g = series.snapshot(t);
    std::vector<std::size_t> observed;
    std::vector<double> value(edges.size(), 0.0);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      value[e] = g.coeff(edges[e].src, edges[e].dst);
      if (value[e] > 0.0) observed.push_back(e);
    }

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(edges.size());
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (value[e] > 0.0) {
        triplets.emplace_back(edges[e].src, edges[e].dst, value[e]);
        continue;
      }
      if (observed.empty()) throw DataError("snapshot " + std::to_string(t) + " has no observed edges to impute from");
      dist.clear();
      for (std::size_t o : observed) {
        const double dx = midpoint[e].x - midpoint[o].x;
        const double dy = midpoint[e].y - midpoint[o].y;
        dist.emplace_back(dx * dx + dy * dy, o);
      }
      const auto take = std::min(static_cast<std::size_t>(K), dist.size());
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(take), dist.end());
      double sum = 0.0;
      for (std::size_t r = 0; r < take; ++r) sum += value[dist[r].second];
      triplets.emplace_back(edges[e].src, edges[e].dst, sum / static_cast<double>(take));
    }
    SparseMatrix filled(n, n);
    filled.setFromTriplets(triplets.begin(), triplets.end());
    filled.makeCompressed();
    completed.push_back(std::move(filled));
  }
  return SnapshotSeries::from_validated(n, std::move(completed), series.span_minutes());
}

}  // namespace lsmrn
