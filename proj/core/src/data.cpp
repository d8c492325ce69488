#include "lsmrn/data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>

#include "lsmrn/errors.hpp"

namespace lsmrn {

IngestResult build_snapshot_series(std::span<const ReadingRecord> readings, const RoadNetwork& network,
                                   double span, int num_snapshots) {
  if (!(span > 0.0)) throw ConfigError("span must be positive");
  if (num_snapshots < 1) throw ConfigError("T must be >= 1");

  struct Accumulator {
    double sum = 0.0;
    int count = 0;
  };
  std::vector<std::map<Edge, Accumulator>> buckets(static_cast<std::size_t>(num_snapshots));
  IngestResult result;
  const double window = span * num_snapshots;

  for (const ReadingRecord& r : readings) {
    if (!network.has_edge(r.src, r.dst)) {
      throw DataError("reading at t=" + std::to_string(r.timestamp) + " references non-edge (" +
                      std::to_string(r.src) + "," + std::to_string(r.dst) + ")");
    }
    if (!(r.timestamp >= 0.0 && r.timestamp < window)) {
      ++result.rejected_out_of_window;
      continue;
    }
    if (!(r.speed > 0.0)) {
      ++result.rejected_nonpositive;
      continue;
    }
    const auto bucket = std::min(static_cast<std::size_t>(r.timestamp / span), buckets.size() - 1);
    Accumulator& acc = buckets[bucket][Edge{r.src, r.dst}];
    acc.sum += r.speed;
    ++acc.count;
    ++result.accepted;
  }

  const int n = network.num_vertices();
  std::vector<SparseMatrix> snapshots;
  snapshots.reserve(buckets.size());
  for (const auto& bucket : buckets) {
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(bucket.size());
    for (const auto& [edge, acc] : bucket) triplets.emplace_back(edge.src, edge.dst, acc.sum / acc.count);
    SparseMatrix g(n, n);
    g.setFromTriplets(triplets.begin(), triplets.end());
    snapshots.push_back(std::move(g));
  }
  result.series = SnapshotSeries(network, std::move(snapshots), span);
  return result;
}

std::vector<ReadingRecord> series_to_readings(const SnapshotSeries& series) {
  std::vector<ReadingRecord> out;
  out.reserve(series.observed_count());
  const double span = series.span_minutes();
  for (int t = 0; t < series.num_snapshots(); ++t) {
    const SparseMatrix& g = series.snapshot(t);
    for (Eigen::Index i = 0; i < g.outerSize(); ++i) {
      for (SparseMatrix::InnerIterator it(g, i); it; ++it) {
        out.push_back({(t + 0.5) * span, static_cast<VertexId>(i), static_cast<VertexId>(it.col()), it.value()});
      }
    }
  }
  return out;
}

std::size_t HoldoutMask::count_in(int t) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [t](const HoldoutEntry& e) { return e.t == t; }));
}

std::pair<SnapshotSeries, HoldoutMask> mask_holdout(const SnapshotSeries& series, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("mask rate must lie in [0, 1)");
  std::mt19937_64 rng(seed);
  HoldoutMask mask;
  const int n = series.num_vertices();
  std::vector<SparseMatrix> kept;
  kept.reserve(static_cast<std::size_t>(series.num_snapshots()));

  for (int t = 0; t < series.num_snapshots(); ++t) {
    const SparseMatrix& g = series.snapshot(t);
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(g.nonZeros()));
    for (Eigen::Index i = 0; i < g.outerSize(); ++i) {
      for (SparseMatrix::InnerIterator it(g, i); it; ++it) entries.emplace_back(i, it.col(), it.value());
    }
    // Tolerance guards products such as 0.29 * 100 = 28.999...
    const auto hidden = static_cast<std::size_t>(std::floor(rate * static_cast<double>(entries.size()) + 1e-9));

    // Partial Fisher-Yates: the first `hidden` slots end up a uniform sample.
    for (std::size_t s = 0; s < hidden; ++s) {
      std::uniform_int_distribution<std::size_t> pick(s, entries.size() - 1);
      std::swap(entries[s], entries[pick(rng)]);
    }
    for (std::size_t s = 0; s < hidden; ++s) {
      const auto& e = entries[s];
      mask.entries.push_back({t, static_cast<VertexId>(e.row()), static_cast<VertexId>(e.col()), e.value()});
    }
    SparseMatrix masked(n, n);
    masked.setFromTriplets(entries.begin() + static_cast<std::ptrdiff_t>(hidden), entries.end());
    masked.makeCompressed();
    kept.push_back(std::move(masked));
  }
  std::sort(mask.entries.begin(), mask.entries.end());

  // Kept entries are a subset of an already validated series.
  return {SnapshotSeries::from_validated(n, std::move(kept), series.span_minutes()), std::move(mask)};
}

namespace {

RoadNetwork random_planar_network(int n, double density, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Point> coords(static_cast<std::size_t>(n));
  for (Point& p : coords) {
    p.x = unit(rng);
    p.y = unit(rng);
  }

  // Candidate two-way segments between each vertex and its nearest neighbours.
  const int neighbours = std::min(n - 1, static_cast<int>(std::ceil(density)) + 1);
  std::vector<Edge> candidates;
  std::vector<std::pair<double, int>> dist(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    for (int w = 0; w < n; ++w) {
      const double dx = coords[v].x - coords[w].x;
      const double dy = coords[v].y - coords[w].y;
      dist[static_cast<std::size_t>(w)] = {w == v ? std::numeric_limits<double>::infinity() : dx * dx + dy * dy, w};
    }
    std::partial_sort(dist.begin(), dist.begin() + neighbours, dist.end());
    for (int r = 0; r < neighbours; ++r) {
      const int w = dist[static_cast<std::size_t>(r)].second;
      candidates.push_back({v, w});
      candidates.push_back({w, v});
    }
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  std::shuffle(candidates.begin(), candidates.end(), rng);

  const auto target = static_cast<std::size_t>(std::llround(density * n));
  candidates.resize(std::min(std::max<std::size_t>(target, 1), candidates.size()));
  return RoadNetwork(n, std::move(candidates), std::move(coords));
}

}  // namespace

SyntheticInstance generate_synthetic(const SyntheticConfig& config) {
  if (config.n < 2) throw ConfigError("synthetic network needs n >= 2");
  if (!(config.edge_density > 0.0)) throw ConfigError("edge density must be positive");
  if (config.k < 1 || config.T < 1) throw ConfigError("synthetic rank and length must be >= 1");
  if (!(config.noise_sd >= 0.0) || !(config.drift >= 0.0)) throw ConfigError("noise and drift must be >= 0");
  if (!(config.missing_rate >= 0.0 && config.missing_rate < 1.0)) throw ConfigError("missing rate must lie in [0, 1)");
  if (!(config.mean_speed > 0.0) || !(config.span > 0.0)) throw ConfigError("mean speed and span must be positive");

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto positive_uniform = [&](int rows, int cols) {
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = 1.0 - unit(rng);
    return m;
  };

  SyntheticInstance out;
  out.network = random_planar_network(config.n, config.edge_density, rng);
  const int n = config.n;
  const int k = config.k;

  LatentState& planted = out.planted;
  planted.U.push_back(positive_uniform(n, k));
  planted.B = positive_uniform(k, k);
  if (config.transition == PlantedTransition::kIdentity) {
    planted.A = Matrix::Identity(k, k);
  } else {
    planted.A = positive_uniform(k, k);
    for (int r = 0; r < k; ++r) planted.A.row(r) /= planted.A.row(r).sum();
  }

  double raw_mean = 0.0;
  for (const Edge& e : out.network.edges()) raw_mean += edge_value(planted.U.front(), planted.B, e.src, e.dst);
  raw_mean /= static_cast<double>(out.network.num_edges());
  planted.B *= config.mean_speed / raw_mean;

  for (int t = 1; t < config.T; ++t) {
    Matrix next = planted.U.back() * planted.A;
    if (config.drift > 0.0) {
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < k; ++c) next(r, c) *= std::exp(config.drift * gauss(rng));
    }
    planted.U.push_back(std::move(next));
  }

  std::vector<SparseMatrix> complete;
  std::vector<SparseMatrix> observed;
  const auto edges = out.network.edges();
  const auto drop = static_cast<std::size_t>(std::floor(config.missing_rate * edges.size() + 1e-9));
  std::vector<std::size_t> slots(edges.size());
  for (int t = 0; t < config.T; ++t) {
    const Matrix& U = planted.U[static_cast<std::size_t>(t)];
    std::vector<Eigen::Triplet<double>> values;
    values.reserve(edges.size());
    for (const Edge& e : edges) {
      const double clean = edge_value(U, planted.B, e.src, e.dst);
      double v = clean;
      if (config.noise_sd > 0.0) {
        // Truncated Gaussian noise: redraw until the reading stays positive.
        for (int attempt = 0; attempt < 64; ++attempt) {
          v = clean + config.noise_sd * gauss(rng);
          if (v > 0.0) break;
        }
        if (!(v > 0.0)) v = clean;
      }
      values.emplace_back(e.src, e.dst, v);
    }
    SparseMatrix full(n, n);
    full.setFromTriplets(values.begin(), values.end());
    full.makeCompressed();
    complete.push_back(full);

    std::iota(slots.begin(), slots.end(), 0);
    std::shuffle(slots.begin(), slots.end(), rng);
    std::vector<char> keep(edges.size(), 1);
    for (std::size_t s = 0; s < drop; ++s) keep[slots[s]] = 0;
    std::vector<Eigen::Triplet<double>> kept;
    kept.reserve(edges.size() - drop);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (keep[e]) kept.push_back(values[e]);
    }
    SparseMatrix g(n, n);
    g.setFromTriplets(kept.begin(), kept.end());
    g.makeCompressed();
    observed.push_back(std::move(g));
  }
  out.complete = SnapshotSeries(out.network, std::move(complete), config.span);
  out.series = SnapshotSeries(out.network, std::move(observed), config.span);
  return out;
}

}  // namespace lsmrn
