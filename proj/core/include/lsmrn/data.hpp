#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lsmrn/graph.hpp"
#include "lsmrn/model.hpp"

namespace lsmrn {

/// One speed reading attributed to a directed road segment.
struct ReadingRecord {
  double timestamp = 0.0;  // minutes since the start of the window
  VertexId src = 0;
  VertexId dst = 0;
  double speed = 0.0;
};

struct IngestResult {
  SnapshotSeries series;
  std::size_t accepted = 0;
  std::size_t rejected_out_of_window = 0;
  std::size_t rejected_nonpositive = 0;
};

/// Buckets readings into `num_snapshots` consecutive `span`-minute intervals
/// and averages each edge's readings per bucket. Readings on non-edges throw
/// DataError; readings outside [0, T * span) or with speed <= 0 are counted
/// and dropped.
IngestResult build_snapshot_series(std::span<const ReadingRecord> readings, const RoadNetwork& network,
                                   double span, int num_snapshots);

/// One reading per observed entry, stamped at the middle of its bucket.
std::vector<ReadingRecord> series_to_readings(const SnapshotSeries& series);

struct HoldoutEntry {
  int t = 0;
  VertexId src = 0;
  VertexId dst = 0;
  double value = 0.0;
  auto operator<=>(const HoldoutEntry&) const = default;
};

/// Entries hidden from a series for scoring, sorted by (t, src, dst).
struct HoldoutMask {
  std::vector<HoldoutEntry> entries;

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
  std::size_t count_in(int t) const;
};

/// Hides floor(rate * observed) observed entries of every snapshot, chosen
/// uniformly with a seeded generator.
std::pair<SnapshotSeries, HoldoutMask> mask_holdout(const SnapshotSeries& series, double rate, std::uint64_t seed);

enum class PlantedTransition {
  kRowStochastic,  // positive random rows summing to one
  kIdentity,
};

struct SyntheticConfig {
  int n = 100;
  int k = 3;
  int T = 10;
  double edge_density = 4.0;  // mean out-degree (edges per vertex)
  double noise_sd = 0.0;
  double missing_rate = 0.0;
  double drift = 0.0;         // sd of the per-step log-normal perturbation of U*
  double mean_speed = 50.0;   // B* is scaled so the first snapshot averages this
  double span = 5.0;
  PlantedTransition transition = PlantedTransition::kRowStochastic;
  std::uint64_t seed = 1;
};

struct SyntheticInstance {
  RoadNetwork network;
  SnapshotSeries series;    // noisy, with missing entries dropped
  SnapshotSeries complete;  // noisy, every edge observed
  LatentState planted;
};

/// Random planar road-like network plus a series generated from a planted
/// latent model U*_t = (U*_{t-1} A*) ⊙ exp(drift * N(0,1)).
SyntheticInstance generate_synthetic(const SyntheticConfig& config);

}  // namespace lsmrn
