#pragma once

#include "lsmrn/graph.hpp"
#include "lsmrn/model.hpp"

namespace lsmrn {

/// Fills every unobserved topology edge of each snapshot with the mean of
/// the K observed edges of the same snapshot whose midpoints are closest in
/// Euclidean distance (all observed edges when fewer than K exist). Ties
/// break by edge order. Requires network coordinates.
SnapshotSeries knn_complete(const SnapshotSeries& series, const RoadNetwork& network, int K);

}  // namespace lsmrn
