#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/SparseCore>

namespace lsmrn {

using VertexId = std::int32_t;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Edge {
  VertexId src = 0;
  VertexId dst = 0;
  auto operator<=>(const Edge&) const = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

/// Static directed road-network topology shared by every snapshot.
///
/// Edges are stored sorted by (src, dst); self loops and duplicates are
/// rejected. Coordinates are optional and only consumed by the KNN baseline
/// and the synthetic generator.
class RoadNetwork {
 public:
  RoadNetwork() = default;
  RoadNetwork(int num_vertices, std::vector<Edge> edges, std::vector<Point> coords = {});

  int num_vertices() const { return num_vertices_; }
  std::size_t num_edges() const { return edges_.size(); }
  std::span<const Edge> edges() const { return edges_; }

  bool has_coords() const { return !coords_.empty(); }
  std::span<const Point> coords() const { return coords_; }
  void set_coords(std::vector<Point> coords);

  bool has_edge(VertexId src, VertexId dst) const;
  std::span<const VertexId> out_neighbors(VertexId v) const;

  RoadNetwork reversed() const;

 private:
  int num_vertices_ = 0;
  std::vector<Edge> edges_;
  std::vector<Point> coords_;
  std::vector<std::size_t> out_offsets_;
  std::vector<VertexId> out_targets_;
};

/// W (proximity), D (degree diagonal) and the graph Laplacian L = D - W.
struct LaplacianTriple {
  SparseMatrix W;
  SparseMatrix D;
  SparseMatrix L;
  Eigen::VectorXd degree;  // diagonal of D
};

enum class ProximityPolicy {
  kBinarySymmetric,  // W_ij = 1 iff (i,j) or (j,i) is an edge
};

LaplacianTriple build_proximity_laplacian(const RoadNetwork& network,
                                          ProximityPolicy policy = ProximityPolicy::kBinarySymmetric);

/// Partition of the vertices into strongly connected components.
///
/// Component ids are assigned in reverse topological order of the condensed
/// graph: if an edge leads from component a to a different component b, then
/// b < a.
struct SccPartition {
  std::vector<int> component_of;
  int num_components = 0;
};

SccPartition condense_scc(const RoadNetwork& network);

enum class WithinComponentOrder {
  kAscendingId,
  kShuffled,  // seeded permutation inside each component
};

/// Vertex visitation order for incremental updates: heads of cross-component
/// edges come before their tails.
struct SccOrdering {
  std::vector<VertexId> order;
  std::vector<int> position;  // inverse permutation of `order`
  std::vector<int> component_of;
  int num_components = 0;
};

SccOrdering update_ordering(const RoadNetwork& network, std::uint64_t seed = 0,
                            WithinComponentOrder within = WithinComponentOrder::kAscendingId);

}  // namespace lsmrn
