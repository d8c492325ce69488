#include "lsmrn/graph.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "lsmrn/errors.hpp"

namespace lsmrn {

RoadNetwork::RoadNetwork(int num_vertices, std::vector<Edge> edges, std::vector<Point> coords)
    : num_vertices_(num_vertices), edges_(std::move(edges)) {
  if (num_vertices <= 0) {
    throw DataError("road network needs at least one vertex, got " + std::to_string(num_vertices));
  }
  for (const Edge& e : edges_) {
    if (e.src < 0 || e.dst < 0 || e.src >= num_vertices || e.dst >= num_vertices) {
      throw DataError("edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) +
                      ") has an endpoint outside [0, " + std::to_string(num_vertices) + ")");
    }
    if (e.src == e.dst) {
      throw DataError("self loop on vertex " + std::to_string(e.src));
    }
  }
  std::sort(edges_.begin(), edges_.end());
  auto dup = std::adjacent_find(edges_.begin(), edges_.end());
  if (dup != edges_.end()) {
    throw DataError("duplicate edge (" + std::to_string(dup->src) + "," + std::to_string(dup->dst) + ")");
  }

  out_offsets_.assign(static_cast<std::size_t>(num_vertices) + 1, 0);
  for (const Edge& e : edges_) ++out_offsets_[static_cast<std::size_t>(e.src) + 1];
  std::partial_sum(out_offsets_.begin(), out_offsets_.end(), out_offsets_.begin());
  out_targets_.reserve(edges_.size());
  for (const Edge& e : edges_) out_targets_.push_back(e.dst);  // already grouped by src

  set_coords(std::move(coords));
}

void RoadNetwork::set_coords(std::vector<Point> coords) {
  if (!coords.empty() && coords.size() != static_cast<std::size_t>(num_vertices_)) {
    throw DataError("coordinate count " + std::to_string(coords.size()) + " does not match vertex count " +
                    std::to_string(num_vertices_));
  }
  coords_ = std::move(coords);
}

bool RoadNetwork::has_edge(VertexId src, VertexId dst) const {
  return std::binary_search(edges_.begin(), edges_.end(), Edge{src, dst});
}

std::span<const VertexId> RoadNetwork::out_neighbors(VertexId v) const {
  const auto begin = out_offsets_[static_cast<std::size_t>(v)];
  const auto end = out_offsets_[static_cast<std::size_t>(v) + 1];
  return std::span<const VertexId>(out_targets_).subspan(begin, end - begin);
}

RoadNetwork RoadNetwork::reversed() const {
  std::vector<Edge> rev;
  rev.reserve(edges_.size());
  for (const Edge& e : edges_) rev.push_back({e.dst, e.src});
  return RoadNetwork(num_vertices_, std::move(rev), coords_);
}

LaplacianTriple build_proximity_laplacian(const RoadNetwork& network, ProximityPolicy policy) {
  const int n = network.num_vertices();
  std::vector<Eigen::Triplet<double>> triplets;
  switch (policy) {
    case ProximityPolicy::kBinarySymmetric:
      triplets.reserve(2 * network.num_edges());
      for (const Edge& e : network.edges()) {
        triplets.emplace_back(e.src, e.dst, 1.0);
        triplets.emplace_back(e.dst, e.src, 1.0);
      }
      break;
  }

  LaplacianTriple out;
  out.W.resize(n, n);
  // Reciprocal edge pairs produce the same entry twice; keep it binary.
  out.W.setFromTriplets(triplets.begin(), triplets.end(), [](double, double) { return 1.0; });
  out.W.makeCompressed();

  out.degree = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    for (SparseMatrix::InnerIterator it(out.W, i); it; ++it) out.degree[i] += it.value();
  }

  std::vector<Eigen::Triplet<double>> diag;
  diag.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (out.degree[i] != 0.0) diag.emplace_back(i, i, out.degree[i]);
  }
  out.D.resize(n, n);
  out.D.setFromTriplets(diag.begin(), diag.end());
  out.D.makeCompressed();

  out.L = out.D - out.W;
  out.L.makeCompressed();
  return out;
}

SccPartition condense_scc(const RoadNetwork& network) {
  // Iterative Tarjan. Components are emitted sinks-first, which is exactly
  // the reverse topological order of the condensation.
  const int n = network.num_vertices();
  constexpr int kUnvisited = -1;
  std::vector<int> index(static_cast<std::size_t>(n), kUnvisited);
  std::vector<int> lowlink(static_cast<std::size_t>(n), 0);
  std::vector<char> on_stack(static_cast<std::size_t>(n), 0);
  std::vector<VertexId> stack;
  stack.reserve(static_cast<std::size_t>(n));

  struct Frame {
    VertexId v;
    std::size_t next_child;
  };
  std::vector<Frame> call_stack;

  SccPartition out;
  out.component_of.assign(static_cast<std::size_t>(n), -1);
  int next_index = 0;

  for (VertexId root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    call_stack.push_back({root, 0});
    index[root] = lowlink[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = 1;

    while (!call_stack.empty()) {
      Frame& frame = call_stack.back();
      const VertexId v = frame.v;
      auto neighbors = network.out_neighbors(v);
      if (frame.next_child < neighbors.size()) {
        const VertexId w = neighbors[frame.next_child++];
        if (index[w] == kUnvisited) {
          index[w] = lowlink[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = 1;
          call_stack.push_back({w, 0});
        } else if (on_stack[w]) {
          lowlink[v] = std::min(lowlink[v], index[w]);
        }
        continue;
      }

      if (lowlink[v] == index[v]) {
        VertexId w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          out.component_of[w] = out.num_components;
        } while (w != v);
        ++out.num_components;
      }
      call_stack.pop_back();
      if (!call_stack.empty()) {
        const VertexId parent = call_stack.back().v;
        lowlink[parent] = std::min(lowlink[parent], lowlink[v]);
      }
    }
  }
  return out;
}

SccOrdering update_ordering(const RoadNetwork& network, std::uint64_t seed, WithinComponentOrder within) {
  SccPartition partition = condense_scc(network);
  const int n = network.num_vertices();

  SccOrdering out;
  out.order.resize(static_cast<std::size_t>(n));
  std::iota(out.order.begin(), out.order.end(), 0);
  // Stable sort keeps ascending ids inside each component.
  std::stable_sort(out.order.begin(), out.order.end(), [&](VertexId a, VertexId b) {
    return partition.component_of[a] < partition.component_of[b];
  });

  if (within == WithinComponentOrder::kShuffled) {
    std::mt19937_64 rng(seed);
    auto first = out.order.begin();
    while (first != out.order.end()) {
      const int comp = partition.component_of[*first];
      auto last = std::find_if(first, out.order.end(),
                               [&](VertexId v) { return partition.component_of[v] != comp; });
      std::shuffle(first, last, rng);
      first = last;
    }
  }

  out.position.resize(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) out.position[out.order[p]] = p;
  out.component_of = std::move(partition.component_of);
  out.num_components = partition.num_components;
  return out;
}

}  // namespace lsmrn
