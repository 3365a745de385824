#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "bpi/dataset.hpp"

namespace bpi {

inline constexpr std::size_t kNoExclude = std::numeric_limits<std::size_t>::max();

/// Squared Euclidean distance, summed in coordinate order.
double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;

/// c_d * r^d.
double ball_volume(double radius, int d);

/// k nearest reference rows, ordered by (distance, index).
struct NeighborResult {
  std::vector<double> distances;
  std::vector<std::size_t> indices;
};

/// Row-major N x k table of neighbor distances and indices.
struct NeighborTable {
  std::size_t rows = 0;
  std::size_t k = 0;
  std::vector<double> distances;
  std::vector<std::size_t> indices;

  double distance(std::size_t i, std::size_t j) const noexcept { return distances[i * k + j]; }
  std::size_t index(std::size_t i, std::size_t j) const noexcept { return indices[i * k + j]; }
  /// Column j (the (j+1)-th neighbor) for every row.
  std::vector<double> column_distances(std::size_t j) const;
};

/// Exact k-d tree over a fixed point set. Immutable after construction and
/// safe for concurrent queries.
class NeighborIndex {
 public:
  explicit NeighborIndex(const Dataset& points, std::size_t leaf_size = 12);

  std::size_t size() const noexcept { return n_; }
  int dim() const noexcept { return d_; }

  /// Throws InvalidArgument if k is 0, k exceeds the number of candidate
  /// points, or the query dimension is wrong. `exclude` removes one row.
  NeighborResult query(std::span<const double> q, std::size_t k,
                       std::size_t exclude = kNoExclude) const;
  /// Writes k squared distances and indices. No argument checks.
  void query_raw(std::span<const double> q, std::size_t k, std::size_t exclude,
                 double* dist2, std::size_t* idx) const;
  /// Number of points with distance <= radius.
  std::size_t count_within(std::span<const double> q, double radius) const;

 private:
  struct Node {
    std::size_t begin, end;
    std::size_t left, right;  // 0 for leaves
  };
  std::size_t build(std::size_t begin, std::size_t end, std::size_t leaf_size);
  double box_bound(std::size_t node, std::span<const double> q) const noexcept;

  std::size_t n_ = 0;
  int d_ = 0;
  std::vector<double> pts_;           // points in tree order
  std::vector<std::size_t> order_;    // tree position -> original row
  std::vector<Node> nodes_;
  std::vector<double> lo_, hi_;       // per-node bounding boxes
};

/// Reference implementation: full scan plus sort by (distance, index).
NeighborResult brute_force_query(const Dataset& points, std::span<const double> q,
                                 std::size_t k, std::size_t exclude = kNoExclude);

/// k-NN of every query row in the index.
NeighborTable query_all(const NeighborIndex& index, const Dataset& queries, std::size_t k);
/// K-NN graph of `points` onto itself, each point excluding itself.
NeighborTable self_query_all(const NeighborIndex& index, const Dataset& points,
                             std::size_t K);

/// count[i] = #{j != i : i is among the K nearest neighbors of j}.
std::vector<std::size_t> count_reverse_neighbors(const Dataset& points, std::size_t K);
/// Same, from the first K columns of a precomputed self graph.
std::vector<std::size_t> count_reverse_neighbors(const NeighborTable& graph, std::size_t K);

}  // namespace bpi
