#include "bpi/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "bpi/error.hpp"
#include "bpi/parallel.hpp"
#include "bpi/special.hpp"

namespace bpi {

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double t = a[j] - b[j];
    s += t * t;
  }
  return s;
}

double ball_volume(double radius, int d) {
  if (!(radius >= 0.0)) throw InvalidArgument("ball_volume: radius must be >= 0");
  return unit_ball_volume(d) * std::pow(radius, d);
}

std::vector<double> NeighborTable::column_distances(std::size_t j) const {
  std::vector<double> out(rows);
  for (std::size_t i = 0; i < rows; ++i) out[i] = distances[i * k + j];
  return out;
}

NeighborIndex::NeighborIndex(const Dataset& points, std::size_t leaf_size)
    : n_(points.count()), d_(points.dim()) {
  if (n_ == 0) throw InvalidArgument("cannot index an empty point set");
  if (leaf_size < 1) leaf_size = 1;
  order_.resize(n_);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  pts_ = points.values();
  nodes_.reserve(2 * (n_ / leaf_size + 1));
  build(0, n_, leaf_size);
  // Reorder the coordinates to tree order for locality.
  std::vector<double> reordered(pts_.size());
  const auto d = static_cast<std::size_t>(d_);
  for (std::size_t p = 0; p < n_; ++p)
    std::copy_n(points.values().begin() + static_cast<std::ptrdiff_t>(order_[p] * d), d,
                reordered.begin() + static_cast<std::ptrdiff_t>(p * d));
  pts_ = std::move(reordered);
}

std::size_t NeighborIndex::build(std::size_t begin, std::size_t end,
                                 std::size_t leaf_size) {
  const auto d = static_cast<std::size_t>(d_);
  const std::size_t id = nodes_.size();
  nodes_.push_back({begin, end, 0, 0});
  lo_.resize((id + 1) * d);
  hi_.resize((id + 1) * d);
  for (std::size_t j = 0; j < d; ++j) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t p = begin; p < end; ++p) {
      const double v = pts_[order_[p] * d + j];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    lo_[id * d + j] = lo;
    hi_[id * d + j] = hi;
  }
  if (end - begin <= leaf_size) return id;
  std::size_t axis = 0;
  double widest = -1.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double w = hi_[id * d + j] - lo_[id * d + j];
    if (w > widest) {
      widest = w;
      axis = j;
    }
  }
  if (widest <= 0.0) return id;  // all points coincide
  const std::size_t mid = begin + (end - begin) / 2;
  const auto first = order_.begin() + static_cast<std::ptrdiff_t>(begin);
  std::nth_element(first, order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t a, std::size_t b) {
                     const double va = pts_[a * d + axis];
                     const double vb = pts_[b * d + axis];
                     return va < vb || (va == vb && a < b);
                   });
  const std::size_t left = build(begin, mid, leaf_size);
  const std::size_t right = build(mid, end, leaf_size);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double NeighborIndex::box_bound(std::size_t node, std::span<const double> q) const noexcept {
  const auto d = static_cast<std::size_t>(d_);
  const double* lo = lo_.data() + node * d;
  const double* hi = hi_.data() + node * d;
  double s = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double t = 0.0;
    if (q[j] < lo[j]) {
      t = lo[j] - q[j];
    } else if (q[j] > hi[j]) {
      t = q[j] - hi[j];
    }
    s += t * t;
  }
  return s;
}

namespace {

using Cand = std::pair<double, std::size_t>;

struct Searcher {
  const double* pts;
  const std::size_t* order;
  std::size_t d;
  std::size_t k;
  std::size_t exclude;
  std::vector<Cand> heap;

  void offer(double d2, std::size_t idx) {
    if (heap.size() < k) {
      heap.emplace_back(d2, idx);
      std::push_heap(heap.begin(), heap.end());
    } else if (Cand(d2, idx) < heap.front()) {
      std::pop_heap(heap.begin(), heap.end());
      heap.back() = Cand(d2, idx);
      std::push_heap(heap.begin(), heap.end());
    }
  }
  bool prunable(double bound) const {
    return heap.size() == k && bound > heap.front().first;
  }
};

}  // namespace

void NeighborIndex::query_raw(std::span<const double> q, std::size_t k,
                              std::size_t exclude, double* dist2,
                              std::size_t* idx) const {
  const auto d = static_cast<std::size_t>(d_);
  Searcher s{pts_.data(), order_.data(), d, k, exclude, {}};
  s.heap.reserve(k + 1);
  // Depth-first, nearer child first, explicit stack of (node, bound).
  std::vector<std::pair<std::size_t, double>> stack;
  stack.reserve(64);
  stack.emplace_back(0, box_bound(0, q));
  while (!stack.empty()) {
    const auto [node, bound] = stack.back();
    stack.pop_back();
    if (s.prunable(bound)) continue;
    const Node& nd = nodes_[node];
    if (nd.left == 0) {
      for (std::size_t p = nd.begin; p < nd.end; ++p) {
        const std::size_t orig = order_[p];
        if (orig == exclude) continue;
        const double d2 =
            squared_distance(q, std::span<const double>(pts_.data() + p * d, d));
        s.offer(d2, orig);
      }
      continue;
    }
    const double bl = box_bound(nd.left, q);
    const double br = box_bound(nd.right, q);
    if (bl <= br) {
      stack.emplace_back(nd.right, br);
      stack.emplace_back(nd.left, bl);
    } else {
      stack.emplace_back(nd.left, bl);
      stack.emplace_back(nd.right, br);
    }
  }
  std::sort_heap(s.heap.begin(), s.heap.end());
  for (std::size_t j = 0; j < s.heap.size(); ++j) {
    dist2[j] = s.heap[j].first;
    idx[j] = s.heap[j].second;
  }
}

NeighborResult NeighborIndex::query(std::span<const double> q, std::size_t k,
                                    std::size_t exclude) const {
  if (q.size() != static_cast<std::size_t>(d_))
    throw InvalidArgument("query dimension does not match index");
  const std::size_t avail = n_ - (exclude < n_ ? 1 : 0);
  if (k < 1 || k > avail)
    throw InvalidArgument("k must lie in [1, " + std::to_string(avail) + "]");
  NeighborResult r;
  r.distances.resize(k);
  r.indices.resize(k);
  query_raw(q, k, exclude, r.distances.data(), r.indices.data());
  for (double& v : r.distances) v = std::sqrt(v);
  return r;
}

std::size_t NeighborIndex::count_within(std::span<const double> q, double radius) const {
  const auto d = static_cast<std::size_t>(d_);
  const double r2 = radius * radius;
  std::size_t count = 0;
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const std::size_t node = stack.back();
    stack.pop_back();
    if (box_bound(node, q) > r2) continue;
    const Node& nd = nodes_[node];
    if (nd.left == 0) {
      for (std::size_t p = nd.begin; p < nd.end; ++p)
        if (squared_distance(q, std::span<const double>(pts_.data() + p * d, d)) <= r2)
          ++count;
      continue;
    }
    stack.push_back(nd.left);
    stack.push_back(nd.right);
  }
  return count;
}

NeighborResult brute_force_query(const Dataset& points, std::span<const double> q,
                                 std::size_t k, std::size_t exclude) {
  std::vector<Cand> all;
  all.reserve(points.count());
  for (std::size_t i = 0; i < points.count(); ++i)
    if (i != exclude) all.emplace_back(squared_distance(q, points.row(i)), i);
  if (k < 1 || k > all.size()) throw InvalidArgument("k out of range");
  std::sort(all.begin(), all.end());
  NeighborResult r;
  for (std::size_t j = 0; j < k; ++j) {
    r.distances.push_back(std::sqrt(all[j].first));
    r.indices.push_back(all[j].second);
  }
  return r;
}

namespace {

NeighborTable run_queries(const NeighborIndex& index, const Dataset& queries,
                          std::size_t k, bool self) {
  if (queries.dim() != index.dim())
    throw InvalidArgument("query dimension does not match index");
  const std::size_t avail = index.size() - (self ? 1 : 0);
  if (k < 1 || k > avail)
    throw InvalidArgument("k must lie in [1, " + std::to_string(avail) + "]");
  NeighborTable t;
  t.rows = queries.count();
  t.k = k;
  t.distances.resize(t.rows * k);
  t.indices.resize(t.rows * k);
  parallel_for(t.rows, [&](std::size_t i) {
    index.query_raw(queries.row(i), k, self ? i : kNoExclude, t.distances.data() + i * k,
                    t.indices.data() + i * k);
  });
  for (double& v : t.distances) v = std::sqrt(v);
  return t;
}

}  // namespace

NeighborTable query_all(const NeighborIndex& index, const Dataset& queries, std::size_t k) {
  return run_queries(index, queries, k, false);
}

NeighborTable self_query_all(const NeighborIndex& index, const Dataset& points,
                             std::size_t K) {
  if (points.count() != index.size())
    throw InvalidArgument("self query needs the indexed point set");
  return run_queries(index, points, K, true);
}

std::vector<std::size_t> count_reverse_neighbors(const NeighborTable& graph, std::size_t K) {
  if (K > graph.k) throw InvalidArgument("graph has fewer than K neighbors per point");
  std::vector<std::size_t> counts(graph.rows, 0);
  for (std::size_t i = 0; i < graph.rows; ++i)
    for (std::size_t j = 0; j < K; ++j) ++counts[graph.index(i, j)];
  return counts;
}

std::vector<std::size_t> count_reverse_neighbors(const Dataset& points, std::size_t K) {
  if (K < 1) throw InvalidArgument("K must be >= 1");
  if (K >= points.count()) throw InvalidArgument("K must be smaller than the point count");
  const NeighborIndex index(points);
  return count_reverse_neighbors(self_query_all(index, points, K), K);
}

}  // namespace bpi
