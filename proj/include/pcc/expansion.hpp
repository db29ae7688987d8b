// expansion.hpp
//
// Expansion penalty for a batch of surface elements. For every element a
// Euclidean minimum spanning tree is built, rooted at the middle vertex of
// its hop-count diameter, and directed toward the root. Edges at least
// lambda times the element's mean edge length are penalized:
//
//   value = 1/(K N) * sum_i sum_{(u,v) in T_i, |uv| >= lambda l_i} |uv|
//
// The gradient treats the tree, the filter and l_i as constants and is
// given to the tail u of each active edge only, pointing from v to u, so a
// descent step pulls u toward v.

#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <tuple>
#include <vector>

#include "pcc/core.hpp"
#include "pcc/parallel.hpp"

namespace pcc {

/// K consecutive blocks of N points, one block per surface element.
class ElementBatch {
public:
  ElementBatch(PointCloud points, std::size_t k, std::size_t n)
      : points_(std::move(points)), k_(k), n_(n) {
    if (k < 1) throw InvalidArgument("ElementBatch: K must be at least 1");
    if (n < 2) throw InvalidArgument("ElementBatch: N must be at least 2");
    if (points_.size() != k * n) {
      throw InvalidArgument("ElementBatch: " + std::to_string(points_.size()) +
                            " points cannot form K=" + std::to_string(k) +
                            " elements of N=" + std::to_string(n));
    }
  }

  std::size_t k() const { return k_; }
  std::size_t n() const { return n_; }
  const PointCloud &points() const { return points_; }
  std::span<const Point3> element(std::size_t i) const {
    return points_.points().subspan(i * n_, n_);
  }

private:
  PointCloud points_;
  std::size_t k_;
  std::size_t n_;
};

struct ExpansionConfig {
  double lambda = 1.5;
};

struct TreeEdge {
  std::size_t a = 0;
  std::size_t b = 0;
  double length = 0.0;
};

/// Spanning tree before rooting. Vertices are 0..vertex_count-1.
struct UndirectedTree {
  std::size_t vertex_count = 0;
  std::vector<TreeEdge> edges;

  double total_length() const {
    double s = 0.0;
    for (const auto &e : edges) s += e.length;
    return s;
  }
};

/// Edge from a vertex to its parent.
struct DirectedEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  double length = 0.0;
};

struct SpanningTree {
  std::vector<DirectedEdge> edges;
  std::size_t root = 0;
  double mean_edge_length = 0.0;
};

struct PenaltyResult {
  double value = 0.0;
  /// gradients[i][p] belongs to point p of element i.
  std::vector<std::vector<Point3>> gradients;
  /// Directed edges that passed the length filter, per element.
  std::vector<std::vector<DirectedEdge>> active_edges;
  std::vector<SpanningTree> trees;
};

/// Strict order on candidate edges: (length, lower endpoint, higher endpoint).
inline bool edge_less(double la, std::size_t a0, std::size_t a1, double lb,
                      std::size_t b0, std::size_t b1) {
  return std::tuple(la, std::min(a0, a1), std::max(a0, a1)) <
         std::tuple(lb, std::min(b0, b1), std::max(b0, b1));
}

/// Prim's algorithm on the complete Euclidean graph: O(n^2) time, O(n)
/// memory. With the strict edge order above the tree is unique.
inline UndirectedTree build_mst(std::span<const Point3> points) {
  const std::size_t n = points.size();
  if (n < 2) throw InvalidArgument("build_mst: need at least 2 points");
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  std::vector<double> key(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> link(n, none);
  std::vector<char> in_tree(n, 0);

  UndirectedTree tree;
  tree.vertex_count = n;
  tree.edges.reserve(n - 1);
  std::size_t added = 0;
  in_tree[added] = 1;
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t pick = none;
    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      const double d = distance(points[added], points[v]);
      if (link[v] == none || edge_less(d, added, v, key[v], link[v], v)) {
        key[v] = d;
        link[v] = added;
      }
      if (pick == none || edge_less(key[v], link[v], v, key[pick], link[pick], pick)) {
        pick = v;
      }
    }
    in_tree[pick] = 1;
    tree.edges.push_back({std::min(link[pick], pick), std::max(link[pick], pick), key[pick]});
    added = pick;
  }
  return tree;
}

namespace detail {

struct Adjacency {
  std::vector<std::size_t> offset;
  std::vector<std::size_t> target;  // neighbours sorted ascending per vertex
  std::vector<std::size_t> edge;

  explicit Adjacency(const UndirectedTree &t) : offset(t.vertex_count + 1, 0) {
    for (const auto &e : t.edges) {
      ++offset[e.a + 1];
      ++offset[e.b + 1];
    }
    for (std::size_t i = 0; i < t.vertex_count; ++i) offset[i + 1] += offset[i];
    target.resize(offset.back());
    edge.resize(offset.back());
    std::vector<std::size_t> fill(offset.begin(), offset.end() - 1);
    for (std::size_t k = 0; k < t.edges.size(); ++k) {
      const auto &e = t.edges[k];
      target[fill[e.a]] = e.b;
      edge[fill[e.a]++] = k;
      target[fill[e.b]] = e.a;
      edge[fill[e.b]++] = k;
    }
    for (std::size_t v = 0; v < t.vertex_count; ++v) {
      std::vector<std::pair<std::size_t, std::size_t>> tmp;
      for (auto i = offset[v]; i < offset[v + 1]; ++i) tmp.emplace_back(target[i], edge[i]);
      std::sort(tmp.begin(), tmp.end());
      for (auto i = offset[v]; i < offset[v + 1]; ++i) {
        target[i] = tmp[i - offset[v]].first;
        edge[i] = tmp[i - offset[v]].second;
      }
    }
  }
};

// Breadth-first hop distances and parents from `start`.
inline void bfs(const Adjacency &adj, std::size_t start, std::vector<std::size_t> &hops,
                std::vector<std::size_t> &parent, std::vector<std::size_t> &parent_edge) {
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  const std::size_t n = adj.offset.size() - 1;
  hops.assign(n, none);
  parent.assign(n, none);
  parent_edge.assign(n, none);
  std::deque<std::size_t> queue{start};
  hops[start] = 0;
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    for (auto i = adj.offset[v]; i < adj.offset[v + 1]; ++i) {
      const std::size_t w = adj.target[i];
      if (hops[w] != none) continue;
      hops[w] = hops[v] + 1;
      parent[w] = v;
      parent_edge[w] = adj.edge[i];
      queue.push_back(w);
    }
  }
}

// Farthest vertex by hop count, lowest index on ties.
inline std::size_t farthest(const std::vector<std::size_t> &hops) {
  std::size_t best = 0;
  for (std::size_t v = 1; v < hops.size(); ++v) {
    if (hops[v] > hops[best]) best = v;
  }
  return best;
}

} // namespace detail

/// Roots the tree at the middle vertex of a maximum-vertex-count path and
/// points every edge toward the root. The diameter comes from a double
/// breadth-first traversal (start at vertex 0, farthest vertex a, then the
/// farthest vertex b from a). For an even vertex count the middle vertex
/// nearer the lower-indexed endpoint of {a, b} is chosen.
inline SpanningTree root_and_direct(const UndirectedTree &tree) {
  const std::size_t n = tree.vertex_count;
  if (n < 1 || tree.edges.size() + 1 != n) {
    throw InvalidArgument("root_and_direct: not a spanning tree (edge count)");
  }
  for (const auto &e : tree.edges) {
    if (e.a >= n || e.b >= n || e.a == e.b) {
      throw InvalidArgument("root_and_direct: edge endpoint out of range");
    }
  }
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  const detail::Adjacency adj(tree);
  std::vector<std::size_t> hops, parent, parent_edge;

  detail::bfs(adj, 0, hops, parent, parent_edge);
  if (std::find(hops.begin(), hops.end(), none) != hops.end()) {
    throw InvalidArgument("root_and_direct: tree is disconnected");
  }
  const std::size_t a = detail::farthest(hops);
  detail::bfs(adj, a, hops, parent, parent_edge);
  const std::size_t b = detail::farthest(hops);

  // Path from b back to a; path[0] = b, path.back() = a.
  std::vector<std::size_t> path;
  for (std::size_t v = b; v != none; v = parent[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());  // now path[0] = a
  const std::size_t count = path.size();
  std::size_t mid_pos = (count - 1) / 2;   // nearer a when count is even
  if (count % 2 == 0 && b < a) mid_pos = count / 2;
  const std::size_t root = path[mid_pos];

  detail::bfs(adj, root, hops, parent, parent_edge);
  SpanningTree out;
  out.root = root;
  out.edges.reserve(n - 1);
  for (std::size_t v = 0; v < n; ++v) {
    if (v == root) continue;
    out.edges.push_back({v, parent[v], tree.edges[parent_edge[v]].length});
  }
  out.mean_edge_length = n > 1 ? tree.total_length() / static_cast<double>(n - 1) : 0.0;
  return out;
}

inline PenaltyResult expansion_penalty(const ElementBatch &batch,
                                       const ExpansionConfig &cfg = {}) {
  if (!(cfg.lambda > 0.0)) throw InvalidArgument("expansion_penalty: lambda must be positive");
  const std::size_t k = batch.k();
  const std::size_t n = batch.n();
  const double kn = static_cast<double>(k) * static_cast<double>(n);

  PenaltyResult out;
  out.gradients.assign(k, std::vector<Point3>(n));
  out.active_edges.resize(k);
  out.trees.resize(k);
  std::vector<double> partial(k, 0.0);

  parallel_for(
      0, k,
      [&](std::size_t i) {
        const auto pts = batch.element(i);
        SpanningTree tree = root_and_direct(build_mst(pts));
        const double threshold = cfg.lambda * tree.mean_edge_length;
        double sum = 0.0;
        for (const auto &e : tree.edges) {
          if (!(e.length >= threshold)) continue;
          out.active_edges[i].push_back(e);
          sum += e.length;
          if (e.length > 0.0) {
            out.gradients[i][e.from] = (1.0 / (e.length * kn)) * (pts[e.from] - pts[e.to]);
          }
        }
        partial[i] = sum;
        out.trees[i] = std::move(tree);
      },
      n * n);

  double total = 0.0;
  for (double s : partial) total += s;
  out.value = total / kn;
  return out;
}

} // namespace pcc
