// Independent reference implementations used only by the tests. Nothing
// here calls into the algorithm it checks.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>
#include <vector>

#include "pcc/core.hpp"
#include "pcc/spatial.hpp"

namespace pcc::oracle {

/// Exhaustive minimum mean cost over all n! bijections.
inline double permutation_emd(const PointCloud &a, const PointCloud &b) {
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) s += distance(a[i], b[perm[i]]);
    best = std::min(best, s / static_cast<double>(a.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Linear-scan nearest neighbour, ties to the lowest index.
inline Neighbor scan_nearest(const PointCloud &c, const Point3 &q,
                             std::optional<std::size_t> exclude = {}) {
  Neighbor best{std::numeric_limits<std::size_t>::max(), std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (exclude && *exclude == i) continue;
    const double d = distance(c[i], q);
    if (d < best.distance) best = {i, d};
  }
  return best;
}

inline std::vector<Neighbor> scan_radius(const PointCloud &c, const Point3 &q, double r) {
  std::vector<Neighbor> out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double d = distance(c[i], q);
    if (d <= r) out.push_back({i, d});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Neighbor &x, const Neighbor &y) { return x.distance < y.distance; });
  return out;
}

/// O(n m) Chamfer distance (plain norms).
inline double double_loop_chamfer(const PointCloud &a, const PointCloud &b) {
  auto directed = [](const PointCloud &from, const PointCloud &to) {
    double sum = 0.0;
    for (const auto &p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto &q : to) best = std::min(best, distance(p, q));
      sum += best;
    }
    return sum / static_cast<double>(from.size());
  };
  return 0.5 * (directed(a, b) + directed(b, a));
}

struct KruskalEdge {
  double length;
  std::size_t lo, hi;
};

/// Kruskal over all O(n^2) edges sorted by (length, lo, hi).
inline std::vector<KruskalEdge> kruskal_mst(std::span<const Point3> pts) {
  std::vector<KruskalEdge> edges;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) edges.push_back({distance(pts[i], pts[j]), i, j});
  std::sort(edges.begin(), edges.end(), [](const KruskalEdge &x, const KruskalEdge &y) {
    return std::tie(x.length, x.lo, x.hi) < std::tie(y.length, y.lo, y.hi);
  });
  std::vector<std::size_t> parent(pts.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  std::vector<KruskalEdge> tree;
  for (const auto &e : edges) {
    const auto a = find(e.lo), b = find(e.hi);
    if (a == b) continue;
    parent[a] = b;
    tree.push_back(e);
  }
  return tree;
}

inline double total_length(const std::vector<KruskalEdge> &t) {
  double s = 0.0;
  for (const auto &e : t) s += e.length;
  return s;
}

/// Exhaustive MDS argmin at one step: densities recomputed from scratch
/// over the already-selected set, in selection order.
inline std::size_t mds_argmin(const PointCloud &c, const std::vector<std::size_t> &selected,
                              double sigma) {
  std::vector<char> taken(c.size(), 0);
  for (auto s : selected) taken[s] = 1;
  std::size_t best = c.size();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t x = 0; x < c.size(); ++x) {
    if (taken[x]) continue;
    double d = 0.0;
    for (auto s : selected) d += std::exp(-squared_distance(c[x], c[s]) / (2.0 * sigma * sigma));
    if (d < best_d) {
      best_d = d;
      best = x;
    }
  }
  return best;
}

} // namespace pcc::oracle
