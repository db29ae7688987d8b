// spatial.hpp
//
// Static kd-tree answering exact nearest-neighbour and radius queries.
// Results are identical to an exhaustive scan: candidates are ordered by
// (distance, index), so ties go to the lowest point index.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "pcc/core.hpp"

namespace pcc {

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;

  friend bool operator==(const Neighbor &, const Neighbor &) = default;
};

/// Strict (distance, index) order used by every query.
inline bool closer(const Neighbor &a, const Neighbor &b) {
  return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
}

class SpatialIndex {
public:
  explicit SpatialIndex(const PointCloud &cloud) : SpatialIndex(cloud.points()) {}

  explicit SpatialIndex(std::span<const Point3> points)
      : points_(points.begin(), points.end()) {
    if (points_.empty()) throw InvalidArgument("SpatialIndex: empty cloud");
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::uint32_t{0});
    nodes_.reserve(2 * (points_.size() / kLeafSize + 1));
    build_node(0, points_.size());
  }

  std::size_t size() const { return points_.size(); }
  const Point3 &point(std::size_t i) const { return points_[i]; }

  /// Closest stored point to q, optionally excluding one index.
  Neighbor nearest(const Point3 &q, std::optional<std::size_t> exclude = {}) const {
    if (exclude) {
      if (points_.size() < 2) {
        throw InvalidArgument("nearest: excluding the only point leaves no candidates");
      }
      const std::size_t skip = *exclude;
      return *nearest_if(q, [skip](std::size_t i) { return i != skip; });
    }
    return *nearest_if(q, [](std::size_t) { return true; });
  }

  /// Closest point among those with admissible(i) true; nullopt if none.
  template <typename Pred>
  std::optional<Neighbor> nearest_if(const Point3 &q, Pred &&admissible) const {
    Neighbor best{std::numeric_limits<std::size_t>::max(),
                  std::numeric_limits<double>::infinity()};
    search_nearest(0, q, admissible, best);
    if (best.index == std::numeric_limits<std::size_t>::max()) return std::nullopt;
    return best;
  }

  /// All points with distance <= r, ascending by (distance, index).
  std::vector<Neighbor> within_radius(const Point3 &q, double r) const {
    if (!(r >= 0.0)) throw InvalidArgument("within_radius: negative radius");
    std::vector<Neighbor> out;
    search_radius(0, q, r, out);
    std::sort(out.begin(), out.end(), closer);
    return out;
  }

private:
  static constexpr std::size_t kLeafSize = 8;

  struct Node {
    Box box;
    std::uint32_t begin = 0, end = 0;
    std::int32_t left = -1, right = -1;
  };

  static double coord(const Point3 &p, int axis) {
    return axis == 0 ? p.x : axis == 1 ? p.y : p.z;
  }

  std::int32_t build_node(std::size_t begin, std::size_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({});
    Box box{points_[order_[begin]], points_[order_[begin]]};
    for (std::size_t i = begin; i < end; ++i) {
      const auto &p = points_[order_[i]];
      box.lo = {std::min(box.lo.x, p.x), std::min(box.lo.y, p.y), std::min(box.lo.z, p.z)};
      box.hi = {std::max(box.hi.x, p.x), std::max(box.hi.y, p.y), std::max(box.hi.z, p.z)};
    }
    nodes_[id].box = box;
    nodes_[id].begin = static_cast<std::uint32_t>(begin);
    nodes_[id].end = static_cast<std::uint32_t>(end);
    if (end - begin <= kLeafSize) return id;

    const Point3 ext = box.hi - box.lo;
    const int axis = (ext.x >= ext.y && ext.x >= ext.z) ? 0 : (ext.y >= ext.z ? 1 : 2);
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       return coord(points_[a], axis) < coord(points_[b], axis);
                     });
    const auto l = build_node(begin, mid);
    const auto r = build_node(mid, end);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  // Lower bound on distance(p, q) for every p in the box. Uses the same
  // floating-point operations as `distance`, and rounding is monotone, so the
  // bound never exceeds a computed distance.
  static double box_distance(const Box &b, const Point3 &q) {
    auto gap = [](double lo, double hi, double v) {
      if (v < lo) return lo - v;
      if (v > hi) return v - hi;
      return 0.0;
    };
    const double dx = gap(b.lo.x, b.hi.x, q.x);
    const double dy = gap(b.lo.y, b.hi.y, q.y);
    const double dz = gap(b.lo.z, b.hi.z, q.z);
    return std::sqrt(dx * dx + dy * dy + dz * dz);
  }

  template <typename Pred>
  void search_nearest(std::int32_t id, const Point3 &q, Pred &admissible,
                      Neighbor &best) const {
    const Node &node = nodes_[id];
    if (box_distance(node.box, q) > best.distance) return;
    if (node.left < 0) {
      for (std::uint32_t k = node.begin; k < node.end; ++k) {
        const std::size_t i = order_[k];
        if (!admissible(i)) continue;
        Neighbor cand{i, distance(points_[i], q)};
        if (closer(cand, best)) best = cand;
      }
      return;
    }
    const double dl = box_distance(nodes_[node.left].box, q);
    const double dr = box_distance(nodes_[node.right].box, q);
    if (dl <= dr) {
      search_nearest(node.left, q, admissible, best);
      search_nearest(node.right, q, admissible, best);
    } else {
      search_nearest(node.right, q, admissible, best);
      search_nearest(node.left, q, admissible, best);
    }
  }

  void search_radius(std::int32_t id, const Point3 &q, double r,
                     std::vector<Neighbor> &out) const {
    const Node &node = nodes_[id];
    if (box_distance(node.box, q) > r) return;
    if (node.left < 0) {
      for (std::uint32_t k = node.begin; k < node.end; ++k) {
        const std::size_t i = order_[k];
        const double d = distance(points_[i], q);
        if (d <= r) out.push_back({i, d});
      }
      return;
    }
    search_radius(node.left, q, r, out);
    search_radius(node.right, q, r, out);
  }

  std::vector<Point3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

} // namespace pcc
