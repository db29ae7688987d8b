// chamfer.hpp

#pragma once

#include <vector>

#include "pcc/core.hpp"
#include "pcc/parallel.hpp"
#include "pcc/spatial.hpp"

namespace pcc {

struct ChamferOptions {
  /// Use squared nearest-neighbour distances instead of plain distances.
  bool squared = false;
};

namespace detail {

// Mean over `from` of the distance to the nearest point of `to`.
inline double mean_nearest(const PointCloud &from, const PointCloud &to, bool squared) {
  const SpatialIndex index(to);
  std::vector<double> d(from.size());
  parallel_for(
      0, from.size(),
      [&](std::size_t i) {
        const double v = index.nearest(from[i]).distance;
        d[i] = squared ? v * v : v;
      },
      64);
  double sum = 0.0;
  for (double v : d) sum += v;
  return sum / static_cast<double>(from.size());
}

} // namespace detail

/// Symmetric Chamfer distance:
///   ½ (mean_{x∈A} min_{y∈B} ‖x−y‖ + mean_{y∈B} min_{x∈A} ‖x−y‖).
/// Sizes may differ. The norm is not squared unless `opts.squared`.
inline double chamfer_distance(const PointCloud &a, const PointCloud &b,
                               ChamferOptions opts = {}) {
  if (a.empty() || b.empty()) throw InvalidArgument("chamfer_distance: empty cloud");
  const double ab = detail::mean_nearest(a, b, opts.squared);
  const double ba = detail::mean_nearest(b, a, opts.squared);
  return 0.5 * (ab + ba);
}

} // namespace pcc
