// sampling.hpp
//
// Subset samplers over a point cloud. Every sampler returns indices into the
// source cloud in selection order.
//
//   mds_sample  Minimum Density Sampling: repeatedly pick the unselected
//               point with the smallest Gaussian density with respect to
//               the points picked so far.
//   fps_sample  Farthest Point Sampling.
//   pds_sample  Poisson disk dart throwing with a bisected radius.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <unordered_map>
#include <vector>

#include "pcc/core.hpp"
#include "pcc/parallel.hpp"
#include "pcc/spatial.hpp"

namespace pcc {

struct SampleResult {
  std::vector<std::size_t> indices;
};

struct MdsConfig {
  /// Gaussian neighbourhood scale. Unset: twice the mean nearest-neighbour
  /// distance of the cloud.
  std::optional<double> sigma;
  /// First pick. Unset: index 0.
  std::optional<std::size_t> first_point;
  /// When > 0, Gaussian terms are only added to points within
  /// truncate_sigmas * sigma of the new pick. 0 keeps the exact sums.
  double truncate_sigmas = 0.0;
};

namespace detail {

inline void check_count(std::size_t m, std::size_t n, const char *who) {
  if (n == 0) throw InvalidArgument(std::string(who) + ": empty cloud");
  if (m == 0 || m > n) {
    throw InvalidArgument(std::string(who) + ": count " + std::to_string(m) +
                          " must lie in [1, " + std::to_string(n) + "]");
  }
}

inline std::size_t check_first(std::optional<std::size_t> first, std::size_t n,
                               const char *who) {
  const std::size_t f = first.value_or(0);
  if (f >= n) throw InvalidArgument(std::string(who) + ": first point out of range");
  return f;
}

} // namespace detail

/// Mean distance from each point to its nearest other point.
inline double mean_nn_distance(const PointCloud &cloud) {
  if (cloud.size() < 2) return 0.0;
  const SpatialIndex index(cloud);
  std::vector<double> d(cloud.size());
  parallel_for(
      0, cloud.size(), [&](std::size_t i) { d[i] = index.nearest(cloud[i], i).distance; }, 64);
  double sum = 0.0;
  for (double v : d) sum += v;
  return sum / static_cast<double>(cloud.size());
}

/// Sigma used when MdsConfig::sigma is unset. Falls back to 1 when the
/// cloud has no spacing (single point or all duplicates).
inline double default_sigma(const PointCloud &cloud) {
  const double s = 2.0 * mean_nn_distance(cloud);
  return s > 0.0 ? s : 1.0;
}

inline double gaussian_weight(double squared_dist, double sigma) {
  return std::exp(-squared_dist / (2.0 * sigma * sigma));
}

inline SampleResult mds_sample(const PointCloud &cloud, std::size_t m,
                               const MdsConfig &cfg = {}) {
  const std::size_t n = cloud.size();
  detail::check_count(m, n, "mds_sample");
  const double sigma = cfg.sigma ? *cfg.sigma : default_sigma(cloud);
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw InvalidArgument("mds_sample: sigma must be positive");
  }
  if (cfg.truncate_sigmas < 0.0) {
    throw InvalidArgument("mds_sample: truncate_sigmas must be non-negative");
  }
  std::size_t pick = detail::check_first(cfg.first_point, n, "mds_sample");

  std::optional<SpatialIndex> index;
  if (cfg.truncate_sigmas > 0.0) index.emplace(cloud);

  std::vector<double> density(n, 0.0);
  std::vector<char> taken(n, 0);
  SampleResult out;
  out.indices.reserve(m);
  for (std::size_t step = 0; step < m; ++step) {
    if (step > 0) {
      // Argmin over unselected points, lowest index on ties.
      pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i]) continue;
        if (pick == n || density[i] < density[pick]) pick = i;
      }
    }
    taken[pick] = 1;
    out.indices.push_back(pick);
    if (step + 1 == m) break;

    const Point3 &p = cloud[pick];
    if (index) {
      for (const auto &nb : index->within_radius(p, cfg.truncate_sigmas * sigma)) {
        if (!taken[nb.index]) density[nb.index] += gaussian_weight(squared_distance(cloud[nb.index], p), sigma);
      }
    } else {
      parallel_for(
          0, n,
          [&](std::size_t i) {
            if (!taken[i]) density[i] += gaussian_weight(squared_distance(cloud[i], p), sigma);
          },
          32);
    }
  }
  return out;
}

inline SampleResult mds_sample(const LabeledPointCloud &cloud, std::size_t m,
                               const MdsConfig &cfg = {}) {
  return mds_sample(cloud.cloud(), m, cfg);
}

inline SampleResult fps_sample(const PointCloud &cloud, std::size_t m,
                               std::size_t first_point = 0) {
  const std::size_t n = cloud.size();
  detail::check_count(m, n, "fps_sample");
  std::size_t pick = detail::check_first(first_point, n, "fps_sample");

  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  std::vector<char> taken(n, 0);
  SampleResult out;
  out.indices.reserve(m);
  for (std::size_t step = 0; step < m; ++step) {
    if (step > 0) {
      pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i]) continue;
        if (pick == n || min_dist[i] > min_dist[pick]) pick = i;
      }
    }
    taken[pick] = 1;
    out.indices.push_back(pick);
    const Point3 &p = cloud[pick];
    for (std::size_t i = 0; i < n; ++i) {
      if (!taken[i]) min_dist[i] = std::min(min_dist[i], distance(cloud[i], p));
    }
  }
  return out;
}

struct PdsResult {
  SampleResult sample;
  /// Every pair of accepted points is at least this far apart.
  double radius = 0.0;
};

namespace detail {

// Accepted points bucketed on a grid of cell size `radius`.
class DiskGrid {
public:
  DiskGrid(const PointCloud &cloud, double radius) : cloud_(cloud), radius_(radius) {
    const Box b = bounding_box(cloud.points());
    const double reach = std::max({std::abs(b.lo.x), std::abs(b.lo.y), std::abs(b.lo.z),
                                   std::abs(b.hi.x), std::abs(b.hi.y), std::abs(b.hi.z)});
    // Cell coordinates must fit in a long; tiny radii use a single bucket.
    bucketed_ = radius_ > 0.0 && reach / radius_ < 1e12;
  }

  bool conflicts(const Point3 &p) const {
    if (radius_ <= 0.0) return false;
    if (!bucketed_) {
      for (std::size_t j : flat_) {
        if (distance(cloud_[j], p) < radius_) return true;
      }
      return false;
    }
    const auto c = cell(p);
    for (long dx = -1; dx <= 1; ++dx)
      for (long dy = -1; dy <= 1; ++dy)
        for (long dz = -1; dz <= 1; ++dz) {
          auto it = cells_.find(key(c[0] + dx, c[1] + dy, c[2] + dz));
          if (it == cells_.end()) continue;
          for (std::size_t j : it->second) {
            if (distance(cloud_[j], p) < radius_) return true;
          }
        }
    return false;
  }

  void insert(std::size_t i) {
    if (radius_ <= 0.0) return;
    if (!bucketed_) {
      flat_.push_back(i);
      return;
    }
    const auto c = cell(cloud_[i]);
    cells_[key(c[0], c[1], c[2])].push_back(i);
  }

private:
  // Cells are marginally wider than the radius so rounding in the division
  // cannot push a conflicting point two cells away.
  std::array<long, 3> cell(const Point3 &p) const {
    const double w = radius_ * (1.0 + 1e-9);
    return {static_cast<long>(std::floor(p.x / w)), static_cast<long>(std::floor(p.y / w)),
            static_cast<long>(std::floor(p.z / w))};
  }
  static std::uint64_t key(long x, long y, long z) {
    auto h = [](long v) { return static_cast<std::uint64_t>(v) * 0x9E3779B97F4A7C15ull; };
    return h(x) ^ (h(y) >> 1) ^ (h(z) << 1) ^ static_cast<std::uint64_t>(z);
  }

  const PointCloud &cloud_;
  double radius_;
  bool bucketed_ = false;
  std::vector<std::size_t> flat_;
  // Collisions between distinct cells only cost extra distance checks.
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

// Dart throwing in `order`, continuing from an already-accepted set.
inline void throw_darts(const PointCloud &cloud, const std::vector<std::size_t> &order,
                        double radius, std::size_t limit, std::vector<std::size_t> &accepted,
                        std::vector<char> &is_accepted) {
  DiskGrid grid(cloud, radius);
  for (std::size_t j : accepted) grid.insert(j);
  for (std::size_t i : order) {
    if (accepted.size() >= limit) return;
    if (is_accepted[i] || grid.conflicts(cloud[i])) continue;
    accepted.push_back(i);
    is_accepted[i] = 1;
    grid.insert(i);
  }
}

inline std::size_t count_darts(const PointCloud &cloud, const std::vector<std::size_t> &order,
                               double radius) {
  std::vector<std::size_t> accepted;
  std::vector<char> mark(cloud.size(), 0);
  throw_darts(cloud, order, radius, cloud.size(), accepted, mark);
  return accepted.size();
}

} // namespace detail

/// Poisson disk sampling restricted to the given points. Points are visited
/// in a seed-shuffled order and accepted when no accepted point lies closer
/// than the radius. The radius is bisected until exactly m points are
/// accepted; if bisection cannot hit m, the largest radius accepting fewer
/// than m is kept and the set is topped up with progressively halved radii.
inline PdsResult pds_sample_with_radius(const PointCloud &cloud, std::size_t m, Seed seed) {
  const std::size_t n = cloud.size();
  detail::check_count(m, n, "pds_sample");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);

  PdsResult out;
  std::vector<char> mark(n, 0);
  auto &accepted = out.sample.indices;
  accepted.reserve(m);
  if (m == n) {
    detail::throw_darts(cloud, order, 0.0, n, accepted, mark);
    return out;
  }

  // The accepted count is not monotone in the radius in general; keep the
  // bracket count(lo) > m > count(hi) and stop on an exact hit.
  double lo = 0.0;
  double hi = std::nextafter(bbox_diagonal(cloud.points(), {}), 1e300);
  std::optional<double> exact;
  if (detail::count_darts(cloud, order, hi) == m) exact = hi;
  for (int iter = 0; iter < 100 && !exact; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const std::size_t c = detail::count_darts(cloud, order, mid);
    if (c == m) exact = mid;
    else if (c > m) lo = mid;
    else hi = mid;
  }

  if (exact) {
    detail::throw_darts(cloud, order, *exact, n, accepted, mark);
    out.radius = *exact;
    return out;
  }
  detail::throw_darts(cloud, order, hi, n, accepted, mark);
  double r = hi;
  while (accepted.size() < m) {
    r = r > lo ? lo : 0.5 * r;
    if (r < 1e-300) r = 0.0;
    detail::throw_darts(cloud, order, r, m, accepted, mark);
  }
  out.radius = r;
  return out;
}

inline SampleResult pds_sample(const PointCloud &cloud, std::size_t m, Seed seed) {
  return pds_sample_with_radius(cloud, m, seed).sample;
}

/// Uniformly random subset of size m (seeded partial shuffle).
inline SampleResult random_sample(const PointCloud &cloud, std::size_t m, Seed seed) {
  detail::check_count(m, cloud.size(), "random_sample");
  std::vector<std::size_t> order(cloud.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  order.resize(m);
  return {std::move(order)};
}

/// For every selected point, the Gaussian density due to the other
/// selected points.
inline std::vector<double> density_profile(const PointCloud &cloud,
                                           const SampleResult &selected, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("density_profile: sigma must be positive");
  const auto &idx = selected.indices;
  for (auto i : idx) {
    if (i >= cloud.size()) throw InvalidArgument("density_profile: index out of range");
  }
  std::vector<double> out(idx.size(), 0.0);
  parallel_for(
      0, idx.size(),
      [&](std::size_t a) {
        double s = 0.0;
        for (std::size_t b = 0; b < idx.size(); ++b) {
          if (b != a) s += gaussian_weight(squared_distance(cloud[idx[a]], cloud[idx[b]]), sigma);
        }
        out[a] = s;
      },
      idx.size() * 16);
  return out;
}

/// Population coefficient of variation (stddev / mean); 0 for a zero mean.
inline double coefficient_of_variation(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (mean == 0.0) return 0.0;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return std::sqrt(var) / mean;
}

} // namespace pcc
