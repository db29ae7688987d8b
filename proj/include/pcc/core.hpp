// core.hpp
//
// Point and cloud types, error types, seeded randomness and the synthetic
// instance generators used throughout pcc.

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pcc {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Precondition violated by the caller (bad sizes, counts, parameters).
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// Input exceeds a declared capacity (e.g. the exact EMD oracle cap).
class CapacityError : public Error {
public:
  using Error::Error;
};

/// Data parsed fine but breaks a domain invariant (NaN, bad label).
class ValidationError : public Error {
public:
  ValidationError(const std::string &what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

/// Malformed file content. `line()` is 1-based, 0 when not applicable.
class ParseError : public Error {
public:
  ParseError(const std::string &what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

class IoError : public Error {
public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }

  friend bool operator==(const Point3 &, const Point3 &) = default;
  friend Point3 operator+(const Point3 &a, const Point3 &b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
  }
  friend Point3 operator-(const Point3 &a, const Point3 &b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
  }
  friend Point3 operator*(double s, const Point3 &a) {
    return {s * a.x, s * a.y, s * a.z};
  }
};

// Every distance in the library goes through these two functions so that
// indexes, oracles and algorithms agree bit-for-bit.
inline double squared_distance(const Point3 &a, const Point3 &b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

inline double distance(const Point3 &a, const Point3 &b) {
  return std::sqrt(squared_distance(a, b));
}

inline double norm(const Point3 &a) { return distance(a, Point3{}); }

/// Ordered list of finite 3D points. Duplicates are allowed. Emptiness is
/// legal for the container itself; operations reject empty inputs.
class PointCloud {
public:
  PointCloud() = default;
  explicit PointCloud(std::vector<Point3> points) : points_(std::move(points)) {
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (!points_[i].finite()) {
        throw ValidationError("non-finite coordinate at point " +
                              std::to_string(i));
      }
    }
  }
  PointCloud(std::initializer_list<Point3> pts)
      : PointCloud(std::vector<Point3>(pts)) {}

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Point3 &operator[](std::size_t i) const { return points_[i]; }
  std::span<const Point3> points() const { return points_; }
  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

  friend bool operator==(const PointCloud &, const PointCloud &) = default;

private:
  std::vector<Point3> points_;
};

/// Points plus a parallel binary source channel: 0 = input, 1 = coarse.
class LabeledPointCloud {
public:
  LabeledPointCloud() = default;
  LabeledPointCloud(PointCloud cloud, std::vector<std::uint8_t> labels)
      : cloud_(std::move(cloud)), labels_(std::move(labels)) {
    if (labels_.size() != cloud_.size()) {
      throw InvalidArgument("label count " + std::to_string(labels_.size()) +
                            " does not match point count " +
                            std::to_string(cloud_.size()));
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i] > 1) {
        throw ValidationError("label at point " + std::to_string(i) +
                              " is not 0 or 1");
      }
    }
  }

  std::size_t size() const { return cloud_.size(); }
  bool empty() const { return cloud_.empty(); }
  const PointCloud &cloud() const { return cloud_; }
  std::span<const std::uint8_t> labels() const { return labels_; }
  const Point3 &point(std::size_t i) const { return cloud_[i]; }
  std::uint8_t label(std::size_t i) const { return labels_[i]; }

  friend bool operator==(const LabeledPointCloud &,
                         const LabeledPointCloud &) = default;

private:
  PointCloud cloud_;
  std::vector<std::uint8_t> labels_;
};

struct Box {
  Point3 lo{0.0, 0.0, 0.0};
  Point3 hi{1.0, 1.0, 1.0};
};

inline Box bounding_box(std::span<const Point3> pts) {
  Box b{pts.empty() ? Point3{} : pts[0], pts.empty() ? Point3{} : pts[0]};
  for (const auto &p : pts) {
    b.lo = {std::min(b.lo.x, p.x), std::min(b.lo.y, p.y), std::min(b.lo.z, p.z)};
    b.hi = {std::max(b.hi.x, p.x), std::max(b.hi.y, p.y), std::max(b.hi.z, p.z)};
  }
  return b;
}

/// Diagonal of the joint bounding box of two clouds.
inline double bbox_diagonal(std::span<const Point3> a, std::span<const Point3> b) {
  if (a.empty() && b.empty()) return 0.0;
  Box ba = bounding_box(a.empty() ? b : a);
  Box bb = bounding_box(b.empty() ? a : b);
  Point3 lo{std::min(ba.lo.x, bb.lo.x), std::min(ba.lo.y, bb.lo.y),
            std::min(ba.lo.z, bb.lo.z)};
  Point3 hi{std::max(ba.hi.x, bb.hi.x), std::max(ba.hi.y, bb.hi.y),
            std::max(ba.hi.z, bb.hi.z)};
  return distance(lo, hi);
}

/// Sub-cloud by index list, in the given order.
inline PointCloud select(const PointCloud &cloud,
                         std::span<const std::size_t> indices) {
  std::vector<Point3> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(cloud[i]);
  return PointCloud(std::move(out));
}

inline LabeledPointCloud select(const LabeledPointCloud &cloud,
                                std::span<const std::size_t> indices) {
  std::vector<std::uint8_t> labels;
  labels.reserve(indices.size());
  for (auto i : indices) labels.push_back(cloud.label(i));
  return LabeledPointCloud(select(cloud.cloud(), indices), std::move(labels));
}

// ---------------------------------------------------------------------------
// Randomness
// ---------------------------------------------------------------------------

struct Seed {
  std::uint64_t value = 0;
};

/// Seeded generator with distribution code owned here, so output does not
/// depend on the standard library's distribution implementations.
class Rng {
public:
  explicit Rng(Seed seed) : engine_(seed.value) {}

  /// Uniform in [0, 1).
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    if (lo == hi) return lo;
    double v = lo + (hi - lo) * uniform01();
    return v < hi ? v : lo;
  }

  /// Uniform integer in [0, bound), bound > 0.
  std::uint64_t below(std::uint64_t bound) {
    // Lemire's multiply-shift with rejection.
    unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(engine_()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  template <typename T> void shuffle(std::vector<T> &v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

private:
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

inline PointCloud gen_uniform_box(std::size_t n, const Box &box, Seed seed) {
  if (n == 0) throw InvalidArgument("gen_uniform_box: n must be at least 1");
  if (!box.lo.finite() || !box.hi.finite()) {
    throw InvalidArgument("gen_uniform_box: box bounds must be finite");
  }
  if (box.hi.x < box.lo.x || box.hi.y < box.lo.y || box.hi.z < box.lo.z) {
    throw InvalidArgument("gen_uniform_box: box has lo > hi on some axis");
  }
  if (box.hi.x == box.lo.x && box.hi.y == box.lo.y && box.hi.z == box.lo.z) {
    throw InvalidArgument("gen_uniform_box: box has zero extent on every axis");
  }
  Rng rng(seed);
  std::vector<Point3> pts(n);
  for (auto &p : pts) {
    p.x = rng.uniform(box.lo.x, box.hi.x);
    p.y = rng.uniform(box.lo.y, box.hi.y);
    p.z = rng.uniform(box.lo.z, box.hi.z);
  }
  return PointCloud(std::move(pts));
}

/// Unit square in the z=0 plane split at y = 0.5: `n_left` points uniform in
/// y ∈ [0, 0.5), `n_right` points uniform in y ∈ [0.5, 1). Left points first.
inline PointCloud gen_two_density(std::size_t n_left, std::size_t n_right,
                                  Seed seed) {
  if (n_left == 0 || n_right == 0) {
    throw InvalidArgument("gen_two_density: both halves need at least 1 point");
  }
  Rng rng(seed);
  std::vector<Point3> pts;
  pts.reserve(n_left + n_right);
  for (std::size_t i = 0; i < n_left; ++i) {
    pts.push_back({rng.uniform01(), rng.uniform(0.0, 0.5), 0.0});
  }
  for (std::size_t i = 0; i < n_right; ++i) {
    pts.push_back({rng.uniform01(), rng.uniform(0.5, 1.0), 0.0});
  }
  return PointCloud(std::move(pts));
}

} // namespace pcc
