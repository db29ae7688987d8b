// emd.hpp
//
// Earth Mover's Distance between two equal-size clouds.
//
// emd_exact   Hungarian method over the dense cost matrix. O(n^3) time,
//             O(n^2) memory; used as the optimality oracle.
// emd_auction Auction algorithm (persons = points of s1, objects = points of
//             s2, benefit = -distance). Only per-point state is kept and the
//             cost of a pair is recomputed whenever it is needed, so the
//             auxiliary memory is O(n). With epsilon scaling the final phase
//             runs at cfg.epsilon; on convergence the mean cost is within
//             epsilon of the optimum. When the bid budget runs out the
//             remaining persons are matched greedily to their nearest free
//             object.

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "pcc/core.hpp"
#include "pcc/parallel.hpp"
#include "pcc/spatial.hpp"

namespace pcc {

struct Assignment {
  /// mapping[i] is the index in s2 matched with point i of s1.
  std::vector<std::size_t> mapping;
  double mean_cost = 0.0;

  // Auction diagnostics; left at their defaults by emd_exact.
  bool converged = true;
  std::size_t bids = 0;
  std::size_t phases = 0;
  std::size_t greedy_assigned = 0;
  double epsilon = 0.0;
};

struct AuctionConfig {
  /// Final epsilon. Unset: 1e-3 times the joint bounding-box diagonal.
  std::optional<double> epsilon;
  bool epsilon_scaling = true;
  double scaling_factor = 0.25;
  /// Bid budget before the greedy fallback. Unset: 50 * n.
  std::optional<std::size_t> max_iterations;
  /// Bidding is deterministic; the seed is carried for reproducibility
  /// records and does not change the result.
  Seed seed{};
};

/// Mean of ‖s1[i] − s2[mapping[i]]‖, summed in ascending i.
inline double assignment_cost(const PointCloud &s1, const PointCloud &s2,
                              std::span<const std::size_t> mapping) {
  double sum = 0.0;
  for (std::size_t i = 0; i < mapping.size(); ++i) sum += distance(s1[i], s2[mapping[i]]);
  return mapping.empty() ? 0.0 : sum / static_cast<double>(mapping.size());
}

inline bool is_permutation_of_n(std::span<const std::size_t> mapping) {
  std::vector<bool> seen(mapping.size(), false);
  for (auto j : mapping) {
    if (j >= mapping.size() || seen[j]) return false;
    seen[j] = true;
  }
  return true;
}

/// Largest n accepted by emd_exact (the cost matrix is n*n doubles).
inline constexpr std::size_t kExactEmdCap = 2048;

inline Assignment emd_exact(const PointCloud &s1, const PointCloud &s2) {
  if (s1.size() != s2.size()) {
    throw InvalidArgument("emd_exact: size mismatch (" + std::to_string(s1.size()) +
                          " vs " + std::to_string(s2.size()) + ")");
  }
  if (s1.empty()) throw InvalidArgument("emd_exact: empty clouds");
  const std::size_t n = s1.size();
  if (n > kExactEmdCap) {
    throw CapacityError("emd_exact: n = " + std::to_string(n) + " exceeds cap " +
                        std::to_string(kExactEmdCap));
  }

  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = distance(s1[i], s2[j]);
  }

  // Shortest augmenting path with potentials; rows/columns are 1-based and
  // column 0 is the virtual source.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t row = 1; row <= n; ++row) {
    match[0] = row;
    std::size_t col0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[col0] = 1;
      const std::size_t r = match[col0];
      double delta = inf;
      std::size_t col1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(r - 1) * n + (j - 1)] - u[r] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = col0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          col1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }

  Assignment out;
  out.mapping.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) out.mapping[match[j] - 1] = j - 1;
  out.mean_cost = assignment_cost(s1, s2, out.mapping);
  return out;
}

namespace detail {

inline constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();

struct Bid {
  std::size_t object = kUnassigned;
  double price = 0.0;
};

} // namespace detail

inline Assignment emd_auction(const PointCloud &s1, const PointCloud &s2,
                              const AuctionConfig &cfg = {}) {
  if (s1.size() != s2.size()) {
    throw InvalidArgument("emd_auction: size mismatch (" + std::to_string(s1.size()) +
                          " vs " + std::to_string(s2.size()) + ")");
  }
  if (s1.empty()) throw InvalidArgument("emd_auction: empty clouds");
  if (cfg.epsilon && !(*cfg.epsilon > 0.0)) {
    throw InvalidArgument("emd_auction: epsilon must be positive");
  }
  if (!(cfg.scaling_factor > 0.0 && cfg.scaling_factor < 1.0)) {
    throw InvalidArgument("emd_auction: scaling_factor must lie in (0, 1)");
  }
  if (cfg.max_iterations && *cfg.max_iterations == 0) {
    throw InvalidArgument("emd_auction: max_iterations must be at least 1");
  }

  const std::size_t n = s1.size();
  const double diag = bbox_diagonal(s1.points(), s2.points());
  const double final_eps = cfg.epsilon ? *cfg.epsilon : 1e-3 * diag;
  const std::size_t budget = cfg.max_iterations ? *cfg.max_iterations : 50 * n;

  Assignment out;
  out.epsilon = final_eps;
  if (final_eps == 0.0) {
    // Every point coincides: all costs are zero and any bijection is optimal.
    out.mapping.resize(n);
    std::iota(out.mapping.begin(), out.mapping.end(), std::size_t{0});
    out.mean_cost = 0.0;
    return out;
  }

  std::vector<double> eps_schedule;
  if (cfg.epsilon_scaling) {
    for (double e = 0.25 * diag; e > final_eps; e *= cfg.scaling_factor) {
      eps_schedule.push_back(e);
    }
  }
  eps_schedule.push_back(final_eps);

  using detail::kUnassigned;
  std::vector<double> price(n, 0.0);
  std::vector<std::size_t> owner(n, kUnassigned);     // object -> person
  std::vector<std::size_t> assigned(n, kUnassigned);  // person -> object
  std::vector<std::size_t> unassigned;
  std::vector<std::size_t> next_unassigned;
  std::vector<detail::Bid> bids;
  std::vector<detail::Bid> best_bid(n);               // object -> highest bid
  std::vector<std::size_t> best_bidder(n, kUnassigned);
  std::vector<std::size_t> touched;
  unassigned.reserve(n);
  next_unassigned.reserve(n);
  bids.reserve(n);
  touched.reserve(n);

  bool exhausted = false;
  for (double eps : eps_schedule) {
    ++out.phases;
    std::fill(owner.begin(), owner.end(), kUnassigned);
    std::fill(assigned.begin(), assigned.end(), kUnassigned);
    unassigned.resize(n);
    std::iota(unassigned.begin(), unassigned.end(), std::size_t{0});

    while (!unassigned.empty()) {
      if (out.bids >= budget) {
        exhausted = true;
        break;
      }
      // Bidding: every unassigned person bids against the current prices.
      bids.resize(unassigned.size());
      parallel_for(
          0, unassigned.size(),
          [&](std::size_t k) {
            const Point3 &p = s1[unassigned[k]];
            double best = -std::numeric_limits<double>::infinity();
            double second = best;
            std::size_t best_j = 0;
            for (std::size_t j = 0; j < n; ++j) {
              const double value = -distance(p, s2[j]) - price[j];
              if (value > best) {
                second = best;
                best = value;
                best_j = j;
              } else if (value > second) {
                second = value;
              }
            }
            const double increment = n > 1 ? best - second + eps : eps;
            bids[k] = {best_j, price[best_j] + increment};
          },
          2 * n);
      out.bids += unassigned.size();

      // Assignment: each object goes to its highest bidder, ties to the
      // lowest person index (persons are visited in ascending order).
      touched.clear();
      for (std::size_t k = 0; k < unassigned.size(); ++k) {
        const auto &bid = bids[k];
        if (best_bidder[bid.object] == kUnassigned) {
          touched.push_back(bid.object);
          best_bidder[bid.object] = unassigned[k];
          best_bid[bid.object] = bid;
        } else if (bid.price > best_bid[bid.object].price) {
          best_bidder[bid.object] = unassigned[k];
          best_bid[bid.object] = bid;
        }
      }
      next_unassigned.clear();
      for (std::size_t k = 0; k < unassigned.size(); ++k) {
        const std::size_t person = unassigned[k];
        if (best_bidder[bids[k].object] != person) next_unassigned.push_back(person);
      }
      for (std::size_t j : touched) {
        const std::size_t winner = best_bidder[j];
        if (owner[j] != kUnassigned) {
          assigned[owner[j]] = kUnassigned;
          next_unassigned.push_back(owner[j]);
        }
        owner[j] = winner;
        assigned[winner] = j;
        price[j] = best_bid[j].price;
        best_bidder[j] = kUnassigned;
      }
      std::sort(next_unassigned.begin(), next_unassigned.end());
      unassigned.swap(next_unassigned);
    }
    if (exhausted) break;
  }

  if (exhausted) {
    // Greedy completion: persons in ascending index take the nearest free
    // object. `owner` doubles as the mask of taken objects.
    out.converged = false;
    const SpatialIndex index(s2);
    std::sort(unassigned.begin(), unassigned.end());
    for (std::size_t person : unassigned) {
      auto nb = index.nearest_if(s1[person],
                                 [&](std::size_t j) { return owner[j] == kUnassigned; });
      owner[nb->index] = person;
      assigned[person] = nb->index;
      ++out.greedy_assigned;
    }
  }

  out.mapping = std::move(assigned);
  out.mean_cost = assignment_cost(s1, s2, out.mapping);
  return out;
}

} // namespace pcc
