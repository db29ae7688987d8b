// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "alloc_tracker.hpp"
#include "cli_harness.hpp"
#include "oracles.hpp"
#include "pcc/pcc.hpp"

namespace {

using namespace pcc;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Timer {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char *f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome auction_optimality() {
  const Timer t;
  std::size_t ok = 0, total = 0;
  double worst_gap = -1e300;
  for (std::size_t n : {8, 32, 128, 512}) {
    for (std::uint64_t s = 0; s < 100; ++s) {
      const auto a = gen_uniform_box(n, Box{}, Seed{s});
      const auto b = gen_uniform_box(n, Box{}, Seed{s + 100000});
      const auto r = emd_auction(a, b);
      const double exact = emd_exact(a, b).mean_cost;
      const double eps = 1e-3 * bbox_diagonal(a.points(), b.points());
      ++total;
      if (r.converged && r.mean_cost <= exact + eps) ++ok;
      worst_gap = std::max(worst_gap, (r.mean_cost - exact) / eps);
    }
  }
  const double secs = t.seconds();
  return {ok == total && secs < 60.0,
          fmt("%zu/%zu within eps, worst gap %.3f eps, %.1f s", ok, total, worst_gap, secs)};
}

Outcome exact_vs_permutations() {
  const Timer t;
  Rng rng(Seed{11});
  std::size_t ok = 0;
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const std::size_t n = 1 + rng.below(7);
    const auto a = gen_uniform_box(n, Box{}, Seed{s + 200});
    const auto b = gen_uniform_box(n, Box{}, Seed{s + 300});
    const double diff = std::abs(emd_exact(a, b).mean_cost - oracle::permutation_emd(a, b));
    worst = std::max(worst, diff);
    ok += diff <= 1e-10;
  }
  const double secs = t.seconds();
  return {ok == 50 && secs < 10.0,
          fmt("%zu/50 match, max diff %.2e, %.2f s", ok, worst, secs)};
}

Outcome linear_memory() {
  std::vector<double> xs, ys;
  bool no_square = true, completed = true;
  std::string per_n;
  for (std::size_t n : {1024, 2048, 4096, 8192}) {
    const auto a = gen_uniform_box(n, Box{}, Seed{1});
    const auto b = gen_uniform_box(n, Box{}, Seed{2});
    testing::alloc_reset();
    const auto r = emd_auction(a, b);
    const auto st = testing::alloc_stats();
    completed = completed && is_permutation_of_n(r.mapping) && r.mapping.size() == n;
    no_square = no_square && st.largest_block < n * n;
    xs.push_back(static_cast<double>(n));
    ys.push_back(static_cast<double>(st.peak_bytes));
    per_n += fmt(" n=%zu:%zuB", n, st.peak_bytes);
  }
  const double m = static_cast<double>(xs.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) sx += xs[i], sy += ys[i];
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  const double r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return {r2 >= 0.99 && no_square && completed,
          fmt("R^2 %.6f, slope %.1f B/point, no n*n block: %s, 8192 done: %s;", r2, slope,
              no_square ? "yes" : "no", completed ? "yes" : "no") +
              per_n};
}

PointCloud line(std::initializer_list<double> xs) {
  std::vector<Point3> pts;
  for (double x : xs) pts.push_back({x, 0, 0});
  return PointCloud(std::move(pts));
}

Outcome expansion_exact_value() {
  const auto r = expansion_penalty(ElementBatch(line({0, 1, 4}), 1, 3), {1.5});
  bool ok = std::abs(r.value - 1.0) <= 1e-12;
  const Point3 expect[3] = {{0, 0, 0}, {0, 0, 0}, {1.0 / 3.0, 0, 0}};
  double grad_err = 0.0;
  for (std::size_t p = 0; p < 3; ++p) grad_err = std::max(grad_err, distance(r.gradients[0][p], expect[p]));
  ok = ok && grad_err <= 1e-12;

  std::size_t zero = 0, cases = 0;
  for (std::size_t n = 3; n <= 12; ++n) {
    for (double step : {1.0, 0.25, 3.0}) {
      std::vector<Point3> pts;
      for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t i = 0; i < n; ++i) pts.push_back({step * i, 5.0 * k, 0});
      const auto z = expansion_penalty(ElementBatch(PointCloud(pts), 2, n), {1.5});
      ++cases;
      zero += z.value == 0.0;
    }
  }
  ok = ok && zero == cases;
  return {ok, fmt("value %.17g, gradient err %.1e, equally spaced exact zero %zu/%zu", r.value,
                  grad_err, zero, cases)};
}

using EdgeKey = std::pair<std::size_t, std::size_t>;

struct Structure {
  std::set<EdgeKey> tree;
  std::set<EdgeKey> active;
  bool operator==(const Structure &) const = default;
};

Structure structure_of(const std::vector<Point3> &element, double lambda) {
  const auto r = expansion_penalty(ElementBatch(PointCloud(element), 1, element.size()), {lambda});
  Structure s;
  for (const auto &e : r.trees[0].edges) s.tree.insert({e.from, e.to});
  for (const auto &e : r.active_edges[0]) s.active.insert({e.from, e.to});
  return s;
}

// Fixed-tree, fixed-filter surrogate: heads are held at their original
// positions, so only tail coordinates move.
double surrogate(const std::vector<Point3> &moved, const std::vector<Point3> &orig,
                 const std::vector<DirectedEdge> &active, double kn) {
  double s = 0.0;
  for (const auto &e : active) s += distance(moved[e.from], orig[e.to]);
  return s / kn;
}

Outcome expansion_gradient_check() {
  const double h = 1e-6, lambda = 1.5;
  Rng rng(Seed{2024});
  std::size_t accepted = 0, rejected = 0, failed = 0;
  double worst = 0.0;
  std::uint64_t draw = 0;
  while (accepted < 200) {
    const std::size_t k = 1 + rng.below(4);
    const std::size_t n = 3 + rng.below(62);
    const auto cloud = gen_uniform_box(k * n, Box{}, Seed{5000 + draw++});
    const ElementBatch batch(cloud, k, n);
    const auto r = expansion_penalty(batch, {lambda});
    const double kn = static_cast<double>(k * n);

    bool stable = true, any_active = false;
    std::vector<std::vector<Point3>> elems(k);
    for (std::size_t i = 0; i < k && stable; ++i) {
      const auto span = batch.element(i);
      elems[i].assign(span.begin(), span.end());
      any_active = any_active || !r.active_edges[i].empty();
      const Structure base = structure_of(elems[i], lambda);
      for (const auto &e : r.active_edges[i]) {
        for (int axis = 0; axis < 3 && stable; ++axis) {
          for (double sign : {-1.0, 1.0}) {
            auto moved = elems[i];
            (&moved[e.from].x)[axis] += sign * h;
            if (!(structure_of(moved, lambda) == base)) stable = false;
          }
        }
      }
    }
    if (!stable || !any_active) {
      ++rejected;
      continue;
    }
    ++accepted;

    bool ok = true;
    for (std::size_t i = 0; i < k; ++i) {
      std::vector<bool> is_tail(n, false);
      for (const auto &e : r.active_edges[i]) is_tail[e.from] = true;
      for (std::size_t p = 0; p < n; ++p) {
        const Point3 g = r.gradients[i][p];
        if (!is_tail[p]) {
          ok = ok && g == Point3{};
          continue;
        }
        Point3 fd;
        for (int axis = 0; axis < 3; ++axis) {
          auto plus = elems[i], minus = elems[i];
          (&plus[p].x)[axis] += h;
          (&minus[p].x)[axis] -= h;
          (&fd.x)[axis] = (surrogate(plus, elems[i], r.active_edges[i], kn) -
                           surrogate(minus, elems[i], r.active_edges[i], kn)) /
                          (2.0 * h);
        }
        const double denom = std::max(norm(fd), norm(g));
        const double rel = denom == 0.0 ? 0.0 : distance(fd, g) / denom;
        worst = std::max(worst, rel);
        ok = ok && rel <= 1e-5;
      }
    }
    failed += !ok;
  }
  return {failed == 0, fmt("%zu/200 configs pass, worst relative error %.2e, %zu draws rejected",
                           200 - failed, worst, rejected)};
}

Outcome mst_vs_kruskal() {
  Rng rng(Seed{31});
  std::size_t ok = 0;
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const std::size_t n = 2 + rng.below(199);
    const auto c = gen_uniform_box(n, Box{}, Seed{s + 700});
    const double prim = build_mst(c.points()).total_length();
    const double kruskal = oracle::total_length(oracle::kruskal_mst(c.points()));
    worst = std::max(worst, std::abs(prim - kruskal));
    ok += std::abs(prim - kruskal) <= 1e-10;
  }
  return {ok == 100, fmt("%zu/100 match, max diff %.2e", ok, worst)};
}

Outcome mds_balance() {
  const Timer t;
  const double sigma = 0.05;
  double dev = 0.0;
  std::size_t cv_wins = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto c = gen_two_density(200, 400, Seed{s});
    const auto mds = mds_sample(c, 400, {sigma, 0});
    const auto rnd = random_sample(c, 400, Seed{s + 9000});
    std::size_t left = 0;
    for (auto i : mds.indices) left += c[i].y < 0.5;
    dev += std::abs(static_cast<double>(left) - 200.0);
    const double cv_mds = coefficient_of_variation(density_profile(c, mds, sigma));
    const double cv_rnd = coefficient_of_variation(density_profile(c, rnd, sigma));
    cv_wins += cv_mds < cv_rnd;
  }
  const double mean_dev = dev / 50.0;
  const double secs = t.seconds();
  return {mean_dev <= 20.0 && cv_wins >= 45 && secs < 30.0,
          fmt("mean |left-200| %.2f (limit 20), CV below random in %zu/50 seeds, %.1f s",
              mean_dev, cv_wins, secs)};
}

Outcome chamfer_properties() {
  Rng rng(Seed{41});
  std::size_t ok = 0;
  for (int t = 0; t < 100; ++t) {
    const auto a = gen_uniform_box(1 + rng.below(200), Box{}, Seed{900u + 2u * t});
    const auto b = gen_uniform_box(1 + rng.below(200), Box{}, Seed{901u + 2u * t});
    const double ab = chamfer_distance(a, b);
    const Point3 shift{rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10)};
    std::vector<Point3> as(a.begin(), a.end()), bs(b.begin(), b.end());
    for (auto &p : as) p = p + shift;
    for (auto &p : bs) p = p + shift;
    const bool pass = chamfer_distance(a, a) == 0.0 &&
                      std::abs(ab - chamfer_distance(b, a)) <= 1e-12 &&
                      std::abs(ab - chamfer_distance(PointCloud(as), PointCloud(bs))) <= 1e-9 &&
                      std::abs(ab - oracle::double_loop_chamfer(a, b)) <= 1e-12;
    ok += pass;
  }
  return {ok == 100, fmt("%zu/100 pairs satisfy all properties", ok)};
}

Outcome joint_loss_composition() {
  const auto coarse = line({0, 1, 4});
  const PointCloud gt{{0, 0.5, 0}, {2, 0, 0}, {3.5, 0, 1}};
  const PointCloud fin{{0.1, 0, 0}, {1.9, 0.2, 0}, {3.6, 0, 0.8}};
  const ElementBatch batch(coarse, 1, 3);
  const AuctionConfig cfg;
  const double e1 = oracle::permutation_emd(coarse, gt);
  const double e2 = oracle::permutation_emd(fin, gt);
  const double eps1 = 1e-3 * bbox_diagonal(coarse.points(), gt.points());
  const double eps2 = 1e-3 * bbox_diagonal(fin.points(), gt.points());

  const auto r = joint_loss(coarse, fin, gt, batch, {0.1, 1.0}, cfg, {1.5});
  const double lo = e1 + 0.1 * 1.0 + e2;
  const bool composed = r.total == r.emd_coarse + 0.1 * r.expansion + 1.0 * r.emd_final;
  const bool bounded = r.emd_coarse >= e1 - 1e-12 && r.emd_coarse <= e1 + eps1 &&
                       r.emd_final >= e2 - 1e-12 && r.emd_final <= e2 + eps2 &&
                       std::abs(r.expansion - 1.0) <= 1e-12 && r.total >= lo - 1e-12 &&
                       r.total <= lo + eps1 + eps2 + 1e-12;
  const auto z = joint_loss(coarse, fin, gt, batch, {0.0, 0.0}, cfg, {1.5});
  const bool degenerate = z.total == z.emd_coarse;
  return {composed && bounded && degenerate,
          fmt("total %.12f vs oracle %.12f (+%.1e allowed), composition exact: %s, "
              "alpha=beta=0 exact: %s",
              r.total, lo, eps1 + eps2, composed ? "yes" : "no", degenerate ? "yes" : "no")};
}

Outcome cli_determinism() {
  const std::size_t n = 1024;
  const testing::Workspace ws("acceptance", n);
  std::size_t ok = 0, total = 0;
  std::string first_bad;
  for (const auto &inv : testing::subcommand_matrix(n)) {
    ++total;
    const auto ref = ws.run(testing::Invocation{testing::with_threads(inv.args, 1), inv.outputs});
    bool same = ref.code == 0;
    for (unsigned t : {1u, 4u})
      for (int rep = 0; rep < 3; ++rep)
        same = same &&
               ws.run(testing::Invocation{testing::with_threads(inv.args, t), inv.outputs}) == ref;
    ok += same;
    if (!same && first_bad.empty()) first_bad = " first mismatch: " + inv.args[0];
  }
  return {ok == total,
          fmt("%zu/%zu invocations byte-identical over 3 runs x threads {1,4}", ok, total) +
              first_bad};
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"C1 auction EMD within epsilon of exact", auction_optimality},
      {"C2 exact EMD equals permutation minimum", exact_vs_permutations},
      {"C3 auction EMD memory is linear", linear_memory},
      {"C4 expansion penalty exact values", expansion_exact_value},
      {"C5 expansion gradient matches finite differences", expansion_gradient_check},
      {"C6 Prim MST equals Kruskal oracle", mst_vs_kruskal},
      {"C7 MDS balance on two-density instance", mds_balance},
      {"C8 Chamfer properties", chamfer_properties},
      {"C9 joint loss composition", joint_loss_composition},
      {"C10 CLI determinism", cli_determinism},
  };
  int failures = 0;
  for (const auto &[name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
