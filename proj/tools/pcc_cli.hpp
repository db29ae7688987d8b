// pcc_cli.hpp
//
// Command-line front end. Kept in a header so tests can drive it in-process.
// Output is one `key: value` datum per line on stdout; diagnostics go to
// stderr as a single line. Exit codes: 0 success, 1 usage or validation
// error, 2 I/O or file parse error.

#pragma once

#include <CLI11.hpp>

#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "pcc/pcc.hpp"

namespace pcc::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kIo = 2 };

namespace detail {

struct Common {
  unsigned threads = 0;
  std::uint64_t seed = 0;
  std::string format;
};

class Emitter {
public:
  explicit Emitter(std::ostream &out) : out_(out) {}
  void real(const std::string &key, double v) { out_ << key << ": " << format_real(v) << '\n'; }
  void count(const std::string &key, std::size_t v) { out_ << key << ": " << v << '\n'; }
  void text(const std::string &key, const std::string &v) { out_ << key << ": " << v << '\n'; }
  void flag(const std::string &key, bool v) { text(key, v ? "true" : "false"); }

private:
  std::ostream &out_;
};

inline CloudFormat resolve_format(const Common &c, const std::string &path) {
  if (!c.format.empty()) return *parse_format(c.format);
  return format_from_path(path);
}

inline AuctionConfig auction_config(std::optional<double> eps, std::optional<std::size_t> iters,
                                    bool no_scaling, double factor, std::uint64_t seed) {
  AuctionConfig cfg;
  cfg.epsilon = eps;
  cfg.max_iterations = iters;
  cfg.epsilon_scaling = !no_scaling;
  cfg.scaling_factor = factor;
  cfg.seed = Seed{seed};
  return cfg;
}

inline void write_text_lines(const std::string &path, const std::vector<std::string> &lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const auto &l : lines) out << l << '\n';
  if (!out) throw IoError("write to '" + path + "' failed");
}

} // namespace detail

inline int run(std::vector<std::string> args, std::ostream &out, std::ostream &err) {
  using detail::Emitter;
  CLI::App app{"Point cloud completion losses and sampling"};
  app.name("pcc");
  app.require_subcommand(1);
  app.fallthrough();

  detail::Common common;
  app.add_option("--threads", common.threads, "Cap on worker threads (0 = all cores)");
  app.add_option("--seed", common.seed, "Seed for randomized operations");
  app.add_option("--format", common.format, "Cloud file format for inputs and outputs")
      ->check(CLI::IsMember({"xyz", "xyzl", "ply"}));

  std::function<void()> action;
  Emitter emit(out);

  // emd ---------------------------------------------------------------------
  auto *emd = app.add_subcommand("emd", "Earth Mover's Distance between equal-size clouds");
  std::string emd_a, emd_b, emd_assignment;
  std::optional<double> emd_eps;
  std::optional<std::size_t> emd_iters;
  bool emd_exact_flag = false, emd_no_scaling = false;
  double emd_factor = 0.25;
  emd->add_option("a", emd_a)->required();
  emd->add_option("b", emd_b)->required();
  emd->add_option("--epsilon", emd_eps, "Final auction epsilon (default 1e-3 * bbox diagonal)");
  emd->add_option("--max-iters", emd_iters, "Bid budget before the greedy fallback");
  emd->add_option("--scaling-factor", emd_factor, "Epsilon reduction factor per phase");
  emd->add_flag("--exact", emd_exact_flag, "Use the exact Hungarian solver");
  emd->add_flag("--no-scaling", emd_no_scaling, "Disable epsilon scaling");
  emd->add_option("--assignment", emd_assignment, "Write mapping[i] per line to this file");
  emd->callback([&] {
    action = [&] {
      const auto a = read_points(emd_a, detail::resolve_format(common, emd_a));
      const auto b = read_points(emd_b, detail::resolve_format(common, emd_b));
      Assignment res;
      if (emd_exact_flag) {
        res = emd_exact(a, b);
      } else {
        res = emd_auction(a, b,
                          detail::auction_config(emd_eps, emd_iters, emd_no_scaling, emd_factor,
                                                 common.seed));
      }
      emit.text("method", emd_exact_flag ? "exact" : "auction");
      emit.count("n", a.size());
      emit.real("mean_cost", res.mean_cost);
      if (!emd_exact_flag) {
        emit.real("epsilon", res.epsilon);
        emit.flag("converged", res.converged);
        emit.count("bids", res.bids);
        emit.count("phases", res.phases);
        emit.count("greedy_assigned", res.greedy_assigned);
      }
      if (!emd_assignment.empty()) {
        std::vector<std::string> lines;
        for (auto j : res.mapping) lines.push_back(std::to_string(j));
        detail::write_text_lines(emd_assignment, lines);
      }
    };
  });

  // chamfer -----------------------------------------------------------------
  auto *cham = app.add_subcommand("chamfer", "Chamfer distance between two clouds");
  std::string cham_a, cham_b;
  bool cham_squared = false;
  cham->add_option("a", cham_a)->required();
  cham->add_option("b", cham_b)->required();
  cham->add_flag("--squared", cham_squared, "Use squared nearest-neighbour distances");
  cham->callback([&] {
    action = [&] {
      const auto a = read_points(cham_a, detail::resolve_format(common, cham_a));
      const auto b = read_points(cham_b, detail::resolve_format(common, cham_b));
      emit.real("chamfer", chamfer_distance(a, b, {cham_squared}));
      emit.count("n_a", a.size());
      emit.count("n_b", b.size());
      emit.flag("squared", cham_squared);
    };
  });

  // expansion ---------------------------------------------------------------
  auto *exp = app.add_subcommand("expansion", "Expansion penalty over K elements of N points");
  std::string exp_in, exp_grad, exp_edges;
  std::size_t exp_k = 16, exp_n = 512;
  double exp_lambda = 1.5;
  exp->add_option("input", exp_in)->required();
  exp->add_option("--k", exp_k, "Number of surface elements");
  exp->add_option("--n", exp_n, "Points per element (consecutive blocks)");
  exp->add_option("--lambda", exp_lambda, "Edge-length filter multiplier");
  exp->add_option("--gradient", exp_grad, "Write per-point gradients as a cloud file");
  exp->add_option("--edges", exp_edges, "Write the directed trees as text");
  exp->callback([&] {
    action = [&] {
      auto pts = read_points(exp_in, detail::resolve_format(common, exp_in));
      const ElementBatch batch(std::move(pts), exp_k, exp_n);
      const auto res = expansion_penalty(batch, {exp_lambda});
      std::size_t active = 0;
      for (const auto &a : res.active_edges) active += a.size();
      emit.real("value", res.value);
      emit.count("k", exp_k);
      emit.count("n", exp_n);
      emit.real("lambda", exp_lambda);
      emit.count("active_edges", active);
      if (!exp_grad.empty()) {
        std::vector<Point3> g;
        for (const auto &el : res.gradients) g.insert(g.end(), el.begin(), el.end());
        write_cloud(PointCloud(std::move(g)), exp_grad,
                    common.format.empty() ? CloudFormat::Xyz : *parse_format(common.format));
      }
      if (!exp_edges.empty()) {
        std::vector<std::string> lines{"# element from to length active"};
        for (std::size_t i = 0; i < res.trees.size(); ++i) {
          const double threshold = exp_lambda * res.trees[i].mean_edge_length;
          lines.push_back("# element " + std::to_string(i) + " root " +
                          std::to_string(res.trees[i].root) + " mean_edge_length " +
                          format_real(res.trees[i].mean_edge_length));
          for (const auto &e : res.trees[i].edges) {
            lines.push_back(std::to_string(i) + ' ' + std::to_string(e.from) + ' ' +
                            std::to_string(e.to) + ' ' + format_real(e.length) + ' ' +
                            (e.length >= threshold ? "1" : "0"));
          }
        }
        detail::write_text_lines(exp_edges, lines);
      }
    };
  });

  // sample ------------------------------------------------------------------
  auto *smp = app.add_subcommand("sample", "Subsample a cloud with MDS, FPS or PDS");
  std::string smp_in, smp_out, smp_method = "mds";
  std::size_t smp_count = 0, smp_first = 0;
  std::optional<double> smp_sigma;
  bool smp_report = false;
  smp->add_option("input", smp_in)->required();
  smp->add_option("--method", smp_method)->check(CLI::IsMember({"mds", "fps", "pds", "random"}));
  smp->add_option("--count", smp_count, "Number of points to keep")->required();
  smp->add_option("--sigma", smp_sigma, "MDS Gaussian scale (default 2x mean NN distance)");
  smp->add_option("--first", smp_first, "First selected index for MDS/FPS");
  smp->add_flag("--report", smp_report, "Emit half counts and density statistics");
  smp->add_option("-o,--output", smp_out, "Write the selected points here");
  smp->callback([&] {
    action = [&] {
      const auto any = read_cloud(smp_in, detail::resolve_format(common, smp_in));
      const PointCloud &cloud = std::holds_alternative<PointCloud>(any)
                                    ? std::get<PointCloud>(any)
                                    : std::get<LabeledPointCloud>(any).cloud();
      const double sigma = smp_sigma ? *smp_sigma : default_sigma(cloud);
      SampleResult res;
      std::optional<double> radius;
      if (smp_method == "mds") {
        res = mds_sample(cloud, smp_count, MdsConfig{sigma, smp_first});
      } else if (smp_method == "fps") {
        res = fps_sample(cloud, smp_count, smp_first);
      } else if (smp_method == "pds") {
        auto pds = pds_sample_with_radius(cloud, smp_count, Seed{common.seed});
        res = std::move(pds.sample);
        radius = pds.radius;
      } else {
        res = random_sample(cloud, smp_count, Seed{common.seed});
      }
      emit.text("method", smp_method);
      emit.count("input_points", cloud.size());
      emit.count("count", res.indices.size());
      emit.real("sigma", sigma);
      if (radius) emit.real("radius", *radius);
      if (smp_report) {
        std::size_t left = 0;
        for (auto i : res.indices) left += cloud[i].y < 0.5 ? 1 : 0;
        const auto dens = density_profile(cloud, res, sigma);
        double mean = 0.0;
        for (double d : dens) mean += d;
        mean /= static_cast<double>(dens.size());
        emit.count("left_count", left);
        emit.count("right_count", res.indices.size() - left);
        emit.real("density_mean", mean);
        emit.real("density_cv", coefficient_of_variation(dens));
      }
      if (!smp_out.empty()) {
        const auto fmt = detail::resolve_format(common, smp_out);
        if (const auto *lab = std::get_if<LabeledPointCloud>(&any)) {
          write_cloud(select(*lab, res.indices), smp_out, fmt);
        } else {
          write_cloud(select(cloud, res.indices), smp_out, fmt);
        }
      }
    };
  });

  // merge -------------------------------------------------------------------
  auto *mrg = app.add_subcommand("merge", "Merge input and coarse clouds with source labels");
  std::string mrg_input, mrg_coarse, mrg_out;
  std::optional<std::size_t> mrg_count;
  std::optional<double> mrg_sigma;
  std::optional<std::size_t> mrg_first;
  mrg->add_option("input", mrg_input)->required();
  mrg->add_option("coarse", mrg_coarse)->required();
  mrg->add_option("-o,--output", mrg_out, "Write the labeled result here (xyzl or ply)");
  mrg->add_option("--count", mrg_count, "MDS-subsample the merged cloud to this size");
  mrg->add_option("--sigma", mrg_sigma, "MDS Gaussian scale");
  mrg->add_option("--first", mrg_first, "First selected index for MDS");
  mrg->callback([&] {
    action = [&] {
      const auto input = read_points(mrg_input, detail::resolve_format(common, mrg_input));
      const auto coarse = read_points(mrg_coarse, detail::resolve_format(common, mrg_coarse));
      const LabeledPointCloud result =
          mrg_count ? merge_and_subsample(input, coarse, *mrg_count, MdsConfig{mrg_sigma, mrg_first})
                    : merge(input, coarse);
      std::size_t ones = 0;
      for (auto l : result.labels()) ones += l;
      emit.count("n_input", input.size());
      emit.count("n_coarse", coarse.size());
      emit.count("n_output", result.size());
      emit.count("label0", result.size() - ones);
      emit.count("label1", ones);
      if (!mrg_out.empty()) {
        write_cloud(result, mrg_out,
                    common.format.empty()
                        ? (format_from_path(mrg_out) == CloudFormat::Ply ? CloudFormat::Ply
                                                                         : CloudFormat::Xyzl)
                        : *parse_format(common.format));
      }
    };
  });

  // loss --------------------------------------------------------------------
  auto *loss = app.add_subcommand("loss", "Joint loss over coarse, final and ground truth");
  std::string loss_coarse, loss_final, loss_gt;
  std::size_t loss_k = 16, loss_n = 512;
  double loss_lambda = 1.5, loss_alpha = 0.1, loss_beta = 1.0, loss_factor = 0.25;
  std::optional<double> loss_eps;
  std::optional<std::size_t> loss_iters;
  bool loss_no_scaling = false;
  loss->add_option("coarse", loss_coarse)->required();
  loss->add_option("final", loss_final)->required();
  loss->add_option("gt", loss_gt)->required();
  loss->add_option("--k", loss_k, "Number of surface elements in the coarse cloud");
  loss->add_option("--n", loss_n, "Points per element");
  loss->add_option("--lambda", loss_lambda, "Edge-length filter multiplier");
  loss->add_option("--alpha", loss_alpha, "Weight of the expansion penalty");
  loss->add_option("--beta", loss_beta, "Weight of the final EMD");
  loss->add_option("--epsilon", loss_eps, "Final auction epsilon");
  loss->add_option("--max-iters", loss_iters, "Bid budget before the greedy fallback");
  loss->add_option("--scaling-factor", loss_factor, "Epsilon reduction factor per phase");
  loss->add_flag("--no-scaling", loss_no_scaling, "Disable epsilon scaling");
  loss->callback([&] {
    action = [&] {
      auto coarse = read_points(loss_coarse, detail::resolve_format(common, loss_coarse));
      const auto fin = read_points(loss_final, detail::resolve_format(common, loss_final));
      const auto gt = read_points(loss_gt, detail::resolve_format(common, loss_gt));
      const ElementBatch batch(coarse, loss_k, loss_n);
      const auto r = joint_loss(
          coarse, fin, gt, batch, {loss_alpha, loss_beta},
          detail::auction_config(loss_eps, loss_iters, loss_no_scaling, loss_factor, common.seed),
          {loss_lambda});
      emit.real("emd_coarse", r.emd_coarse);
      emit.real("expansion", r.expansion);
      emit.real("emd_final", r.emd_final);
      emit.real("total", r.total);
      emit.real("alpha", loss_alpha);
      emit.real("beta", loss_beta);
    };
  });

  // gen ---------------------------------------------------------------------
  auto *gen = app.add_subcommand("gen", "Generate synthetic clouds");
  gen->require_subcommand(1);
  auto *box = gen->add_subcommand("uniform-box", "Uniform points in an axis-aligned box");
  std::size_t box_count = 1000;
  std::vector<double> box_lo{0, 0, 0}, box_hi{1, 1, 1};
  std::string box_out;
  box->add_option("--count", box_count, "Number of points");
  box->add_option("--lo", box_lo, "Box minimum corner")->expected(3);
  box->add_option("--hi", box_hi, "Box maximum corner")->expected(3);
  box->add_option("-o,--output", box_out)->required();
  box->callback([&] {
    action = [&] {
      const auto c = gen_uniform_box(box_count,
                                     Box{{box_lo[0], box_lo[1], box_lo[2]},
                                         {box_hi[0], box_hi[1], box_hi[2]}},
                                     Seed{common.seed});
      write_cloud(c, box_out, detail::resolve_format(common, box_out));
      emit.text("generator", "uniform-box");
      emit.count("count", c.size());
    };
  });
  auto *two = gen->add_subcommand("two-density", "Unit square, upper half twice as dense");
  std::size_t two_left = 200, two_right = 400;
  std::string two_out;
  two->add_option("--left", two_left, "Points with y < 0.5");
  two->add_option("--right", two_right, "Points with y >= 0.5");
  two->add_option("-o,--output", two_out)->required();
  two->callback([&] {
    action = [&] {
      const auto c = gen_two_density(two_left, two_right, Seed{common.seed});
      write_cloud(c, two_out, detail::resolve_format(common, two_out));
      emit.text("generator", "two-density");
      emit.count("count", c.size());
      emit.count("left", two_left);
      emit.count("right", two_right);
    };
  });

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }

  if (!action) {
    err << "error: no subcommand given\n";
    return kValidation;
  }
  set_max_threads(common.threads);
  try {
    action();
  } catch (const ParseError &e) {
    err << "parse error: " << e.what() << '\n';
    return kIo;
  } catch (const IoError &e) {
    err << "io error: " << e.what() << '\n';
    return kIo;
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kOk;
}

} // namespace pcc::cli
