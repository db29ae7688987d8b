// pipeline.hpp
//
// Second-stage plumbing: merge the coarse prediction with the partial input
// (label 0 = input, 1 = coarse), subsample the union with MDS, and evaluate
//
//   total = EMD(coarse, gt) + alpha * expansion + beta * EMD(final, gt).

#pragma once

#include <vector>

#include "pcc/core.hpp"
#include "pcc/emd.hpp"
#include "pcc/expansion.hpp"
#include "pcc/sampling.hpp"

namespace pcc {

struct LossWeights {
  double alpha = 0.1;
  double beta = 1.0;
};

struct LossReport {
  double emd_coarse = 0.0;
  double expansion = 0.0;
  double emd_final = 0.0;
  double total = 0.0;
};

/// Input points first (label 0), then coarse points (label 1).
inline LabeledPointCloud merge(const PointCloud &input, const PointCloud &coarse) {
  if (input.empty()) throw InvalidArgument("merge: empty input cloud");
  if (coarse.empty()) throw InvalidArgument("merge: empty coarse cloud");
  std::vector<Point3> pts;
  pts.reserve(input.size() + coarse.size());
  pts.insert(pts.end(), input.begin(), input.end());
  pts.insert(pts.end(), coarse.begin(), coarse.end());
  std::vector<std::uint8_t> labels(input.size(), 0);
  labels.resize(pts.size(), 1);
  return LabeledPointCloud(PointCloud(std::move(pts)), std::move(labels));
}

/// Merge, then keep m points chosen by MDS. Labels travel with their points;
/// the result is in selection order.
inline LabeledPointCloud merge_and_subsample(const PointCloud &input, const PointCloud &coarse,
                                             std::size_t m, const MdsConfig &cfg = {}) {
  const LabeledPointCloud merged = merge(input, coarse);
  if (m > merged.size()) {
    throw InvalidArgument("merge_and_subsample: count " + std::to_string(m) +
                          " exceeds merged size " + std::to_string(merged.size()));
  }
  const SampleResult picked = mds_sample(merged, m, cfg);
  return select(merged, picked.indices);
}

inline double recompose_total(const LossReport &r, const LossWeights &w) {
  return r.emd_coarse + w.alpha * r.expansion + w.beta * r.emd_final;
}

inline LossReport joint_loss(const PointCloud &coarse, const PointCloud &final_cloud,
                             const PointCloud &gt, const ElementBatch &batch,
                             const LossWeights &weights = {},
                             const AuctionConfig &emd_cfg = {},
                             const ExpansionConfig &exp_cfg = {}) {
  if (!(weights.alpha >= 0.0) || !(weights.beta >= 0.0)) {
    throw InvalidArgument("joint_loss: weights must be non-negative");
  }
  if (coarse.size() != gt.size()) {
    throw InvalidArgument("joint_loss: coarse has " + std::to_string(coarse.size()) +
                          " points but ground truth has " + std::to_string(gt.size()));
  }
  if (final_cloud.size() != gt.size()) {
    throw InvalidArgument("joint_loss: final has " + std::to_string(final_cloud.size()) +
                          " points but ground truth has " + std::to_string(gt.size()));
  }
  if (batch.k() * batch.n() != coarse.size()) {
    throw InvalidArgument("joint_loss: element batch K*N = " +
                          std::to_string(batch.k() * batch.n()) +
                          " does not match coarse size " + std::to_string(coarse.size()));
  }
  LossReport r;
  r.emd_coarse = emd_auction(coarse, gt, emd_cfg).mean_cost;
  r.expansion = expansion_penalty(batch, exp_cfg).value;
  r.emd_final = emd_auction(final_cloud, gt, emd_cfg).mean_cost;
  r.total = recompose_total(r, weights);
  return r;
}

} // namespace pcc
