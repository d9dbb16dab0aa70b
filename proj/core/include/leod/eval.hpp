// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "leod/geometry.hpp"
#include "leod/pipeline.hpp"

namespace leod {

struct MatchResult {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (pred, gt)
  std::vector<std::size_t> unmatched_pred;
  std::vector<std::size_t> unmatched_gt;
};

/// One-to-one greedy matching by descending IoU among same-class pairs with
/// IoU strictly above tau_match. Ties: lower pred index, then lower gt index.
MatchResult match_boxes(std::span<const DetBox> pred, std::span<const DetBox> gt,
                        double tau_match = 0.75);

struct PrCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  /// 0/0 is defined as 1 for both ratios.
  double precision() const;
  double recall() const;

  PrCounts& operator+=(const PrCounts& other);
};

struct PrCurvePoint {
  double threshold = 0.0;
  double precision = 1.0;
  double recall = 1.0;
  int class_id = -1;  // -1 for the all-class aggregate
};

enum class PrMode {
  skipped_frames,  // annotated timesteps withheld from training
  labeled_frames,  // annotated timesteps used for training
};

/// Ground truth of one sequence: annotated timestep -> boxes.
using GtFrames = std::map<int, std::vector<DetBox>>;

struct PrTally {
  std::vector<PrCounts> per_class;
  std::size_t participating_steps = 0;

  PrTally& operator+=(const PrTally& other);
};

/// Counts TP/FP/FN of KEEP pseudo labels (ground-truth-sourced labels
/// excluded) against the participating annotated timesteps of one sequence.
PrTally pseudo_label_tally(const PseudoLabelSet& pseudo, const GtFrames& gt,
                           const std::set<int>& labeled_steps, PrMode mode, int num_classes,
                           double tau_match = 0.75);

struct PrReport {
  std::vector<PrCurvePoint> per_class;
  PrCurvePoint overall;
  PrTally tally;
};

/// Per-class and aggregate precision/recall from a tally. Throws
/// Errc::empty_result when no timestep participated.
PrReport pr_report(const PrTally& tally, double threshold = 0.0);

PrReport pseudo_label_pr(const PseudoLabelSet& pseudo, const GtFrames& gt,
                         const std::set<int>& labeled_steps, PrMode mode, int num_classes,
                         double tau_match = 0.75);

/// Precision/recall of `pred` at each box_score threshold (score >= threshold),
/// per class and aggregated. Frames are paired by index.
std::vector<PrCurvePoint> pr_curve(std::span<const std::vector<DetBox>> pred,
                                   std::span<const std::vector<DetBox>> gt,
                                   std::span<const double> thresholds, int num_classes,
                                   double tau_match = 0.75);

/// Ground-truth boxes with diagonal < min_diagonal or min(w, h) < min_side are
/// ignored during mAP evaluation.
struct EvalFilter {
  double min_diagonal = 0.0;
  double min_side = 0.0;
};

/// "gen1" or "1mpx" resolution profiles.
EvalFilter eval_filter_profile(const std::string& profile);

bool filtered_out(const DetBox& gt, const EvalFilter& filter);

/// 0.50, 0.55, ..., 0.95
std::vector<double> coco_iou_thresholds();

struct ApResult {
  std::vector<double> per_class_ap;  // -1 for classes without ground truth
  double map = 0.0;
  std::vector<double> iou_thresholds;
};

/// COCO-style AP: 101-point interpolated precision per IoU threshold, averaged
/// over thresholds, then over classes with ground truth. Predictions matched
/// to filtered ground truth count neither as TP nor FP. Throws
/// Errc::undefined_metric when no class has ground truth.
ApResult mean_ap(std::span<const std::vector<DetBox>> pred, std::span<const std::vector<DetBox>> gt,
                 const EvalFilter& filter, int num_classes,
                 std::span<const double> iou_thresholds = {});

/// 1-based round preceding the first strict precision drop, or the last
/// round when precision never drops.
int stopping_decision(std::span<const double> precision_per_round);

}  // namespace leod
