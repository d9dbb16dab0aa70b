// SPDX-License-Identifier: Apache-2.0
#include "leod/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "leod/error.hpp"

namespace leod {

MatchResult match_boxes(std::span<const DetBox> pred, std::span<const DetBox> gt,
                        double tau_match) {
  struct Cand {
    std::size_t p;
    std::size_t g;
    double v;
  };
  std::vector<Cand> cands;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < gt.size(); ++j) {
      if (pred[i].class_id != gt[j].class_id) continue;
      const double v = iou(pred[i], gt[j]);
      if (v > tau_match) cands.push_back({i, j, v});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    return std::tie(b.v, a.p, a.g) < std::tie(a.v, b.p, b.g);
  });
  std::vector<bool> pu(pred.size(), false);
  std::vector<bool> gu(gt.size(), false);
  MatchResult out;
  for (const Cand& c : cands) {
    if (pu[c.p] || gu[c.g]) continue;
    pu[c.p] = gu[c.g] = true;
    out.pairs.emplace_back(c.p, c.g);
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!pu[i]) out.unmatched_pred.push_back(i);
  }
  for (std::size_t j = 0; j < gt.size(); ++j) {
    if (!gu[j]) out.unmatched_gt.push_back(j);
  }
  return out;
}

double PrCounts::precision() const {
  return tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double PrCounts::recall() const {
  return tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

PrCounts& PrCounts::operator+=(const PrCounts& other) {
  tp += other.tp;
  fp += other.fp;
  fn += other.fn;
  return *this;
}

PrTally& PrTally::operator+=(const PrTally& other) {
  if (per_class.size() < other.per_class.size()) per_class.resize(other.per_class.size());
  for (std::size_t c = 0; c < other.per_class.size(); ++c) per_class[c] += other.per_class[c];
  participating_steps += other.participating_steps;
  return *this;
}

namespace {

void tally_frame(std::span<const DetBox> pred, std::span<const DetBox> gt, double tau_match,
                 std::vector<PrCounts>& per_class) {
  const MatchResult m = match_boxes(pred, gt, tau_match);
  auto slot = [&](int cls) -> PrCounts& {
    if (cls < 0 || static_cast<std::size_t>(cls) >= per_class.size()) {
      throw Error(Errc::invalid_input, "box class outside evaluated class range");
    }
    return per_class[static_cast<std::size_t>(cls)];
  };
  for (const auto& [p, g] : m.pairs) slot(pred[p].class_id).tp += 1;
  for (std::size_t p : m.unmatched_pred) slot(pred[p].class_id).fp += 1;
  for (std::size_t g : m.unmatched_gt) slot(gt[g].class_id).fn += 1;
}

}  // namespace

PrTally pseudo_label_tally(const PseudoLabelSet& pseudo, const GtFrames& gt,
                           const std::set<int>& labeled_steps, PrMode mode, int num_classes,
                           double tau_match) {
  PrTally tally;
  tally.per_class.resize(static_cast<std::size_t>(std::max(num_classes, 0)));
  for (const auto& [t, gt_boxes] : gt) {
    const bool labeled = labeled_steps.contains(t);
    if (labeled != (mode == PrMode::labeled_frames)) continue;
    ++tally.participating_steps;
    std::vector<DetBox> kept;
    if (t >= 0 && t < pseudo.num_steps()) {
      for (const PseudoLabel& l : pseudo.labels[static_cast<std::size_t>(t)]) {
        if (l.certainty == Certainty::keep && l.source == LabelSource::pseudo) {
          kept.push_back(l.box);
        }
      }
    }
    tally_frame(kept, gt_boxes, tau_match, tally.per_class);
  }
  return tally;
}

PrReport pr_report(const PrTally& tally, double threshold) {
  if (tally.participating_steps == 0) {
    throw Error(Errc::empty_result, "no annotated timesteps participate in the evaluation");
  }
  PrReport report;
  report.tally = tally;
  PrCounts all;
  for (std::size_t c = 0; c < tally.per_class.size(); ++c) {
    const PrCounts& k = tally.per_class[c];
    report.per_class.push_back({threshold, k.precision(), k.recall(), static_cast<int>(c)});
    all += k;
  }
  report.overall = {threshold, all.precision(), all.recall(), -1};
  return report;
}

PrReport pseudo_label_pr(const PseudoLabelSet& pseudo, const GtFrames& gt,
                         const std::set<int>& labeled_steps, PrMode mode, int num_classes,
                         double tau_match) {
  return pr_report(pseudo_label_tally(pseudo, gt, labeled_steps, mode, num_classes, tau_match));
}

std::vector<PrCurvePoint> pr_curve(std::span<const std::vector<DetBox>> pred,
                                   std::span<const std::vector<DetBox>> gt,
                                   std::span<const double> thresholds, int num_classes,
                                   double tau_match) {
  if (pred.size() != gt.size()) {
    throw Error(Errc::invalid_input, "prediction and ground-truth frame counts differ");
  }
  std::vector<PrCurvePoint> out;
  for (double thr : thresholds) {
    std::vector<PrCounts> counts(static_cast<std::size_t>(num_classes));
    for (std::size_t f = 0; f < pred.size(); ++f) {
      std::vector<DetBox> above;
      for (const DetBox& b : pred[f]) {
        if (box_score(b) >= thr) above.push_back(b);
      }
      tally_frame(above, gt[f], tau_match, counts);
    }
    PrCounts all;
    for (std::size_t c = 0; c < counts.size(); ++c) {
      out.push_back({thr, counts[c].precision(), counts[c].recall(), static_cast<int>(c)});
      all += counts[c];
    }
    out.push_back({thr, all.precision(), all.recall(), -1});
  }
  return out;
}

EvalFilter eval_filter_profile(const std::string& profile) {
  if (profile == "gen1") return {30.0, 10.0};
  if (profile == "1mpx") return {60.0, 20.0};
  if (profile == "none") return {0.0, 0.0};
  throw Error(Errc::invalid_config, "unknown evaluation profile '" + profile + "'");
}

bool filtered_out(const DetBox& gt, const EvalFilter& filter) {
  const double diag = std::hypot(gt.w, gt.h);
  return diag < filter.min_diagonal || std::min(gt.w, gt.h) < filter.min_side;
}

std::vector<double> coco_iou_thresholds() {
  std::vector<double> out;
  for (int i = 0; i < 10; ++i) out.push_back(0.5 + 0.05 * i);
  return out;
}

namespace {

struct ScoredPred {
  double score;
  std::size_t frame;
  std::size_t index;
};

double class_ap_at(std::span<const std::vector<DetBox>> pred,
                   std::span<const std::vector<DetBox>> gt, const EvalFilter& filter, int cls,
                   double thr, const std::vector<ScoredPred>& order, std::size_t positives) {
  std::vector<std::vector<bool>> taken(gt.size());
  for (std::size_t f = 0; f < gt.size(); ++f) taken[f].assign(gt[f].size(), false);

  std::vector<double> precision;
  std::vector<double> recall;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (const ScoredPred& sp : order) {
    const DetBox& p = pred[sp.frame][sp.index];
    const auto& frame_gt = gt[sp.frame];
    double best = -1.0;
    std::ptrdiff_t best_j = -1;
    bool hits_ignored = false;
    for (std::size_t j = 0; j < frame_gt.size(); ++j) {
      const DetBox& g = frame_gt[j];
      if (g.class_id != cls) continue;
      const double v = iou(p, g);
      if (v < thr) continue;
      if (filtered_out(g, filter)) {
        hits_ignored = true;
        continue;
      }
      if (taken[sp.frame][j]) continue;
      if (v > best) {
        best = v;
        best_j = static_cast<std::ptrdiff_t>(j);
      }
    }
    if (best_j >= 0) {
      taken[sp.frame][static_cast<std::size_t>(best_j)] = true;
      ++tp;
    } else if (hits_ignored) {
      continue;
    } else {
      ++fp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(positives));
  }
  for (std::size_t i = precision.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / 101.0;
}

}  // namespace

ApResult mean_ap(std::span<const std::vector<DetBox>> pred, std::span<const std::vector<DetBox>> gt,
                 const EvalFilter& filter, int num_classes,
                 std::span<const double> iou_thresholds) {
  if (pred.size() != gt.size()) {
    throw Error(Errc::invalid_input, "prediction and ground-truth frame counts differ");
  }
  ApResult out;
  out.iou_thresholds = iou_thresholds.empty()
                           ? coco_iou_thresholds()
                           : std::vector<double>(iou_thresholds.begin(), iou_thresholds.end());

  double map_sum = 0.0;
  int classes_with_gt = 0;
  for (int cls = 0; cls < num_classes; ++cls) {
    std::size_t positives = 0;
    for (const auto& frame : gt) {
      for (const DetBox& g : frame) {
        if (g.class_id == cls && !filtered_out(g, filter)) ++positives;
      }
    }
    if (positives == 0) {
      out.per_class_ap.push_back(-1.0);
      continue;
    }
    std::vector<ScoredPred> order;
    for (std::size_t f = 0; f < pred.size(); ++f) {
      for (std::size_t i = 0; i < pred[f].size(); ++i) {
        if (pred[f][i].class_id == cls) order.push_back({box_score(pred[f][i]), f, i});
      }
    }
    // Score ties fall back to frame and box geometry so the result does not
    // depend on prediction input order.
    std::stable_sort(order.begin(), order.end(), [&](const ScoredPred& a, const ScoredPred& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.frame != b.frame) return a.frame < b.frame;
      const DetBox& pa = pred[a.frame][a.index];
      const DetBox& pb = pred[b.frame][b.index];
      return std::tie(pa.x, pa.y, pa.w, pa.h) < std::tie(pb.x, pb.y, pb.w, pb.h);
    });
    double ap = 0.0;
    for (double thr : out.iou_thresholds) {
      ap += class_ap_at(pred, gt, filter, cls, thr, order, positives);
    }
    ap /= static_cast<double>(out.iou_thresholds.size());
    out.per_class_ap.push_back(ap);
    map_sum += ap;
    ++classes_with_gt;
  }
  if (classes_with_gt == 0) {
    throw Error(Errc::undefined_metric, "mAP undefined without ground-truth boxes");
  }
  out.map = map_sum / classes_with_gt;
  return out;
}

int stopping_decision(std::span<const double> precision_per_round) {
  if (precision_per_round.empty()) {
    throw Error(Errc::invalid_input, "stopping decision needs at least one round");
  }
  for (std::size_t i = 1; i < precision_per_round.size(); ++i) {
    if (precision_per_round[i] < precision_per_round[i - 1]) return static_cast<int>(i);
  }
  return static_cast<int>(precision_per_round.size());
}

}  // namespace leod
