// SPDX-License-Identifier: Apache-2.0
#include "leod/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "leod/error.hpp"

namespace leod {

double max_iou_score(const DetBox& box) {
  if (box.p_iou.empty()) return 0.0;
  return *std::max_element(box.p_iou.begin(), box.p_iou.end());
}

double box_score(const DetBox& box) { return box.p_obj * max_iou_score(box); }

DetBox make_gt_box(double x, double y, double w, double h, int class_id,
                   int t_step, int num_classes) {
  DetBox box{x, y, w, h, class_id, t_step, 1.0, {}};
  box.p_iou.assign(static_cast<std::size_t>(std::max(num_classes, class_id + 1)), 0.0);
  box.p_iou[static_cast<std::size_t>(class_id)] = 1.0;
  return box;
}

namespace {

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

void validate_box(const DetBox& box, int num_classes) {
  if (!(box.w > 0.0) || !(box.h > 0.0) || !std::isfinite(box.x) ||
      !std::isfinite(box.y) || !std::isfinite(box.w) || !std::isfinite(box.h)) {
    throw Error(Errc::invalid_input, "box must have finite coordinates and positive size");
  }
  if (box.class_id < 0 || box.t_step < 0) {
    throw Error(Errc::invalid_input, "box class_id and t_step must be non-negative");
  }
  if (!in_unit(box.p_obj)) {
    throw Error(Errc::invalid_input, "p_obj outside [0,1]");
  }
  for (double p : box.p_iou) {
    if (!in_unit(p)) throw Error(Errc::invalid_input, "p_iou entry outside [0,1]");
  }
  if (num_classes > 0) {
    if (box.class_id >= num_classes) {
      throw Error(Errc::invalid_input,
                  "class_id " + std::to_string(box.class_id) + " >= class count " +
                      std::to_string(num_classes));
    }
    if (box.p_iou.size() != static_cast<std::size_t>(num_classes)) {
      throw Error(Errc::invalid_input, "p_iou length does not match class count");
    }
  }
}

double iou(const DetBox& a, const DetBox& b) {
  if (!(a.w > 0.0) || !(a.h > 0.0) || !(b.w > 0.0) || !(b.h > 0.0)) {
    throw Error(Errc::invalid_input, "iou of degenerate box");
  }
  // When one interval contains the other, use its extent directly so that
  // iou(a, a) is exactly 1 despite (x + w) - x rounding.
  const auto overlap = [](double a0, double aw, double b0, double bw) {
    const double lo = std::max(a0, b0);
    const double hi = std::min(a0 + aw, b0 + bw);
    if (lo == a0 && hi == a0 + aw) return aw;
    if (lo == b0 && hi == b0 + bw) return bw;
    return hi - lo;
  };
  const double iw = overlap(a.x, a.w, b.x, b.w);
  const double ih = overlap(a.y, a.h, b.y, b.h);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<std::size_t> nms_indices(std::span<const DetBox> boxes,
                                     const NmsOptions& options) {
  if (!(options.tau_nms > 0.0 && options.tau_nms < 1.0)) {
    throw Error(Errc::invalid_config, "tau_nms must lie in (0,1)");
  }
  std::vector<double> scores(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    validate_box(boxes[i]);
    scores[i] = box_score(boxes[i]);
  }
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return scores[l] > scores[r]; });

  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    const DetBox& cand = boxes[idx];
    bool suppressed = false;
    for (std::size_t k : kept) {
      const DetBox& other = boxes[k];
      if (options.class_aware && other.class_id != cand.class_id) continue;
      if (iou(cand, other) > options.tau_nms) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(idx);
  }
  return kept;
}

std::vector<DetBox> nms(std::span<const DetBox> boxes, const NmsOptions& options) {
  for (const DetBox& b : boxes) {
    if (b.t_step != boxes.front().t_step) {
      throw Error(Errc::invalid_input, "nms input spans multiple timesteps");
    }
  }
  std::vector<DetBox> out;
  for (std::size_t idx : nms_indices(boxes, options)) out.push_back(boxes[idx]);
  return out;
}

}  // namespace leod
