// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace leod {

/// Axis-aligned detection or label box. Coordinates are continuous pixels with
/// (x, y) the top-left corner; boxes may extend past the image bounds.
struct DetBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  int class_id = 0;
  int t_step = 0;
  double p_obj = 1.0;
  std::vector<double> p_iou;  // one entry per dataset class

  double right() const { return x + w; }
  double bottom() const { return y + h; }
  double area() const { return w * h; }
  double center_x() const { return x + 0.5 * w; }
  double center_y() const { return y + 0.5 * h; }

  friend bool operator==(const DetBox&, const DetBox&) = default;
};

/// Largest per-class IoU score, 0 when the box carries none.
double max_iou_score(const DetBox& box);

/// NMS ranking score: p_obj * max(p_iou).
double box_score(const DetBox& box);

/// A box with score 1 on `class_id` and 0 elsewhere, as used for ground truth.
DetBox make_gt_box(double x, double y, double w, double h, int class_id,
                   int t_step, int num_classes);

/// Throws Errc::invalid_input when the box violates its invariants. Pass
/// num_classes <= 0 to skip the class-count checks.
void validate_box(const DetBox& box, int num_classes = 0);

/// Intersection over union. Throws Errc::invalid_input on non-positive sizes.
double iou(const DetBox& a, const DetBox& b);

struct NmsOptions {
  double tau_nms = 0.45;
  bool class_aware = true;
};

/// Greedy NMS. Returns indices into `boxes` of the kept boxes, ordered by
/// descending box_score with ties resolved by input order. A box is
/// suppressed when its IoU with an already-kept box (of the same class when
/// class_aware) is strictly greater than tau_nms.
std::vector<std::size_t> nms_indices(std::span<const DetBox> boxes,
                                     const NmsOptions& options = {});

/// Same as nms_indices but returns the kept boxes. All boxes must share one
/// t_step.
std::vector<DetBox> nms(std::span<const DetBox> boxes,
                        const NmsOptions& options = {});

}  // namespace leod
