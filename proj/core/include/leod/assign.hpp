// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "leod/geometry.hpp"

namespace leod {

struct GridLevel {
  int stride = 8;
  int grid_h = 0;
  int grid_w = 0;
};

struct AnchorPoint {
  int level = 0;
  int row = 0;
  int col = 0;
  int stride = 0;
  double cx = 0.0;  // (col + 0.5) * stride
  double cy = 0.0;  // (row + 0.5) * stride
};

/// Anchor-free multi-level grid. Anchors are numbered level by level, each
/// level row-major.
struct AnchorGrid {
  std::vector<GridLevel> levels;

  std::size_t size() const;
  AnchorPoint anchor(std::size_t index) const;
};

/// One level per stride with ceil(image / stride) cells on each axis.
AnchorGrid make_grid(std::span<const int> strides, int image_h, int image_w);

/// Throws Errc::invalid_input for an empty grid or non-increasing strides.
void validate_grid(const AnchorGrid& grid);

using BoxDelta = std::array<double, 4>;  // (dx, dy, dw, dh)

/// center = anchor + (dx, dy) * stride, size = (exp(dw), exp(dh)) * stride.
DetBox decode_box(const AnchorPoint& anchor, const BoxDelta& delta);

struct AnchorPrediction {
  int num_classes = 0;
  std::vector<double> p_obj;    // [N]
  std::vector<double> p_iou;    // [N * C], anchor-major
  std::vector<BoxDelta> delta;  // [N]

  std::size_t size() const { return p_obj.size(); }
  double iou_score(std::size_t anchor, int cls) const {
    return p_iou[anchor * static_cast<std::size_t>(num_classes) + static_cast<std::size_t>(cls)];
  }
};

/// Shape check against a grid. Throws Errc::invalid_input.
void validate_prediction(const AnchorPrediction& pred, const AnchorGrid& grid);

enum class AssignStrategy {
  dynamic_k,   // k from summed top IoUs when predictions are supplied
  center_topk  // always the nearest `topk` candidates
};

struct AssignOptions {
  double center_radius = 2.5;  // in strides
  int topk = 10;
  AssignStrategy strategy = AssignStrategy::dynamic_k;
};

struct AnchorAssignment {
  AnchorGrid grid;
  std::vector<std::uint8_t> o;     // 1 = foreground
  std::vector<std::uint8_t> r;     // 1 = loss-masked
  std::vector<int> matched;        // keep index when o = 1, ignore index when r = 1, else -1
  std::vector<int> matched_class;  // -1 when unmatched
  std::vector<DetBox> keep_boxes;
  std::vector<DetBox> ignore_boxes;

  std::size_t size() const { return o.size(); }
  std::size_t num_positive() const;
  std::size_t num_masked() const;
};

/// Candidate anchors of a box: centre inside the box, or within
/// center_radius * stride of the box centre.
std::vector<std::size_t> candidate_anchors(const AnchorGrid& grid, const DetBox& box,
                                           double center_radius);

/// Foreground selection for KEEP boxes, then masking of every remaining
/// candidate anchor of an IGNORE box. `predictions` may be null.
AnchorAssignment assign_anchors(const AnchorGrid& grid, std::span<const DetBox> keep_boxes,
                                std::span<const DetBox> ignore_boxes,
                                const AnchorPrediction* predictions = nullptr,
                                const AssignOptions& options = {});

struct LossBreakdown {
  double total = 0.0;
  double l_obj = 0.0;
  double l_cls = 0.0;
  double l_box = 0.0;
};

struct LossGradient {
  std::vector<double> p_obj;
  std::vector<double> p_iou;
  std::vector<BoxDelta> delta;
};

inline constexpr double kProbClamp = 1e-7;

/// Masked detection loss:
///   l_obj: mean BCE(p_obj, o) over anchors with r = 0
///   l_cls: mean over o = 1 anchors of per-class BCE(p_iou, y), where y is the
///          IoU of the decoded and matched box on the matched class, 0 elsewhere
///   l_box: mean over o = 1 anchors of 1 - IoU(decoded, matched)
/// Anchors with r = 1 contribute to no term.
LossBreakdown detection_loss(const AnchorPrediction& pred, const AnchorAssignment& assignment);

/// Analytic gradient of detection_loss().total with respect to every
/// prediction scalar, including the dependence of the class target on the
/// decoded box.
LossGradient loss_gradient(const AnchorPrediction& pred, const AnchorAssignment& assignment);

}  // namespace leod
