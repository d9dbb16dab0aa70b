// SPDX-License-Identifier: Apache-2.0
#include "leod/assign.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "leod/error.hpp"

namespace leod {

std::size_t AnchorGrid::size() const {
  std::size_t n = 0;
  for (const GridLevel& l : levels) {
    n += static_cast<std::size_t>(l.grid_h) * static_cast<std::size_t>(l.grid_w);
  }
  return n;
}

AnchorPoint AnchorGrid::anchor(std::size_t index) const {
  for (std::size_t li = 0; li < levels.size(); ++li) {
    const GridLevel& l = levels[li];
    const auto cells = static_cast<std::size_t>(l.grid_h) * static_cast<std::size_t>(l.grid_w);
    if (index < cells) {
      AnchorPoint a;
      a.level = static_cast<int>(li);
      a.row = static_cast<int>(index / static_cast<std::size_t>(l.grid_w));
      a.col = static_cast<int>(index % static_cast<std::size_t>(l.grid_w));
      a.stride = l.stride;
      a.cx = (a.col + 0.5) * l.stride;
      a.cy = (a.row + 0.5) * l.stride;
      return a;
    }
    index -= cells;
  }
  throw Error(Errc::invalid_input, "anchor index out of range");
}

AnchorGrid make_grid(std::span<const int> strides, int image_h, int image_w) {
  if (image_h <= 0 || image_w <= 0) {
    throw Error(Errc::invalid_input, "image size must be positive");
  }
  AnchorGrid grid;
  for (int s : strides) {
    if (s <= 0) throw Error(Errc::invalid_input, "strides must be positive");
    grid.levels.push_back({s, (image_h + s - 1) / s, (image_w + s - 1) / s});
  }
  validate_grid(grid);
  return grid;
}

void validate_grid(const AnchorGrid& grid) {
  if (grid.levels.empty() || grid.size() == 0) {
    throw Error(Errc::invalid_input, "anchor grid is empty");
  }
  for (std::size_t i = 1; i < grid.levels.size(); ++i) {
    if (grid.levels[i].stride <= grid.levels[i - 1].stride) {
      throw Error(Errc::invalid_input, "grid strides must be strictly increasing");
    }
  }
}

DetBox decode_box(const AnchorPoint& anchor, const BoxDelta& delta) {
  const double s = anchor.stride;
  const double cx = anchor.cx + delta[0] * s;
  const double cy = anchor.cy + delta[1] * s;
  const double w = std::exp(delta[2]) * s;
  const double h = std::exp(delta[3]) * s;
  DetBox box;
  box.x = cx - 0.5 * w;
  box.y = cy - 0.5 * h;
  box.w = w;
  box.h = h;
  return box;
}

void validate_prediction(const AnchorPrediction& pred, const AnchorGrid& grid) {
  const std::size_t n = grid.size();
  if (pred.num_classes < 1 || pred.p_obj.size() != n || pred.delta.size() != n ||
      pred.p_iou.size() != n * static_cast<std::size_t>(pred.num_classes)) {
    throw Error(Errc::invalid_input, "prediction shape does not match the anchor grid");
  }
}

std::size_t AnchorAssignment::num_positive() const {
  return static_cast<std::size_t>(std::count(o.begin(), o.end(), std::uint8_t{1}));
}

std::size_t AnchorAssignment::num_masked() const {
  return static_cast<std::size_t>(std::count(r.begin(), r.end(), std::uint8_t{1}));
}

std::vector<std::size_t> candidate_anchors(const AnchorGrid& grid, const DetBox& box,
                                           double center_radius) {
  std::vector<std::size_t> out;
  const double bcx = box.center_x();
  const double bcy = box.center_y();
  const std::size_t n = grid.size();
  for (std::size_t i = 0; i < n; ++i) {
    const AnchorPoint a = grid.anchor(i);
    const bool inside = a.cx >= box.x && a.cx < box.right() && a.cy >= box.y && a.cy < box.bottom();
    const double radius = center_radius * a.stride;
    const double dx = a.cx - bcx;
    const double dy = a.cy - bcy;
    if (inside || dx * dx + dy * dy <= radius * radius) out.push_back(i);
  }
  return out;
}

namespace {

struct Claim {
  int box = -1;
  double quality = -1.0;
};

}  // namespace

AnchorAssignment assign_anchors(const AnchorGrid& grid, std::span<const DetBox> keep_boxes,
                                std::span<const DetBox> ignore_boxes,
                                const AnchorPrediction* predictions,
                                const AssignOptions& options) {
  validate_grid(grid);
  if (predictions != nullptr) validate_prediction(*predictions, grid);
  for (const DetBox& b : keep_boxes) validate_box(b);
  for (const DetBox& b : ignore_boxes) validate_box(b);

  const std::size_t n = grid.size();
  AnchorAssignment out;
  out.grid = grid;
  out.o.assign(n, 0);
  out.r.assign(n, 0);
  out.matched.assign(n, -1);
  out.matched_class.assign(n, -1);
  out.keep_boxes.assign(keep_boxes.begin(), keep_boxes.end());
  out.ignore_boxes.assign(ignore_boxes.begin(), ignore_boxes.end());

  const bool use_preds =
      predictions != nullptr && options.strategy == AssignStrategy::dynamic_k;
  static constexpr BoxDelta kZeroDelta{0.0, 0.0, 0.0, 0.0};

  std::vector<Claim> claims(n);
  for (std::size_t j = 0; j < keep_boxes.size(); ++j) {
    const DetBox& box = keep_boxes[j];
    const std::vector<std::size_t> cand = candidate_anchors(grid, box, options.center_radius);
    if (cand.empty()) continue;

    // Matching quality: IoU of the predicted box, or of the stride-sized
    // prior box when no predictions are available.
    std::vector<double> quality(cand.size());
    for (std::size_t c = 0; c < cand.size(); ++c) {
      const AnchorPoint a = grid.anchor(cand[c]);
      const BoxDelta& d = predictions != nullptr ? predictions->delta[cand[c]] : kZeroDelta;
      quality[c] = iou(decode_box(a, d), box);
    }

    std::vector<std::size_t> order(cand.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t k = 0;
    if (use_preds) {
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t l, std::size_t r) { return quality[l] > quality[r]; });
      double top_sum = 0.0;
      const std::size_t top = std::min<std::size_t>(order.size(), static_cast<std::size_t>(options.topk));
      for (std::size_t i = 0; i < top; ++i) top_sum += quality[order[i]];
      k = static_cast<std::size_t>(std::clamp<long>(std::lround(top_sum), 1L,
                                                    static_cast<long>(cand.size())));
    } else {
      std::vector<double> dist(cand.size());
      for (std::size_t c = 0; c < cand.size(); ++c) {
        const AnchorPoint a = grid.anchor(cand[c]);
        dist[c] = std::hypot(a.cx - box.center_x(), a.cy - box.center_y());
      }
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t l, std::size_t r) { return dist[l] < dist[r]; });
      k = std::min<std::size_t>(cand.size(), static_cast<std::size_t>(options.topk));
    }

    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t anchor = cand[order[i]];
      const double q = quality[order[i]];
      Claim& claim = claims[anchor];
      bool take = claim.box < 0 || q > claim.quality;
      if (!take && q == claim.quality) {
        take = box.area() < keep_boxes[static_cast<std::size_t>(claim.box)].area();
      }
      if (take) claim = {static_cast<int>(j), q};
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (claims[i].box < 0) continue;
    out.o[i] = 1;
    out.matched[i] = claims[i].box;
    out.matched_class[i] = keep_boxes[static_cast<std::size_t>(claims[i].box)].class_id;
  }

  for (std::size_t j = 0; j < ignore_boxes.size(); ++j) {
    for (std::size_t anchor : candidate_anchors(grid, ignore_boxes[j], options.center_radius)) {
      if (out.o[anchor] == 1 || out.r[anchor] == 1) continue;
      out.r[anchor] = 1;
      out.matched[anchor] = static_cast<int>(j);
      out.matched_class[anchor] = ignore_boxes[j].class_id;
    }
  }
  return out;
}

namespace {

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

double bce(double p, double target) {
  const double q = clamp_prob(p);
  return -(target * std::log(q) + (1.0 - target) * std::log(1.0 - q));
}

/// d bce / d p; zero where the clamp is active.
double bce_dp(double p, double target) {
  if (p <= kProbClamp || p >= 1.0 - kProbClamp) return 0.0;
  return (p - target) / (p * (1.0 - p));
}

/// d bce / d target.
double bce_dtarget(double p) {
  const double q = clamp_prob(p);
  return -(std::log(q) - std::log(1.0 - q));
}

struct IouWithGrad {
  double value = 0.0;
  BoxDelta grad{};  // d IoU / d (dx, dy, dw, dh)
};

IouWithGrad iou_and_grad(const AnchorPoint& anchor, const BoxDelta& delta, const DetBox& target) {
  const DetBox p = decode_box(anchor, delta);
  const double px1 = p.x, px2 = p.right(), py1 = p.y, py2 = p.bottom();
  const double iw = std::min(px2, target.right()) - std::max(px1, target.x);
  const double ih = std::min(py2, target.bottom()) - std::max(py1, target.y);
  IouWithGrad out;
  if (iw <= 0.0 || ih <= 0.0) return out;

  const double inter = iw * ih;
  const double area_p = p.w * p.h;
  const double uni = area_p + target.area() - inter;
  out.value = inter / uni;

  const double d_inter = (uni + inter) / (uni * uni);
  const double d_area = -inter / (uni * uni);

  const double di_dx1 = px1 > target.x ? -ih : 0.0;
  const double di_dx2 = px2 < target.right() ? ih : 0.0;
  const double di_dy1 = py1 > target.y ? -iw : 0.0;
  const double di_dy2 = py2 < target.bottom() ? iw : 0.0;

  const double s = anchor.stride;
  out.grad[0] = s * d_inter * (di_dx1 + di_dx2);
  out.grad[1] = s * d_inter * (di_dy1 + di_dy2);
  out.grad[2] = p.w * (d_inter * 0.5 * (di_dx2 - di_dx1) + d_area * p.h);
  out.grad[3] = p.h * (d_inter * 0.5 * (di_dy2 - di_dy1) + d_area * p.w);
  return out;
}

void check_shapes(const AnchorPrediction& pred, const AnchorAssignment& assignment) {
  validate_prediction(pred, assignment.grid);
  if (assignment.o.size() != pred.size() || assignment.r.size() != pred.size()) {
    throw Error(Errc::invalid_input, "assignment and prediction disagree on anchor count");
  }
  for (const DetBox& b : assignment.keep_boxes) {
    if (b.class_id < 0 || b.class_id >= pred.num_classes) {
      throw Error(Errc::invalid_input, "matched class outside prediction class range");
    }
  }
}

}  // namespace

LossBreakdown detection_loss(const AnchorPrediction& pred, const AnchorAssignment& assignment) {
  check_shapes(pred, assignment);
  const std::size_t n = pred.size();
  const auto classes = static_cast<std::size_t>(pred.num_classes);

  double obj_sum = 0.0;
  double cls_sum = 0.0;
  double box_sum = 0.0;
  std::size_t unmasked = 0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (assignment.r[i] == 0) {
      obj_sum += bce(pred.p_obj[i], assignment.o[i]);
      ++unmasked;
    }
    if (assignment.o[i] == 0) continue;
    ++positives;
    const DetBox& target = assignment.keep_boxes[static_cast<std::size_t>(assignment.matched[i])];
    const double overlap = iou(decode_box(assignment.grid.anchor(i), pred.delta[i]), target);
    for (std::size_t c = 0; c < classes; ++c) {
      const double y = static_cast<int>(c) == target.class_id ? overlap : 0.0;
      cls_sum += bce(pred.p_iou[i * classes + c], y);
    }
    box_sum += 1.0 - overlap;
  }

  LossBreakdown out;
  if (unmasked > 0) out.l_obj = obj_sum / static_cast<double>(unmasked);
  if (positives > 0) {
    out.l_cls = cls_sum / static_cast<double>(positives);
    out.l_box = box_sum / static_cast<double>(positives);
  }
  out.total = out.l_obj + out.l_cls + out.l_box;
  return out;
}

LossGradient loss_gradient(const AnchorPrediction& pred, const AnchorAssignment& assignment) {
  check_shapes(pred, assignment);
  const std::size_t n = pred.size();
  const auto classes = static_cast<std::size_t>(pred.num_classes);

  LossGradient g;
  g.p_obj.assign(n, 0.0);
  g.p_iou.assign(n * classes, 0.0);
  g.delta.assign(n, BoxDelta{});

  const auto unmasked = static_cast<double>(
      std::count(assignment.r.begin(), assignment.r.end(), std::uint8_t{0}));
  const auto positives = static_cast<double>(assignment.num_positive());

  for (std::size_t i = 0; i < n; ++i) {
    if (assignment.r[i] == 0) {
      g.p_obj[i] = bce_dp(pred.p_obj[i], assignment.o[i]) / unmasked;
    }
    if (assignment.o[i] == 0) continue;
    const DetBox& target = assignment.keep_boxes[static_cast<std::size_t>(assignment.matched[i])];
    const IouWithGrad overlap = iou_and_grad(assignment.grid.anchor(i), pred.delta[i], target);
    double d_overlap = -1.0;  // from l_box = 1 - IoU
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = pred.p_iou[i * classes + c];
      const bool is_target = static_cast<int>(c) == target.class_id;
      const double y = is_target ? overlap.value : 0.0;
      g.p_iou[i * classes + c] = bce_dp(p, y) / positives;
      if (is_target) d_overlap += bce_dtarget(p);
    }
    for (std::size_t k = 0; k < 4; ++k) {
      g.delta[i][k] = d_overlap * overlap.grad[k] / positives;
    }
  }
  return g;
}

}  // namespace leod
