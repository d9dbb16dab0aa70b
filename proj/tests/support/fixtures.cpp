// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace leod::fixture {

DetBox square(double x, int t, int cls, double score) {
  DetBox b;
  b.x = x;
  b.y = 0.0;
  b.w = 20.0;
  b.h = 20.0;
  b.class_id = cls;
  b.t_step = t;
  b.p_obj = score;
  b.p_iou = {0.0, 0.0};
  b.p_iou[static_cast<std::size_t>(cls)] = score;
  return b;
}

AsymmetricTrack asymmetric_track(int b_len) {
  std::vector<double> xs;
  if (b_len == 6) {
    xs = {15, 30, 42, 51, 57, 60};
  } else if (b_len == 4) {
    xs = {15, 30, 40, 45};
  } else {
    throw std::invalid_argument("asymmetric_track supports b_len 4 or 6");
  }
  AsymmetricTrack out;
  out.frames.resize(5 + xs.size());
  for (int t = 0; t < 5; ++t) out.frames[static_cast<std::size_t>(t)].push_back(square(0, t));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const int t = 5 + static_cast<int>(i);
    out.frames[static_cast<std::size_t>(t)].push_back(square(xs[i], t));
  }
  return out;
}

std::vector<std::vector<DetBox>> random_scene(Rng& rng, int num_steps, int num_objects,
                                              double clutter_rate) {
  struct Obj {
    double x, y, vx, vy, w, h;
    int cls;
    int start, stop;
  };
  std::vector<Obj> objs;
  for (int i = 0; i < num_objects; ++i) {
    const int start = static_cast<int>(rng.below(static_cast<std::uint64_t>(num_steps)));
    const int len = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(num_steps)));
    objs.push_back({rng.uniform(0, 250), rng.uniform(0, 200), rng.uniform(-4, 4), rng.uniform(-2, 2),
                    rng.uniform(15, 50), rng.uniform(15, 50), i % 2, start, std::min(num_steps, start + len)});
  }
  std::vector<std::vector<DetBox>> frames(static_cast<std::size_t>(num_steps));
  for (int t = 0; t < num_steps; ++t) {
    auto& f = frames[static_cast<std::size_t>(t)];
    for (const Obj& o : objs) {
      if (t < o.start || t >= o.stop || rng.bernoulli(0.15)) continue;
      DetBox b;
      b.x = o.x + o.vx * t + rng.normal();
      b.y = o.y + o.vy * t + rng.normal();
      b.w = o.w;
      b.h = o.h;
      b.class_id = o.cls;
      b.t_step = t;
      b.p_obj = rng.uniform(0.2, 1.0);
      b.p_iou = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
      b.p_iou[static_cast<std::size_t>(o.cls)] = rng.uniform(0.2, 1.0);
      f.push_back(b);
    }
    const int n_clutter = rng.poisson(clutter_rate);
    for (int k = 0; k < n_clutter; ++k) {
      DetBox b;
      b.x = rng.uniform(0, 280);
      b.y = rng.uniform(0, 220);
      b.w = rng.uniform(8, 40);
      b.h = rng.uniform(8, 40);
      b.class_id = static_cast<int>(rng.below(2));
      b.t_step = t;
      b.p_obj = rng.uniform(0.1, 0.9);
      b.p_iou = {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
      f.push_back(b);
    }
  }
  return frames;
}

AssignInstance random_assign_instance(Rng& rng, int num_classes) {
  AssignInstance in;
  const std::vector<int> strides{8, 16, 32};
  in.grid = make_grid(strides, 64, 96);
  auto box = [&](bool keep) {
    DetBox b;
    b.w = rng.uniform(6, 60);
    b.h = rng.uniform(6, 50);
    b.x = rng.uniform(-5, 96 - b.w + 5);
    b.y = rng.uniform(-5, 64 - b.h + 5);
    b.class_id = static_cast<int>(rng.below(static_cast<std::uint64_t>(num_classes)));
    b.p_obj = keep ? 1.0 : 0.5;
    b.p_iou.assign(static_cast<std::size_t>(num_classes), 0.0);
    return b;
  };
  const int nk = static_cast<int>(rng.below(4));
  const int ni = static_cast<int>(rng.below(3));
  for (int i = 0; i < nk; ++i) in.keep.push_back(box(true));
  for (int i = 0; i < ni; ++i) in.ignore.push_back(box(false));

  const std::size_t n = in.grid.size();
  in.pred.num_classes = num_classes;
  for (std::size_t i = 0; i < n; ++i) {
    in.pred.p_obj.push_back(rng.uniform(0.02, 0.98));
    for (int c = 0; c < num_classes; ++c) in.pred.p_iou.push_back(rng.uniform(0.02, 0.98));
    const AnchorPoint a = in.grid.anchor(i);
    const double target = rng.uniform(6, 50);
    in.pred.delta.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1),
                             std::log(target / a.stride) + rng.uniform(-0.3, 0.3),
                             std::log(target / a.stride) + rng.uniform(-0.3, 0.3)});
  }
  in.assignment = assign_anchors(in.grid, in.keep, in.ignore, &in.pred);
  return in;
}

GradientComparison compare_gradients(const LossGradient& analytic, const LossGradient& numeric,
                                     double floor) {
  GradientComparison out;
  auto one = [&](double a, double f) {
    if (std::isnan(f)) {
      ++out.skipped;
      return;
    }
    out.max_abs_error = std::max(out.max_abs_error, std::abs(a - f));
    const double scale = std::max(std::abs(a), std::abs(f));
    if (scale <= floor) return;
    ++out.compared;
    out.max_rel_error = std::max(out.max_rel_error, std::abs(a - f) / scale);
  };
  for (std::size_t i = 0; i < analytic.p_obj.size(); ++i) one(analytic.p_obj[i], numeric.p_obj.at(i));
  for (std::size_t i = 0; i < analytic.p_iou.size(); ++i) one(analytic.p_iou[i], numeric.p_iou.at(i));
  for (std::size_t i = 0; i < analytic.delta.size(); ++i) {
    for (std::size_t k = 0; k < 4; ++k) one(analytic.delta[i][k], numeric.delta.at(i)[k]);
  }
  return out;
}

}  // namespace leod::fixture
