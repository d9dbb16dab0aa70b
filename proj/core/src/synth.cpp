// SPDX-License-Identifier: Apache-2.0
#include "leod/synth.hpp"

#include <algorithm>
#include <cmath>

#include "leod/error.hpp"
#include "leod/rng.hpp"

namespace leod {

namespace {

constexpr double kStaticDisplacement = 0.5;

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t sm = seed ^ (0xD1B54A32D192ED03ULL * (stream + 1));
  return splitmix64(sm);
}

std::pair<double, double> position(const SynthObject& obj, double t) {
  const auto& cps = obj.trajectory;
  if (cps.empty()) return {0.0, 0.0};
  if (t <= cps.front().t) return {cps.front().x, cps.front().y};
  if (t >= cps.back().t) return {cps.back().x, cps.back().y};
  for (std::size_t i = 1; i < cps.size(); ++i) {
    if (t <= cps[i].t) {
      const ControlPoint& a = cps[i - 1];
      const ControlPoint& b = cps[i];
      const double f = (t - a.t) / (b.t - a.t);
      return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)};
    }
  }
  return {cps.back().x, cps.back().y};
}

bool alive(const SynthObject& obj, int t) { return t >= obj.spawn_t && t < obj.despawn_t; }

DetBox gt_box(const Scenario& sc, const SynthObject& obj, int t) {
  auto [x, y] = position(obj, t);
  x = std::clamp(x, 0.0, sc.width - obj.w);
  y = std::clamp(y, 0.0, sc.height - obj.h);
  return make_gt_box(x, y, obj.w, obj.h, obj.class_id, t, sc.num_classes);
}

double displacement(const Scenario& sc, const SynthObject& obj, int t) {
  const int prev = t > obj.spawn_t ? t - 1 : t;
  const int next = t > obj.spawn_t ? t : std::min(t + 1, obj.despawn_t - 1);
  const DetBox a = gt_box(sc, obj, prev);
  const DetBox b = gt_box(sc, obj, next);
  return std::hypot(b.x - a.x, b.y - a.y);
}

void fill_scores(DetBox& box, int num_classes, std::pair<double, double> range, Rng& rng) {
  box.p_obj = rng.uniform(range.first, range.second);
  box.p_iou.assign(static_cast<std::size_t>(num_classes), 0.0);
  for (int c = 0; c < num_classes; ++c) {
    box.p_iou[static_cast<std::size_t>(c)] =
        c == box.class_id ? rng.uniform(range.first, range.second) : rng.uniform(0.0, 0.1);
  }
}

struct FalsePositive {
  DetBox box;
  double vx = 0.0;
  double vy = 0.0;
  int remaining = 1;
};

/// Detections in original time order and original coordinates.
std::vector<std::vector<DetBox>> sample_detections(const Scenario& sc, std::uint64_t stream,
                                                   std::vector<std::vector<int>>& ids) {
  Rng rng(stream_seed(sc.seed, stream));
  const NoiseModel& nm = sc.noise;
  const auto steps = static_cast<std::size_t>(sc.duration_steps);
  std::vector<std::vector<DetBox>> out(steps);
  ids.assign(steps, {});
  std::vector<FalsePositive> fps;
  const double birth_rate = nm.fp_rate / std::max(nm.fp_lifetime, 1.0);
  const double p_continue = 1.0 - 1.0 / std::max(nm.fp_lifetime, 1.0);

  for (int t = 0; t < sc.duration_steps; ++t) {
    auto& frame = out[static_cast<std::size_t>(t)];
    auto& frame_ids = ids[static_cast<std::size_t>(t)];
    for (std::size_t k = 0; k < sc.objects.size(); ++k) {
      const SynthObject& obj = sc.objects[k];
      if (!alive(obj, t)) continue;
      const double p_miss = displacement(sc, obj, t) < kStaticDisplacement ? nm.miss_prob_static
                                                                          : nm.miss_prob_base;
      const bool missed = rng.bernoulli(p_miss);
      DetBox det = gt_box(sc, obj, t);
      det.x += nm.jitter_sigma * rng.normal();
      det.y += nm.jitter_sigma * rng.normal();
      det.w = std::max(1.0, det.w + 0.5 * nm.jitter_sigma * rng.normal());
      det.h = std::max(1.0, det.h + 0.5 * nm.jitter_sigma * rng.normal());
      fill_scores(det, sc.num_classes, nm.tp_score_range, rng);
      if (missed) continue;
      frame.push_back(std::move(det));
      frame_ids.push_back(static_cast<int>(k));
    }

    const int births = rng.poisson(birth_rate);
    for (int b = 0; b < births; ++b) {
      FalsePositive fp;
      fp.box.class_id = static_cast<int>(rng.below(static_cast<std::uint64_t>(sc.num_classes)));
      if (fp.box.class_id == 0) {
        fp.box.w = rng.uniform(30.0, 55.0);
        fp.box.h = rng.uniform(20.0, 35.0);
      } else {
        fp.box.w = rng.uniform(8.0, 16.0);
        fp.box.h = rng.uniform(20.0, 36.0);
      }
      fp.box.x = rng.uniform(0.0, sc.width - fp.box.w);
      fp.box.y = rng.uniform(0.0, sc.height - fp.box.h);
      fp.vx = rng.uniform(-2.0, 2.0);
      fp.vy = rng.uniform(-2.0, 2.0);
      fp.remaining = 1;
      while (rng.bernoulli(p_continue)) ++fp.remaining;
      fps.push_back(fp);
    }
    for (FalsePositive& fp : fps) {
      DetBox det = fp.box;
      det.t_step = t;
      fill_scores(det, sc.num_classes, nm.fp_score_range, rng);
      frame.push_back(std::move(det));
      frame_ids.push_back(-1);
      fp.box.x += fp.vx;
      fp.box.y += fp.vy;
      --fp.remaining;
    }
    std::erase_if(fps, [](const FalsePositive& fp) { return fp.remaining <= 0; });
  }
  return out;
}

std::uint64_t variant_code(const TtaVariant& v) {
  return (v.time_flipped ? 1U : 0U) | (v.h_flipped ? 2U : 0U);
}

void append_object_events(const Scenario& sc, const SynthObject& obj, int t, Rng& rng,
                          std::vector<Event>& events) {
  const double disp = displacement(sc, obj, t);
  const DetBox box = gt_box(sc, obj, t);
  const auto count = static_cast<int>(std::min(2000.0, std::round(2.0 * disp * (box.w + box.h))));
  const double perimeter = 2.0 * (box.w + box.h);
  for (int i = 0; i < count; ++i) {
    double s = rng.uniform(0.0, perimeter);
    double ex = box.x;
    double ey = box.y;
    if (s < box.w) {
      ex += s;
    } else if ((s -= box.w) < box.h) {
      ex += box.w;
      ey += s;
    } else if ((s -= box.h) < box.w) {
      ex += box.w - s;
      ey += box.h;
    } else {
      ey += box.h - (s - box.w);
    }
    Event e;
    e.x = static_cast<std::uint16_t>(std::clamp<long>(std::lround(ex), 0L, sc.width - 1L));
    e.y = static_cast<std::uint16_t>(std::clamp<long>(std::lround(ey), 0L, sc.height - 1L));
    e.t_us = t * sc.window_us + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(sc.window_us)));
    e.p = rng.bernoulli(0.5) ? 1 : -1;
    events.push_back(e);
  }
}

}  // namespace

void validate_scenario(const Scenario& sc) {
  const NoiseModel& nm = sc.noise;
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  auto range = [](std::pair<double, double> r) {
    return r.first > 0.0 && r.second < 1.0 && r.first <= r.second;
  };
  if (!prob(nm.miss_prob_base) || !prob(nm.miss_prob_static)) {
    throw Error(Errc::invalid_config, "miss probabilities must lie in [0,1]");
  }
  if (!range(nm.tp_score_range) || !range(nm.fp_score_range)) {
    throw Error(Errc::invalid_config, "score ranges must lie within (0,1)");
  }
  if (nm.fp_rate < 0.0 || nm.fp_lifetime < 1.0 || nm.jitter_sigma < 0.0) {
    throw Error(Errc::invalid_config, "fp_rate, fp_lifetime or jitter out of range");
  }
  if (sc.duration_steps < 1 || sc.width < 1 || sc.height < 1 || sc.num_classes < 1 ||
      sc.window_us < 1) {
    throw Error(Errc::invalid_config, "scenario dimensions must be positive");
  }
  for (const SynthObject& obj : sc.objects) {
    if (obj.class_id < 0 || obj.class_id >= sc.num_classes || obj.w <= 0.0 || obj.h <= 0.0 ||
        obj.w > sc.width || obj.h > sc.height || obj.spawn_t >= obj.despawn_t ||
        obj.trajectory.empty()) {
      throw Error(Errc::invalid_config, "invalid scenario object");
    }
  }
}

SynthOutput generate(const Scenario& sc) {
  validate_scenario(sc);
  SynthOutput out;
  const auto steps = static_cast<std::size_t>(sc.duration_steps);
  out.gt.resize(steps);
  out.gt_object.resize(steps);
  for (int t = 0; t < sc.duration_steps; ++t) {
    for (std::size_t k = 0; k < sc.objects.size(); ++k) {
      if (!alive(sc.objects[k], t)) continue;
      out.gt[static_cast<std::size_t>(t)].push_back(gt_box(sc, sc.objects[k], t));
      out.gt_object[static_cast<std::size_t>(t)].push_back(static_cast<int>(k));
    }
  }
  out.detections = sample_detections(sc, 0, out.det_object);

  Rng rng(stream_seed(sc.seed, 100));
  out.events.width = static_cast<std::uint16_t>(sc.width);
  out.events.height = static_cast<std::uint16_t>(sc.height);
  out.events.duration_us = sc.duration_steps * sc.window_us;
  for (int t = 0; t < sc.duration_steps; ++t) {
    for (const SynthObject& obj : sc.objects) {
      if (alive(obj, t)) append_object_events(sc, obj, t, rng, out.events.events);
    }
    const int background = rng.poisson(20.0);
    for (int i = 0; i < background; ++i) {
      Event e;
      e.x = static_cast<std::uint16_t>(rng.below(static_cast<std::uint64_t>(sc.width)));
      e.y = static_cast<std::uint16_t>(rng.below(static_cast<std::uint64_t>(sc.height)));
      e.t_us = t * sc.window_us + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(sc.window_us)));
      e.p = rng.bernoulli(0.5) ? 1 : -1;
      out.events.events.push_back(e);
    }
  }
  std::stable_sort(out.events.events.begin(), out.events.events.end(),
                   [](const Event& a, const Event& b) { return a.t_us < b.t_us; });
  return out;
}

std::vector<std::vector<DetBox>> generate_variant_detections(
    const Scenario& sc, const TtaVariant& variant, std::vector<std::vector<int>>* object_ids) {
  validate_scenario(sc);
  if (variant.num_timesteps != sc.duration_steps || variant.width != sc.width) {
    throw Error(Errc::invalid_input, "variant does not match scenario geometry");
  }
  std::vector<std::vector<int>> ids;
  auto original = sample_detections(sc, variant_code(variant), ids);
  const auto steps = static_cast<std::size_t>(sc.duration_steps);
  std::vector<std::vector<DetBox>> out(steps);
  std::vector<std::vector<int>> out_ids(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t dst = variant.time_flipped ? steps - 1 - t : t;
    for (std::size_t i = 0; i < original[t].size(); ++i) {
      DetBox b = original[t][i];
      b.t_step = static_cast<int>(dst);
      if (variant.h_flipped) b.x = variant.width - b.x - b.w;
      out[dst].push_back(std::move(b));
      out_ids[dst].push_back(ids[t][i]);
    }
  }
  if (object_ids != nullptr) *object_ids = std::move(out_ids);
  return out;
}

namespace {

SynthObject linear_object(int cls, int spawn, int despawn, double x0, double y0, double vx,
                          double vy, double w, double h) {
  SynthObject obj;
  obj.class_id = cls;
  obj.spawn_t = spawn;
  obj.despawn_t = despawn;
  obj.trajectory = {{static_cast<double>(spawn), x0, y0},
                    {static_cast<double>(despawn - 1), x0 + vx * (despawn - 1 - spawn),
                     y0 + vy * (despawn - 1 - spawn)}};
  obj.w = w;
  obj.h = h;
  return obj;
}

constexpr int kCar = 0;
constexpr int kPedestrian = 1;

}  // namespace

std::vector<Scenario> scenario_library() {
  std::vector<Scenario> lib;

  {
    Scenario sc;
    sc.name = "static-car";
    sc.seed = 7;
    sc.duration_steps = 60;
    sc.objects = {
        linear_object(kCar, 0, 60, 60.0, 110.0, 0.0, 0.0, 48.0, 30.0),
        linear_object(kCar, 0, 60, 20.0, 40.0, 3.0, 0.2, 44.0, 28.0),
    };
    sc.noise.miss_prob_base = 0.1;
    sc.noise.miss_prob_static = 0.6;
    sc.noise.fp_rate = 0.3;
    sc.noise.fp_lifetime = 1.0;
    sc.noise.jitter_sigma = 0.7;
    sc.noise.tp_score_range = {0.72, 0.95};
    sc.noise.fp_score_range = {0.2, 0.7};
    lib.push_back(sc);
  }
  {
    Scenario sc;
    sc.name = "crowd";
    sc.seed = 7;
    sc.duration_steps = 50;
    for (int i = 0; i < 10; ++i) {
      const double x0 = 90.0 + 9.0 * i;
      const double y0 = 100.0 + 6.0 * (i % 3);
      const double vx = (i % 2 == 0) ? 0.8 : -0.6;
      sc.objects.push_back(linear_object(kPedestrian, 0, 50, x0, y0, vx, 0.1 * (i % 3), 12.0, 30.0));
    }
    sc.noise.miss_prob_base = 0.1;
    sc.noise.miss_prob_static = 0.3;
    sc.noise.fp_rate = 0.5;
    sc.noise.fp_lifetime = 1.0;
    sc.noise.jitter_sigma = 0.5;
    sc.noise.tp_score_range = {0.45, 0.9};
    sc.noise.fp_score_range = {0.2, 0.6};
    lib.push_back(sc);
  }
  {
    Scenario sc;
    sc.name = "fast-crosser";
    sc.seed = 7;
    sc.duration_steps = 40;
    sc.objects = {
        linear_object(kCar, 20, 24, 150.0, 60.0, 30.0, 0.0, 40.0, 26.0),
        linear_object(kCar, 0, 40, 30.0, 160.0, 2.0, 0.0, 50.0, 32.0),
        linear_object(kPedestrian, 0, 40, 250.0, 150.0, -0.8, 0.2, 12.0, 30.0),
    };
    sc.noise.jitter_sigma = 0.4;
    sc.noise.tp_score_range = {0.8, 0.95};
    lib.push_back(sc);
  }
  {
    Scenario sc;
    sc.name = "fp-storm";
    sc.seed = 7;
    sc.duration_steps = 60;
    sc.objects = {
        linear_object(kCar, 0, 60, 10.0, 20.0, 3.0, 0.5, 46.0, 30.0),
        linear_object(kCar, 0, 60, 240.0, 120.0, -2.5, 0.0, 50.0, 32.0),
        linear_object(kCar, 0, 60, 100.0, 190.0, 1.5, -0.3, 40.0, 26.0),
        linear_object(kPedestrian, 0, 60, 200.0, 40.0, -1.0, 0.3, 12.0, 30.0),
        linear_object(kPedestrian, 0, 60, 40.0, 150.0, 0.8, -0.2, 14.0, 32.0),
    };
    sc.noise.miss_prob_base = 0.05;
    sc.noise.miss_prob_static = 0.2;
    sc.noise.fp_rate = 8.0;
    sc.noise.fp_lifetime = 1.0;
    sc.noise.jitter_sigma = 0.5;
    sc.noise.tp_score_range = {0.75, 0.98};
    sc.noise.fp_score_range = {0.3, 0.95};
    lib.push_back(sc);
  }
  {
    Scenario sc;
    sc.name = "urban-01";
    sc.seed = 7;
    sc.duration_steps = 80;
    sc.objects = {
        linear_object(kCar, 0, 80, 5.0, 30.0, 3.0, 0.0, 48.0, 30.0),
        linear_object(kCar, 10, 70, 250.0, 80.0, -3.5, 0.3, 44.0, 28.0),
        linear_object(kCar, 0, 80, 130.0, 180.0, 0.0, 0.0, 52.0, 34.0),
        linear_object(kCar, 30, 80, 10.0, 130.0, 2.0, -0.5, 40.0, 26.0),
        linear_object(kPedestrian, 0, 80, 220.0, 150.0, -0.9, 0.1, 12.0, 30.0),
        linear_object(kPedestrian, 5, 60, 100.0, 100.0, 1.1, 0.2, 13.0, 31.0),
        linear_object(kPedestrian, 20, 80, 280.0, 40.0, -1.2, 0.4, 11.0, 28.0),
        linear_object(kPedestrian, 0, 45, 60.0, 200.0, 0.0, 0.0, 12.0, 30.0),
    };
    sc.noise.miss_prob_base = 0.15;
    sc.noise.miss_prob_static = 0.5;
    sc.noise.fp_rate = 1.5;
    sc.noise.fp_lifetime = 2.0;
    sc.noise.jitter_sigma = 0.8;
    sc.noise.tp_score_range = {0.55, 0.95};
    sc.noise.fp_score_range = {0.25, 0.75};
    lib.push_back(sc);
  }
  return lib;
}

Scenario find_scenario(const std::string& name, std::uint64_t seed) {
  for (Scenario& sc : scenario_library()) {
    if (sc.name == name) {
      sc.seed = seed;
      return sc;
    }
  }
  throw Error(Errc::invalid_input, "unknown scenario '" + name + "'");
}

}  // namespace leod
