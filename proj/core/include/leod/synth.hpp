// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "leod/evrep.hpp"
#include "leod/geometry.hpp"
#include "leod/tta.hpp"

namespace leod {

/// Top-left position of an object at (fractional) timestep t.
struct ControlPoint {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
};

struct SynthObject {
  int class_id = 0;
  int spawn_t = 0;    // first visible timestep
  int despawn_t = 0;  // one past the last visible timestep
  std::vector<ControlPoint> trajectory;  // piecewise linear, clamped at the ends
  double w = 10.0;
  double h = 10.0;
};

struct NoiseModel {
  double miss_prob_base = 0.0;
  double miss_prob_static = 0.0;  // used when per-step displacement < 0.5 px
  double fp_rate = 0.0;           // expected false positives visible per frame
  double fp_lifetime = 1.0;       // mean FP lifetime in frames (geometric)
  double jitter_sigma = 0.0;      // pixels
  std::pair<double, double> tp_score_range{0.8, 0.95};
  std::pair<double, double> fp_score_range{0.3, 0.6};
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  int duration_steps = 1;
  int width = 304;
  int height = 240;
  int num_classes = 2;
  std::int64_t window_us = kDefaultWindowUs;
  std::vector<SynthObject> objects;
  NoiseModel noise;
};

/// Throws Errc::invalid_config for out-of-range probabilities or score ranges.
void validate_scenario(const Scenario& scenario);

struct SynthOutput {
  std::vector<std::vector<DetBox>> gt;          // [L] ground truth per timestep
  std::vector<std::vector<int>> gt_object;      // object index per GT box
  std::vector<std::vector<DetBox>> detections;  // [L] identity-run detector output
  std::vector<std::vector<int>> det_object;     // object index, -1 for false positives
  EventStream events;
};

/// Samples GT, noisy identity-run detections and schematic events. Fully
/// determined by the scenario (including its seed).
SynthOutput generate(const Scenario& scenario);

/// Detector output for one TTA run, expressed in that run's flipped frame
/// (time index and x mirrored as the variant dictates). Each variant draws
/// its own noise; the identity variant reproduces generate().detections.
std::vector<std::vector<DetBox>> generate_variant_detections(
    const Scenario& scenario, const TtaVariant& variant,
    std::vector<std::vector<int>>* object_ids = nullptr);

/// Named scenarios: "static-car", "crowd", "fast-crosser", "fp-storm", "urban-01".
std::vector<Scenario> scenario_library();

/// Looks up a library scenario by name and replaces its seed. Throws
/// Errc::invalid_input for unknown names.
Scenario find_scenario(const std::string& name, std::uint64_t seed);

}  // namespace leod
