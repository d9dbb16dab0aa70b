// SPDX-License-Identifier: Apache-2.0
// Hand-constructed inputs whose tracking behaviour was worked out by hand.
#pragma once

#include <cstddef>
#include <vector>

#include "leod/assign.hpp"
#include "leod/geometry.hpp"
#include "leod/rng.hpp"

namespace leod::fixture {

/// Confident single-class box of side 20 at (x, 0).
DetBox square(double x, int t, int cls = 0, double score = 0.95);

/// Object A rests at x = 0 for t = 0..4. Object B then appears 15 px to the
/// right and decelerates (steps 15, 12, 9, ... down to 3, or 15, 10, 5 for
/// b_len = 4). Going forward, A's zero-velocity prediction never reaches B,
/// so the t = 4 box closes a 5-box track. Going backward, B's learned
/// velocity lands exactly on A's t = 4 box, giving that box a backward track
/// of b_len + 1. Supported b_len: 4 or 6.
struct AsymmetricTrack {
  std::vector<std::vector<DetBox>> frames;
  int probe_t = 4;  // the probe box is frames[probe_t][0]
};
AsymmetricTrack asymmetric_track(int b_len);

/// Drifting objects with dropouts and random clutter, scores spread across
/// the threshold range. Classes alternate between 0 and 1.
std::vector<std::vector<DetBox>> random_scene(Rng& rng, int num_steps, int num_objects,
                                              double clutter_rate);

/// Small multi-level grid with random KEEP/IGNORE boxes, random predictions
/// and the assignment those predictions induce.
struct AssignInstance {
  AnchorGrid grid;
  std::vector<DetBox> keep;
  std::vector<DetBox> ignore;
  AnchorPrediction pred;
  AnchorAssignment assignment;
};
AssignInstance random_assign_instance(Rng& rng, int num_classes = 2);

/// Largest |a - f| / max(|a|, |f|) over gradient components where the two
/// disagree in more than `floor` absolute terms. Components both below
/// `floor` in magnitude carry no relative information and are skipped, as are
/// numeric components reported as NaN.
struct GradientComparison {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t compared = 0;
  std::size_t skipped = 0;
};
GradientComparison compare_gradients(const LossGradient& analytic, const LossGradient& numeric,
                                     double floor);

}  // namespace leod::fixture
