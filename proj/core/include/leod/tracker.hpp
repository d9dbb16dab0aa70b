// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "leod/geometry.hpp"

namespace leod {

struct TrackerParams {
  double tau_iou = 0.45;  // minimum IoU (exclusive) for a track-box match
  double tau_del = 0.55;  // tracks with q below this are deleted
  double decay = 0.9;     // q multiplier per unmatched step
  double init_q = 0.9;    // score of a newly created track
};

/// Throws Errc::invalid_config when a parameter is out of range.
void validate_params(const TrackerParams& params);

struct TrackHistoryEntry {
  int t_step = 0;
  DetBox box;  // the detection when matched, the prediction otherwise
  bool matched = false;
  int source_index = -1;  // index of the detection within its frame, -1 if unmatched
};

struct Track {
  int id = 0;
  DetBox last_box;  // most recent matched detection
  double vx = 0.0;  // pixels per timestep
  double vy = 0.0;
  int n = 1;  // number of successful matches, creation included
  double q = 0.9;
  int last_match_t = 0;
  int class_id = 0;
  std::vector<TrackHistoryEntry> history;
};

/// Linear-motion prediction from the last matched box; size is kept.
DetBox predict(const Track& track, int t_step);

struct MatchPair {
  std::size_t track = 0;  // index into the predicted list
  std::size_t box = 0;    // index into the detection list
  double iou = 0.0;
};

/// Global greedy matching: all same-class pairs with IoU > tau_iou are sorted
/// by IoU descending (ties: lower track id, then lower box index) and accepted
/// while both sides are free.
std::vector<MatchPair> greedy_match(std::span<const DetBox> predicted,
                                    std::span<const int> track_ids,
                                    std::span<const DetBox> boxes, double tau_iou);

/// Tracking-by-detection over one sequence. Steps must be fed in strictly
/// increasing timestep order.
class Tracker {
 public:
  explicit Tracker(TrackerParams params = {});

  /// Predict, match, update, decay, spawn, delete. All boxes must carry
  /// `t_step`; otherwise throws Errc::invalid_input.
  void step(std::span<const DetBox> boxes, int t_step);

  const std::vector<Track>& active() const { return active_; }
  const std::vector<Track>& deleted() const { return deleted_; }

  /// Every track ever created, live or deleted, ordered by id.
  std::vector<Track> all_tracks() const;

  const TrackerParams& params() const { return params_; }

 private:
  TrackerParams params_;
  std::vector<Track> active_;
  std::vector<Track> deleted_;
  int next_id_ = 0;
  int last_t_ = -1;
};

struct TrackedBox {
  DetBox box;
  int track_id = -1;
  int track_len = 0;  // n of the box's track at the end of the sequence
  bool inpainted = false;
  int source_index = -1;  // index within its input frame; -1 for inpainted boxes
};

struct TrackingResult {
  std::vector<TrackedBox> boxes;  // ordered by (t_step, source_index)
  std::vector<Track> tracks;      // ordered by id
};

/// Runs the tracker over frames[0..L). frames[t] must only hold boxes with
/// t_step == t. Every input box appears exactly once in the result.
TrackingResult track_sequence(std::span<const std::vector<DetBox>> frames,
                              const TrackerParams& params = {});

/// Boxes synthesized at the unmatched timesteps strictly between the first
/// and last match of every track with n >= min_len. Geometry is linearly
/// interpolated between the surrounding matched boxes; scores come from the
/// nearer of the two (the earlier one on a tie).
std::vector<TrackedBox> inpainted_boxes(const TrackingResult& result, int min_len);

/// result.boxes plus inpainted_boxes(result, min_len), ordered by t_step with
/// detections before inpainted boxes at each step.
std::vector<TrackedBox> inpaint(const TrackingResult& result, int min_len);

}  // namespace leod
