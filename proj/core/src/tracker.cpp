// SPDX-License-Identifier: Apache-2.0
#include "leod/tracker.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <tuple>

#include "leod/error.hpp"

namespace leod {

void validate_params(const TrackerParams& params) {
  if (!(params.tau_del > 0.0 && params.tau_del < 1.0)) {
    throw Error(Errc::invalid_config, "tracker tau_del must lie in (0,1)");
  }
  if (!(params.decay > 0.0 && params.decay < 1.0)) {
    throw Error(Errc::invalid_config, "tracker decay must lie in (0,1)");
  }
  if (!(params.init_q > 0.0 && params.init_q <= 1.0)) {
    throw Error(Errc::invalid_config, "tracker init_q must lie in (0,1]");
  }
  if (!(params.tau_iou >= 0.0 && params.tau_iou < 1.0)) {
    throw Error(Errc::invalid_config, "tracker tau_iou must lie in [0,1)");
  }
}

DetBox predict(const Track& track, int t_step) {
  const double dt = static_cast<double>(t_step - track.last_match_t);
  DetBox out = track.last_box;
  out.x += track.vx * dt;
  out.y += track.vy * dt;
  out.t_step = t_step;
  return out;
}

std::vector<MatchPair> greedy_match(std::span<const DetBox> predicted,
                                    std::span<const int> track_ids,
                                    std::span<const DetBox> boxes, double tau_iou) {
  std::vector<MatchPair> candidates;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    for (std::size_t j = 0; j < boxes.size(); ++j) {
      if (predicted[i].class_id != boxes[j].class_id) continue;
      const double v = iou(predicted[i], boxes[j]);
      if (v > tau_iou) candidates.push_back({i, j, v});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [&](const MatchPair& a, const MatchPair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (track_ids[a.track] != track_ids[b.track]) return track_ids[a.track] < track_ids[b.track];
    return a.box < b.box;
  });

  std::vector<bool> track_used(predicted.size(), false);
  std::vector<bool> box_used(boxes.size(), false);
  std::vector<MatchPair> matches;
  for (const MatchPair& c : candidates) {
    if (track_used[c.track] || box_used[c.box]) continue;
    track_used[c.track] = true;
    box_used[c.box] = true;
    matches.push_back(c);
  }
  return matches;
}

Tracker::Tracker(TrackerParams params) : params_(params) { validate_params(params_); }

void Tracker::step(std::span<const DetBox> boxes, int t_step) {
  if (t_step <= last_t_) {
    throw Error(Errc::invalid_input, "tracker steps must be strictly increasing");
  }
  for (const DetBox& b : boxes) {
    validate_box(b);
    if (b.t_step != t_step) {
      throw Error(Errc::invalid_input, "box at t_step " + std::to_string(b.t_step) +
                                           " fed to tracker step " + std::to_string(t_step));
    }
  }
  last_t_ = t_step;

  std::vector<DetBox> predicted;
  std::vector<int> ids;
  predicted.reserve(active_.size());
  ids.reserve(active_.size());
  for (const Track& tr : active_) {
    predicted.push_back(predict(tr, t_step));
    ids.push_back(tr.id);
  }

  std::vector<int> box_track(boxes.size(), -1);
  std::vector<bool> track_matched(active_.size(), false);
  for (const MatchPair& m : greedy_match(predicted, ids, boxes, params_.tau_iou)) {
    Track& tr = active_[m.track];
    const DetBox& b = boxes[m.box];
    const double dt = static_cast<double>(t_step - tr.last_match_t);
    tr.vx = (b.center_x() - tr.last_box.center_x()) / dt;
    tr.vy = (b.center_y() - tr.last_box.center_y()) / dt;
    tr.last_box = b;
    tr.last_match_t = t_step;
    tr.n += 1;
    tr.q = 1.0;
    tr.history.push_back({t_step, b, true, static_cast<int>(m.box)});
    track_matched[m.track] = true;
    box_track[m.box] = tr.id;
  }

  for (std::size_t i = 0; i < active_.size(); ++i) {
    if (track_matched[i]) continue;
    Track& tr = active_[i];
    tr.q *= params_.decay;
    tr.history.push_back({t_step, predicted[i], false, -1});
  }

  for (std::size_t j = 0; j < boxes.size(); ++j) {
    if (box_track[j] >= 0) continue;
    Track tr;
    tr.id = next_id_++;
    tr.last_box = boxes[j];
    tr.n = 1;
    tr.q = params_.init_q;
    tr.last_match_t = t_step;
    tr.class_id = boxes[j].class_id;
    tr.history.push_back({t_step, boxes[j], true, static_cast<int>(j)});
    active_.push_back(std::move(tr));
  }

  auto dead = std::stable_partition(active_.begin(), active_.end(),
                                    [&](const Track& tr) { return tr.q >= params_.tau_del; });
  std::move(dead, active_.end(), std::back_inserter(deleted_));
  active_.erase(dead, active_.end());
}

std::vector<Track> Tracker::all_tracks() const {
  std::vector<Track> out = deleted_;
  out.insert(out.end(), active_.begin(), active_.end());
  std::sort(out.begin(), out.end(), [](const Track& a, const Track& b) { return a.id < b.id; });
  return out;
}

TrackingResult track_sequence(std::span<const std::vector<DetBox>> frames,
                              const TrackerParams& params) {
  Tracker tracker(params);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    tracker.step(frames[t], static_cast<int>(t));
  }

  TrackingResult result;
  result.tracks = tracker.all_tracks();

  std::vector<std::vector<TrackedBox>> per_frame(frames.size());
  for (std::size_t t = 0; t < frames.size(); ++t) per_frame[t].resize(frames[t].size());
  for (const Track& tr : result.tracks) {
    for (const TrackHistoryEntry& h : tr.history) {
      if (!h.matched) continue;
      TrackedBox& tb =
          per_frame[static_cast<std::size_t>(h.t_step)][static_cast<std::size_t>(h.source_index)];
      tb.box = h.box;
      tb.track_id = tr.id;
      tb.track_len = tr.n;
      tb.source_index = h.source_index;
    }
  }
  for (auto& frame : per_frame) {
    for (auto& tb : frame) result.boxes.push_back(std::move(tb));
  }
  return result;
}

std::vector<TrackedBox> inpainted_boxes(const TrackingResult& result, int min_len) {
  if (min_len < 1) throw Error(Errc::invalid_config, "minimum track length must be >= 1");
  std::vector<TrackedBox> out;
  for (const Track& tr : result.tracks) {
    if (tr.n < min_len) continue;
    const TrackHistoryEntry* prev = nullptr;
    for (const TrackHistoryEntry& h : tr.history) {
      if (!h.matched) continue;
      if (prev != nullptr && h.t_step - prev->t_step > 1) {
        const DetBox& a = prev->box;
        const DetBox& b = h.box;
        const double span = static_cast<double>(h.t_step - prev->t_step);
        for (int t = prev->t_step + 1; t < h.t_step; ++t) {
          const double f = static_cast<double>(t - prev->t_step) / span;
          const DetBox& nearest = (t - prev->t_step <= h.t_step - t) ? a : b;
          TrackedBox tb;
          tb.box = nearest;
          tb.box.x = a.x + f * (b.x - a.x);
          tb.box.y = a.y + f * (b.y - a.y);
          tb.box.w = a.w + f * (b.w - a.w);
          tb.box.h = a.h + f * (b.h - a.h);
          tb.box.class_id = tr.class_id;
          tb.box.t_step = t;
          tb.track_id = tr.id;
          tb.track_len = tr.n;
          tb.inpainted = true;
          out.push_back(std::move(tb));
        }
      }
      prev = &h;
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const TrackedBox& l, const TrackedBox& r) {
    return l.box.t_step < r.box.t_step;
  });
  return out;
}

std::vector<TrackedBox> inpaint(const TrackingResult& result, int min_len) {
  std::vector<TrackedBox> out = result.boxes;
  auto extra = inpainted_boxes(result, min_len);
  out.insert(out.end(), std::make_move_iterator(extra.begin()),
             std::make_move_iterator(extra.end()));
  std::stable_sort(out.begin(), out.end(), [](const TrackedBox& l, const TrackedBox& r) {
    return l.box.t_step < r.box.t_step;
  });
  return out;
}

}  // namespace leod
