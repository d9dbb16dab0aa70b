// SPDX-License-Identifier: Apache-2.0
#include "leod/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "leod/error.hpp"

namespace leod {

namespace {

enum class ClassKind { car, small };

std::optional<ClassKind> class_kind(const std::string& name) {
  if (name == "car") return ClassKind::car;
  if (name == "pedestrian" || name == "two-wheeler" || name == "two_wheeler") {
    return ClassKind::small;
  }
  return std::nullopt;
}

void check_class(const DetBox& box, const ThresholdConfig& cfg) {
  if (box.class_id < 0 || box.class_id >= cfg.num_classes()) {
    throw Error(Errc::invalid_input,
                "box class " + std::to_string(box.class_id) + " has no thresholds");
  }
}

bool long_enough(int len, int t_trk) { return len >= t_trk; }

}  // namespace

void validate_thresholds(const ThresholdConfig& cfg) {
  if (cfg.tau_hard.size() != cfg.tau_soft.size() || cfg.tau_hard.empty()) {
    throw Error(Errc::invalid_config, "hard and soft thresholds need one value per class");
  }
  if (cfg.t_trk < 1) throw Error(Errc::invalid_config, "t_trk must be >= 1");
  for (std::size_t c = 0; c < cfg.tau_hard.size(); ++c) {
    const double h = cfg.tau_hard[c];
    const double s = cfg.tau_soft[c];
    if (!(h > 0.0 && h < 1.0) || !(s > 0.0 && s < 1.0)) {
      throw Error(Errc::invalid_config,
                  "thresholds for class " + std::to_string(c) + " must lie in (0,1)");
    }
    if (s < h) {
      throw Error(Errc::invalid_thresholds,
                  "tau_soft < tau_hard for class " + std::to_string(c));
    }
  }
}

ThresholdConfig derive_thresholds(double tau_hard_car, std::span<const std::string> class_names,
                                  const std::map<std::string, ClassOverride>& overrides,
                                  int t_trk) {
  if (!(tau_hard_car > 0.0 && tau_hard_car < 1.0)) {
    throw Error(Errc::invalid_config, "tau_hard for cars must lie in (0,1)");
  }
  for (const auto& [name, ov] : overrides) {
    if (std::find(class_names.begin(), class_names.end(), name) == class_names.end()) {
      throw Error(Errc::invalid_config, "threshold override for unknown class '" + name + "'");
    }
  }

  ThresholdConfig cfg;
  cfg.t_trk = t_trk;
  for (const std::string& name : class_names) {
    const auto kind = class_kind(name);
    const auto ov = overrides.find(name);
    const bool has_ov = ov != overrides.end();

    double hard = 0.0;
    double offset = 0.1;
    if (kind == ClassKind::car) {
      hard = tau_hard_car;
    } else if (kind == ClassKind::small) {
      hard = tau_hard_car / 2.0;
      offset = 0.05;
    } else if (!(has_ov && ov->second.hard)) {
      throw Error(Errc::invalid_config,
                  "class '" + name + "' has no derivation rule; give an explicit hard threshold");
    }
    if (has_ov && ov->second.hard) hard = *ov->second.hard;
    double soft = hard + offset;
    if (has_ov && ov->second.soft) soft = *ov->second.soft;
    if (soft >= 1.0) {
      throw Error(Errc::invalid_config, "derived tau_soft >= 1 for class '" + name + "'");
    }
    cfg.tau_hard.push_back(hard);
    cfg.tau_soft.push_back(soft);
  }
  validate_thresholds(cfg);
  return cfg;
}

std::vector<DetBox> hard_filter(std::span<const DetBox> boxes, const ThresholdConfig& cfg) {
  std::vector<DetBox> out;
  for (const DetBox& b : boxes) {
    check_class(b, cfg);
    const double tau = cfg.tau_hard[static_cast<std::size_t>(b.class_id)];
    if (b.p_obj >= tau && max_iou_score(b) >= tau) out.push_back(b);
  }
  return out;
}

bool soft_uncertain(const DetBox& box, const ThresholdConfig& cfg) {
  check_class(box, cfg);
  const double tau = cfg.tau_soft[static_cast<std::size_t>(box.class_id)];
  const bool obj_low = box.p_obj < tau;
  const bool iou_low = max_iou_score(box) < tau;
  return cfg.soft_rule == SoftRule::all_below ? (obj_low && iou_low) : (obj_low || iou_low);
}

std::size_t PseudoLabelSet::count(Certainty c) const {
  std::size_t n = 0;
  for (const auto& frame : labels) {
    n += static_cast<std::size_t>(
        std::count_if(frame.begin(), frame.end(),
                      [c](const PseudoLabel& l) { return l.certainty == c; }));
  }
  return n;
}

std::size_t PseudoLabelSet::size() const {
  std::size_t n = 0;
  for (const auto& frame : labels) n += frame.size();
  return n;
}

PseudoLabelSet forge(std::span<const std::vector<DetBox>> frames, const ThresholdConfig& cfg,
                     const ForgeOptions& options) {
  validate_thresholds(cfg);
  const int num_steps = static_cast<int>(frames.size());
  const auto steps = frames.size();

  std::vector<std::vector<DetBox>> filtered(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    for (const DetBox& b : frames[t]) {
      if (b.t_step != static_cast<int>(t)) {
        throw Error(Errc::invalid_input, "frame " + std::to_string(t) +
                                             " holds a box with t_step " +
                                             std::to_string(b.t_step));
      }
    }
    filtered[t] = hard_filter(frames[t], cfg);
  }

  const TrackingResult fwd = track_sequence(filtered, options.tracker);

  TrackingResult bwd;
  if (options.bidirectional) {
    std::vector<std::vector<DetBox>> reversed(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      reversed[t] = filtered[steps - 1 - t];
      for (DetBox& b : reversed[t]) b.t_step = static_cast<int>(t);
    }
    bwd = track_sequence(reversed, options.tracker);
  }

  PseudoLabelSet out;
  out.labels.resize(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    for (const DetBox& b : filtered[t]) {
      PseudoLabel l;
      l.box = b;
      out.labels[t].push_back(std::move(l));
    }
  }
  for (const TrackedBox& tb : fwd.boxes) {
    out.labels[static_cast<std::size_t>(tb.box.t_step)][static_cast<std::size_t>(tb.source_index)]
        .track_len_fwd = tb.track_len;
  }
  for (const TrackedBox& tb : bwd.boxes) {
    const auto t = static_cast<std::size_t>(num_steps - 1 - tb.box.t_step);
    out.labels[t][static_cast<std::size_t>(tb.source_index)].track_len_bwd = tb.track_len;
  }

  std::vector<std::vector<bool>> short_both(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    for (PseudoLabel& l : out.labels[t]) {
      const bool keep_fwd = long_enough(l.track_len_fwd, cfg.t_trk);
      const bool keep_bwd = options.bidirectional && long_enough(l.track_len_bwd, cfg.t_trk);
      const bool is_short = !keep_fwd && !keep_bwd;
      short_both[t].push_back(is_short);
      if (is_short) l.certainty = Certainty::ignore;
    }
  }

  // Inpainting candidates from each pass, mapped into forward time.
  struct Candidate {
    TrackedBox tb;
    bool from_backward;
  };
  std::vector<Candidate> candidates;
  if (options.inpaint_rule != InpaintRule::none) {
    auto collect = [&](const TrackingResult& pass, bool reversed) {
      std::vector<TrackedBox> boxes;
      if (options.inpaint_rule == InpaintRule::per_direction) {
        boxes = inpainted_boxes(pass, cfg.t_trk);
      } else {
        TrackingResult eligible;
        for (const Track& tr : pass.tracks) {
          bool ok = true;
          for (const TrackHistoryEntry& h : tr.history) {
            if (!h.matched) continue;
            const auto t =
                static_cast<std::size_t>(reversed ? num_steps - 1 - h.t_step : h.t_step);
            if (short_both[t][static_cast<std::size_t>(h.source_index)]) ok = false;
          }
          if (ok) eligible.tracks.push_back(tr);
        }
        boxes = inpainted_boxes(eligible, 1);
      }
      for (TrackedBox& tb : boxes) {
        if (reversed) tb.box.t_step = num_steps - 1 - tb.box.t_step;
        candidates.push_back({std::move(tb), reversed});
      }
    };
    collect(fwd, false);
    if (options.bidirectional) collect(bwd, true);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return a.tb.box.t_step < b.tb.box.t_step;
                   });
  for (const Candidate& c : candidates) {
    auto& frame = out.labels[static_cast<std::size_t>(c.tb.box.t_step)];
    bool suppressed = false;
    for (const PseudoLabel& existing : frame) {
      if (options.dedup.class_aware && existing.box.class_id != c.tb.box.class_id) continue;
      if (iou(existing.box, c.tb.box) > options.dedup.tau_nms) {
        suppressed = true;
        break;
      }
    }
    if (suppressed) continue;
    PseudoLabel l;
    l.box = c.tb.box;
    l.certainty = Certainty::ignore;
    l.provenance = Provenance::inpainted;
    (c.from_backward ? l.track_len_bwd : l.track_len_fwd) = c.tb.track_len;
    frame.push_back(std::move(l));
  }

  for (auto& frame : out.labels) {
    for (PseudoLabel& l : frame) {
      if (l.provenance == Provenance::detected && l.certainty == Certainty::keep &&
          soft_uncertain(l.box, cfg)) {
        l.certainty = Certainty::ignore;
      }
    }
  }
  return out;
}

namespace {

PseudoLabelSet process_sequence(const SequenceInput& seq, const ThresholdConfig& cfg,
                                const RoundOptions& options) {
  if (seq.num_steps < 1) {
    throw Error(Errc::invalid_input, "sequence '" + seq.id + "' has no timesteps");
  }
  for (const auto& [variant, boxes] : seq.variants) {
    if (variant.num_timesteps != seq.num_steps || variant.width != seq.width) {
      throw Error(Errc::invalid_input,
                  "sequence '" + seq.id + "': detections disagree with sequence metadata");
    }
  }
  std::vector<std::vector<DetBox>> merged =
      seq.variants.empty() ? std::vector<std::vector<DetBox>>(static_cast<std::size_t>(seq.num_steps))
                           : tta_merge(seq.variants, options.tta_nms);
  PseudoLabelSet set = forge(merged, cfg, options.forge);
  set.sequence_id = seq.id;
  set.round = options.round;
  set.config_digest = options.config_digest;

  for (const auto& [t, gt_boxes] : seq.gt_labels) {
    if (t < 0 || t >= seq.num_steps) {
      throw Error(Errc::invalid_input, "sequence '" + seq.id + "': labeled timestep " +
                                           std::to_string(t) + " out of range");
    }
    auto& frame = set.labels[static_cast<std::size_t>(t)];
    std::erase_if(frame, [&](const PseudoLabel& l) {
      return std::any_of(gt_boxes.begin(), gt_boxes.end(), [&](const DetBox& g) {
        return iou(g, l.box) > options.tta_nms.tau_nms;
      });
    });
    std::vector<PseudoLabel> with_gt;
    for (const DetBox& g : gt_boxes) {
      PseudoLabel l;
      l.box = g;
      l.box.t_step = t;
      l.source = LabelSource::ground_truth;
      with_gt.push_back(std::move(l));
    }
    with_gt.insert(with_gt.end(), frame.begin(), frame.end());
    frame = std::move(with_gt);
  }
  return set;
}

}  // namespace

std::map<std::string, PseudoLabelSet> run_round(std::span<const SequenceInput> sequences,
                                                const ThresholdConfig& cfg,
                                                const RoundOptions& options) {
  if (options.round < 1) throw Error(Errc::invalid_config, "round must be >= 1");
  validate_thresholds(cfg);

  std::vector<PseudoLabelSet> results(sequences.size());
  std::vector<std::exception_ptr> errors(sequences.size());
  const std::size_t jobs =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(options.jobs, 1)), 1,
                              std::max<std::size_t>(sequences.size(), 1));
  auto worker = [&](std::size_t start) {
    for (std::size_t i = start; i < sequences.size(); i += jobs) {
      try {
        results[i] = process_sequence(sequences[i], cfg, options);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker, j);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::map<std::string, PseudoLabelSet> out;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    if (!out.emplace(sequences[i].id, std::move(results[i])).second) {
      throw Error(Errc::invalid_input, "duplicate sequence id '" + sequences[i].id + "'");
    }
  }
  return out;
}

}  // namespace leod
