// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "leod/geometry.hpp"
#include "leod/tracker.hpp"
#include "leod/tta.hpp"

namespace leod {

enum class Certainty { keep, ignore };
enum class Provenance { detected, inpainted };
enum class LabelSource { pseudo, ground_truth };

/// How the two scores are combined when deciding soft uncertainty.
enum class SoftRule {
  all_below,  // uncertain iff p_obj < tau_soft AND max(p_iou) < tau_soft
  any_below,  // uncertain iff p_obj < tau_soft OR max(p_iou) < tau_soft
};

/// Which tracks are eligible for gap inpainting.
enum class InpaintRule {
  per_direction,  // n >= T_trk in the pass that built the track
  bidirectional,  // every matched box of the track survived the two-way check
  none,
};

struct ThresholdConfig {
  std::vector<double> tau_hard;  // per class
  std::vector<double> tau_soft;  // per class, >= tau_hard
  int t_trk = 6;
  SoftRule soft_rule = SoftRule::all_below;

  int num_classes() const { return static_cast<int>(tau_hard.size()); }
};

/// Errc::invalid_thresholds when tau_soft < tau_hard for some class,
/// Errc::invalid_config for values outside (0,1), size mismatches or t_trk < 1.
void validate_thresholds(const ThresholdConfig& cfg);

struct ClassOverride {
  std::optional<double> hard;
  std::optional<double> soft;
};

/// Per-class thresholds from the car hard threshold: cars get
/// (h, h + 0.1); pedestrians and two-wheelers get (h / 2, h / 2 + 0.05).
/// An override replacing only `hard` keeps the class's soft offset.
ThresholdConfig derive_thresholds(double tau_hard_car, std::span<const std::string> class_names,
                                  const std::map<std::string, ClassOverride>& overrides = {},
                                  int t_trk = 6);

/// Boxes with p_obj >= tau_hard[c] and max(p_iou) >= tau_hard[c].
std::vector<DetBox> hard_filter(std::span<const DetBox> boxes, const ThresholdConfig& cfg);

bool soft_uncertain(const DetBox& box, const ThresholdConfig& cfg);

struct PseudoLabel {
  DetBox box;
  Certainty certainty = Certainty::keep;
  Provenance provenance = Provenance::detected;
  LabelSource source = LabelSource::pseudo;
  int track_len_fwd = 0;
  int track_len_bwd = 0;

  friend bool operator==(const PseudoLabel&, const PseudoLabel&) = default;
};

struct PseudoLabelSet {
  std::string sequence_id;
  std::vector<std::vector<PseudoLabel>> labels;  // indexed by timestep
  int round = 1;
  std::string config_digest;

  int num_steps() const { return static_cast<int>(labels.size()); }
  std::size_t count(Certainty c) const;
  std::size_t size() const;
};

struct ForgeOptions {
  TrackerParams tracker;
  InpaintRule inpaint_rule = InpaintRule::per_direction;
  NmsOptions dedup;  // inpainted-vs-existing suppression
  bool bidirectional = true;  // false runs the forward pass only
};

/// Turns TTA-merged detections (frames[t] holds boxes with t_step == t) into
/// certainty-tagged pseudo labels.
PseudoLabelSet forge(std::span<const std::vector<DetBox>> frames, const ThresholdConfig& cfg,
                     const ForgeOptions& options = {});

struct SequenceInput {
  std::string id;
  int num_steps = 0;
  double width = 0.0;
  std::vector<VariantOutput> variants;
  std::map<int, std::vector<DetBox>> gt_labels;  // labeled timestep -> boxes
};

struct RoundOptions {
  ForgeOptions forge;
  NmsOptions tta_nms;
  int round = 1;
  std::string config_digest;
  int jobs = 1;
};

/// TTA merge, forge, and ground-truth precedence for each sequence. At
/// labeled timesteps pseudo labels overlapping a GT box with IoU > tau_nms are
/// dropped and the GT boxes are inserted as KEEP labels.
std::map<std::string, PseudoLabelSet> run_round(std::span<const SequenceInput> sequences,
                                                const ThresholdConfig& cfg,
                                                const RoundOptions& options = {});

}  // namespace leod
